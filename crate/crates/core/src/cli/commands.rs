use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{resolve_model, resolve_network, FileConfig, ModelOverrides, DEFAULT_FOLDS};
use super::manifest::{manifest_name, manifest_path, RunManifest};
use super::report::{build_report, AccuracyTable};
use super::{
    resolve_input, CliError, Command, CvArgs, DataArgs, FoldArgs, GridArgs, NetworkArgs, NoiseArgs,
    PredictArgs, StatsArgs, TrainArgs,
};
use crate::data::{inject_gaussian_noise_rows, load_features, make_folds, CsvTable, Dataset};
use crate::eval::{accuracy, cross_validate, grid_search, GridSpec};
use crate::trainer::{fit, TrainedModel, Variant};

pub(super) fn dispatch(cmd: Command, argv: &[String]) -> Result<(), CliError> {
    match cmd {
        Command::Train(a) => train(a, argv),
        Command::Predict(a) => predict(a, argv),
        Command::Cv(a) => cv(a, argv),
        Command::Gridsearch(a) => gridsearch(a, argv),
        Command::Noise(a) => noise(a, argv),
        Command::Stats(a) => stats(a, argv),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

struct DataSource {
    path: PathBuf,
    label: Option<String>,
    header: bool,
}

impl DataSource {
    fn resolve(args: &DataArgs, file: &FileConfig) -> Result<DataSource, CliError> {
        let path = args
            .data
            .clone()
            .or_else(|| file.data.path.clone())
            .ok_or_else(|| CliError::Usage("the following required argument was not provided: --data".into()))?;
        Ok(DataSource {
            path: resolve_input(&path),
            label: args.label.clone().or_else(|| file.data.label.clone()),
            header: !args.no_header && file.data.header.unwrap_or(true),
        })
    }

    fn table(&self) -> Result<CsvTable, CliError> {
        Ok(CsvTable::read(&self.path, self.header)?)
    }

    fn load(&self) -> Result<Dataset, CliError> {
        Ok(crate::data::load_csv(&self.path, self.label.as_deref(), self.header)?)
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "path": self.path.display().to_string(),
            "label": self.label.as_deref().unwrap_or("<last column>"),
            "header": self.header,
        })
    }
}

fn network_overrides(n: &NetworkArgs) -> ModelOverrides {
    ModelOverrides {
        m: n.m,
        p: n.p,
        l: n.l,
        q: n.q,
        seed: n.seed,
        feature_activation: n.feature_activation,
        enhancement_activation: n.enhancement_activation,
        ..ModelOverrides::default()
    }
}

fn fold_settings(f: &FoldArgs, file: &FileConfig) -> (usize, u64) {
    (
        f.k.or(file.cv.k).unwrap_or(DEFAULT_FOLDS),
        f.fold_seed.or(file.cv.fold_seed).unwrap_or(0),
    )
}

fn train(a: TrainArgs, argv: &[String]) -> Result<(), CliError> {
    let file = FileConfig::load_opt(a.model.config.as_deref())?;
    let cfg = resolve_model(&a.model.overrides(), &file)?;
    let src = DataSource::resolve(&a.data, &file)?;
    let ds = src.load()?;
    let model = fit(&ds.x, &ds.labels, &cfg)?;
    let acc = accuracy(&model.predict(&ds.x)?, &ds.labels);

    model.save(&a.out, Some(&manifest_name(&a.out)))?;
    let mut m = RunManifest::new("train", argv, json!({ "model": cfg, "data": src.describe() }))
        .seed("network", cfg.network.seed);
    m.input(&src.path)?;
    m.artifact(&a.out)?;
    m.write(&manifest_path(&a.out))?;
    println!(
        "training accuracy: {acc:.4} ({} samples, {} classes, {:?} solve)",
        ds.len(),
        ds.class_labels.len(),
        model.solve_branch()
    );
    Ok(())
}

fn predict(a: PredictArgs, argv: &[String]) -> Result<(), CliError> {
    let model = TrainedModel::load(&a.model)?;
    let data = resolve_input(&a.data);
    let x = load_features(&data, !a.no_header, a.drop_column.as_deref())?;
    let mut out = String::new();
    if x.rows() > 0 {
        out.push_str("prediction\n");
        for label in model.predict(&x)? {
            out.push_str(&label);
            out.push('\n');
        }
    }
    write_file(&a.out, &out)?;
    let mut m = RunManifest::new(
        "predict",
        argv,
        json!({ "model": a.model.display().to_string(), "data": data.display().to_string(),
                "header": !a.no_header, "drop_column": a.drop_column }),
    );
    m.input(&a.model)?;
    m.input(&data)?;
    m.artifact(&a.out)?;
    m.write(&manifest_path(&a.out))?;
    println!("{} predictions written to {}", x.rows(), a.out.display());
    Ok(())
}

fn cv(a: CvArgs, argv: &[String]) -> Result<(), CliError> {
    let file = FileConfig::load_opt(a.model.config.as_deref())?;
    let cfg = resolve_model(&a.model.overrides(), &file)?;
    let src = DataSource::resolve(&a.data, &file)?;
    let (k, fold_seed) = fold_settings(&a.folds, &file);
    let ds = src.load()?;
    let plan = make_folds(ds.len(), k, fold_seed)?;
    let r = cross_validate(&ds, &cfg, &plan)?;

    let sizes = plan.fold_sizes();
    let mut csv = String::from("fold,test_size,accuracy,status\n");
    for (f, acc) in r.per_fold_accuracy.iter().enumerate() {
        match acc {
            Some(v) => writeln!(csv, "{},{},{v},ok", f + 1, sizes[f]),
            None => writeln!(csv, "{},{},,skipped", f + 1, sizes[f]),
        }
        .expect("write to string");
    }
    write_file(&a.out, &csv)?;
    let mut m = RunManifest::new(
        "cv",
        argv,
        json!({ "model": cfg, "data": src.describe(), "k": k, "fold_seed": fold_seed }),
    )
    .seed("network", cfg.network.seed)
    .seed("folds", fold_seed);
    m.input(&src.path)?;
    m.artifact(&a.out)?;
    m.write(&manifest_path(&a.out))?;
    println!(
        "{} on {}: mean accuracy {:.4}, std {:.4} over {}/{} folds",
        r.model_name,
        r.dataset_name,
        r.mean_accuracy,
        r.std_dev,
        r.scored_folds(),
        k
    );
    Ok(())
}

fn load_grid(spec: &str) -> Result<GridSpec, CliError> {
    if spec.eq_ignore_ascii_case("paper") {
        return Ok(GridSpec::paper());
    }
    let path = resolve_input(Path::new(spec));
    let text = fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn grid_row(csv: &mut String, idx: usize, variant: &Variant, c_reg: f64, net: &crate::network::NetworkConfig) {
    let (mu, delta, eps) = match variant {
        Variant::Bls => (String::new(), String::new(), String::new()),
        Variant::FuzzyBls { delta } => (String::new(), delta.to_string(), String::new()),
        Variant::IntuitionisticBls { kernel } => (
            kernel.mu.to_string(),
            kernel.delta.to_string(),
            kernel.epsilon.to_string(),
        ),
    };
    let _ = write!(
        csv,
        "{idx},{c_reg},{},{},{},{mu},{delta},{eps}",
        net.feature_groups, net.feature_nodes, net.enhancement_nodes
    );
}

fn gridsearch(a: GridArgs, argv: &[String]) -> Result<(), CliError> {
    let file = FileConfig::load_opt(a.config.as_deref())?;
    let variant = a
        .variant
        .or(file.model.variant)
        .ok_or_else(|| CliError::Usage("the following required argument was not provided: --variant".into()))?;
    let grid = load_grid(&a.grid)?;
    let base = resolve_network(&network_overrides(&a.network), &file);
    if a.dry_run {
        println!("{} configurations", grid.size(variant));
        return Ok(());
    }
    let out = a
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("the following required argument was not provided: --out".into()))?;
    let src = DataSource::resolve(&a.data, &file)?;
    let (k, fold_seed) = fold_settings(&a.folds, &file);
    let ds = src.load()?;
    let plan = make_folds(ds.len(), k, fold_seed)?;
    let res = grid_search(&ds, variant, &grid, &base, &plan, a.jobs)?;

    let mut csv = String::from("index,C,m,p,q,mu,delta,epsilon,mean_accuracy,std_dev");
    for f in 1..=k {
        let _ = write!(csv, ",fold_{f}");
    }
    csv.push_str(",status\n");
    for (i, e) in res.entries.iter().enumerate() {
        grid_row(&mut csv, i, &e.config.variant, e.config.c_reg, &e.config.network);
        match &e.outcome {
            Ok(r) => {
                let _ = write!(csv, ",{},{}", r.mean_accuracy, r.std_dev);
                for acc in &r.per_fold_accuracy {
                    match acc {
                        Some(v) => {
                            let _ = write!(csv, ",{v}");
                        }
                        None => csv.push(','),
                    }
                }
                csv.push_str(",ok\n");
            }
            Err(msg) => {
                csv.push_str(",,");
                csv.push_str(&",".repeat(k));
                let _ = writeln!(csv, ",{}", msg.replace([',', '\n'], ";"));
            }
        }
    }
    write_file(&out, &csv)?;

    let best = res.best();
    let mut m = RunManifest::new(
        "gridsearch",
        argv,
        json!({ "variant": variant, "grid": grid, "base_network": base, "data": src.describe(),
                "k": k, "fold_seed": fold_seed, "jobs": a.jobs, "best_index": res.best_index,
                "best_config": best.best_config }),
    )
    .seed("network", base.seed)
    .seed("folds", fold_seed);
    m.input(&src.path)?;
    m.artifact(&out)?;
    m.write(&manifest_path(&out))?;
    println!(
        "best of {} configurations (row {}): mean accuracy {:.4}, std {:.4}",
        res.entries.len(),
        res.best_index,
        best.mean_accuracy,
        best.std_dev
    );
    println!("{}", serde_json::to_string(&best.best_config).expect("config serialises"));
    Ok(())
}

fn noise(a: NoiseArgs, argv: &[String]) -> Result<(), CliError> {
    let src = DataSource::resolve(&a.data, &FileConfig::default())?;
    let table = src.table()?;
    if table.records.is_empty() {
        return Err(crate::data::DataError::Empty { path: src.path.clone() }.into());
    }
    let label_col = table.resolve_column(src.label.as_deref())?;
    let ds = Dataset::from_table("input", &table, label_col)?;
    let (noisy, rows) = inject_gaussian_noise_rows(&ds, a.level, a.seed)?;

    let mut out = table.clone();
    for &i in &rows {
        let mut values = noisy.x.row(i).iter();
        for (j, cell) in out.records[i].iter_mut().enumerate() {
            if j != label_col {
                *cell = values.next().expect("one value per feature").to_string();
            }
        }
    }
    let mut buf = Vec::new();
    out.write_to(&mut buf).expect("write to memory");
    fs::write(&a.out, &buf).map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    let mut m = RunManifest::new(
        "noise",
        argv,
        json!({ "data": src.describe(), "level": a.level, "corrupted_rows": rows.len(),
                "definition": "each chosen sample gets N(0, std_f^2) added to every feature f" }),
    )
    .seed("noise", a.seed);
    m.input(&src.path)?;
    m.artifact(&a.out)?;
    m.write(&manifest_path(&a.out))?;
    println!("corrupted {} of {} samples", rows.len(), ds.len());
    Ok(())
}

fn stats(a: StatsArgs, argv: &[String]) -> Result<(), CliError> {
    let path = resolve_input(&a.table);
    let table = AccuracyTable::read(&path)?;
    let report = build_report(&table, a.alpha, a.tie_tol)?;
    match &a.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            let manifest_file = dir.join("stats.manifest.json");
            let files = [
                ("ranks.csv", report.ranks_csv()),
                ("friedman.csv", report.friedman_csv()),
                ("wilcoxon.csv", report.wilcoxon_csv()),
                ("win_tie_loss.csv", report.win_tie_loss_csv()),
                ("report.md", report.markdown(Some("stats.manifest.json"))),
            ];
            let mut m = RunManifest::new(
                "stats",
                argv,
                json!({ "table": path.display().to_string(), "alpha": a.alpha, "tie_tol": a.tie_tol }),
            );
            m.input(&path)?;
            for (name, body) in &files {
                let p = dir.join(name);
                write_file(&p, body)?;
                m.artifact(&p)?;
            }
            m.write(&manifest_file)?;
            println!("report written to {}", dir.display());
        }
        None => print!("{}", report.markdown(None)),
    }
    if let Err(e) = &report.friedman {
        return Err(CliError::Stats(e.clone()));
    }
    Ok(())
}
