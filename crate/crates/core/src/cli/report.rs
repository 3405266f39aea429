//! Accuracy-table input and the statistics report (ranks, Friedman,
//! pairwise Wilcoxon, pairwise win-tie-loss).

use std::fmt::Write as _;
use std::path::Path;

use crate::data::CsvTable;
use crate::stats::{
    friedman_test, rank_models, sign_test_threshold, wilcoxon_signed_rank, win_tie_loss,
    FriedmanResult, RankTable, StatsError, WilcoxonResult, WinTieLoss,
};

use super::CliError;

/// K datasets by D models. The header row names the models after a leading
/// dataset-name cell; each following row is a dataset name and D accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl AccuracyTable {
    pub fn parse(text: &str) -> Result<AccuracyTable, CliError> {
        let table = CsvTable::parse(text, true)?;
        let header = table
            .header
            .clone()
            .ok_or_else(|| CliError::Config("accuracy table is empty".into()))?;
        if header.len() < 2 {
            return Err(CliError::Config(
                "accuracy table needs a dataset column and at least one model column".into(),
            ));
        }
        let x = table.features(Some(0))?;
        Ok(AccuracyTable {
            datasets: table.records.iter().map(|r| r[0].trim().to_owned()).collect(),
            models: header[1..].to_vec(),
            values: x.row_iter().map(<[f64]>::to_vec).collect(),
        })
    }

    pub fn read(path: &Path) -> Result<AccuracyTable, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        AccuracyTable::parse(&text)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }
}

/// Pair `(a, b)` with `a` the later model in the table, as in a lower
/// triangular comparison matrix.
#[derive(Debug, Clone)]
pub struct PairOutcome<T> {
    pub model_a: String,
    pub model_b: String,
    pub outcome: Result<T, StatsError>,
}

#[derive(Debug, Clone)]
pub struct StatsReport {
    pub ranks: RankTable,
    pub friedman: Result<FriedmanResult, StatsError>,
    pub wilcoxon: Vec<PairOutcome<WilcoxonResult>>,
    pub win_tie_loss: Vec<PairOutcome<WinTieLoss>>,
    pub alpha: f64,
    pub tie_tol: f64,
}

pub fn build_report(t: &AccuracyTable, alpha: f64, tie_tol: f64) -> Result<StatsReport, CliError> {
    let ranks = rank_models(t.datasets.clone(), t.models.clone(), t.values.clone())?;
    let friedman = friedman_test(&ranks);
    let mut wilcoxon = Vec::new();
    let mut wtl = Vec::new();
    for a in 1..t.models.len() {
        for b in 0..a {
            let (ca, cb) = (t.column(a), t.column(b));
            wilcoxon.push(PairOutcome {
                model_a: t.models[a].clone(),
                model_b: t.models[b].clone(),
                outcome: wilcoxon_signed_rank(&ca, &cb, alpha),
            });
            wtl.push(PairOutcome {
                model_a: t.models[a].clone(),
                model_b: t.models[b].clone(),
                outcome: win_tie_loss(&ca, &cb, tie_tol),
            });
        }
    }
    Ok(StatsReport {
        ranks,
        friedman,
        wilcoxon,
        win_tie_loss: wtl,
        alpha,
        tie_tol,
    })
}

impl StatsReport {
    pub fn ranks_csv(&self) -> String {
        let mut s = String::from("dataset");
        for m in &self.ranks.models {
            s.push(',');
            s.push_str(m);
        }
        s.push('\n');
        for (name, row) in self.ranks.datasets.iter().zip(&self.ranks.ranks) {
            s.push_str(name);
            for r in row {
                let _ = write!(s, ",{r}");
            }
            s.push('\n');
        }
        s.push_str("average_rank");
        for r in &self.ranks.average_rank {
            let _ = write!(s, ",{r}");
        }
        s.push('\n');
        s
    }

    pub fn friedman_csv(&self) -> String {
        let mut s = String::from("statistic,value,df1,df2,p_value,error\n");
        match &self.friedman {
            Ok(f) => {
                let _ = writeln!(s, "chi_square,{},{},,{},", f.chi_square, f.df_chi_square, f.p_chi_square);
                let _ = writeln!(s, "f,{},{},{},{},", f.f_stat, f.df_f.0, f.df_f.1, f.p_f);
            }
            Err(e) => {
                let _ = writeln!(s, "chi_square,,,,,{e}");
                let _ = writeln!(s, "f,,,,,{e}");
            }
        }
        s
    }

    pub fn wilcoxon_csv(&self) -> String {
        let mut s =
            String::from("model_a,model_b,n_nonzero,w_plus,w_minus,statistic,z,p_value,reject,error\n");
        for p in &self.wilcoxon {
            match &p.outcome {
                Ok(w) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},",
                        p.model_a, p.model_b, w.n_nonzero, w.w_plus, w.w_minus, w.statistic, w.z, w.p_value, w.reject
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "{},{},,,,,,,,{e}", p.model_a, p.model_b);
                }
            }
        }
        s
    }

    pub fn win_tie_loss_csv(&self) -> String {
        let mut s = String::from("model_a,model_b,wins_a,ties,wins_b,threshold,significant\n");
        for p in &self.win_tie_loss {
            if let Ok(w) = &p.outcome {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    p.model_a, p.model_b, w.wins_a, w.ties, w.wins_b, w.threshold, w.significant
                );
            }
        }
        s
    }

    pub fn markdown(&self, manifest: Option<&str>) -> String {
        let r = &self.ranks;
        let k = r.datasets.len();
        let mut s = String::from("# Classifier comparison\n\n");
        let _ = writeln!(s, "{k} datasets, {} models.", r.models.len());
        if let Some(m) = manifest {
            let _ = writeln!(s, "Produced by run manifest `{m}`.");
        }

        s.push_str("\n## Average ranks\n\n| Model | Average rank |\n|---|---|\n");
        for (m, a) in r.models.iter().zip(&r.average_rank) {
            let _ = writeln!(s, "| {m} | {a:.4} |");
        }

        s.push_str("\n## Friedman test\n\n");
        match &self.friedman {
            Ok(f) => {
                let _ = writeln!(
                    s,
                    "chi-square = {:.4} (df {}, p = {:.3e})  \nF = {:.4} (df {}, {}; p = {:.3e})",
                    f.chi_square, f.df_chi_square, f.p_chi_square, f.f_stat, f.df_f.0, f.df_f.1, f.p_f
                );
            }
            Err(e) => {
                let _ = writeln!(s, "Not computed: {e}.");
            }
        }

        let _ = writeln!(
            s,
            "\n## Wilcoxon signed-rank test (alpha = {})\n\n| Model | vs | p-value | Decision |\n|---|---|---|---|",
            self.alpha
        );
        for p in &self.wilcoxon {
            match &p.outcome {
                Ok(w) => {
                    let d = if w.reject { "Rejected" } else { "Not rejected" };
                    let _ = writeln!(s, "| {} | {} | {:.3e} | {d} |", p.model_a, p.model_b, w.p_value);
                }
                Err(e) => {
                    let _ = writeln!(s, "| {} | {} | | {e} |", p.model_a, p.model_b);
                }
            }
        }

        let _ = writeln!(
            s,
            "\n## Wins, ties and losses (tie tolerance {})\n\nEach cell is [row wins, ties, column wins]. \
             A side is significantly better with at least {:.4} wins (ties split evenly).\n",
            self.tie_tol,
            sign_test_threshold(k)
        );
        s.push_str("| |");
        for m in &r.models[..r.models.len().saturating_sub(1)] {
            let _ = write!(s, " {m} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(r.models.len().saturating_sub(1)));
        s.push('\n');
        let mut pairs = self.win_tie_loss.iter();
        for a in 1..r.models.len() {
            let _ = write!(s, "| {} |", r.models[a]);
            for b in 0..r.models.len() - 1 {
                if b < a {
                    match pairs.next().map(|p| &p.outcome) {
                        Some(Ok(w)) => {
                            let _ = write!(s, " [{}, {}, {}] |", w.wins_a, w.ties, w.wins_b);
                        }
                        _ => s.push_str(" |"),
                    }
                } else {
                    s.push_str(" |");
                }
            }
            s.push('\n');
        }
        s
    }
}
