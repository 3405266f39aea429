//! Rank-based comparison of several classifiers over many datasets.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("accuracy table has no rows or no models")]
    EmptyTable,
    #[error("row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("non-finite accuracy at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("Friedman test needs K >= 2 datasets and D >= 2 models (got K = {k}, D = {d})")]
    TooSmall { k: usize, d: usize },
    #[error("F statistic undefined: chi-square equals K(D-1) (complete agreement)")]
    DegenerateF,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("Wilcoxon test needs at least 5 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("no nonzero pairs")]
    NoNonzeroPairs,
}

pub type Result<T> = std::result::Result<T, StatsError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub accuracy: Vec<Vec<f64>>,
    /// Per-dataset ranks, 1 = highest accuracy, ties averaged.
    pub ranks: Vec<Vec<f64>>,
    pub average_rank: Vec<f64>,
}

/// Ranks one row descending (1 = largest). Equal values share the mean of
/// the positions they cover.
pub fn rank_descending(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    average_tied_ranks(row, &order)
}

fn rank_ascending(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    average_tied_ranks(row, &order)
}

fn average_tied_ranks(row: &[f64], order: &[usize]) -> Vec<f64> {
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

pub fn rank_models(
    datasets: Vec<String>,
    models: Vec<String>,
    accuracy: Vec<Vec<f64>>,
) -> Result<RankTable> {
    let d = models.len();
    if accuracy.is_empty() || d == 0 {
        return Err(StatsError::EmptyTable);
    }
    for (row, r) in accuracy.iter().enumerate() {
        if r.len() != d {
            return Err(StatsError::Ragged {
                row,
                expected: d,
                got: r.len(),
            });
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite { row, col });
        }
    }
    let ranks: Vec<Vec<f64>> = accuracy.iter().map(|r| rank_descending(r)).collect();
    let k = ranks.len() as f64;
    let average_rank = (0..d)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / k)
        .collect();
    Ok(RankTable {
        datasets,
        models,
        accuracy,
        ranks,
        average_rank,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub chi_square: f64,
    pub f_stat: f64,
    /// `D − 1`.
    pub df_chi_square: usize,
    /// `(D − 1, (K − 1)(D − 1))`.
    pub df_f: (usize, usize),
    pub p_chi_square: f64,
    pub p_f: f64,
}

/// `12K / (D(D+1)) · (Σ r_d² − D(D+1)²/4)` from the per-model average ranks.
pub fn friedman_chi_square(average_rank: &[f64], k: usize) -> Result<f64> {
    let d = average_rank.len();
    if k < 2 || d < 2 {
        return Err(StatsError::TooSmall { k, d });
    }
    let (kf, df) = (k as f64, d as f64);
    let sum_sq: f64 = average_rank.iter().map(|r| r * r).sum();
    Ok(12.0 * kf / (df * (df + 1.0)) * (sum_sq - df * (df + 1.0).powi(2) / 4.0))
}

/// Friedman chi-square and the Iman-Davenport F statistic with p-values.
pub fn friedman_from_average_ranks(average_rank: &[f64], k: usize) -> Result<FriedmanResult> {
    let chi2 = friedman_chi_square(average_rank, k)?;
    let d = average_rank.len();
    let (kf, df) = (k as f64, d as f64);
    let denom = kf * (df - 1.0) - chi2;
    if denom.abs() <= 1e-12 * kf * df {
        return Err(StatsError::DegenerateF);
    }
    let f_stat = (kf - 1.0) * chi2 / denom;
    let df_f = (d - 1, (k - 1) * (d - 1));
    let chi_dist = ChiSquared::new(df - 1.0).expect("positive degrees of freedom");
    let f_dist =
        FisherSnedecor::new(df_f.0 as f64, df_f.1 as f64).expect("positive degrees of freedom");
    Ok(FriedmanResult {
        chi_square: chi2,
        f_stat,
        df_chi_square: d - 1,
        df_f,
        p_chi_square: chi_dist.sf(chi2.max(0.0)),
        p_f: f_dist.sf(f_stat.max(0.0)),
    })
}

pub fn friedman_test(table: &RankTable) -> Result<FriedmanResult> {
    friedman_from_average_ranks(&table.average_rank, table.ranks.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n_nonzero: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(W+, W−)`.
    pub statistic: f64,
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Two-sided signed-rank test on `a − b`, normal approximation with tie
/// correction and continuity correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 5 {
        return Err(StatsError::TooFewPairs(a.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::NoNonzeroPairs);
    }
    let n = diffs.len() as f64;
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = rank_ascending(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus = n * (n + 1.0) / 2.0 - w_plus;
    let statistic = w_plus.min(w_minus);

    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = if var > 0.0 {
        ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt()
    } else {
        0.0
    };
    let p_value = erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(WilcoxonResult {
        n_nonzero: diffs.len(),
        w_plus,
        w_minus,
        statistic,
        z,
        p_value,
        reject: p_value < alpha,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinTieLoss {
    pub wins_a: usize,
    pub ties: usize,
    pub wins_b: usize,
    pub threshold: f64,
    pub significant: bool,
}

/// Sign-test victory count needed for significance at 5%: `K/2 + 1.96·√K/2`.
pub fn sign_test_threshold(k: usize) -> f64 {
    let k = k as f64;
    k / 2.0 + 1.96 * k.sqrt() / 2.0
}

/// Counts per-dataset wins with `|a − b| <= tie_tol` treated as a tie. Ties
/// count half to each side when testing significance.
pub fn win_tie_loss(a: &[f64], b: &[f64], tie_tol: f64) -> Result<WinTieLoss> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let (mut wins_a, mut ties, mut wins_b) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        if x - y > tie_tol {
            wins_a += 1;
        } else if y - x > tie_tol {
            wins_b += 1;
        } else {
            ties += 1;
        }
    }
    let threshold = sign_test_threshold(a.len());
    let half = ties as f64 / 2.0;
    let significant =
        wins_a as f64 + half >= threshold || wins_b as f64 + half >= threshold;
    Ok(WinTieLoss {
        wins_a,
        ties,
        wins_b,
        threshold,
        significant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn rank_example_rows() {
        let bank = [89.7366, 89.4051, 89.5817, 88.4981, 88.6308, 89.759, 89.4051];
        assert_eq!(rank_descending(&bank), vec![2.0, 4.5, 3.0, 7.0, 6.0, 1.0, 4.5]);
        assert_eq!(rank_descending(&[0.7; 4]), vec![2.5; 4]);
        assert_eq!(rank_descending(&[3.0, 1.0, 3.0, 3.0]), vec![2.0, 4.0, 2.0, 2.0]);
    }

    #[test]
    fn rank_table_checks_input() {
        let names = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        assert_eq!(
            rank_models(names(1), names(2), vec![vec![1.0]]),
            Err(StatsError::Ragged { row: 0, expected: 2, got: 1 })
        );
        assert_eq!(
            rank_models(names(1), names(2), vec![vec![1.0, f64::NAN]]),
            Err(StatsError::NonFinite { row: 0, col: 1 })
        );
        assert_eq!(rank_models(vec![], names(2), vec![]), Err(StatsError::EmptyTable));
    }

    #[test]
    fn friedman_hand_example() {
        // D = 2, K = 3, model 0 always best: average ranks (1, 2)
        assert_abs_diff_eq!(friedman_chi_square(&[1.0, 2.0], 3).unwrap(), 3.0, epsilon = 1e-12);
        // chi-square reaches K(D-1) here, so F is undefined
        assert_eq!(friedman_from_average_ranks(&[1.0, 2.0], 3), Err(StatsError::DegenerateF));
    }

    #[test]
    fn friedman_identical_models() {
        let t = rank_models(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into(), "y".into(), "z".into()],
            vec![vec![0.9; 3], vec![0.5; 3], vec![0.7; 3]],
        )
        .unwrap();
        let f = friedman_test(&t).unwrap();
        assert_eq!(f.chi_square, 0.0);
        assert_eq!(f.f_stat, 0.0);
        assert_eq!(f.p_chi_square, 1.0);
        assert_eq!((f.df_chi_square, f.df_f), (2, (2, 4)));
    }

    #[test]
    fn friedman_needs_two_rows() {
        assert_eq!(
            friedman_chi_square(&[1.0, 2.0], 1),
            Err(StatsError::TooSmall { k: 1, d: 2 })
        );
    }

    #[test]
    fn friedman_p_values_follow_distributions() {
        let f = friedman_from_average_ranks(&[1.5, 2.0, 2.5], 10).unwrap();
        // chi2 = 12*10/12 * (12.5 - 12) = 5, F = 9*5 / (20 - 5) = 3
        assert_abs_diff_eq!(f.chi_square, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.f_stat, 3.0, epsilon = 1e-12);
        // chi-square with 2 dof has survival exp(-x/2)
        assert_abs_diff_eq!(f.p_chi_square, (-2.5f64).exp(), epsilon = 1e-12);
    }

    /// Signed-rank statistic by brute force over all pairs (Walsh averages
    /// counting): W+ = #{i <= j : d_i + d_j > 0} + ½ #{i <= j : d_i + d_j = 0}
    /// holds for distinct nonzero |d|.
    fn walsh_w_plus(d: &[f64]) -> f64 {
        let mut w = 0.0;
        for i in 0..d.len() {
            for j in i..d.len() {
                let s = d[i] + d[j];
                if s > 0.0 {
                    w += 1.0;
                } else if s == 0.0 {
                    w += 0.5;
                }
            }
        }
        w
    }

    #[test]
    fn wilcoxon_hand_example() {
        // diffs 1, -2, 3, 4, 5, 6: W- = 2, W+ = 19, n = 6, no ties
        let a = [2.0, 1.0, 6.0, 8.0, 10.0, 12.0];
        let b = [1.0, 3.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
        assert_eq!((r.w_plus, r.w_minus, r.statistic), (19.0, 2.0, 2.0));
        // mean 10.5, var 22.75, z = (8.5 - 0.5) / sqrt(22.75)
        let z = 8.0 / 22.75f64.sqrt();
        assert_abs_diff_eq!(r.z, z, epsilon = 1e-12);
        let p = 2.0 * (1.0 - statrs::distribution::Normal::standard().cdf(z));
        assert_abs_diff_eq!(r.p_value, p, epsilon = 1e-12);
        assert!(!r.reject);
    }

    #[test]
    fn wilcoxon_zero_and_tie_handling() {
        // one zero difference dropped; |d| = 1, 1, 2, 3, 4 has one tied pair
        let a = [5.0, 2.0, 0.0, 4.0, 6.0, 9.0];
        let b = [5.0, 1.0, 1.0, 2.0, 3.0, 5.0];
        let r = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
        assert_eq!(r.n_nonzero, 5);
        assert_eq!(r.w_minus, 1.5);
        let var = 5.0 * 6.0 * 11.0 / 24.0 - 6.0 / 48.0;
        assert_abs_diff_eq!(r.z, (7.5 - 1.5 - 0.5) / f64::sqrt(var), epsilon = 1e-12);
    }

    #[test]
    fn wilcoxon_errors() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(wilcoxon_signed_rank(&a, &a, 0.05), Err(StatsError::NoNonzeroPairs));
        assert_eq!(StatsError::NoNonzeroPairs.to_string(), "no nonzero pairs");
        assert_eq!(wilcoxon_signed_rank(&a[..4], &a[..4], 0.05), Err(StatsError::TooFewPairs(4)));
        assert!(wilcoxon_signed_rank(&a, &a[..4], 0.05).is_err());
    }

    #[test]
    fn threshold_for_28() {
        assert_abs_diff_eq!(sign_test_threshold(28), 19.1857, epsilon = 1e-3);
    }

    #[test]
    fn win_tie_loss_identical() {
        let a = [0.5, 0.7, 0.9];
        let w = win_tie_loss(&a, &a, 1e-4).unwrap();
        assert_eq!((w.wins_a, w.ties, w.wins_b), (0, 3, 0));
        let w = win_tie_loss(&[1.0, 2.0, 3.00005], &[0.0, 3.0, 3.0], 1e-4).unwrap();
        assert_eq!((w.wins_a, w.ties, w.wins_b), (1, 1, 1));
    }

    fn table_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..6).prop_flat_map(|d| {
            prop::collection::vec(
                prop::collection::vec((0u32..8).prop_map(|v| v as f64 / 8.0), d),
                2..10,
            )
        })
    }

    proptest! {
        #[test]
        fn rank_rows_sum_and_shift_invariance(acc in table_strategy(), shift in -5.0f64..5.0) {
            let d = acc[0].len();
            let names = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
            let t = rank_models(names(acc.len()), names(d), acc.clone()).unwrap();
            for r in &t.ranks {
                prop_assert_eq!(r.iter().sum::<f64>(), (d * (d + 1)) as f64 / 2.0);
            }
            // shifting by a multiple of 2^-3 keeps values exact
            let shift = (shift * 8.0).round() / 8.0;
            let moved: Vec<Vec<f64>> = acc.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
            let t2 = rank_models(names(acc.len()), names(d), moved).unwrap();
            prop_assert_eq!(&t.ranks, &t2.ranks);
            prop_assert_eq!(friedman_chi_square(&t.average_rank, acc.len()), friedman_chi_square(&t2.average_rank, acc.len()));
        }

        #[test]
        fn wilcoxon_symmetric(a in prop::collection::vec(-20i32..20, 5..30), b in prop::collection::vec(-20i32..20, 30)) {
            let a: Vec<f64> = a.iter().map(|&v| v as f64).collect();
            let b: Vec<f64> = b[..a.len()].iter().map(|&v| v as f64).collect();
            match (wilcoxon_signed_rank(&a, &b, 0.05), wilcoxon_signed_rank(&b, &a, 0.05)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x.p_value, y.p_value);
                    prop_assert_eq!(x.reject, y.reject);
                    prop_assert_eq!(x.w_plus, y.w_minus);
                }
                (Err(x), Err(y)) => prop_assert_eq!(x, y),
                _ => prop_assert!(false, "asymmetric outcome"),
            }
        }

        #[test]
        fn w_plus_matches_walsh_count(mags in prop::collection::btree_set(1u32..500, 5..25), signs in prop::collection::vec(any::<bool>(), 25)) {
            let d: Vec<f64> = mags.iter().zip(&signs).map(|(&m, &s)| if s { m as f64 } else { -(m as f64) }).collect();
            let zeros = vec![0.0; d.len()];
            let r = wilcoxon_signed_rank(&d, &zeros, 0.05).unwrap();
            prop_assert_eq!(r.w_plus, walsh_w_plus(&d));
        }

        #[test]
        fn win_tie_loss_partitions(a in prop::collection::vec(0.0f64..1.0, 1..40), seed in any::<u64>()) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| if (seed >> (i % 64)) & 1 == 1 { *v } else { 1.0 - v }).collect();
            let w = win_tie_loss(&a, &b, 1e-4).unwrap();
            prop_assert_eq!(w.wins_a + w.ties + w.wins_b, a.len());
            let rev = win_tie_loss(&b, &a, 1e-4).unwrap();
            prop_assert_eq!((rev.wins_a, rev.ties, rev.wins_b), (w.wins_b, w.ties, w.wins_a));
        }
    }
}
