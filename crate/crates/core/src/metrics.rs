//! Effect-estimation error metrics, latent-recovery scoring, replication
//! aggregation, and scatter-data export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Squared error of an average-effect estimate.
pub fn ate_error(tau_true: f64, tau_hat: f64) -> f64 {
    (tau_true - tau_hat).powi(2)
}

/// Mean squared error of per-unit effect estimates.
pub fn pehe(tau_true: &[f64], tau_hat: &[f64]) -> Result<f64> {
    if tau_true.is_empty() {
        return Err(Error::Usage("pehe needs at least one unit".into()));
    }
    if tau_true.len() != tau_hat.len() {
        return Err(Error::dim("pehe", tau_true.len().to_string(), tau_hat.len().to_string()));
    }
    let n = tau_true.len() as f64;
    Ok(tau_true.iter().zip(tau_hat).map(|(t, h)| (t - h).powi(2)).sum::<f64>() / n)
}

/// Which correlation drives the recovery score. Rank correlation is the
/// default: the latent is recoverable only up to component-wise monotone
/// maps, which ranks are blind to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrKind {
    Spearman,
    Pearson,
}

/// Mean absolute correlation between true and estimated latent columns
/// under the best column-to-column matching, plus that matching.
/// `assignment[i]` is the estimated column paired with true column `i`.
pub fn mcc(z_true: &Tensor, z_hat: &Tensor) -> Result<(f64, Vec<usize>)> {
    mcc_with(CorrKind::Spearman, z_true, z_hat)
}

pub fn mcc_with(kind: CorrKind, z_true: &Tensor, z_hat: &Tensor) -> Result<(f64, Vec<usize>)> {
    if z_true.shape() != z_hat.shape() {
        return Err(Error::dim(
            "mcc",
            format!("{:?}", z_true.shape()),
            format!("{:?}", z_hat.shape()),
        ));
    }
    let (n, d) = (z_true.rows(), z_true.cols());
    if n < 3 {
        return Err(Error::Usage(format!("mcc needs at least 3 rows, got {n}")));
    }
    if d == 0 {
        return Err(Error::Usage("mcc needs at least one column".into()));
    }

    let col = |t: &Tensor, j: usize| -> Vec<f64> { (0..n).map(|i| t.at(i, j)).collect() };
    let prep = |t: &Tensor, side: &str| -> Result<Vec<Vec<f64>>> {
        (0..d)
            .map(|j| {
                let c = col(t, j);
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain(format!("{side} column {j} has non-finite values")));
                }
                if c.iter().all(|&v| v == c[0]) {
                    return Err(Error::Domain(format!(
                        "{side} column {j} is constant: correlation undefined"
                    )));
                }
                Ok(match kind {
                    CorrKind::Spearman => ranks(&c),
                    CorrKind::Pearson => c,
                })
            })
            .collect()
    };
    let a = prep(z_true, "true")?;
    let b = prep(z_hat, "estimated")?;

    let mut score = vec![vec![0.0; d]; d];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            score[i][j] = pearson(ai, bj).abs();
        }
    }

    let assignment =
        if d <= 20 { assign_exact(&score) } else { assign_greedy(&score) };
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| score[i][j]).sum();
    Ok((total / d as f64, assignment))
}

/// Average ranks, 1-based, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    while k < order.len() {
        let mut m = k;
        while m + 1 < order.len() && v[order[m + 1]] == v[order[k]] {
            m += 1;
        }
        let avg = (k + m) as f64 / 2.0 + 1.0;
        for &idx in &order[k..=m] {
            out[idx] = avg;
        }
        k = m + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    num / (va.sqrt() * vb.sqrt())
}

/// Exact maximum-weight matching on a square score matrix, via the
/// potential-based shortest-augmenting-path method on negated scores.
fn assign_exact(score: &[Vec<f64>]) -> Vec<usize> {
    let n = score.len();
    let cost = |i: usize, j: usize| -> f64 { -score[i][j] };
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row (1-based) matched to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

/// Greedy fallback for very wide latents: repeatedly take the largest
/// remaining entry.
fn assign_greedy(score: &[Vec<f64>]) -> Vec<usize> {
    let n = score.len();
    let mut assignment = vec![usize::MAX; n];
    let mut row_done = vec![false; n];
    let mut col_done = vec![false; n];
    for _ in 0..n {
        let mut best = (0usize, 0usize, f64::NEG_INFINITY);
        for i in 0..n {
            if row_done[i] {
                continue;
            }
            for j in 0..n {
                if !col_done[j] && score[i][j] > best.2 {
                    best = (i, j, score[i][j]);
                }
            }
        }
        assignment[best.0] = best.1;
        row_done[best.0] = true;
        col_done[best.1] = true;
    }
    assignment
}

/// One replication's metric values for one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepMetrics {
    pub seed: u64,
    pub eps_ate: f64,
    pub pehe: Option<f64>,
    pub mcc: Option<f64>,
}

/// Mean and sample standard deviation (n−1); a single replication reports
/// a standard deviation of 0 by convention.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Summary { mean, std }
}

/// Aggregated replications for one method on one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub eps_ate: Vec<f64>,
    pub pehe: Option<Vec<f64>>,
    pub mcc: Option<Vec<f64>>,
    pub eps_ate_summary: Summary,
    pub pehe_summary: Option<Summary>,
    pub mcc_summary: Option<Summary>,
}

pub fn aggregate(method: &str, scenario: &str, reps: &[RepMetrics]) -> Result<MetricsReport> {
    if reps.is_empty() {
        return Err(Error::Usage("aggregate needs at least one replication".into()));
    }
    let all_or_none = |name: &str, present: usize| -> Result<bool> {
        match present {
            0 => Ok(false),
            k if k == reps.len() => Ok(true),
            k => Err(Error::Usage(format!(
                "{name} present in {k} of {} replications; must be all or none",
                reps.len()
            ))),
        }
    };
    let has_pehe = all_or_none("pehe", reps.iter().filter(|r| r.pehe.is_some()).count())?;
    let has_mcc = all_or_none("mcc", reps.iter().filter(|r| r.mcc.is_some()).count())?;

    let eps_ate: Vec<f64> = reps.iter().map(|r| r.eps_ate).collect();
    let pehe = has_pehe.then(|| reps.iter().map(|r| r.pehe.unwrap()).collect::<Vec<_>>());
    let mcc = has_mcc.then(|| reps.iter().map(|r| r.mcc.unwrap()).collect::<Vec<_>>());

    Ok(MetricsReport {
        method: method.to_string(),
        scenario: scenario.to_string(),
        seeds: reps.iter().map(|r| r.seed).collect(),
        eps_ate_summary: summarize(&eps_ate),
        pehe_summary: pehe.as_deref().map(summarize),
        mcc_summary: mcc.as_deref().map(summarize),
        eps_ate,
        pehe,
        mcc,
    })
}

/// Render reports as a method-per-row CSV table; absent metrics show `-`.
pub fn table_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(
        "method,scenario,eps_ate_mean,eps_ate_std,eps_ite_mean,eps_ite_std,mcc_mean,mcc_std\n",
    );
    let cell = |s: Option<Summary>| -> (String, String) {
        match s {
            Some(s) => (format!("{:.6}", s.mean), format!("{:.6}", s.std)),
            None => ("-".into(), "-".into()),
        }
    };
    for r in reports {
        let (am, asd) = cell(Some(r.eps_ate_summary));
        let (pm, psd) = cell(r.pehe_summary);
        let (mm, msd) = cell(r.mcc_summary);
        out.push_str(&format!(
            "{},{},{am},{asd},{pm},{psd},{mm},{msd}\n",
            r.method, r.scenario
        ));
    }
    out
}

/// Dump every (true dim, estimated dim) value pairing for external
/// scatter-grid plotting; the `matched` column marks the pairs chosen by
/// the recovery score's assignment.
pub fn scatter_export(z_true: &Tensor, z_hat: &Tensor, path: &Path) -> Result<()> {
    let (_, assignment) = mcc(z_true, z_hat)?;
    let (n, d) = (z_true.rows(), z_true.cols());
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "true_dim,est_dim,true_value,est_value,matched")?;
    for td in 0..d {
        for ed in 0..d {
            let matched = (assignment[td] == ed) as u8;
            for i in 0..n {
                writeln!(
                    out,
                    "{},{},{:.16e},{:.16e},{}",
                    td + 1,
                    ed + 1,
                    z_true.at(i, td),
                    z_hat.at(i, ed),
                    matched
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Tensor {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Tensor::new(vec![rows, cols], data).unwrap()
    }

    #[test]
    fn ate_error_examples() {
        assert_eq!(ate_error(2.0, 1.5), 0.25);
        assert_eq!(ate_error(3.7, 3.7), 0.0);
    }

    #[test]
    fn pehe_examples() {
        assert_eq!(pehe(&[1.0, 3.0], &[2.0, 1.0]).unwrap(), 2.5);
        assert_eq!(pehe(&[4.0; 9], &[4.0; 9]).unwrap(), 0.0);
        assert!(pehe(&[1.0], &[1.0, 2.0]).is_err());
        assert!(pehe(&[], &[]).is_err());
    }

    #[test]
    fn mcc_recovers_monotone_disguises() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 500;
        let z: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.gen::<f64>() * 4.0 - 2.0, rng.gen(), rng.gen::<f64>() - 0.5])
            .collect();
        let z_true = mat(n, 3, |i, j| z[i][j]);
        // permute columns (0,1,2) -> (2,0,1), negate one, cube another
        let z_hat = mat(n, 3, |i, j| match j {
            0 => -z[i][2],
            1 => z[i][0].powi(3),
            _ => z[i][1],
        });
        let (score, assignment) = mcc(&z_true, &z_hat).unwrap();
        assert!((score - 1.0).abs() < 1e-12, "score {score}");
        assert_eq!(assignment, vec![1, 2, 0]);
    }

    #[test]
    fn mcc_null_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let z_true = mat(n, 2, |_, _| rng.gen::<f64>());
        let z_hat = mat(n, 2, |_, _| rng.gen::<f64>());
        let (score, _) = mcc(&z_true, &z_hat).unwrap();
        assert!(score < 0.05, "null score {score}");
    }

    #[test]
    fn mcc_single_column_monotone() {
        let n = 200;
        let z_true = mat(n, 1, |i, _| (i as f64 / 17.0).sin());
        let z_hat = mat(n, 1, |i, _| (i as f64 / 17.0).sin().exp());
        let (score, assignment) = mcc(&z_true, &z_hat).unwrap();
        assert!((score - 1.0).abs() < 1e-12);
        assert_eq!(assignment, vec![0]);
    }

    #[test]
    fn mcc_rejects_bad_input() {
        let z = mat(10, 2, |i, j| (i * 2 + j) as f64);
        let constant = mat(10, 2, |i, j| if j == 0 { 5.0 } else { i as f64 });
        assert!(matches!(mcc(&z, &constant), Err(Error::Domain(_))));
        let short = mat(2, 2, |i, j| (i + j) as f64);
        assert!(matches!(mcc(&short, &short), Err(Error::Usage(_))));
        let wrong = mat(9, 2, |i, j| (i + j) as f64);
        assert!(matches!(mcc(&z, &wrong), Err(Error::Dim { .. })));
        let nan = mat(10, 2, |i, j| if i == 3 && j == 1 { f64::NAN } else { i as f64 + j as f64 });
        assert!(matches!(mcc(&z, &nan), Err(Error::Domain(_))));
    }

    #[test]
    fn pearson_flag_differs_from_ranks_on_nonlinear_maps() {
        let n = 400;
        let z_true = mat(n, 1, |i, _| i as f64 / n as f64 * 6.0 - 3.0);
        let z_hat = mat(n, 1, |i, _| (i as f64 / n as f64 * 6.0 - 3.0).powi(3));
        let (sp, _) = mcc_with(CorrKind::Spearman, &z_true, &z_hat).unwrap();
        let (pe, _) = mcc_with(CorrKind::Pearson, &z_true, &z_hat).unwrap();
        assert!((sp - 1.0).abs() < 1e-12);
        assert!(pe < sp, "pearson {pe} should drop below spearman {sp}");
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert_eq!(ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    fn brute_force_best(score: &[Vec<f64>]) -> f64 {
        fn go(score: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == score.len() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for j in 0..score.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(score[row][j] + go(score, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(score, 0, &mut vec![false; score.len()])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_assignment_matches_brute_force(
            d in 2usize..6,
            seed in 0u64..10_000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let score: Vec<Vec<f64>> =
                (0..d).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
            let assignment = assign_exact(&score);
            // valid permutation
            let mut seen = vec![false; d];
            for &j in &assignment {
                prop_assert!(j < d && !seen[j]);
                seen[j] = true;
            }
            let total: f64 = assignment.iter().enumerate().map(|(i, &j)| score[i][j]).sum();
            let best = brute_force_best(&score);
            prop_assert!((total - best).abs() < 1e-12, "exact {total} vs brute {best}");
        }

        #[test]
        fn mcc_invariant_under_disguise(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 60;
            let d = 3;
            let base: Vec<Vec<f64>> =
                (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).collect();
            let z_true = mat(n, d, |i, j| base[i][j]);
            let (s0, _) = mcc(&z_true, &z_true).unwrap();

            // random permutation via sort-by-random-key, random signs,
            // per-column strictly monotone maps
            let mut perm: Vec<usize> = (0..d).collect();
            for i in (1..d).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let signs: Vec<f64> = (0..d).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            let which: Vec<u8> = (0..d).map(|_| rng.gen_range(0..3)).collect();
            let z_hat = mat(n, d, |i, j| {
                let v = signs[j] * base[i][perm[j]];
                match which[j] {
                    0 => v.powi(3),
                    1 => v.exp(),
                    _ => 2.0 * v + 1.0,
                }
            });
            let (s1, assignment) = mcc(&z_true, &z_hat).unwrap();
            prop_assert!((s0 - 1.0).abs() < 1e-12);
            prop_assert!((s1 - s0).abs() < 1e-12, "disguised {s1} vs plain {s0}");
            // assignment must invert the permutation
            for (col_true, &col_hat) in assignment.iter().enumerate() {
                prop_assert_eq!(perm[col_hat], col_true);
            }
        }

        #[test]
        fn pehe_nonnegative_definite(
            v in prop::collection::vec(-1e3f64..1e3, 1..40),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = v.iter().map(|x| x + rng.gen::<f64>() - 0.5).collect();
            let p = pehe(&v, &w).unwrap();
            prop_assert!(p >= 0.0);
            prop_assert_eq!(pehe(&v, &v).unwrap(), 0.0);
            if v != w {
                prop_assert!(p > 0.0);
            }
        }

        #[test]
        fn pehe_constant_offset(
            v in prop::collection::vec(-1e2f64..1e2, 1..30),
            c in -50.0f64..50.0,
        ) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let p = pehe(&v, &shifted).unwrap();
            prop_assert!((p - c * c).abs() < 1e-9 * (1.0 + c * c));
        }

        #[test]
        fn ate_error_symmetric(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            prop_assert_eq!(ate_error(a, b), ate_error(b, a));
        }
    }

    #[test]
    fn aggregate_summaries() {
        let reps: Vec<RepMetrics> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| RepMetrics {
                seed: i as u64,
                eps_ate: v,
                pehe: Some(v * 2.0),
                mcc: None,
            })
            .collect();
        let rep = aggregate("ltce", "synthetic-1", &reps).unwrap();
        assert_eq!(rep.eps_ate_summary.mean, 2.0);
        assert!((rep.eps_ate_summary.std - 1.0).abs() < 1e-12);
        let ps = rep.pehe_summary.unwrap();
        assert_eq!(ps.mean, 4.0);
        assert!((ps.std - 2.0).abs() < 1e-12);
        assert!(rep.mcc_summary.is_none());

        // order invariance
        let mut rev = reps.clone();
        rev.reverse();
        let rep2 = aggregate("ltce", "synthetic-1", &rev).unwrap();
        assert_eq!(rep.eps_ate_summary.mean, rep2.eps_ate_summary.mean);
        assert_eq!(rep.eps_ate_summary.std, rep2.eps_ate_summary.std);

        // single replication → std 0
        let one = aggregate("ltce", "synthetic-1", &reps[..1]).unwrap();
        assert_eq!(one.eps_ate_summary.std, 0.0);

        // constants → mean is the constant, std 0
        let consts: Vec<RepMetrics> = (0..5)
            .map(|i| RepMetrics { seed: i, eps_ate: 7.25, pehe: None, mcc: Some(0.5) })
            .collect();
        let repc = aggregate("m", "s", &consts).unwrap();
        assert_eq!(repc.eps_ate_summary.mean, 7.25);
        assert_eq!(repc.eps_ate_summary.std, 0.0);

        // ragged presence rejected
        let mut ragged = reps.clone();
        ragged[1].pehe = None;
        assert!(aggregate("m", "s", &ragged).is_err());
        assert!(aggregate("m", "s", &[]).is_err());
    }

    #[test]
    fn table_renders_dashes_for_absent_metrics() {
        let rep = aggregate(
            "imputation",
            "synthetic-2",
            &[
                RepMetrics { seed: 1, eps_ate: 0.5, pehe: None, mcc: None },
                RepMetrics { seed: 2, eps_ate: 1.5, pehe: None, mcc: None },
            ],
        )
        .unwrap();
        let csv = table_csv(&[rep]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,scenario,eps_ate_mean,eps_ate_std,eps_ite_mean,eps_ite_std,mcc_mean,mcc_std"
        );
        let row = lines.next().unwrap();
        assert_eq!(row, "imputation,synthetic-2,1.000000,0.707107,-,-,-,-");
    }

    #[test]
    fn report_json_round_trip() {
        let rep = aggregate(
            "ltce",
            "synthetic-5",
            &[RepMetrics { seed: 9, eps_ate: 0.1, pehe: Some(3.2), mcc: Some(0.8) }],
        )
        .unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.method, "ltce");
        assert_eq!(back.eps_ate, vec![0.1]);
        assert_eq!(back.pehe, Some(vec![3.2]));
        assert_eq!(back.mcc_summary.unwrap().mean, 0.8);
    }

    #[test]
    fn scatter_export_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100;
        let z_true = mat(n, 2, |_, _| rng.gen::<f64>());
        let z_hat = mat(n, 2, |i, j| z_true.at(i, j) * 2.0 + 0.1 * rng.gen::<f64>());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scatter.csv");
        scatter_export(&z_true, &z_hat, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 * n); // header + d*d blocks of n rows
        assert_eq!(lines[0], "true_dim,est_dim,true_value,est_value,matched");
        let mut matched = 0usize;
        for line in &lines[1..] {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 5);
            let _: usize = f[0].parse().unwrap();
            let _: f64 = f[2].parse().unwrap();
            let _: f64 = f[3].parse().unwrap();
            matched += (f[4] == "1") as usize;
        }
        assert_eq!(matched, 2 * n); // one matched block per true dim
    }
}
