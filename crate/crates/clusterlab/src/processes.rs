//! Centered, normalized empirical cluster processes evaluated over Monte
//! Carlo replications, with variance/covariance and Gaussianity reports.
//!
//! Three normalizations are supported: the basic process at scale sqrt(n w),
//! the moderate-blocks process at scale sqrt(n r^{2 gamma + 1}) w, and the
//! jump-functional process at scale sqrt(n w) r^gamma. Centering never uses
//! the replicate data itself: it is exact where the iid pattern oracle has a
//! closed form, and otherwise comes from an independent, larger block run
//! whose standard error is propagated into the report.
//!
//! For iid models and pattern-only functionals, a replicate is sampled
//! without materializing the series: exceedance-count classes are drawn by
//! sequential conditional binomials and only multi-exceedance (or
//! position-dependent) blocks get explicit patterns, so sample sizes far
//! beyond memory limits are reachable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{block_mc_sums, pattern_mc_sums};
use crate::functionals::Functional;
use crate::generators::{sample_block_class_counts, sample_pattern, GeneratorModel};
use crate::iid_oracle::exact_block_mean;
use crate::rng::{derive_seed, stream};
use crate::stats::{
    covariance, excess_kurtosis, ks_fitted_normal, mean, mean_se_from_sums, skewness, variance,
    KahanSum,
};
use crate::window::exceedance_record_norms;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessKind {
    /// Scale sqrt(n w).
    GTilde,
    /// Scale sqrt(n r^{2 gamma + 1}) w.
    KTilde { gamma: f64 },
    /// Scale sqrt(n w) r^gamma; for jump functionals T_max^gamma G.
    LTilde { gamma: f64 },
}

impl ProcessKind {
    pub fn scale(&self, n: f64, r: f64, w: f64) -> f64 {
        match self {
            ProcessKind::GTilde => (n * w).sqrt(),
            ProcessKind::KTilde { gamma } => (n * r.powf(2.0 * gamma + 1.0)).sqrt() * w,
            ProcessKind::LTilde { gamma } => (n * w).sqrt() * r.powf(*gamma),
        }
    }

    /// G/K admit shift-invariant functionals; L admits T_max-power types.
    pub fn admits(&self, h: &Functional) -> bool {
        match self {
            ProcessKind::GTilde | ProcessKind::KTilde { .. } => h.shift_invariant(),
            ProcessKind::LTilde { .. } => matches!(h, Functional::TmaxPowTimes(..)),
        }
    }
}

/// Replicate values of a process at a fixed set of functionals.
#[derive(Debug, Clone)]
pub struct ProcessSample {
    pub kind: ProcessKind,
    pub functionals: Vec<Functional>,
    /// replicates[i] holds all replicate values for functionals[i].
    pub replicates: Vec<Vec<f64>>,
    pub centering: Vec<f64>,
    pub centering_se: Vec<f64>,
    pub centering_exact: bool,
    pub n: u64,
    pub r: usize,
    pub u: f64,
    pub w: f64,
    pub warnings: Vec<String>,
}

/// One centered block sum per functional, computed from an explicit norm
/// series: sum_j {H(u^{-1} block_j) - centering_H} / scale.
pub fn process_values_from_norms(
    kind: ProcessKind,
    norms: &[f64],
    h_list: &[Functional],
    r: usize,
    u: f64,
    w: f64,
    centering: &[f64],
) -> Vec<f64> {
    let m = norms.len() / r;
    let scale = kind.scale(norms.len() as f64, r as f64, w);
    let mut sums: Vec<KahanSum> = vec![KahanSum::new(); h_list.len()];
    let mut scaled = vec![0.0f64; r];
    let all_pattern = h_list.iter().all(|h| h.is_pattern_only());
    for j in 0..m {
        let block = &norms[j * r..(j + 1) * r];
        if all_pattern {
            let rec = exceedance_record_norms(block, u);
            for (s, h) in sums.iter_mut().zip(h_list) {
                s.add(h.eval_pattern(&rec));
            }
        } else {
            for (d, &x) in scaled.iter_mut().zip(block) {
                *d = x / u;
            }
            for (s, h) in sums.iter_mut().zip(h_list) {
                s.add(h.eval(&scaled));
            }
        }
    }
    sums.iter()
        .zip(centering)
        .map(|(s, &c)| (s.value() - m as f64 * c) / scale)
        .collect()
}

fn fast_path_applicable(model: &GeneratorModel, h_list: &[Functional]) -> bool {
    matches!(model, GeneratorModel::IidPareto { .. })
        && h_list.iter().all(|h| h.is_pattern_only())
}

/// One fast-path replicate: class counts by sequential binomials, explicit
/// patterns only where positions matter.
fn fast_replicate(
    h_list: &[Functional],
    consts: &[Option<f64>],
    m: u64,
    r: usize,
    w: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let classes = sample_block_class_counts(r as u64, w, m, rng)?;
    let singles_need_positions = consts.iter().any(|c| c.is_none());
    let mut sums: Vec<KahanSum> = vec![KahanSum::new(); h_list.len()];
    for (c, k) in classes {
        if c == 1 && !singles_need_positions {
            for (s, cst) in sums.iter_mut().zip(consts) {
                s.add(k as f64 * cst.expect("checked above"));
            }
        } else {
            for _ in 0..k {
                let rec = sample_pattern(r, c, rng);
                for (s, h) in sums.iter_mut().zip(h_list) {
                    s.add(h.eval_pattern(&rec));
                }
            }
        }
    }
    Ok(sums.iter().map(|s| s.value()).collect())
}

/// Samples the process at h_list over independent replicates (fresh series
/// of length n each), centered by an independent estimate of E[H(block)].
#[allow(clippy::too_many_arguments)]
pub fn sample_process(
    kind: ProcessKind,
    model: &GeneratorModel,
    h_list: &[Functional],
    n: u64,
    r: usize,
    u: f64,
    n_replicates: u64,
    centering_rep: u64,
    seed: u64,
) -> Result<ProcessSample> {
    model.validate()?;
    if h_list.is_empty() {
        return Err(Error::InvalidParameter("empty functional list".into()));
    }
    for h in h_list {
        if !kind.admits(h) {
            return Err(Error::InvalidParameter(format!(
                "functional {} is not admissible for this process kind",
                h.name()
            )));
        }
    }
    let w = model.model_true_w(u)?;
    let m = n / r as u64;
    if m == 0 {
        return Err(Error::BlockLargerThanSample { r, n: n as usize });
    }
    let fast = fast_path_applicable(model, h_list);
    if !fast && n > (1u64 << 33) {
        return Err(Error::InvalidParameter(format!(
            "series of length {n} requires the iid pattern fast path; use a smaller n"
        )));
    }
    let scale = kind.scale(n as f64, r as f64, w);
    let mut warnings = Vec::new();

    // centering: exact closed forms where available, otherwise an
    // independent MC run over centering_rep blocks
    let mut centering = vec![0.0f64; h_list.len()];
    let mut centering_se = vec![0.0f64; h_list.len()];
    let mut centering_exact = true;
    for (i, h) in h_list.iter().enumerate() {
        let exact = if fast { exact_block_mean(h, r, w) } else { None };
        match exact {
            Some(v) => {
                centering[i] = v;
            }
            None => {
                centering_exact = false;
                let cseed = derive_seed(seed, &[0x43454e54, i as u64]);
                let (sum, sumsq) = if fast {
                    pattern_mc_sums(w, r, centering_rep, cseed, |rec| h.eval_pattern(rec))?
                } else {
                    block_mc_sums(model, r, u, centering_rep, cseed, |b| h.eval(b))
                };
                let (mv, se) = mean_se_from_sums(centering_rep, sum, sumsq);
                centering[i] = mv;
                centering_se[i] = se;
                // a centering error of se shifts every replicate by m se / scale
                let shift = m as f64 * se / scale;
                if shift > 0.05 {
                    warnings.push(format!(
                        "centering for {} has standard error {se:.3e}; replicate shift {shift:.3} \
                         of a process unit — increase centering_rep",
                        h.name()
                    ));
                }
            }
        }
    }

    let consts: Vec<Option<f64>> =
        h_list.iter().map(|h| h.single_exceedance_constant()).collect();
    let rep_rows: Result<Vec<Vec<f64>>> = (0..n_replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(derive_seed(seed, &[0x52455053, rep]), &[]);
            if fast {
                let sums = fast_replicate(h_list, &consts, m, r, w, &mut rng)?;
                Ok(sums
                    .iter()
                    .zip(&centering)
                    .map(|(s, &c)| (s - m as f64 * c) / scale)
                    .collect())
            } else {
                let series =
                    model.generate(n as usize, derive_seed(seed, &[0x53455253, rep]));
                Ok(process_values_from_norms(kind, &series, h_list, r, u, w, &centering))
            }
        })
        .collect();
    let rep_rows = rep_rows?;
    let mut replicates = vec![Vec::with_capacity(n_replicates as usize); h_list.len()];
    for row in rep_rows {
        for (col, v) in replicates.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Ok(ProcessSample {
        kind,
        functionals: h_list.to_vec(),
        replicates,
        centering,
        centering_se,
        centering_exact,
        n,
        r,
        u,
        w,
        warnings,
    })
}

/// Sample variance/covariance of the replicate values with jackknife
/// standard errors, compared against optional targets.
#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub functionals: Vec<String>,
    pub variance: Vec<f64>,
    pub variance_jackknife_se: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub targets: Option<Vec<f64>>,
    pub n_replicates: usize,
}

pub fn variance_report(sample: &ProcessSample, targets: Option<Vec<f64>>) -> Result<VarianceReport> {
    let n_rep = sample.replicates.first().map_or(0, |v| v.len());
    if n_rep < 100 {
        return Err(Error::InvalidParameter(format!(
            "variance report needs >= 100 replicates, got {n_rep}"
        )));
    }
    let k = sample.functionals.len();
    let mut var = Vec::with_capacity(k);
    let mut var_se = Vec::with_capacity(k);
    for vals in &sample.replicates {
        var.push(variance(vals));
        var_se.push(jackknife_se_of_variance(vals));
    }
    let mut cov = vec![vec![0.0f64; k]; k];
    for i in 0..k {
        for j in i..k {
            let c = if i == j {
                var[i]
            } else {
                covariance(&sample.replicates[i], &sample.replicates[j])
            };
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    Ok(VarianceReport {
        functionals: sample.functionals.iter().map(|h| h.name()).collect(),
        variance: var,
        variance_jackknife_se: var_se,
        covariance: cov,
        targets,
        n_replicates: n_rep,
    })
}

/// Delete-one jackknife standard error of the unbiased sample variance.
fn jackknife_se_of_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return f64::NAN;
    }
    let nf = n as f64;
    let sum = crate::stats::ksum(xs);
    let sumsq = crate::stats::ksum(&xs.iter().map(|x| x * x).collect::<Vec<_>>());
    let mut loo = Vec::with_capacity(n);
    for &x in xs {
        let s = sum - x;
        let s2 = sumsq - x * x;
        let mh = s / (nf - 1.0);
        loo.push(((s2 - (nf - 1.0) * mh * mh) / (nf - 2.0)).max(0.0));
    }
    let lm = mean(&loo);
    let ss: f64 = loo.iter().map(|v| (v - lm) * (v - lm)).sum();
    ((nf - 1.0) / nf * ss).sqrt()
}

/// Normality diagnostics per functional with bootstrap standard errors.
#[derive(Debug, Clone)]
pub struct GaussianityReport {
    pub functionals: Vec<String>,
    pub ks: Vec<f64>,
    pub ks_se: Vec<f64>,
    pub skewness: Vec<f64>,
    pub skewness_se: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    pub kurtosis_se: Vec<f64>,
    pub n_replicates: usize,
}

pub fn gaussianity_check(
    sample: &ProcessSample,
    bootstrap: usize,
    seed: u64,
) -> Result<GaussianityReport> {
    let n_rep = sample.replicates.first().map_or(0, |v| v.len());
    if n_rep < 500 {
        return Err(Error::InvalidParameter(format!(
            "gaussianity check needs >= 500 replicates, got {n_rep}"
        )));
    }
    let k = sample.functionals.len();
    let mut report = GaussianityReport {
        functionals: sample.functionals.iter().map(|h| h.name()).collect(),
        ks: Vec::with_capacity(k),
        ks_se: Vec::with_capacity(k),
        skewness: Vec::with_capacity(k),
        skewness_se: Vec::with_capacity(k),
        excess_kurtosis: Vec::with_capacity(k),
        kurtosis_se: Vec::with_capacity(k),
        n_replicates: n_rep,
    };
    for (i, vals) in sample.replicates.iter().enumerate() {
        report.ks.push(ks_fitted_normal(vals));
        report.skewness.push(skewness(vals));
        report.excess_kurtosis.push(excess_kurtosis(vals));
        let mut rng = stream(derive_seed(seed, &[0x424f4f54, i as u64]), &[]);
        let mut ks_b = Vec::with_capacity(bootstrap);
        let mut sk_b = Vec::with_capacity(bootstrap);
        let mut ku_b = Vec::with_capacity(bootstrap);
        let mut resample = vec![0.0f64; n_rep];
        for _ in 0..bootstrap {
            for slot in resample.iter_mut() {
                *slot = vals[rng.random_range(0..n_rep)];
            }
            ks_b.push(ks_fitted_normal(&resample));
            sk_b.push(skewness(&resample));
            ku_b.push(excess_kurtosis(&resample));
        }
        report.ks_se.push(variance(&ks_b).sqrt());
        report.skewness_se.push(variance(&sk_b).sqrt());
        report.kurtosis_se.push(variance(&ku_b).sqrt());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ei() -> Functional {
        Functional::ExtremalIndex
    }

    fn tmax0_ei() -> Functional {
        Functional::TmaxPowTimes(0.0, Box::new(Functional::ExtremalIndex))
    }

    #[test]
    fn scales() {
        assert_eq!(ProcessKind::GTilde.scale(100.0, 10.0, 0.01), 1.0);
        let k = ProcessKind::KTilde { gamma: 1.0 };
        // sqrt(n r^3) w
        assert!((k.scale(1e4, 10.0, 0.1) - (1e4f64 * 1e3).sqrt() * 0.1).abs() < 1e-9);
        let l = ProcessKind::LTilde { gamma: 1.0 };
        assert!((l.scale(100.0, 10.0, 0.01) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn admissibility() {
        assert!(ProcessKind::GTilde.admits(&ei()));
        assert!(!ProcessKind::GTilde.admits(&tmax0_ei()));
        assert!(ProcessKind::LTilde { gamma: 0.0 }.admits(&tmax0_ei()));
        assert!(!ProcessKind::LTilde { gamma: 0.0 }.admits(&ei()));
    }

    #[test]
    fn gamma_zero_l_equals_g_on_identical_series() {
        // general (series) path: same seed, same blocks; T_max^0 * EI == EI
        let model = GeneratorModel::MovingMax { alpha: 1.0, weights: vec![1.0, 1.0] };
        let g = sample_process(
            ProcessKind::GTilde,
            &model,
            &[ei()],
            100_000,
            50,
            200.0,
            20,
            100_000,
            71,
        )
        .unwrap();
        let l = sample_process(
            ProcessKind::LTilde { gamma: 0.0 },
            &model,
            &[tmax0_ei()],
            100_000,
            50,
            200.0,
            20,
            100_000,
            71,
        )
        .unwrap();
        for (a, b) in g.replicates[0].iter().zip(&l.replicates[0]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // K at gamma=0 differs from G by exactly sqrt(r w)
        let k = sample_process(
            ProcessKind::KTilde { gamma: 0.0 },
            &model,
            &[ei()],
            100_000,
            50,
            200.0,
            20,
            100_000,
            71,
        )
        .unwrap();
        let rw: f64 = 50.0 * model.model_true_w(200.0).unwrap();
        for (a, b) in g.replicates[0].iter().zip(&k.replicates[0]) {
            assert!((a - b * rw.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_invariance_exact() {
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let norms = model.generate(10_000, 73);
        let c = 3.25;
        let scaled: Vec<f64> = norms.iter().map(|x| x * c).collect();
        let h = [Functional::LengthPow(1.0)];
        let centering = [0.001];
        let a = process_values_from_norms(
            ProcessKind::GTilde,
            &norms,
            &h,
            100,
            50.0,
            0.02,
            &centering,
        );
        let b = process_values_from_norms(
            ProcessKind::GTilde,
            &scaled,
            &h,
            100,
            50.0 * c,
            0.02,
            &centering,
        );
        assert_eq!(a, b);
    }

    #[test]
    fn fast_path_matches_series_path() {
        // same law: compare moments of the two sampling routes
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let (n, r, u) = (200_000u64, 50usize, 1.0e3);
        let reps = 300;
        let fast = sample_process(
            ProcessKind::GTilde,
            &model,
            &[ei()],
            n,
            r,
            u,
            reps,
            1_000_000,
            75,
        )
        .unwrap();
        assert!(fast.centering_exact);
        // force the series path with a magnitude-dependent functional
        let slow = sample_process(
            ProcessKind::GTilde,
            &model,
            &[Functional::Product(Box::new(ei()), Box::new(Functional::SumInd(0.0)))],
            n,
            r,
            u,
            reps,
            2_000_000,
            76,
        )
        .unwrap();
        assert!(!slow.centering_exact);
        // EI * 1{sum > 0} == EI on exceeding blocks, so both target variance ~ 1
        let vf = variance(&fast.replicates[0]);
        let vs = variance(&slow.replicates[0]);
        assert!((vf - 1.0).abs() < 0.35, "fast var {vf}");
        assert!((vs - 1.0).abs() < 0.35, "series var {vs}");
        assert!((mean(&fast.replicates[0])).abs() < 0.3);
    }

    #[test]
    fn variance_report_and_symmetry() {
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let sample = sample_process(
            ProcessKind::GTilde,
            &model,
            &[ei(), Functional::LengthGt(1)],
            500_000,
            50,
            1.0e3,
            200,
            1_000_000,
            77,
        )
        .unwrap();
        let rep = variance_report(&sample, Some(vec![1.0, 0.0])).unwrap();
        assert_eq!(rep.covariance[0][1], rep.covariance[1][0]);
        assert!((rep.variance[0] - 1.0).abs() < 5.0 * rep.variance_jackknife_se[0] + 0.1);
    }

    #[test]
    fn variance_report_needs_replicates() {
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let sample = sample_process(
            ProcessKind::GTilde,
            &model,
            &[ei()],
            10_000,
            50,
            100.0,
            10,
            10_000,
            79,
        )
        .unwrap();
        assert!(variance_report(&sample, None).is_err());
    }

    #[test]
    fn gaussianity_detects_shape() {
        // near-normal replicates: small KS; squared values: large skewness
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let mut sample = sample_process(
            ProcessKind::GTilde,
            &model,
            &[ei()],
            1_000_000,
            100,
            1.0e2, // n w = 1e4
            600,
            1_000_000,
            81,
        )
        .unwrap();
        let rep = gaussianity_check(&sample, 50, 83).unwrap();
        assert!(rep.ks[0] < 0.06, "ks {}", rep.ks[0]);
        assert!(rep.skewness[0].abs() < 0.4);

        sample.replicates[0] = sample.replicates[0].iter().map(|v| v * v).collect();
        let rep = gaussianity_check(&sample, 50, 85).unwrap();
        assert!(rep.skewness[0] > 1.0);
    }

    #[test]
    fn centering_warning_when_too_coarse() {
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let sample = sample_process(
            ProcessKind::GTilde,
            &model,
            &[Functional::SumInd(1.0)],
            1_000_000,
            100,
            1.0e2,
            5,
            2_000, // far too few centering blocks
            87,
        )
        .unwrap();
        assert!(!sample.warnings.is_empty());
    }
}
