//! Block-based measures and estimators: the block cluster measure over fresh
//! Monte Carlo blocks, jump-time laws and joint moments, the empirical
//! cluster measure and its rescaled variant for jump functionals, the
//! extremal-index estimator, and the weighted anticlustering diagnostic.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::generators::{sample_pattern, GeneratorModel};
use crate::rng::{derive_seed, stream};
use crate::stats::{ks_uniform, mean_se_from_sums, KahanSum};
use crate::window::{exceedance_record_norms, BlockScheme, ExceedanceRecord, Threshold};

/// The universal Monte Carlo result carrier.
#[derive(Debug, Clone, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_rep: u64,
    pub seed: u64,
}

/// Normalizing denominator for block moments; gamma enters where the power
/// of the block size depends on the functional class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationKind {
    /// r * w
    Rw,
    /// r^{gamma+1} * w
    RPowW { gamma: f64 },
    /// r^{gamma+2} * w^2
    RPowW2 { gamma: f64 },
    /// n * w
    Nw,
    /// n * r^gamma * w
    NRPowW { gamma: f64 },
}

impl NormalizationKind {
    pub fn value(&self, n: f64, r: f64, w: f64) -> Result<f64> {
        let v = match self {
            NormalizationKind::Rw => r * w,
            NormalizationKind::RPowW { gamma } => r.powf(gamma + 1.0) * w,
            NormalizationKind::RPowW2 { gamma } => r.powf(gamma + 2.0) * w * w,
            NormalizationKind::Nw => n * w,
            NormalizationKind::NRPowW { gamma } => n * r.powf(*gamma) * w,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalization must be positive and finite, got {v}"
            )));
        }
        Ok(v)
    }
}

const CHUNK: u64 = 4096;

/// Simulates fresh independent stationary blocks and evaluates a per-block
/// statistic; returns streaming (sum, sum of squares) totals. Deterministic
/// for a fixed seed regardless of worker count.
pub(crate) fn block_mc_sums(
    model: &GeneratorModel,
    r: usize,
    u: f64,
    n_rep: u64,
    seed: u64,
    stat: impl Fn(&[f64]) -> f64 + Sync,
) -> (f64, f64) {
    let n_chunks = n_rep.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let blocks = CHUNK.min(n_rep - chunk * CHUNK);
            let mut s = KahanSum::new();
            let mut s2 = KahanSum::new();
            let mut block = vec![0.0f64; r];
            for b in 0..blocks {
                let mut src = model.stream(derive_seed(seed, &[0x424c4f43, chunk, b]));
                for x in block.iter_mut() {
                    *x = src.next_value() / u;
                }
                let v = stat(&block);
                s.add(v);
                s2.add(v * v);
            }
            (s.value(), s2.value())
        })
        .collect();
    let mut s = KahanSum::new();
    let mut s2 = KahanSum::new();
    for (a, b) in partials {
        s.add(a);
        s2.add(b);
    }
    (s.value(), s2.value())
}

/// Same but on iid Bernoulli(w) exceedance patterns (exact for pattern-only
/// functionals of an iid model), at O(count) cost per block.
pub(crate) fn pattern_mc_sums(
    w: f64,
    r: usize,
    n_rep: u64,
    seed: u64,
    stat: impl Fn(&ExceedanceRecord) -> f64 + Sync,
) -> Result<(f64, f64)> {
    let bin = Binomial::new(r as u64, w)
        .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
    let n_chunks = n_rep.div_ceil(CHUNK);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let blocks = CHUNK.min(n_rep - chunk * CHUNK);
            let mut rng = stream(derive_seed(seed, &[0x50415454, chunk]), &[]);
            let mut s = KahanSum::new();
            let mut s2 = KahanSum::new();
            for _ in 0..blocks {
                let count = bin.sample(&mut rng) as usize;
                let rec = sample_pattern(r, count, &mut rng);
                let v = stat(&rec);
                s.add(v);
                s2.add(v * v);
            }
            (s.value(), s2.value())
        })
        .collect();
    let mut s = KahanSum::new();
    let mut s2 = KahanSum::new();
    for (a, b) in partials {
        s.add(a);
        s2.add(b);
    }
    Ok((s.value(), s2.value()))
}

fn is_iid(model: &GeneratorModel) -> bool {
    matches!(model, GeneratorModel::IidPareto { .. })
}

/// Monte Carlo block cluster measure: E[H(u^{-1} block)] / normalization over
/// n_rep fresh independent blocks of length r. For an iid model and a
/// pattern-only H, the Bernoulli fast path is substituted automatically.
pub fn block_cluster_measure(
    model: &GeneratorModel,
    h: &Functional,
    r: usize,
    u: f64,
    n_rep: u64,
    normalization: NormalizationKind,
    seed: u64,
) -> Result<MCEstimate> {
    model.validate()?;
    let w = model.model_true_w(u)?;
    let denom = normalization.value(n_rep as f64 * r as f64, r as f64, w)?;
    let (sum, sumsq) = if is_iid(model) && h.is_pattern_only() {
        pattern_mc_sums(w, r, n_rep, seed, |rec| h.eval_pattern(rec))?
    } else {
        block_mc_sums(model, r, u, n_rep, seed, |b| h.eval(b))
    };
    let (mean, se) = mean_se_from_sums(n_rep, sum, sumsq);
    Ok(MCEstimate { value: mean / denom, std_error: se / denom, n_rep, seed })
}

/// Conditional laws of the first and last exceedance times, scaled by r.
#[derive(Debug, Clone)]
pub struct JumpLawReport {
    pub t1_scaled: Vec<f64>,
    pub tn_scaled: Vec<f64>,
    pub ks_t1: f64,
    pub ks_tn: f64,
    pub n_blocks: u64,
    pub n_conditional: u64,
}

/// Empirical conditional cdfs of t(1)/r and t(N)/r given a block exceedance,
/// from n_rep simulated blocks, with KS distances to Uniform(0,1).
pub fn jump_time_law(
    model: &GeneratorModel,
    r: usize,
    u: f64,
    n_rep: u64,
    seed: u64,
) -> Result<JumpLawReport> {
    model.validate()?;
    let w = model.model_true_w(u)?;
    let n_chunks = n_rep.div_ceil(CHUNK);
    let fast = is_iid(model);
    let bin = Binomial::new(r as u64, w)
        .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
    let partials: Vec<Vec<(usize, usize)>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let blocks = CHUNK.min(n_rep - chunk * CHUNK);
            let mut out = Vec::new();
            if fast {
                let mut rng = stream(derive_seed(seed, &[0x4a4c, chunk]), &[]);
                for _ in 0..blocks {
                    let count = bin.sample(&mut rng) as usize;
                    if count == 0 {
                        continue;
                    }
                    let rec = sample_pattern(r, count, &mut rng);
                    out.push((rec.times[0], rec.times[count - 1]));
                }
            } else {
                let mut block = vec![0.0f64; r];
                for b in 0..blocks {
                    let mut src = model.stream(derive_seed(seed, &[0x4a4c, chunk, b]));
                    for x in block.iter_mut() {
                        *x = src.next_value();
                    }
                    let rec = exceedance_record_norms(&block, u);
                    if let (Some(t1), Some(tn)) = (rec.first(), rec.last()) {
                        out.push((t1, tn));
                    }
                }
            }
            out
        })
        .collect();
    let mut t1_scaled = Vec::new();
    let mut tn_scaled = Vec::new();
    for chunk in partials {
        for (t1, tn) in chunk {
            t1_scaled.push(t1 as f64 / r as f64);
            tn_scaled.push(tn as f64 / r as f64);
        }
    }
    if t1_scaled.is_empty() {
        return Err(Error::NoBlockExceedances);
    }
    let n_conditional = t1_scaled.len() as u64;
    Ok(JumpLawReport {
        ks_t1: ks_uniform(&t1_scaled),
        ks_tn: ks_uniform(&tn_scaled),
        t1_scaled,
        tn_scaled,
        n_blocks: n_rep,
        n_conditional,
    })
}

/// The two admissible bivariate forms for joint first/last-time moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointForm {
    /// f(s, t) = s^{gamma1} t^{gamma2}
    Product { gamma1: f64, gamma2: f64 },
    /// f(s, t) = (t - s)_+^{gamma}; degenerate (f(1,1)=0) under small blocks
    GapPow { gamma: f64 },
}

impl JointForm {
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            JointForm::Product { gamma1, gamma2 } => s.powf(*gamma1) * t.powf(*gamma2),
            JointForm::GapPow { gamma } => (t - s).max(0.0).powf(*gamma),
        }
    }

    /// Total homogeneity degree; the normalization is r^{degree+1} w.
    pub fn degree(&self) -> f64 {
        match self {
            JointForm::Product { gamma1, gamma2 } => gamma1 + gamma2,
            JointForm::GapPow { gamma } => *gamma,
        }
    }
}

/// MC estimate of E[f(t(1), t(N)) 1{A}] / (r^{deg+1} w).
pub fn joint_jump_moment(
    model: &GeneratorModel,
    form: JointForm,
    r: usize,
    u: f64,
    n_rep: u64,
    seed: u64,
) -> Result<MCEstimate> {
    model.validate()?;
    let w = model.model_true_w(u)?;
    let denom = (r as f64).powf(form.degree() + 1.0) * w;
    let stat_rec = |rec: &ExceedanceRecord| match (rec.first(), rec.last()) {
        (Some(s), Some(t)) => form.eval(s as f64, t as f64),
        _ => 0.0,
    };
    let (sum, sumsq) = if is_iid(model) {
        pattern_mc_sums(w, r, n_rep, seed, stat_rec)?
    } else {
        block_mc_sums(model, r, u, n_rep, seed, |b| {
            stat_rec(&exceedance_record_norms(b, 1.0))
        })
    };
    let (mean, se) = mean_se_from_sums(n_rep, sum, sumsq);
    Ok(MCEstimate { value: mean / denom, std_error: se / denom, n_rep, seed })
}

fn resolve_scheme(norms: &[f64], scheme: &BlockScheme) -> Result<(f64, f64)> {
    if norms.len() != scheme.n {
        return Err(Error::InvalidParameter(format!(
            "scheme n={} does not match series length {}",
            scheme.n,
            norms.len()
        )));
    }
    let u = match scheme.threshold {
        Threshold::FixedLevel(u) => u,
        Threshold::OrderStatistic(k) => {
            if k == 0 || k >= norms.len() {
                return Err(Error::OrderStatisticOutOfRange { k, n: norms.len() });
            }
            let mut v = norms.to_vec();
            let idx = k - 1;
            v.select_nth_unstable_by(idx, |a, b| b.partial_cmp(a).unwrap());
            v[idx]
        }
    };
    if u <= 0.0 {
        return Err(Error::NonPositiveThreshold(u));
    }
    Ok((u, scheme.effective_w()?))
}

fn block_sum(norms: &[f64], h: &Functional, scheme: &BlockScheme, u: f64) -> f64 {
    let r = scheme.r;
    let m = scheme.m();
    let mut acc = KahanSum::new();
    let pattern_only = h.is_pattern_only();
    let mut scaled = if pattern_only { Vec::new() } else { vec![0.0f64; r] };
    for j in 0..m {
        let block = &norms[j * r..(j + 1) * r];
        let v = if pattern_only {
            h.eval_pattern(&exceedance_record_norms(block, u))
        } else {
            for (d, &x) in scaled.iter_mut().zip(block) {
                *d = x / u;
            }
            h.eval(&scaled)
        };
        acc.add(v);
    }
    acc.value()
}

/// Empirical cluster measure: (n w)^{-1} sum_j H(u^{-1} block_j). With an
/// order-statistic threshold k and no explicit w, w := k/n.
pub fn empirical_cluster_measure(
    norms: &[f64],
    h: &Functional,
    scheme: &BlockScheme,
) -> Result<f64> {
    let (u, w) = resolve_scheme(norms, scheme)?;
    Ok(block_sum(norms, h, scheme, u) / (scheme.n as f64 * w))
}

/// Rescaled empirical measure for jump functionals H = T_max^gamma G:
/// denominator n r^gamma w instead of n w. With gamma = 0 this coincides
/// exactly with [`empirical_cluster_measure`].
pub fn empirical_cluster_measure_rescaled(
    norms: &[f64],
    h: &Functional,
    scheme: &BlockScheme,
) -> Result<f64> {
    let Functional::TmaxPowTimes(gamma, _) = h else {
        return Err(Error::InvalidParameter(
            "rescaled measure requires a tmax_pow(gamma)*G functional".into(),
        ));
    };
    let (u, w) = resolve_scheme(norms, scheme)?;
    let denom = scheme.n as f64 * (scheme.r as f64).powf(*gamma) * w;
    Ok(block_sum(norms, h, scheme, u) / denom)
}

/// Extremal-index estimator: min(1, (gamma+1) x rescaled measure with
/// G = the extremal-index functional). Returns 0 on a series without
/// exceedances.
pub fn extremal_index_estimator(norms: &[f64], scheme: &BlockScheme, gamma: f64) -> Result<f64> {
    let h = Functional::TmaxPowTimes(gamma, Box::new(Functional::ExtremalIndex));
    let v = empirical_cluster_measure_rescaled(norms, &h, scheme)?;
    Ok(((gamma + 1.0) * v).min(1.0))
}

/// Weighted anticlustering diagnostic:
/// (1/w) sum_{i=l..r} i^gamma P(X_0 > u, X_i > u), estimated from one
/// stationary path of length n. Small values indicate the small-block
/// regime for the given gamma.
pub fn anticlustering_diagnostic(
    model: &GeneratorModel,
    gamma: f64,
    l: usize,
    r: usize,
    u: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    model.validate()?;
    if l == 0 || l > r {
        return Err(Error::InvalidParameter(format!("need 1 <= l <= r, got l={l}, r={r}")));
    }
    let w = model.model_true_w(u)?;
    let xs = model.generate(n + r, seed);
    // sparse pass over exceedance positions; lags restricted to [l, r]
    let positions: Vec<usize> =
        (0..xs.len()).filter(|&t| xs[t] > u).collect();
    let mut acc = KahanSum::new();
    let t_max = n; // pair origins t in 0..n so every lag i <= r is observable
    for (idx, &t) in positions.iter().enumerate() {
        if t >= t_max {
            break;
        }
        for &s in positions[idx + 1..].iter() {
            let lag = s - t;
            if lag > r {
                break;
            }
            if lag >= l {
                acc.add((lag as f64).powf(gamma));
            }
        }
    }
    Ok(acc.value() / (n as f64) / w)
}

/// Exact iid reference for the anticlustering diagnostic: w sum_{i=l..r} i^gamma.
pub fn iid_anticluster_exact(w: f64, gamma: f64, l: usize, r: usize) -> f64 {
    let mut acc = KahanSum::new();
    for i in l..=r {
        acc.add((i as f64).powf(gamma));
    }
    w * acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iid_oracle;
    use crate::window::{BlockScheme, Threshold, WProvenance};

    fn iid() -> GeneratorModel {
        GeneratorModel::IidPareto { alpha: 1.0 }
    }

    #[test]
    fn empirical_measure_arithmetic_example() {
        let norms = [2.0, 0.0, 0.0, 0.0, 0.0, 3.0];
        let scheme = BlockScheme::new(6, 3, Threshold::FixedLevel(1.0))
            .unwrap()
            .with_w(0.25, WProvenance::ModelTrue)
            .unwrap();
        let v = empirical_cluster_measure(&norms, &Functional::ExtremalIndex, &scheme).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-15);

        let sub = [0.5, 0.1, 0.2, 0.3, 0.4, 0.9];
        let v = empirical_cluster_measure(&sub, &Functional::ExtremalIndex, &scheme).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn scaling_invariance_exact() {
        let model = iid();
        let norms = model.generate(3000, 41);
        let c = 7.5;
        let scaled: Vec<f64> = norms.iter().map(|x| x * c).collect();
        let h = Functional::LengthPow(1.0);
        let mk = |u: f64| {
            BlockScheme::new(3000, 50, Threshold::FixedLevel(u))
                .unwrap()
                .with_w(0.05, WProvenance::ModelTrue)
                .unwrap()
        };
        let a = empirical_cluster_measure(&norms, &h, &mk(5.0)).unwrap();
        let b = empirical_cluster_measure(&scaled, &h, &mk(5.0 * c)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rescaled_gamma_zero_is_plain_bitwise() {
        let model = iid();
        let norms = model.generate(5000, 43);
        let scheme = BlockScheme::new(5000, 100, Threshold::FixedLevel(10.0))
            .unwrap()
            .with_w(0.1, WProvenance::ModelTrue)
            .unwrap();
        let h = Functional::TmaxPowTimes(0.0, Box::new(Functional::ExtremalIndex));
        let a = empirical_cluster_measure_rescaled(&norms, &h, &scheme).unwrap();
        let b = empirical_cluster_measure(&norms, &h, &scheme).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn rescaled_requires_tmax_type() {
        let norms = [2.0, 0.5];
        let scheme = BlockScheme::new(2, 1, Threshold::FixedLevel(1.0))
            .unwrap()
            .with_w(0.5, WProvenance::ModelTrue)
            .unwrap();
        assert!(empirical_cluster_measure_rescaled(&norms, &Functional::ExtremalIndex, &scheme)
            .is_err());
    }

    #[test]
    fn monotone_in_length_threshold() {
        let model = iid();
        let norms = model.generate(100_000, 47);
        let scheme = BlockScheme::new(100_000, 100, Threshold::FixedLevel(5.0))
            .unwrap()
            .with_w(0.2, WProvenance::ModelTrue)
            .unwrap();
        let mut prev = f64::INFINITY;
        for q in 0..6 {
            let v =
                empirical_cluster_measure(&norms, &Functional::LengthGt(q), &scheme).unwrap();
            assert!(v <= prev, "q={q}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn order_statistic_threshold_uses_k_over_n() {
        let norms = [5.0, 4.0, 3.0, 2.0, 1.0, 0.5];
        let scheme = BlockScheme::new(6, 3, Threshold::OrderStatistic(2)).unwrap();
        // u = 4.0, one strict exceedance (5.0), w = 2/6
        let v = empirical_cluster_measure(&norms, &Functional::ExtremalIndex, &scheme).unwrap();
        assert!((v - 1.0 / (6.0 * (2.0 / 6.0))).abs() < 1e-15);
    }

    #[test]
    fn block_cluster_measure_iid_ei_near_theta() {
        let est = block_cluster_measure(
            &iid(),
            &Functional::ExtremalIndex,
            100,
            1.0e4, // w = 1e-4, r w = 1e-2
            2_000_000,
            NormalizationKind::Rw,
            51,
        )
        .unwrap();
        assert!(
            (est.value - 1.0).abs() < 3.0 * est.std_error + 0.01,
            "{} +- {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn block_cluster_measure_matches_exact_small_case() {
        // exact: E[L 1A]/(r w) from the enumeration oracle at r=10, w=0.3
        let (exact, _) = iid_oracle::enumerate_patterns(10, 0.3, |rec| rec.length as f64).unwrap();
        let target = exact / (10.0 * 0.3);
        let est = block_cluster_measure(
            &iid(),
            &Functional::LengthPow(1.0),
            10,
            1.0 / 0.3,
            500_000,
            NormalizationKind::Rw,
            53,
        )
        .unwrap();
        assert!((est.value - target).abs() < 3.0 * est.std_error, "{} vs {target}", est.value);
    }

    #[test]
    fn block_cluster_measure_dependent_model_path() {
        // MM(1): E[H]/(r w) -> theta for H=EI; modest scale, generous tolerance
        let model = GeneratorModel::MovingMax { alpha: 1.0, weights: vec![1.0, 1.0] };
        let u = 2000.0;
        let est = block_cluster_measure(
            &model,
            &Functional::ExtremalIndex,
            100,
            u,
            400_000,
            NormalizationKind::Rw,
            55,
        )
        .unwrap();
        assert!((est.value - 0.5).abs() < 3.0 * est.std_error + 0.01, "{}", est.value);
    }

    #[test]
    fn jump_law_mean_is_half() {
        let rep = jump_time_law(&iid(), 100, 1.0e3, 2_000_000, 57).unwrap();
        assert!(rep.n_conditional > 100_000);
        let m1 = crate::stats::mean(&rep.t1_scaled);
        assert!((m1 - 0.5).abs() < 0.01, "{m1}");
        assert!(rep.ks_t1 < 0.05, "{}", rep.ks_t1);
        assert!(rep.ks_tn < 0.05, "{}", rep.ks_tn);
    }

    #[test]
    fn joint_moment_matches_enumeration() {
        let (r, w) = (10usize, 0.3);
        let exact = iid_oracle::expected_joint_first_last(r, w, |s, t| s * t)
            / ((r as f64).powi(3) * w);
        let est = joint_jump_moment(
            &iid(),
            JointForm::Product { gamma1: 1.0, gamma2: 1.0 },
            r,
            1.0 / w,
            500_000,
            59,
        )
        .unwrap();
        assert!((est.value - exact).abs() < 3.0 * est.std_error, "{} vs {exact}", est.value);

        let exact_gap = iid_oracle::expected_gap(r, w).unwrap() / ((r as f64).powi(2) * w);
        let est = joint_jump_moment(&iid(), JointForm::GapPow { gamma: 1.0 }, r, 1.0 / w, 500_000, 61)
            .unwrap();
        assert!((est.value - exact_gap).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn extremal_index_estimator_iid_near_one() {
        let model = iid();
        let mut vals = Vec::new();
        for rep in 0..20 {
            let norms = model.generate(1_000_000, 63 + rep);
            let scheme = BlockScheme::new(1_000_000, 100, Threshold::FixedLevel(1.0e4))
                .unwrap()
                .with_w(1.0e-4, WProvenance::ModelTrue)
                .unwrap();
            vals.push(extremal_index_estimator(&norms, &scheme, 1.0).unwrap());
        }
        let m = crate::stats::mean(&vals);
        assert!(m > 0.85 && m <= 1.0, "{m}");
    }

    #[test]
    fn extremal_index_estimator_no_exceedances_is_zero() {
        let norms = vec![0.5; 1000];
        let scheme = BlockScheme::new(1000, 100, Threshold::FixedLevel(1.0))
            .unwrap()
            .with_w(0.001, WProvenance::ModelTrue)
            .unwrap();
        assert_eq!(extremal_index_estimator(&norms, &scheme, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn anticlustering_iid_matches_exact() {
        let model = iid();
        let (gamma, l, r, u, n) = (1.0, 1usize, 50usize, 100.0, 4_000_000usize);
        let w = model.model_true_w(u).unwrap();
        let exact = iid_anticluster_exact(w, gamma, l, r);
        let est = anticlustering_diagnostic(&model, gamma, l, r, u, n, 67).unwrap();
        // relative MC error of a sum of rare-pair frequencies; generous band
        assert!((est - exact).abs() < 0.5 * exact + 0.01, "{est} vs {exact}");
    }

    #[test]
    fn anticlustering_mm1_beyond_range_is_iid_like() {
        let model = GeneratorModel::MovingMax { alpha: 1.0, weights: vec![1.0, 1.0] };
        let u = 200.0;
        let w = model.model_true_w(u).unwrap();
        let est = anticlustering_diagnostic(&model, 0.0, 2, 20, u, 8_000_000, 69).unwrap();
        let exact = iid_anticluster_exact(w, 0.0, 2, 20);
        assert!((est - exact).abs() < 0.5 * exact + 0.02, "{est} vs {exact}");
    }

    #[test]
    fn normalization_values() {
        let nk = NormalizationKind::RPowW { gamma: 1.0 };
        assert_eq!(nk.value(0.0, 10.0, 0.01).unwrap(), 1.0);
        let nk = NormalizationKind::RPowW2 { gamma: 1.0 };
        assert!((nk.value(0.0, 10.0, 0.1).unwrap() - 10.0).abs() < 1e-12);
        assert!(NormalizationKind::Nw.value(0.0, 1.0, 0.5).is_err()); // zero n
    }
}
