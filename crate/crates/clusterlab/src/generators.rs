//! Seedable simulators of stationary heavy-tailed series — iid Pareto(alpha),
//! l-dependent moving maxima, causal AR(1) with Pareto innovations — plus
//! Bernoulli exceedance-pattern fast paths for the iid case.
//!
//! Marginals are exactly Pareto-tailed so the exceedance probability w at a
//! level u is available in closed form (iid, moving maxima) or as a
//! documented tail asymptotic (AR(1)); this keeps nuisance estimation error
//! out of limit checks.

use std::collections::VecDeque;
use std::io::{Read as IoRead, Write as IoWrite};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::MCEstimate;
use crate::rng::{derive_seed, stream};
use crate::window::ExceedanceRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorModel {
    IidPareto { alpha: f64 },
    /// X_t = max_k a_k Z_{t+k} with iid Pareto(alpha) innovations Z;
    /// exactly l-dependent with l = weights.len() - 1.
    MovingMax { alpha: f64, weights: Vec<f64> },
    /// X_t = phi X_{t-1} + Z_t with iid Pareto(alpha) innovations, phi in [0,1).
    Ar1 { alpha: f64, phi: f64 },
}

impl GeneratorModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorModel::IidPareto { alpha } => {
                if *alpha <= 0.0 {
                    return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
                }
            }
            GeneratorModel::MovingMax { alpha, weights } => {
                if *alpha <= 0.0 {
                    return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
                }
                if weights.is_empty()
                    || weights.iter().any(|&a| a < 0.0 || !a.is_finite())
                    || weights.iter().all(|&a| a == 0.0)
                {
                    return Err(Error::InvalidParameter(
                        "moving-max weights must be nonnegative, finite, not all zero".into(),
                    ));
                }
            }
            GeneratorModel::Ar1 { alpha, phi } => {
                if *alpha <= 0.0 {
                    return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
                }
                if !(0.0..1.0).contains(phi) {
                    return Err(Error::InvalidParameter(format!(
                        "ar1 coefficient must lie in [0,1), got {phi}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        match self {
            GeneratorModel::IidPareto { alpha }
            | GeneratorModel::MovingMax { alpha, .. }
            | GeneratorModel::Ar1 { alpha, .. } => *alpha,
        }
    }

    /// Dependence range: 0 for iid, l for MM(l), effectively unbounded for AR(1).
    pub fn dependence_range(&self) -> Option<usize> {
        match self {
            GeneratorModel::IidPareto { .. } => Some(0),
            GeneratorModel::MovingMax { weights, .. } => Some(weights.len() - 1),
            GeneratorModel::Ar1 { .. } => None,
        }
    }

    /// Exceedance probability P(X > u) at level u.
    ///
    /// Exact for iid (u >= 1) and moving maxima (u >= max weight); for AR(1)
    /// the tail asymptotic u^{-alpha} / (1 - phi^alpha), accurate to relative
    /// order log(u)/u at the large levels used here.
    pub fn model_true_w(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Err(Error::NonPositiveThreshold(u));
        }
        match self {
            GeneratorModel::IidPareto { alpha } => {
                if u < 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "iid Pareto level must be >= 1, got {u}"
                    )));
                }
                Ok(u.powf(-alpha))
            }
            GeneratorModel::MovingMax { alpha, weights } => {
                let amax = weights.iter().cloned().fold(0.0f64, f64::max);
                if u < amax {
                    return Err(Error::InvalidParameter(format!(
                        "moving-max level must be >= max weight {amax}, got {u}"
                    )));
                }
                // P(X <= u) = prod_k (1 - (a_k/u)^alpha); compute 1 - prod stably
                let log_p: f64 = weights
                    .iter()
                    .filter(|&&a| a > 0.0)
                    .map(|&a| (-(a / u).powf(*alpha)).ln_1p())
                    .sum();
                Ok(-log_p.exp_m1())
            }
            GeneratorModel::Ar1 { alpha, phi } => {
                Ok(u.powf(-alpha) / (1.0 - phi.powf(*alpha)))
            }
        }
    }

    /// An infinite stationary stream of the series values.
    pub fn stream(&self, seed: u64) -> ModelStream {
        let mut rng = stream(seed, &[0x53455249]);
        let kind = match self {
            GeneratorModel::IidPareto { alpha } => StreamKind::Iid { alpha: *alpha },
            GeneratorModel::MovingMax { alpha, weights } => {
                let buf: VecDeque<f64> =
                    (0..weights.len()).map(|_| pareto(&mut rng, *alpha)).collect();
                StreamKind::Mm { alpha: *alpha, weights: weights.clone(), buf }
            }
            GeneratorModel::Ar1 { alpha, phi } => {
                let burn_in = 10 * (1.0 / (1.0 - phi)).ceil() as usize;
                let mut state = pareto(&mut rng, *alpha);
                for _ in 0..burn_in {
                    state = phi * state + pareto(&mut rng, *alpha);
                }
                StreamKind::Ar { alpha: *alpha, phi: *phi, state }
            }
        };
        ModelStream { kind, rng }
    }

    /// Eagerly generates n values; a pure function of (model, seed, n-prefix).
    pub fn generate(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut s = self.stream(seed);
        (0..n).map(|_| s.next_value()).collect()
    }
}

fn pareto(rng: &mut ChaCha8Rng, alpha: f64) -> f64 {
    // U in (0,1]; X = U^{-1/alpha} has P(X > x) = x^{-alpha}, x >= 1
    (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)
}

enum StreamKind {
    Iid { alpha: f64 },
    Mm { alpha: f64, weights: Vec<f64>, buf: VecDeque<f64> },
    Ar { alpha: f64, phi: f64, state: f64 },
}

pub struct ModelStream {
    kind: StreamKind,
    rng: ChaCha8Rng,
}

impl ModelStream {
    pub fn next_value(&mut self) -> f64 {
        match &mut self.kind {
            StreamKind::Iid { alpha } => pareto(&mut self.rng, *alpha),
            StreamKind::Mm { alpha, weights, buf } => {
                let x = weights
                    .iter()
                    .zip(buf.iter())
                    .map(|(&a, &z)| a * z)
                    .fold(0.0f64, f64::max);
                buf.pop_front();
                buf.push_back(pareto(&mut self.rng, *alpha));
                x
            }
            StreamKind::Ar { alpha, phi, state } => {
                let x = *state;
                *state = *phi * *state + pareto(&mut self.rng, *alpha);
                x
            }
        }
    }
}

/// m independent blocks of r iid Bernoulli(w) exceedance indicators as
/// records: the exact law of iid exceedance patterns, at ~count cost per
/// block instead of r value draws.
pub fn bernoulli_pattern_blocks(w: f64, r: usize, m: usize, seed: u64) -> Result<Vec<ExceedanceRecord>> {
    if !(0.0..1.0).contains(&w) || w == 0.0 {
        return Err(Error::InvalidParameter(format!("w must lie in (0,1), got {w}")));
    }
    let bin = Binomial::new(r as u64, w)
        .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
    Ok((0..m)
        .map(|j| {
            let mut rng = stream(seed, &[0x424c4b, j as u64]);
            let count = bin.sample(&mut rng) as usize;
            sample_pattern(r, count, &mut rng)
        })
        .collect())
}

/// A uniformly random exceedance pattern of a block of length r with exactly
/// `count` exceedances (Floyd's algorithm for a distinct sample, then sorted).
pub fn sample_pattern(r: usize, count: usize, rng: &mut ChaCha8Rng) -> ExceedanceRecord {
    debug_assert!(count <= r);
    let mut picked: Vec<usize> = Vec::with_capacity(count);
    for i in (r - count + 1)..=r {
        let t = rng.random_range(1..=i);
        if picked.contains(&t) {
            picked.push(i);
        } else {
            picked.push(t);
        }
    }
    picked.sort_unstable();
    ExceedanceRecord::from_times(picked)
}

/// Number of blocks per exceedance-count class, for m iid blocks of r
/// Bernoulli(w) indicators: exact sequential conditional-binomial sampling
/// of the multinomial class counts, so that m can be astronomically large.
/// Returns (count, number_of_blocks) pairs with count >= 1 only.
pub fn sample_block_class_counts(
    r: u64,
    w: f64,
    m: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, u64)>> {
    if !(0.0..1.0).contains(&w) || w == 0.0 {
        return Err(Error::InvalidParameter(format!("w must lie in (0,1), got {w}")));
    }
    use statrs::function::gamma::ln_gamma;
    let ln_w = w.ln();
    let ln_q = (-w).ln_1p();
    let ln_choose = |n: u64, k: u64| {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    };
    let q_c = |c: u64| (ln_choose(r, c) + c as f64 * ln_w + (r - c) as f64 * ln_q).exp();

    let mut out = Vec::new();
    let mut remaining = m;
    let mut cum = 0.0f64; // probability mass of classes already handled
    for c in 0..=r {
        if remaining == 0 {
            break;
        }
        let qc = q_c(c);
        let tail = 1.0 - cum;
        let taken = if c == r || tail <= 0.0 || qc >= tail {
            remaining
        } else {
            let p = (qc / tail).clamp(0.0, 1.0);
            let bin = Binomial::new(remaining, p)
                .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
            bin.sample(rng)
        };
        if c >= 1 && taken > 0 {
            out.push((c as usize, taken));
        }
        remaining -= taken;
        cum += qc;
    }
    Ok(out)
}

/// Estimates the extremal index through the block-maxima route:
/// P(max of a block > u) / (r w), from m = n/r disjoint blocks of a
/// stationary path. Chunked in blocks of 8192 with per-chunk derived seeds,
/// so the result is independent of worker count.
pub fn block_maxima_theta_oracle(
    model: &GeneratorModel,
    n: u64,
    r: usize,
    u: f64,
    seed: u64,
) -> Result<MCEstimate> {
    model.validate()?;
    let w = model.model_true_w(u)?;
    let m = n / r as u64;
    if m == 0 {
        return Err(Error::BlockLargerThanSample { r, n: n as usize });
    }
    const CHUNK: u64 = 8192;
    let n_chunks = m.div_ceil(CHUNK);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let blocks = CHUNK.min(m - chunk * CHUNK);
            let mut s = model.stream(derive_seed(seed, &[0x424d4f, chunk]));
            let mut hit = 0u64;
            for _ in 0..blocks {
                let mut mx = 0.0f64;
                for _ in 0..r {
                    mx = mx.max(s.next_value());
                }
                if mx > u {
                    hit += 1;
                }
            }
            hit
        })
        .sum();
    if hits == 0 {
        return Err(Error::NoBlockExceedances);
    }
    let q = hits as f64 / m as f64;
    let denom = r as f64 * w;
    Ok(MCEstimate {
        value: q / denom,
        std_error: (q * (1.0 - q) / m as f64).sqrt() / denom,
        n_rep: m,
        seed,
    })
}

/// Writes a norm series as a binary dump: u32 LE header length, JSON header
/// {model, n, seed}, then the values as 64-bit LE floats.
pub fn write_series(
    out: &mut impl IoWrite,
    model: &GeneratorModel,
    seed: u64,
    values: &[f64],
) -> Result<()> {
    let header = serde_json::json!({ "model": model, "n": values.len(), "seed": seed });
    let header_bytes = serde_json::to_vec(&header)?;
    out.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    out.write_all(&header_bytes)?;
    for &v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary series dump written by [`write_series`].
pub fn read_series(input: &mut impl IoRead) -> Result<(GeneratorModel, u64, Vec<f64>)> {
    let mut len_buf = [0u8; 4];
    input.read_exact(&mut len_buf)?;
    let header_len = u32::from_le_bytes(len_buf) as usize;
    let mut header_bytes = vec![0u8; header_len];
    input.read_exact(&mut header_bytes)?;
    let header: serde_json::Value = serde_json::from_slice(&header_bytes)?;
    let model: GeneratorModel = serde_json::from_value(header["model"].clone())?;
    let n = header["n"]
        .as_u64()
        .ok_or_else(|| Error::InvalidConfig("series header missing n".into()))?;
    let seed = header["seed"]
        .as_u64()
        .ok_or_else(|| Error::InvalidConfig("series header missing seed".into()))?;
    let mut values = Vec::with_capacity(n as usize);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        input.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok((model, seed, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iid_oracle;

    fn tail_fraction(xs: &[f64], u: f64) -> f64 {
        xs.iter().filter(|&&x| x > u).count() as f64 / xs.len() as f64
    }

    #[test]
    fn pareto_tail_calibration() {
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let xs = model.generate(1_000_000, 11);
        for &u in &[10.0, 100.0] {
            let w = model.model_true_w(u).unwrap();
            let se = (w * (1.0 - w) / xs.len() as f64).sqrt();
            assert!(
                (tail_fraction(&xs, u) - w).abs() < 3.0 * se,
                "u={u}: {} vs {w}",
                tail_fraction(&xs, u)
            );
        }
    }

    #[test]
    fn moving_max_tail_calibration_and_l_dependence() {
        let model = GeneratorModel::MovingMax { alpha: 1.0, weights: vec![1.0, 1.0] };
        let n = 1_000_000;
        let xs = model.generate(n, 13);
        let u = 50.0;
        let w = model.model_true_w(u).unwrap();
        let se = (w * (1.0 - w) / n as f64).sqrt();
        assert!((tail_fraction(&xs, u) - w).abs() < 3.0 * se);

        // lag-1 joint exceedance is ~ w/2 (shared innovation); lag-2 factorizes
        let joint = |lag: usize| {
            (0..n - lag).filter(|&t| xs[t] > u && xs[t + lag] > u).count() as f64 / (n - lag) as f64
        };
        let p1 = joint(1);
        let p2 = joint(2);
        let se_joint = (w / n as f64).sqrt();
        assert!((p1 - u.powi(-1)).abs() < 4.0 * se_joint, "lag1 {p1}");
        assert!((p2 - w * w).abs() < 4.0 * se_joint, "lag2 {p2}");
    }

    #[test]
    fn ar1_phi_zero_is_iid_pareto() {
        let ar = GeneratorModel::Ar1 { alpha: 1.0, phi: 0.0 };
        let xs = ar.generate(500_000, 17);
        for &u in &[5.0f64, 50.0] {
            let w = u.powi(-1);
            let se = (w / xs.len() as f64).sqrt();
            assert!((tail_fraction(&xs, u) - w).abs() < 4.0 * se, "u={u}");
        }
    }

    #[test]
    fn ar1_tail_matches_asymptotic_w() {
        let ar = GeneratorModel::Ar1 { alpha: 1.0, phi: 0.5 };
        let xs = ar.generate(4_000_000, 19);
        let u = 500.0;
        let w = ar.model_true_w(u).unwrap();
        let frac = tail_fraction(&xs, u);
        // asymptotic w plus MC noise: allow 3 SE + 2% asymptotic slack
        let se = (w / xs.len() as f64).sqrt();
        assert!((frac - w).abs() < 3.0 * se + 0.02 * w, "{frac} vs {w}");
    }

    #[test]
    fn generate_is_reproducible() {
        let model = GeneratorModel::MovingMax { alpha: 2.0, weights: vec![1.0, 0.5] };
        assert_eq!(model.generate(1000, 5), model.generate(1000, 5));
        assert_ne!(model.generate(1000, 5), model.generate(1000, 6));
    }

    #[test]
    fn bernoulli_blocks_match_oracle() {
        // r=2, w=0.5: P(L=2 | A) = 1/3
        let recs = bernoulli_pattern_blocks(0.5, 2, 100_000, 3).unwrap();
        let with_a: Vec<_> = recs.iter().filter(|r| r.has_exceedance).collect();
        let p_l2 = with_a.iter().filter(|r| r.length == 2).count() as f64 / with_a.len() as f64;
        let se = (p_l2 * (1.0 - p_l2) / with_a.len() as f64).sqrt();
        assert!((p_l2 - 1.0 / 3.0).abs() < 3.0 * se, "{p_l2}");

        // mean count per block ~ r w
        let (r, w, m) = (20usize, 0.05, 50_000usize);
        let recs = bernoulli_pattern_blocks(w, r, m, 4).unwrap();
        let mean_count: f64 = recs.iter().map(|r| r.count as f64).sum::<f64>() / m as f64;
        assert!((mean_count - r as f64 * w).abs() < 0.02);

        // conditional t(1) pmf vs exact enumeration, per-bin 5 sigma
        let (r, w) = (10usize, 0.3);
        let recs = bernoulli_pattern_blocks(w, r, 200_000, 7).unwrap();
        let cond: Vec<_> = recs.iter().filter(|rec| rec.has_exceedance).collect();
        let nc = cond.len() as f64;
        for t in 1..=r {
            let (_, exact) = iid_oracle::enumerate_patterns(r, w, |rec| {
                if rec.first() == Some(t) { 1.0 } else { 0.0 }
            })
            .unwrap();
            let emp = cond.iter().filter(|rec| rec.first() == Some(t)).count() as f64 / nc;
            let se = (exact * (1.0 - exact) / nc).sqrt();
            assert!((emp - exact).abs() < 5.0 * se + 1e-4, "t={t}: {emp} vs {exact}");
        }
    }

    #[test]
    fn class_counts_match_binomial_law() {
        let (r, w, m) = (10u64, 0.1, 2_000_000u64);
        let mut rng = crate::rng::stream(21, &[]);
        let counts = sample_block_class_counts(r, w, m, &mut rng).unwrap();
        let total: u64 = counts.iter().map(|&(_, k)| k).sum();
        // expected exceeding blocks: m * (1 - (1-w)^r)
        let pa = iid_oracle::prob_any_exceedance(r as usize, w);
        let se = (m as f64 * pa * (1.0 - pa)).sqrt();
        assert!((total as f64 - m as f64 * pa).abs() < 4.0 * se);
        for &(c, k) in &counts {
            if c > 2 {
                continue;
            }
            let (q, _) = iid_oracle::enumerate_patterns(r as usize, w, |rec| {
                if rec.count == c { 1.0 } else { 0.0 }
            })
            .unwrap();
            let se = (m as f64 * q * (1.0 - q)).sqrt();
            assert!((k as f64 - m as f64 * q).abs() < 5.0 * se, "class {c}");
        }
    }

    #[test]
    fn sample_pattern_counts_and_uniformity() {
        let mut rng = crate::rng::stream(33, &[]);
        let mut pos_counts = vec![0u64; 5];
        for _ in 0..50_000 {
            let rec = sample_pattern(5, 2, &mut rng);
            assert_eq!(rec.count, 2);
            for &t in &rec.times {
                pos_counts[t - 1] += 1;
            }
        }
        // each position appears with probability 2/5
        for &c in &pos_counts {
            assert!((c as f64 / 50_000.0 - 0.4).abs() < 0.01, "{pos_counts:?}");
        }
    }

    #[test]
    fn theta_oracle_iid_is_one() {
        let model = GeneratorModel::IidPareto { alpha: 1.0 };
        let est = block_maxima_theta_oracle(&model, 20_000_000, 100, 1.0e4, 23).unwrap();
        assert!(
            (est.value - 1.0).abs() < 3.0 * est.std_error + 0.01,
            "{} +- {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn series_round_trip() {
        let model = GeneratorModel::Ar1 { alpha: 1.5, phi: 0.3 };
        let xs = model.generate(100, 9);
        let mut buf = Vec::new();
        write_series(&mut buf, &model, 9, &xs).unwrap();
        let (m2, seed2, xs2) = read_series(&mut buf.as_slice()).unwrap();
        assert_eq!(m2, model);
        assert_eq!(seed2, 9);
        assert_eq!(xs2, xs);
    }
}
