//! Tail-process descriptions of the shipped generator models: truncated path
//! samplers, the candidate extremal index, Monte Carlo cluster indices, and
//! the anchored process Z (conditioned to have its first exceedance over 1
//! at time zero).
//!
//! The model-specific path constructions are standard but are not taken on
//! trust: the conditional-law oracle [`empirical_tail_path_oracle`] simulates
//! the actual generator and conditions on a high level, and the test suite
//! requires both routes to agree.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::MCEstimate;
use crate::functionals::Functional;
use crate::generators::GeneratorModel;
use crate::rng::{derive_seed, stream};
use crate::stats::{mean_se_from_sums, KahanSum};

/// Default truncation horizon for paths with unbounded support (AR(1)).
pub const DEFAULT_AR_HORIZON: usize = 1 << 10;

/// A truncated tail-process path on [-M, M].
#[derive(Debug, Clone)]
pub struct TailPath {
    /// Values at times -M..=M; index `center` is time 0.
    pub values: Vec<f64>,
    pub center: usize,
}

impl TailPath {
    pub fn value_at(&self, j: i64) -> f64 {
        self.values[(self.center as i64 + j) as usize]
    }

    /// Max over times -M..=-1.
    pub fn backward_max(&self) -> f64 {
        self.values[..self.center].iter().cloned().fold(0.0, f64::max)
    }

    /// Max over times 1..=M.
    pub fn forward_max(&self) -> f64 {
        self.values[self.center + 1..].iter().cloned().fold(0.0, f64::max)
    }

    /// 1 when no coordinate at a negative time exceeds 1: the anchoring
    /// indicator of the cluster measure.
    pub fn anchored(&self) -> bool {
        self.backward_max() <= 1.0
    }
}

/// Analytic tail process attached to a generator model, sampled on [-M, M].
#[derive(Debug, Clone)]
pub struct TailProcessModel {
    pub model: GeneratorModel,
    pub horizon: usize,
}

impl TailProcessModel {
    pub fn new(model: GeneratorModel) -> Result<Self> {
        model.validate()?;
        let horizon = match model.dependence_range() {
            Some(l) => l.max(1),
            None => DEFAULT_AR_HORIZON,
        };
        Ok(Self { model, horizon })
    }

    pub fn with_horizon(model: GeneratorModel, horizon: usize) -> Result<Self> {
        model.validate()?;
        if let Some(l) = model.dependence_range() {
            if horizon < l {
                return Err(Error::InvalidParameter(format!(
                    "horizon {horizon} smaller than the dependence range {l}"
                )));
            }
        }
        Ok(Self { model, horizon })
    }

    /// Closed-form candidate extremal index.
    pub fn theta_exact(&self) -> f64 {
        match &self.model {
            GeneratorModel::IidPareto { .. } => 1.0,
            GeneratorModel::MovingMax { alpha, weights } => {
                let total: f64 = weights.iter().map(|a| a.powf(*alpha)).sum();
                let mut theta = 0.0;
                for (k, &ak) in weights.iter().enumerate() {
                    if ak == 0.0 {
                        continue;
                    }
                    let p_k = ak.powf(*alpha) / total;
                    let c_k = weights[k + 1..].iter().cloned().fold(0.0f64, f64::max) / ak;
                    theta += p_k * (1.0 - c_k.powf(*alpha)).max(0.0);
                }
                theta
            }
            GeneratorModel::Ar1 { alpha, phi } => 1.0 - phi.powf(*alpha),
        }
    }

    /// One truncated path of the tail process: |Y_0| is Pareto(alpha); the
    /// shape is model-specific (a single spike for iid, a shifted weight
    /// pattern for moving maxima, a geometric ray with a geometric backward
    /// extent for AR(1)).
    pub fn sample_path(&self, rng: &mut ChaCha8Rng) -> TailPath {
        let m = self.horizon;
        let center = m;
        let mut values = vec![0.0f64; 2 * m + 1];
        let y0 = pareto(rng, self.model.alpha());
        match &self.model {
            GeneratorModel::IidPareto { .. } => {
                values[center] = y0;
            }
            GeneratorModel::MovingMax { alpha, weights } => {
                let total: f64 = weights.iter().map(|a| a.powf(*alpha)).sum();
                let mut u = rng.random::<f64>() * total;
                let mut k = 0usize;
                for (i, &a) in weights.iter().enumerate() {
                    u -= a.powf(*alpha);
                    if u <= 0.0 {
                        k = i;
                        break;
                    }
                }
                let ak = weights[k];
                for (i, &a) in weights.iter().enumerate() {
                    let j = i as i64 - k as i64;
                    let idx = center as i64 + j;
                    if (0..values.len() as i64).contains(&idx) {
                        values[idx as usize] = y0 * a / ak;
                    }
                }
            }
            GeneratorModel::Ar1 { alpha, phi } => {
                // backward extent: P(J >= j) = phi^(j alpha)
                let j_back = if *phi == 0.0 {
                    0
                } else {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    ((u.ln() / (alpha * phi.ln())).floor() as i64).clamp(0, m as i64)
                };
                for j in -j_back..=(m as i64) {
                    let v = y0 * phi.powi(j as i32);
                    if !v.is_finite() {
                        continue;
                    }
                    if j > 0 && v < 1e-300 {
                        break;
                    }
                    values[(center as i64 + j) as usize] = v;
                }
            }
        }
        TailPath { values, center }
    }

    /// Parallel Monte Carlo mean of a per-path statistic, chunked with
    /// derived seeds so the result is independent of worker count.
    fn path_mc(
        &self,
        n_paths: u64,
        seed: u64,
        f: impl Fn(&TailPath) -> f64 + Sync,
    ) -> (f64, f64) {
        const CHUNK: u64 = 8192;
        let n_chunks = n_paths.div_ceil(CHUNK);
        let partials: Vec<(f64, f64)> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let paths = CHUNK.min(n_paths - chunk * CHUNK);
                let mut rng = stream(derive_seed(seed, &[0x5441494c, chunk]), &[]);
                let mut s = KahanSum::new();
                let mut s2 = KahanSum::new();
                for _ in 0..paths {
                    let p = self.sample_path(&mut rng);
                    let v = f(&p);
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
        mean_se_from_sums(n_paths, s.value(), s2.value())
    }

    /// Monte Carlo estimate of the candidate extremal index
    /// P(max of the forward path <= 1).
    pub fn candidate_theta(&self, n_paths: u64, seed: u64) -> MCEstimate {
        let (value, std_error) =
            self.path_mc(n_paths, seed, |p| if p.forward_max() <= 1.0 { 1.0 } else { 0.0 });
        MCEstimate { value, std_error, n_rep: n_paths, seed }
    }

    /// Monte Carlo cluster index: E[H(Y) 1{backward max <= 1}].
    pub fn cluster_index(&self, h: &Functional, n_paths: u64, seed: u64) -> ClusterIndexEstimate {
        let (value, std_error) = self.path_mc(n_paths, seed, |p| {
            if p.anchored() {
                h.eval(&p.values)
            } else {
                0.0
            }
        });
        ClusterIndexEstimate {
            functional: h.name(),
            value,
            std_error,
            n_paths,
            horizon: self.horizon,
        }
    }

    /// Rejection-samples the anchored process Z: tail paths conditioned on
    /// no exceedance at negative times. Expected trials 1/theta.
    pub fn sample_z(&self, rng: &mut ChaCha8Rng, max_trials: u64) -> Result<TailPath> {
        for trial in 1..=max_trials {
            let p = self.sample_path(rng);
            if p.anchored() {
                return Ok(p);
            }
            let _ = trial;
        }
        Err(Error::RejectionBudgetExceeded {
            trials: max_trials,
            rate: self.theta_exact(),
        })
    }

    /// Limiting conditional cluster-length pmf f(q) = nu*(1{L=q}) / theta for
    /// q = 1..=q_max, with theta estimated from an independent seed so the
    /// proper-distribution check has content. Returns (pmf, sum, se of sum).
    pub fn limiting_length_pmf(
        &self,
        q_max: usize,
        n_paths: u64,
        seed: u64,
    ) -> Result<(Vec<f64>, f64, f64)> {
        // numerator: nu*(1{1 <= L <= q_max}) plus per-q masses, one MC pass
        const CHUNK: u64 = 8192;
        let n_chunks = n_paths.div_ceil(CHUNK);
        let partials: Vec<(Vec<f64>, f64, f64)> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let paths = CHUNK.min(n_paths - chunk * CHUNK);
                let mut rng = stream(derive_seed(seed, &[0x504d46, chunk]), &[]);
                let mut per_q = vec![0.0f64; q_max];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for _ in 0..paths {
                    let p = self.sample_path(&mut rng);
                    let mut v = 0.0;
                    if p.anchored() {
                        let rec = crate::window::exceedance_record_norms(&p.values, 1.0);
                        if rec.has_exceedance && rec.length <= q_max {
                            per_q[rec.length - 1] += 1.0;
                            v = 1.0;
                        }
                    }
                    s += v;
                    s2 += v * v;
                }
                (per_q, s, s2)
            })
            .collect();
        let mut per_q = vec![0.0f64; q_max];
        let mut s = KahanSum::new();
        let mut s2 = KahanSum::new();
        for (pq, a, b) in partials {
            for (acc, x) in per_q.iter_mut().zip(pq) {
                *acc += x;
            }
            s.add(a);
            s2.add(b);
        }
        let (num, num_se) = mean_se_from_sums(n_paths, s.value(), s2.value());

        let theta = self.candidate_theta(n_paths, derive_seed(seed, &[0x5448]));
        if theta.value <= 0.0 {
            return Err(Error::InvalidParameter("estimated theta is zero".into()));
        }
        let pmf: Vec<f64> =
            per_q.iter().map(|&c| c / n_paths as f64 / theta.value).collect();
        let sum = num / theta.value;
        // independent ratio: delta-method standard error
        let se = ((num_se / theta.value).powi(2)
            + (num * theta.std_error / (theta.value * theta.value)).powi(2))
        .sqrt();
        Ok((pmf, sum, se))
    }
}

/// A Monte Carlo cluster-index value with its provenance.
#[derive(Debug, Clone)]
pub struct ClusterIndexEstimate {
    pub functional: String,
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub horizon: usize,
}

fn pareto(rng: &mut ChaCha8Rng, alpha: f64) -> f64 {
    (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)
}

/// Ground-truth oracle: simulates the generator itself, conditions on
/// X_t > u, and returns the windows u^{-1} X_{t-h..t+h} as empirical draws
/// from the conditional law that the tail process approximates.
pub fn empirical_tail_path_oracle(
    model: &GeneratorModel,
    u: f64,
    halfwidth: usize,
    n_sims: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    if u <= 0.0 {
        return Err(Error::NonPositiveThreshold(u));
    }
    let h = halfwidth;
    let xs = model.generate(n_sims, seed);
    let mut windows = Vec::new();
    for t in h..xs.len().saturating_sub(h) {
        if xs[t] > u {
            windows.push(xs[t - h..=t + h].iter().map(|&x| x / u).collect());
        }
    }
    if windows.is_empty() {
        return Err(Error::NoConditioningEvents);
    }
    Ok(windows)
}
