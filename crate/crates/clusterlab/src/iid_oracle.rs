//! Exact ground truth for independent exceedance patterns.
//!
//! With iid observations the exceedance indicators of a block are iid
//! Bernoulli(w), so everything about pattern-only functionals is computable
//! exactly: a closed-form conditional cluster-length pmf, O(r) and O(r^2)
//! direct sums built on first/last-exceedance decompositions, and — as an
//! independent brute-force oracle — full enumeration over all 2^r patterns.

use crate::error::{Error, Result};
use crate::stats::KahanSum;
use crate::window::ExceedanceRecord;

pub const ENUMERATION_MAX_R: usize = 24;

/// P(at least one exceedance in a block of r), computed stably for tiny w.
pub fn prob_any_exceedance(r: usize, w: f64) -> f64 {
    // 1 - (1-w)^r = -expm1(r * ln(1-w))
    -((r as f64) * (-w).ln_1p()).exp_m1()
}

/// (1-w)^k, stable for tiny w and large k.
fn q_pow(w: f64, k: usize) -> f64 {
    ((k as f64) * (-w).ln_1p()).exp()
}

/// Exact conditional cluster-length pmf f(1..r) given at least one
/// exceedance: f(1) = r w (1-w)^{r-1} / P(A), and for i >= 2
/// f(i) = w^2 (r-i+1) (1-w)^{r-i} / P(A). Index 0 holds f(1).
pub fn closed_form_length_pmf(r: usize, w: f64) -> Result<Vec<f64>> {
    if r == 0 || !(0.0..1.0).contains(&w) || w == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "closed_form_length_pmf needs r >= 1 and w in (0,1), got r={r}, w={w}"
        )));
    }
    let pa = prob_any_exceedance(r, w);
    let mut pmf = Vec::with_capacity(r);
    pmf.push(r as f64 * w * q_pow(w, r - 1) / pa);
    for i in 2..=r {
        pmf.push(w * w * (r - i + 1) as f64 * q_pow(w, r - i) / pa);
    }
    Ok(pmf)
}

/// Exact E[F(pattern) * 1{A}] and E[F | A] by summation over all 2^r
/// Bernoulli(w) exceedance patterns.
pub fn enumerate_patterns(
    r: usize,
    w: f64,
    f: impl Fn(&ExceedanceRecord) -> f64,
) -> Result<(f64, f64)> {
    if r > ENUMERATION_MAX_R {
        return Err(Error::EnumerationTooLarge { r, max: ENUMERATION_MAX_R });
    }
    if r == 0 || !(0.0..1.0).contains(&w) || w == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "enumerate_patterns needs r >= 1 and w in (0,1), got r={r}, w={w}"
        )));
    }
    // weight of a pattern with c exceedances: w^c (1-w)^{r-c}
    let mut weight = vec![0.0f64; r + 1];
    for (c, wt) in weight.iter_mut().enumerate() {
        *wt = w.powi(c as i32) * (1.0 - w).powi((r - c) as i32);
    }
    let mut e_ind = KahanSum::new();
    let mut pa = KahanSum::new();
    for mask in 1u64..(1u64 << r) {
        let times: Vec<usize> = (0..r).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
        let rec = ExceedanceRecord::from_times(times);
        let wt = weight[rec.count];
        pa.add(wt);
        e_ind.add(f(&rec) * wt);
    }
    Ok((e_ind.value(), e_ind.value() / pa.value()))
}

/// Exact E[t(1)^gamma * 1{A}] = sum_j j^gamma w (1-w)^{j-1}, O(r).
pub fn expected_first_time_pow(r: usize, w: f64, gamma: f64) -> f64 {
    let mut acc = KahanSum::new();
    for j in 1..=r {
        acc.add((j as f64).powf(gamma) * w * q_pow(w, j - 1));
    }
    acc.value()
}

/// Exact E[L^gamma * 1{A}] via the closed-form pmf, O(r).
pub fn expected_length_pow(r: usize, w: f64, gamma: f64) -> Result<f64> {
    let pa = prob_any_exceedance(r, w);
    let pmf = closed_form_length_pmf(r, w)?;
    let mut acc = KahanSum::new();
    for (i, f) in pmf.iter().enumerate() {
        acc.add(((i + 1) as f64).powf(gamma) * f);
    }
    Ok(pa * acc.value())
}

/// Exact E[(t(N) - t(1))_+ * 1{A}] = E[L * 1{A}] - P(A), O(r).
pub fn expected_gap(r: usize, w: f64) -> Result<f64> {
    Ok(expected_length_pow(r, w, 1.0)? - prob_any_exceedance(r, w))
}

/// Exact E[f(t(1), t(N)) * 1{A}] by the first/last-exceedance decomposition,
/// O(r^2): a lone exceedance at j has probability w (1-w)^{r-1}; first at j
/// and last at k > j has probability w^2 (1-w)^{j-1 + r-k}.
pub fn expected_joint_first_last(r: usize, w: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let single = w * q_pow(w, r - 1);
    let mut acc = KahanSum::new();
    for j in 1..=r {
        acc.add(f(j as f64, j as f64) * single);
        for k in (j + 1)..=r {
            acc.add(f(j as f64, k as f64) * w * w * q_pow(w, j - 1 + r - k));
        }
    }
    acc.value()
}

/// Exact unconditional per-block expectation E[H(block)] for iid Bernoulli(w)
/// exceedance patterns, for the pattern functionals with O(r) closed forms.
/// None when no closed form is available.
pub fn exact_block_mean(h: &crate::functionals::Functional, r: usize, w: f64) -> Option<f64> {
    use crate::functionals::Functional as F;
    match h {
        F::ExtremalIndex => Some(prob_any_exceedance(r, w)),
        F::LengthPow(g) => expected_length_pow(r, w, *g).ok(),
        F::LengthGt(q) => {
            let pmf = closed_form_length_pmf(r, w).ok()?;
            let mut acc = KahanSum::new();
            for f in pmf.iter().skip(*q as usize) {
                acc.add(*f);
            }
            Some(prob_any_exceedance(r, w) * acc.value())
        }
        F::CountEq(m) => {
            if *m > r as u64 {
                return Some(0.0);
            }
            use statrs::function::gamma::ln_gamma;
            let (rf, mf) = (r as f64, *m as f64);
            let ln_choose =
                ln_gamma(rf + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(rf - mf + 1.0);
            Some((ln_choose + mf * w.ln() + (rf - mf) * (-w).ln_1p()).exp())
        }
        F::Count => Some(r as f64 * w),
        F::Tmin => Some(expected_first_time_pow(r, w, 1.0)),
        // E[T_max^g 1{A}]: the last exceedance is at k with probability
        // w (1-w)^{r-k}
        F::TmaxPowTimes(g, inner) if **inner == F::ExtremalIndex => {
            let mut acc = KahanSum::new();
            for k in 1..=r {
                acc.add((k as f64).powf(*g) * w * q_pow(w, r - k));
            }
            Some(acc.value())
        }
        _ => None,
    }
}

/// One row of a moment-rate table.
#[derive(Debug, Clone)]
pub struct RateRow {
    pub r: usize,
    pub w: f64,
    pub gamma: f64,
    pub statistic: String,
    pub value: f64,
    pub target: f64,
    pub rel_err: f64,
}

/// Exact normalized cluster-length and first-jump moments across block sizes,
/// demonstrating the small/large-block phase transition:
/// E[L^g 1A]/(r w) -> 1 when r^{g+1} w -> 0, E[L^g 1A]/(r^{g+2} w^2)
/// -> 1/((g+1)(g+2)) when r^{g+1} w -> infinity, and
/// E[t(1)^g 1A]/(r^{g+1} w) -> 1/(g+1) whenever r w -> 0.
pub fn moment_rate_table(
    r_list: &[usize],
    w_of_r: impl Fn(usize) -> f64,
    gamma: f64,
) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for &r in r_list {
        let w = w_of_r(r);
        let rf = r as f64;
        let el = expected_length_pow(r, w, gamma)?;
        let et = expected_first_time_pow(r, w, gamma);
        let small = el / (rf * w);
        let large = el / (rf.powf(gamma + 2.0) * w * w);
        let jump = et / (rf.powf(gamma + 1.0) * w);
        let large_target = 1.0 / ((gamma + 1.0) * (gamma + 2.0));
        let jump_target = 1.0 / (gamma + 1.0);
        let mut push = |statistic: &str, value: f64, target: f64| {
            rows.push(RateRow {
                r,
                w,
                gamma,
                statistic: statistic.into(),
                value,
                target,
                rel_err: (value - target).abs() / target.abs(),
            });
        };
        push("length_pow_over_rw", small, 1.0);
        push("length_pow_over_rpow_w2", large, large_target);
        push("first_time_pow_over_rpow_w", jump, jump_target);
    }
    Ok(rows)
}
