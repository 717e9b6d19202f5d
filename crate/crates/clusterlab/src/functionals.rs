//! Catalogue of cluster functionals and randomized class-membership audits.
//!
//! Functionals are evaluated on blocks already scaled so that the threshold
//! is 1; exceedance means a coordinate norm strictly above 1. All built-ins
//! are nonnegative. Time-dependent functionals (first/last exceedance
//! position) use 1-based in-block positions and are deliberately flagged as
//! not shift-invariant.

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::window::{exceedance_record_norms, ExceedanceRecord};
use rand::Rng;

/// A named cluster functional with its growth exponent and class flags.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    /// 1 if any coordinate exceeds 1 — the extremal-index functional.
    ExtremalIndex,
    /// L(x)^gamma, the cluster length raised to a power.
    LengthPow(f64),
    /// 1 if the exceedance count equals m.
    CountEq(u64),
    /// 1 if the cluster length exceeds q.
    LengthGt(u64),
    /// Number of exceedances.
    Count,
    /// 1 if the sum of |x_j| between the first and last exceedance exceeds eta.
    SumInd(f64),
    /// T_max(x)^gamma * G(x): position of the last exceedance (1-based in the
    /// block) to a power, times an inner functional. Not shift-invariant.
    TmaxPowTimes(f64, Box<Functional>),
    /// Position of the first exceedance (1-based), 0 when none.
    Tmin,
    /// Pointwise product of two functionals.
    Product(Box<Functional>, Box<Functional>),
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::ExtremalIndex => "ei".into(),
            Functional::LengthPow(g) => format!("length_pow({g})"),
            Functional::CountEq(m) => format!("count_eq({m})"),
            Functional::LengthGt(q) => format!("length_gt({q})"),
            Functional::Count => "count".into(),
            Functional::SumInd(eta) => format!("sum_ind({eta})"),
            Functional::TmaxPowTimes(g, inner) => format!("tmax_pow({g})*{}", inner.name()),
            Functional::Tmin => "tmin".into(),
            Functional::Product(a, b) => format!("{}*{}", a.name(), b.name()),
        }
    }

    /// Growth exponent: |H(x)| <= C_H * L(x)^gamma on exceeding blocks.
    pub fn gamma(&self) -> f64 {
        match self {
            Functional::ExtremalIndex => 0.0,
            Functional::LengthPow(g) => *g,
            Functional::CountEq(_) | Functional::LengthGt(_) => 0.0,
            Functional::Count => 1.0,
            Functional::SumInd(_) => 0.0,
            // T_max is bounded by the block size, not the cluster length, so
            // the exponent is meaningful only for the jump-functional class;
            // report the power itself plus the inner exponent.
            Functional::TmaxPowTimes(g, inner) => *g + inner.gamma(),
            Functional::Tmin => 1.0,
            Functional::Product(a, b) => a.gamma() + b.gamma(),
        }
    }

    pub fn shift_invariant(&self) -> bool {
        match self {
            Functional::ExtremalIndex
            | Functional::LengthPow(_)
            | Functional::CountEq(_)
            | Functional::LengthGt(_)
            | Functional::Count
            | Functional::SumInd(_) => true,
            Functional::TmaxPowTimes(..) | Functional::Tmin => false,
            Functional::Product(a, b) => a.shift_invariant() && b.shift_invariant(),
        }
    }

    pub fn bounded(&self) -> bool {
        match self {
            Functional::ExtremalIndex
            | Functional::CountEq(_)
            | Functional::LengthGt(_)
            | Functional::SumInd(_) => true,
            Functional::LengthPow(g) => *g == 0.0,
            Functional::Count | Functional::Tmin => false,
            Functional::TmaxPowTimes(g, inner) => *g == 0.0 && inner.bounded(),
            Functional::Product(a, b) => a.bounded() && b.bounded(),
        }
    }

    pub fn vanishes_around_zero(&self) -> bool {
        // All built-ins vanish on blocks without an exceedance.
        true
    }

    /// True when the value depends only on the 0/1 exceedance pattern, not
    /// on the magnitudes above the threshold.
    pub fn is_pattern_only(&self) -> bool {
        match self {
            Functional::ExtremalIndex
            | Functional::LengthPow(_)
            | Functional::CountEq(_)
            | Functional::LengthGt(_)
            | Functional::Count
            | Functional::Tmin => true,
            Functional::SumInd(_) => false,
            Functional::TmaxPowTimes(_, inner) => inner.is_pattern_only(),
            Functional::Product(a, b) => a.is_pattern_only() && b.is_pattern_only(),
        }
    }

    /// Evaluates on the norms of a pre-scaled block (threshold 1).
    pub fn eval(&self, norms: &[f64]) -> f64 {
        let rec = exceedance_record_norms(norms, 1.0);
        if !rec.has_exceedance {
            return 0.0;
        }
        match self {
            Functional::SumInd(eta) => {
                let (t1, tn) = (rec.times[0], rec.times[rec.count - 1]);
                let s: f64 = norms[t1 - 1..tn].iter().sum();
                if s > *eta {
                    1.0
                } else {
                    0.0
                }
            }
            Functional::Product(a, b) => a.eval(norms) * b.eval(norms),
            Functional::TmaxPowTimes(g, inner) => {
                (rec.times[rec.count - 1] as f64).powf(*g) * inner.eval(norms)
            }
            _ => self.eval_pattern(&rec),
        }
    }

    /// Evaluates a pattern-only functional directly on an exceedance record.
    /// Panics if the functional needs magnitudes; guard with
    /// [`Functional::is_pattern_only`].
    pub fn eval_pattern(&self, rec: &ExceedanceRecord) -> f64 {
        if !rec.has_exceedance {
            return 0.0;
        }
        match self {
            Functional::ExtremalIndex => 1.0,
            Functional::LengthPow(g) => (rec.length as f64).powf(*g),
            Functional::CountEq(m) => {
                if rec.count as u64 == *m {
                    1.0
                } else {
                    0.0
                }
            }
            Functional::LengthGt(q) => {
                if rec.length as u64 > *q {
                    1.0
                } else {
                    0.0
                }
            }
            Functional::Count => rec.count as f64,
            Functional::Tmin => rec.times[0] as f64,
            Functional::TmaxPowTimes(g, inner) => {
                (rec.times[rec.count - 1] as f64).powf(*g) * inner.eval_pattern(rec)
            }
            Functional::Product(a, b) => a.eval_pattern(rec) * b.eval_pattern(rec),
            Functional::SumInd(_) => panic!("sum_ind is not pattern-only"),
        }
    }

    /// Value on any block whose pattern is a single exceedance, when that
    /// value does not depend on the exceedance position. None when it does
    /// (position-dependent functionals) or when magnitudes matter.
    pub fn single_exceedance_constant(&self) -> Option<f64> {
        match self {
            Functional::ExtremalIndex => Some(1.0),
            Functional::LengthPow(_) => Some(1.0),
            Functional::CountEq(m) => Some(if *m == 1 { 1.0 } else { 0.0 }),
            Functional::LengthGt(q) => Some(if *q == 0 { 1.0 } else { 0.0 }),
            Functional::Count => Some(1.0),
            Functional::SumInd(_) | Functional::TmaxPowTimes(..) | Functional::Tmin => None,
            Functional::Product(a, b) => {
                Some(a.single_exceedance_constant()? * b.single_exceedance_constant()?)
            }
        }
    }

    /// Parses a functional spec such as `ei`, `length_pow(1.5)`,
    /// `count_eq(2)`, `sum_ind(3)`, `tmin`, `tmax_pow(1)*ei`, or a `*`-joined
    /// product of these.
    pub fn parse(spec: &str) -> Result<Functional> {
        let spec = spec.trim();
        // split at top-level '*' (no nested products inside parentheses needed)
        let parts = split_top_level(spec);
        if parts.len() > 1 {
            // tmax_pow heads a trailing product so the inner G is preserved
            if let Some(arg) = parts[0]
                .strip_prefix("tmax_pow(")
                .and_then(|s| s.strip_suffix(')'))
            {
                let g: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| Error::UnknownFunctional(spec.into()))?;
                let inner = Functional::parse(&parts[1..].join("*"))?;
                return Ok(Functional::TmaxPowTimes(g, Box::new(inner)));
            }
            let mut it = parts.iter();
            let mut acc = Functional::parse(it.next().unwrap())?;
            for p in it {
                acc = Functional::Product(Box::new(acc), Box::new(Functional::parse(p)?));
            }
            return Ok(acc);
        }
        let atom = parts[0].trim();
        match atom {
            "ei" => return Ok(Functional::ExtremalIndex),
            "count" => return Ok(Functional::Count),
            "tmin" => return Ok(Functional::Tmin),
            _ => {}
        }
        if let Some((head, arg)) = atom
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
        {
            let arg = arg.trim();
            match head.trim() {
                "length_pow" => {
                    let g: f64 =
                        arg.parse().map_err(|_| Error::UnknownFunctional(atom.into()))?;
                    if g < 0.0 {
                        return Err(Error::InvalidParameter("length_pow exponent must be >= 0".into()));
                    }
                    return Ok(Functional::LengthPow(g));
                }
                "count_eq" => {
                    let m: u64 =
                        arg.parse().map_err(|_| Error::UnknownFunctional(atom.into()))?;
                    return Ok(Functional::CountEq(m));
                }
                "length_gt" => {
                    let q: u64 =
                        arg.parse().map_err(|_| Error::UnknownFunctional(atom.into()))?;
                    return Ok(Functional::LengthGt(q));
                }
                "sum_ind" => {
                    let eta: f64 =
                        arg.parse().map_err(|_| Error::UnknownFunctional(atom.into()))?;
                    return Ok(Functional::SumInd(eta));
                }
                "tmax_pow" => {
                    let g: f64 =
                        arg.parse().map_err(|_| Error::UnknownFunctional(atom.into()))?;
                    // bare tmax_pow(g) means tmax_pow(g)*ei
                    return Ok(Functional::TmaxPowTimes(g, Box::new(Functional::ExtremalIndex)));
                }
                _ => {}
            }
        }
        Err(Error::UnknownFunctional(atom.into()))
    }
}

fn split_top_level(spec: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in spec.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            '*' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(ch),
        }
    }
    out.push(cur);
    out
}

/// Outcome of a randomized class-membership audit.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub name: String,
    pub vanishes_around_zero: bool,
    pub local: bool,
    pub growth_ok: bool,
    /// Maximum observed |H| / L^gamma over exceeding trial windows.
    pub observed_c_h: f64,
    pub shift_invariant_ok: bool,
    /// A window and shift on which shift-invariance failed, if any.
    pub shift_counterexample: Option<(Vec<f64>, usize)>,
    pub trials: u64,
}

impl MembershipReport {
    pub fn passes(&self, expect_shift_invariant: bool) -> bool {
        self.vanishes_around_zero
            && self.local
            && self.growth_ok
            && (!expect_shift_invariant || self.shift_invariant_ok)
    }
}

/// Randomized audit of the class assumptions: vanishing around zero, locality
/// (dependence only on the coordinates between the first and last
/// exceedance), polynomial growth in the cluster length, and shift-invariance.
pub fn check_membership(h: &Functional, gamma: f64, trials: u64, seed: u64) -> MembershipReport {
    let mut rng = stream(seed, &[0x4d454d42]);
    let mut vanishes = true;
    let mut local = true;
    let mut growth_ok = true;
    let mut c_h: f64 = 0.0;
    let mut shift_ok = true;
    let mut shift_cex = None;

    for _ in 0..trials {
        let len = rng.random_range(1..=24usize);
        // sub-unit noise with a random set of isolated spikes
        let mut norms: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 0.9).collect();
        let n_spikes = rng.random_range(0..=3.min(len));
        for _ in 0..n_spikes {
            let pos = rng.random_range(0..len);
            norms[pos] = 1.0 + rng.random::<f64>() * 4.0;
        }
        let rec = exceedance_record_norms(&norms, 1.0);
        let v = h.eval(&norms);

        if !rec.has_exceedance {
            if v != 0.0 {
                vanishes = false;
            }
            continue;
        }

        // growth: |H| <= C_H L^gamma
        let bound = (rec.length as f64).powf(gamma);
        if bound > 0.0 {
            let ratio = v.abs() / bound;
            if ratio.is_finite() {
                c_h = c_h.max(ratio);
            } else {
                growth_ok = false;
            }
        } else if v != 0.0 {
            growth_ok = false;
        }

        // locality: perturbing coordinates outside [t(1), t(N)] below the
        // threshold must not change the value
        let mut perturbed = norms.clone();
        let (t1, tn) = (rec.times[0], rec.times[rec.count - 1]);
        for (i, x) in perturbed.iter_mut().enumerate() {
            let pos = i + 1;
            if pos < t1 || pos > tn {
                *x = rng.random::<f64>() * 0.9;
            }
        }
        if h.eval(&perturbed) != v {
            local = false;
        }

        // shift-invariance under sub-threshold padding
        let pre = rng.random_range(0..6usize);
        let post = rng.random_range(0..6usize);
        let mut padded: Vec<f64> = (0..pre).map(|_| rng.random::<f64>() * 0.9).collect();
        padded.extend_from_slice(&norms);
        padded.extend((0..post).map(|_| rng.random::<f64>() * 0.9));
        if h.eval(&padded) != v {
            shift_ok = false;
            if shift_cex.is_none() {
                shift_cex = Some((norms.clone(), pre));
            }
        }
    }

    MembershipReport {
        name: h.name(),
        vanishes_around_zero: vanishes,
        local,
        growth_ok,
        observed_c_h: c_h,
        shift_invariant_ok: shift_ok,
        shift_counterexample: shift_cex,
        trials,
    }
}
