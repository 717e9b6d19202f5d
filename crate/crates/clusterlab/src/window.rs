//! Finite-sequence primitives: windows of d-dimensional observations, norms,
//! block partitioning and exceedance-time records.
//!
//! Within-block positions are 1-based throughout. Exceedance is always the
//! strict inequality `norm > u`; tied values at an order-statistic threshold
//! therefore do not count as exceedances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite stretch of d-dimensional observations, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    values: Vec<f64>,
    dim: usize,
}

impl Window {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        if values.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "value count {} is not a multiple of dim {}",
                values.len(),
                dim
            )));
        }
        Ok(Self { values, dim })
    }

    /// A scalar (d = 1) window.
    pub fn from_scalars(values: Vec<f64>) -> Self {
        Self { values, dim: 1 }
    }

    /// Number of observations (vectors), not coordinates.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The i-th observation, 0-based.
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Norms of all observations under `norm`.
    pub fn norms(&self, norm: NormSpec) -> Vec<f64> {
        (0..self.len()).map(|i| norm.eval(self.vector(i))).collect()
    }

    pub fn sub_window(&self, start: usize, end: usize) -> Window {
        Window {
            values: self.values[start * self.dim..end * self.dim].to_vec(),
            dim: self.dim,
        }
    }
}

/// The norm used to reduce observations to scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    Euclidean,
    #[default]
    Sup,
    L1,
}

impl NormSpec {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            NormSpec::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormSpec::Sup => v.iter().fold(0.0f64, |a, &x| a.max(x.abs())),
            NormSpec::L1 => v.iter().map(|x| x.abs()).sum(),
        }
    }
}

/// Threshold specification for a block scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    FixedLevel(f64),
    /// Threshold at the k-th largest norm of the series.
    OrderStatistic(usize),
}

/// Provenance of the exceedance probability w attached to a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WProvenance {
    ModelTrue,
    Estimated,
}

/// Block partitioning scheme: sample size n, block size r, threshold and
/// the exceedance probability w with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockScheme {
    pub n: usize,
    pub r: usize,
    pub threshold: Threshold,
    pub w: Option<f64>,
    pub w_provenance: Option<WProvenance>,
}

impl BlockScheme {
    pub fn new(n: usize, r: usize, threshold: Threshold) -> Result<Self> {
        if r == 0 || r > n {
            return Err(Error::BlockLargerThanSample { r, n });
        }
        if let Threshold::FixedLevel(u) = threshold {
            if u <= 0.0 {
                return Err(Error::NonPositiveThreshold(u));
            }
        }
        if let Threshold::OrderStatistic(k) = threshold {
            if k == 0 || k >= n {
                return Err(Error::OrderStatisticOutOfRange { k, n });
            }
        }
        Ok(Self { n, r, threshold, w: None, w_provenance: None })
    }

    pub fn with_w(mut self, w: f64, provenance: WProvenance) -> Result<Self> {
        if !(0.0..1.0).contains(&w) || w == 0.0 {
            return Err(Error::InvalidParameter(format!("w must lie in (0,1), got {w}")));
        }
        self.w = Some(w);
        self.w_provenance = Some(provenance);
        Ok(self)
    }

    /// Number of complete blocks; the trailing remainder is dropped.
    pub fn m(&self) -> usize {
        self.n / self.r
    }

    /// The exceedance probability used in normalizations. With an
    /// order-statistic threshold and no explicit w, this is k/n.
    pub fn effective_w(&self) -> Result<f64> {
        if let Some(w) = self.w {
            return Ok(w);
        }
        match self.threshold {
            Threshold::OrderStatistic(k) => Ok(k as f64 / self.n as f64),
            Threshold::FixedLevel(_) => Err(Error::InvalidParameter(
                "fixed-level scheme requires an explicit w".into(),
            )),
        }
    }
}

/// Exceedance times and cluster length of one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceedanceRecord {
    pub count: usize,
    /// Strictly increasing 1-based positions within the block.
    pub times: Vec<usize>,
    /// Cluster length: last minus first exceedance time plus one; 0 if none.
    pub length: usize,
    pub has_exceedance: bool,
}

impl ExceedanceRecord {
    pub fn from_times(times: Vec<usize>) -> Self {
        debug_assert!(times.windows(2).all(|p| p[0] < p[1]));
        let count = times.len();
        let length = if count >= 1 { times[count - 1] - times[0] + 1 } else { 0 };
        Self { count, times, length, has_exceedance: count >= 1 }
    }

    pub fn empty() -> Self {
        Self::from_times(Vec::new())
    }

    /// First exceedance time t(1); None when the block has no exceedance.
    pub fn first(&self) -> Option<usize> {
        self.times.first().copied()
    }

    /// Last exceedance time t(N); None when the block has no exceedance.
    pub fn last(&self) -> Option<usize> {
        self.times.last().copied()
    }
}

/// Splits `series` into m = floor(n/r) disjoint consecutive blocks of length
/// r, dropping the trailing remainder.
pub fn partition_blocks(series: &Window, scheme: &BlockScheme) -> Result<Vec<Window>> {
    let n = series.len();
    if scheme.r > n {
        return Err(Error::BlockLargerThanSample { r: scheme.r, n });
    }
    let m = n / scheme.r;
    Ok((0..m).map(|j| series.sub_window(j * scheme.r, (j + 1) * scheme.r)).collect())
}

/// Resolves the scheme threshold on a concrete series.
pub fn resolve_threshold(series: &Window, scheme: &BlockScheme, norm: NormSpec) -> Result<f64> {
    match scheme.threshold {
        Threshold::FixedLevel(u) => Ok(u),
        Threshold::OrderStatistic(k) => {
            let n = series.len();
            if k == 0 || k >= n {
                return Err(Error::OrderStatisticOutOfRange { k, n });
            }
            let mut norms = series.norms(norm);
            // k-th largest, ties kept as repeated values
            let idx = k - 1;
            norms
                .select_nth_unstable_by(idx, |a, b| b.partial_cmp(a).unwrap());
            Ok(norms[idx])
        }
    }
}

/// Exceedance record of a block at level u (strict inequality).
pub fn exceedance_record(block: &Window, u: f64, norm: NormSpec) -> ExceedanceRecord {
    exceedance_record_norms(&block.norms(norm), u)
}

/// Same as [`exceedance_record`] on precomputed norms.
pub fn exceedance_record_norms(norms: &[f64], u: f64) -> ExceedanceRecord {
    let times: Vec<usize> =
        norms.iter().enumerate().filter(|(_, &x)| x > u).map(|(i, _)| i + 1).collect();
    ExceedanceRecord::from_times(times)
}

/// Divides every coordinate by u, so that the threshold becomes 1.
pub fn scale_window(block: &Window, u: f64) -> Result<Window> {
    if u <= 0.0 {
        return Err(Error::NonPositiveThreshold(u));
    }
    Ok(Window { values: block.values.iter().map(|x| x / u).collect(), dim: block.dim })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(values: &[f64]) -> Window {
        Window::from_scalars(values.to_vec())
    }

    #[test]
    fn partition_examples() {
        let s = w(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let scheme = BlockScheme::new(6, 3, Threshold::FixedLevel(1.0)).unwrap();
        let blocks = partition_blocks(&s, &scheme).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].values(), &[1.0, 2.0, 3.0]);
        assert_eq!(blocks[1].values(), &[4.0, 5.0, 6.0]);

        let s7 = w(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let blocks = partition_blocks(&s7, &scheme).unwrap();
        assert_eq!(blocks.len(), 2); // element 7 dropped

        let s3 = w(&[1.0, 2.0, 3.0]);
        let scheme3 = BlockScheme::new(3, 3, Threshold::FixedLevel(1.0)).unwrap();
        assert_eq!(partition_blocks(&s3, &scheme3).unwrap().len(), 1);
    }

    #[test]
    fn partition_rejects_oversized_block() {
        let s = w(&[1.0, 2.0]);
        let scheme = BlockScheme { n: 2, r: 3, threshold: Threshold::FixedLevel(1.0), w: None, w_provenance: None };
        assert!(matches!(
            partition_blocks(&s, &scheme),
            Err(Error::BlockLargerThanSample { .. })
        ));
    }

    #[test]
    fn order_statistic_threshold() {
        let s = w(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        let scheme = BlockScheme::new(5, 1, Threshold::OrderStatistic(2)).unwrap();
        assert_eq!(resolve_threshold(&s, &scheme, NormSpec::Sup).unwrap(), 4.0);

        let fixed = BlockScheme::new(5, 1, Threshold::FixedLevel(1.7)).unwrap();
        assert_eq!(resolve_threshold(&s, &fixed, NormSpec::Sup).unwrap(), 1.7);

        // ties: level is the tied value, strict exceedance leaves none
        let ties = w(&[3.0, 3.0, 3.0]);
        let scheme = BlockScheme::new(3, 1, Threshold::OrderStatistic(1)).unwrap();
        let u = resolve_threshold(&ties, &scheme, NormSpec::Sup).unwrap();
        assert_eq!(u, 3.0);
        assert_eq!(exceedance_record(&ties, u, NormSpec::Sup).count, 0);
    }

    #[test]
    fn exceedance_record_examples() {
        let rec = exceedance_record(&w(&[0.5, 2.0, 0.3, 1.5]), 1.0, NormSpec::Sup);
        assert_eq!(rec.times, vec![2, 4]);
        assert_eq!(rec.count, 2);
        assert_eq!(rec.length, 3);
        assert!(rec.has_exceedance);

        let rec = exceedance_record(&w(&[0.5, 0.2]), 1.0, NormSpec::Sup);
        assert_eq!(rec.count, 0);
        assert_eq!(rec.length, 0);
        assert!(!rec.has_exceedance);

        let mut vals = vec![0.1; 10];
        vals[6] = 5.0; // position 7, 1-based
        let rec = exceedance_record(&w(&vals), 1.0, NormSpec::Sup);
        assert_eq!(rec.times, vec![7]);
        assert_eq!(rec.length, 1);
    }

    #[test]
    fn scale_window_matches_exceedances() {
        let b = w(&[2.0, 4.0]);
        let scaled = scale_window(&b, 2.0).unwrap();
        assert_eq!(scaled.values(), &[1.0, 2.0]);
        assert_eq!(exceedance_record(&scaled, 1.0, NormSpec::Sup).times, vec![2]);
        assert!(scale_window(&b, 0.0).is_err());
    }

    #[test]
    fn norms_on_vectors() {
        let win = Window::new(vec![3.0, 4.0, -1.0, 0.0], 2).unwrap();
        assert_eq!(win.len(), 2);
        assert_eq!(win.norms(NormSpec::Euclidean), vec![5.0, 1.0]);
        assert_eq!(win.norms(NormSpec::Sup), vec![4.0, 1.0]);
        assert_eq!(win.norms(NormSpec::L1), vec![7.0, 1.0]);
    }

    proptest! {
        #[test]
        fn times_strictly_increasing_in_range(vals in proptest::collection::vec(0.0f64..5.0, 0..60), u in 0.1f64..4.0) {
            let rec = exceedance_record(&w(&vals), u, NormSpec::Sup);
            prop_assert!(rec.times.windows(2).all(|p| p[0] < p[1]));
            prop_assert!(rec.times.iter().all(|&t| t >= 1 && t <= vals.len()));
            prop_assert_eq!(rec.has_exceedance, rec.count >= 1);
            if rec.count == 1 { prop_assert_eq!(rec.length, 1); }
            prop_assert!(rec.length <= vals.len());
        }

        #[test]
        fn threshold_monotonicity(vals in proptest::collection::vec(0.0f64..5.0, 1..60), u1 in 0.1f64..4.0, du in 0.0f64..2.0) {
            let u2 = u1 + du;
            let t1 = exceedance_record(&w(&vals), u1, NormSpec::Sup).times;
            let t2 = exceedance_record(&w(&vals), u2, NormSpec::Sup).times;
            prop_assert!(t2.iter().all(|t| t1.contains(t)));
        }

        #[test]
        fn shift_consistency(vals in proptest::collection::vec(0.0f64..5.0, 1..40), pre in 0usize..10, post in 0usize..10) {
            let u = 1.0;
            let base = exceedance_record(&w(&vals), u, NormSpec::Sup);
            let mut padded = vec![0.5; pre];
            padded.extend_from_slice(&vals);
            padded.extend(std::iter::repeat(0.3).take(post));
            let rec = exceedance_record(&w(&padded), u, NormSpec::Sup);
            prop_assert_eq!(rec.count, base.count);
            prop_assert_eq!(rec.length, base.length);
            let shifted: Vec<usize> = base.times.iter().map(|t| t + pre).collect();
            prop_assert_eq!(rec.times, shifted);
        }

        #[test]
        fn scaling_commutes_with_exceedances(vals in proptest::collection::vec(0.0f64..5.0, 0..40), u in 0.1f64..4.0) {
            let b = w(&vals);
            let direct = exceedance_record(&b, u, NormSpec::Sup);
            let scaled = exceedance_record(&scale_window(&b, u).unwrap(), 1.0, NormSpec::Sup);
            prop_assert_eq!(direct, scaled);
        }

        #[test]
        fn partition_is_prefix(vals in proptest::collection::vec(0.0f64..5.0, 1..80), r in 1usize..20) {
            prop_assume!(r <= vals.len());
            let s = w(&vals);
            let scheme = BlockScheme::new(vals.len(), r, Threshold::FixedLevel(1.0)).unwrap();
            let blocks = partition_blocks(&s, &scheme).unwrap();
            let concat: Vec<f64> = blocks.iter().flat_map(|b| b.values().to_vec()).collect();
            prop_assert_eq!(&vals[..concat.len()], &concat[..]);
            prop_assert_eq!(blocks.len(), vals.len() / r);
        }
    }
}
