//! JSON experiment configuration: schema-validated (unknown keys rejected),
//! fully embedded in every result summary for auditability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::generators::GeneratorModel;
use crate::processes::ProcessKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OracleTable,
    JumpLaw,
    MomentRate,
    Consistency,
    ProcessClt,
    ThetaHat,
    AnticlusterDiag,
    Sweep,
    Simulate,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    /// Sample size per replicate.
    pub n: Option<u64>,
    /// Block size.
    pub r: Option<u64>,
    /// Block sizes for sweeps.
    pub r_list: Option<Vec<u64>>,
    /// Fixed threshold level.
    pub u: Option<f64>,
    /// Order-statistic threshold (k-th largest).
    pub k: Option<u64>,
    /// Explicit exceedance probability; when absent, the model-true value at
    /// u is used (or k/n with an order-statistic threshold).
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment kind; may be implied by the CLI subcommand instead.
    pub experiment: Option<ExperimentKind>,
    pub model: Option<GeneratorModel>,
    pub scheme: Option<SchemeSpec>,
    /// Functional spec strings, e.g. "ei", "length_pow(1.5)", "tmax_pow(1)*ei".
    pub functionals: Option<Vec<String>>,
    /// Process kind for CLT experiments: "g_tilde", "k_tilde", "l_tilde".
    pub process: Option<String>,
    /// Growth exponent where an experiment needs one (default 1).
    pub gamma: Option<f64>,
    /// Series replications (consistency, CLT).
    pub replicates: Option<u64>,
    /// Blocks for the independent centering run.
    pub centering_replicates: Option<u64>,
    /// Monte Carlo blocks for block-level estimates.
    pub n_rep: Option<u64>,
    /// Tail-process paths for theta / cluster-index MC.
    pub n_paths: Option<u64>,
    pub seed: Option<u64>,
    /// Declared pass/fail tolerance where the experiment has one.
    pub tolerance: Option<f64>,
    /// Smallest lag for the anticlustering diagnostic.
    pub lag_min: Option<u64>,
    /// Largest cluster length for pmf experiments.
    pub q_max: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(model) = &self.model {
            model
                .validate()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        if let Some(s) = &self.scheme {
            if s.r == Some(0) {
                return Err(Error::InvalidConfig("block size r must be >= 1".into()));
            }
            if let (Some(r), Some(n)) = (s.r, s.n) {
                if r > n {
                    return Err(Error::InvalidConfig(format!(
                        "block size r={r} exceeds sample size n={n}"
                    )));
                }
            }
            if let Some(u) = s.u {
                if u <= 0.0 {
                    return Err(Error::InvalidConfig(format!("threshold u must be > 0, got {u}")));
                }
            }
            if let Some(w) = s.w {
                if !(w > 0.0 && w < 1.0) {
                    return Err(Error::InvalidConfig(format!("w must lie in (0,1), got {w}")));
                }
            }
        }
        if let Some(fs) = &self.functionals {
            for f in fs {
                Functional::parse(f).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            }
        }
        if let Some(p) = &self.process {
            self.process_kind_named(p)?;
        }
        Ok(())
    }

    pub fn process_kind(&self) -> Result<ProcessKind> {
        let name = self
            .process
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("missing process kind".into()))?;
        self.process_kind_named(name)
    }

    fn process_kind_named(&self, name: &str) -> Result<ProcessKind> {
        let gamma = self.gamma.unwrap_or(1.0);
        match name {
            "g_tilde" => Ok(ProcessKind::GTilde),
            "k_tilde" => Ok(ProcessKind::KTilde { gamma }),
            "l_tilde" => Ok(ProcessKind::LTilde { gamma }),
            other => Err(Error::InvalidConfig(format!("unknown process kind: {other}"))),
        }
    }

    pub fn parsed_functionals(&self) -> Result<Vec<Functional>> {
        self.functionals
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .map(|s| Functional::parse(s))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "experiment": "process_clt",
                "model": {"model": "iid_pareto", "alpha": 1.0},
                "scheme": {"n": 1000000, "r": 100, "u": 10000.0},
                "functionals": ["ei", "length_pow(1)"],
                "process": "g_tilde",
                "replicates": 1000,
                "seed": 42
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Some(ExperimentKind::ProcessClt));
        assert_eq!(cfg.parsed_functionals().unwrap().len(), 2);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"scheme": {"rr": 3}}"#).is_err());
    }

    #[test]
    fn rejects_negative_r() {
        let err = ExperimentConfig::from_json(r#"{"scheme": {"r": -5}}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn rejects_bad_functional_and_process() {
        assert!(ExperimentConfig::from_json(r#"{"functionals": ["nope"]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"process": "m_tilde"}"#).is_err());
    }

    #[test]
    fn rejects_invalid_model() {
        assert!(ExperimentConfig::from_json(
            r#"{"model": {"model": "ar1", "alpha": 1.0, "phi": 1.5}}"#
        )
        .is_err());
    }
}
