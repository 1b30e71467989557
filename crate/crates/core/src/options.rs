//! Numeric settings for every stage of the pipeline.
//!
//! Defaults are the values the toolkit is specified against; everything is
//! serializable so a run can be reproduced from its printed configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerFlowOptions {
    /// Max absolute P/Q mismatch at convergence (pu).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    /// Outward march step on the generalized angle (rad).
    pub march_step: f64,
    /// Largest |delta_g| examined (rad).
    pub range_cap: f64,
    /// Width of the final bracket around each extremum (rad).
    pub bisection_tol: f64,
    /// Central-difference step for the curve derivative (rad).
    pub fd_step: f64,
    /// Largest |Im(P y)| accepted when mapping modal coordinates back.
    pub realness_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            march_step: 0.02,
            range_cap: 2.0 * std::f64::consts::PI,
            bisection_tol: 1e-8,
            fd_step: 1e-5,
            realness_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ms3Options {
    /// Max per-load |S_L - S_L,base| at convergence (pu).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Under-relaxation applied once divergence is detected.
    pub relaxation: f64,
}

impl Default for Ms3Options {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 50,
            relaxation: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    /// Initial step along a ray (MW).
    pub initial_step_mw: f64,
    /// Stopping resolution (MW).
    pub resolution_mw: f64,
    /// Safety cap on the number of steps per ray.
    pub max_steps: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            initial_step_mw: 10.0,
            resolution_mw: 0.1,
            max_steps: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    /// Real part above which an eigenvalue counts as unstable (1/s).
    pub instability_threshold: f64,
    /// |Im| at or below which an eigenvalue counts as real (rad/s).
    pub real_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            instability_threshold: 1e-8,
            real_tol: 1e-6,
        }
    }
}

/// All numeric settings of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub power_flow: PowerFlowOptions,
    pub search: SearchOptions,
    pub ms3: Ms3Options,
    pub scan: ScanOptions,
    pub eigen: EigenOptions,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config {
            name: name.to_string(),
            reason: format!("must be a positive finite number, got {v}"),
        })
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::Config {
            name: name.to_string(),
            reason: "must be at least 1".to_string(),
        })
    }
}

impl AnalysisOptions {
    pub fn validate(&self) -> Result<()> {
        positive("power_flow.tolerance", self.power_flow.tolerance)?;
        nonzero("power_flow.max_iterations", self.power_flow.max_iterations)?;
        positive("search.march_step", self.search.march_step)?;
        positive("search.range_cap", self.search.range_cap)?;
        positive("search.bisection_tol", self.search.bisection_tol)?;
        positive("search.fd_step", self.search.fd_step)?;
        positive("search.realness_tol", self.search.realness_tol)?;
        positive("ms3.tolerance", self.ms3.tolerance)?;
        nonzero("ms3.max_iterations", self.ms3.max_iterations)?;
        positive("ms3.relaxation", self.ms3.relaxation)?;
        if self.ms3.relaxation > 1.0 {
            return Err(Error::Config {
                name: "ms3.relaxation".into(),
                reason: "must not exceed 1".into(),
            });
        }
        positive("scan.initial_step_mw", self.scan.initial_step_mw)?;
        positive("scan.resolution_mw", self.scan.resolution_mw)?;
        nonzero("scan.max_steps", self.scan.max_steps)?;
        positive("eigen.instability_threshold", self.eigen.instability_threshold)?;
        positive("eigen.real_tol", self.eigen.real_tol)?;
        if self.search.fd_step >= self.search.march_step {
            return Err(Error::Config {
                name: "search.fd_step".into(),
                reason: "must be smaller than search.march_step".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        AnalysisOptions::default().validate().unwrap();
    }

    #[test]
    fn rejects_non_positive() {
        let mut o = AnalysisOptions::default();
        o.scan.resolution_mw = 0.0;
        assert!(matches!(o.validate(), Err(Error::Config { .. })));
        let mut o = AnalysisOptions::default();
        o.search.fd_step = f64::NAN;
        assert!(o.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<AnalysisOptions, _> =
            serde_json::from_str(r#"{"search": {"march_stp": 0.01}}"#);
        assert!(r.is_err());
        let o: AnalysisOptions = serde_json::from_str(r#"{"search": {"march_step": 0.01}}"#).unwrap();
        assert_eq!(o.search.march_step, 0.01);
        assert_eq!(o.search.fd_step, 1e-5);
    }
}
