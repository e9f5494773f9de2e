use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Weak,
    Strong,
}

/// When a fresh sketch is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplePolicy {
    /// New sketch on every loss evaluation; the caller's stream advances.
    PerStep,
    /// The sketch is a pure function of the stream state passed in.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigregConfig {
    pub variant: Variant,
    pub sketch_dim: usize,
    pub integration_points: usize,
    pub t_max: f64,
    pub alpha: f64,
    pub resample_policy: ResamplePolicy,
}

impl Default for SigregConfig {
    fn default() -> Self {
        SigregConfig {
            variant: Variant::Weak,
            sketch_dim: 64,
            integration_points: 17,
            t_max: 5.0,
            alpha: 0.1,
            resample_policy: ResamplePolicy::PerStep,
        }
    }
}

impl SigregConfig {
    pub fn weak() -> Self {
        SigregConfig::default()
    }

    pub fn strong() -> Self {
        SigregConfig {
            variant: Variant::Strong,
            ..SigregConfig::default()
        }
    }

    pub fn with_sketch_dim(mut self, k: usize) -> Self {
        self.sketch_dim = k;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_policy(mut self, policy: ResamplePolicy) -> Self {
        self.resample_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sketch_dim < 1 {
            return Err(Error::Config("sketch_dim must be >= 1".into()));
        }
        if self.integration_points < 3 || self.integration_points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "integration_points must be odd and >= 3, got {}",
                self.integration_points
            )));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::Config(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = SigregConfig::default();
        assert_eq!(c.sketch_dim, 64);
        assert_eq!(c.integration_points, 17);
        assert_eq!(c.alpha, 0.1);
        assert_eq!(c.resample_policy, ResamplePolicy::PerStep);
        c.validate().unwrap();
        SigregConfig::strong().validate().unwrap();
    }

    #[test]
    fn invalid_values() {
        let base = SigregConfig::default();
        for bad in [
            SigregConfig { sketch_dim: 0, ..base.clone() },
            SigregConfig { integration_points: 16, ..base.clone() },
            SigregConfig { integration_points: 1, ..base.clone() },
            SigregConfig { t_max: 0.0, ..base.clone() },
            SigregConfig { alpha: -0.1, ..base.clone() },
            SigregConfig { alpha: f64::NAN, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
