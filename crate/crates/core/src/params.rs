use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to route β onto the closed-form limits at β = 1/2 and β = 1.
pub const BETA_BRANCH_TOL: f64 = 1e-9;

/// The five growth-model parameters plus the network size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Expected number of external links brought by a new node.
    pub m: f64,
    /// Internal-link rate.
    #[serde(rename = "L")]
    pub l: f64,
    /// Power-law exponent of the degree distribution, `γ ≥ 2`.
    pub gamma: f64,
    /// Temperature, `T ≥ 0`.
    #[serde(rename = "T")]
    pub temperature: f64,
    /// Curvature scale `ζ = sqrt(-K)`.
    pub zeta: f64,
    /// Final network size.
    pub t: usize,
}

impl ModelParams {
    pub fn new(m: f64, l: f64, gamma: f64, temperature: f64, zeta: f64, t: usize) -> Result<Self> {
        let p = ModelParams { m, l, gamma, temperature, zeta, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.m.is_finite() && self.m > 0.0) {
            return bad(format!("m must be > 0, got {}", self.m));
        }
        if !(self.l.is_finite() && self.l >= 0.0) {
            return bad(format!("L must be >= 0, got {}", self.l));
        }
        if !(self.gamma.is_finite() && self.gamma >= 2.0) {
            return bad(format!("gamma must be >= 2, got {}", self.gamma));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("T must be >= 0, got {}", self.temperature));
        }
        if !(self.zeta.is_finite() && self.zeta > 0.0) {
            return bad(format!("zeta must be > 0, got {}", self.zeta));
        }
        if self.t < 1 {
            return bad("t must be >= 1".into());
        }
        Ok(())
    }

    /// `β = 1/(γ-1)`, in `(0, 1]`.
    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    /// Radius of the outer rim, `r_t = (2/ζ) ln t`.
    #[inline]
    pub fn rim_radius(&self) -> f64 {
        2.0 / self.zeta * (self.t as f64).ln()
    }

    pub fn with_size(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// Expected average degree `2(m + L)`.
    pub fn average_degree(&self) -> f64 {
        2.0 * (self.m + self.l)
    }
}
