use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::ScalarJet;
use crate::Vec2;

/// Smooth compactly supported bump `A * exp(1 - 1 / (1 - s^2))`, `s = |p - c| / r`.
///
/// The profile peaks at the center with value `A` and is exactly zero for
/// `|p - c| >= r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub center: Vec2,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: Vec2, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("bump.radius", format!("must be positive, got {radius}")));
        }
        if !amplitude.is_finite() || !center.x.is_finite() || !center.y.is_finite() {
            return Err(Error::invalid("bump", "center and amplitude must be finite"));
        }
        Ok(Bump {
            center,
            radius,
            amplitude,
        })
    }

    pub fn in_support(&self, p: Vec2) -> bool {
        (p - self.center).norm_squared() < self.radius * self.radius
    }

    /// Jet of the bump at `p`, or `None` outside the open support disk.
    pub fn jet(&self, p: Vec2) -> Option<ScalarJet> {
        let d = p - self.center;
        let r2 = self.radius * self.radius;
        let u = d.norm_squared() / r2;
        if u >= 1.0 {
            return None;
        }
        let w = 1.0 / (1.0 - u);
        let psi = (1.0 - w).exp();
        // derivatives of psi with respect to u
        let psi_u = -psi * w * w;
        let psi_uu = psi * w.powi(4) - 2.0 * psi * w.powi(3);
        let du = d * (2.0 / r2);
        let a = self.amplitude;
        let grad = du * (a * psi_u);
        let hess = (du * du.transpose()) * (a * psi_uu) + Matrix2::identity() * (a * psi_u * 2.0 / r2);
        Some(ScalarJet {
            value: a * psi,
            grad,
            hess,
        })
    }

    pub fn value(&self, p: Vec2) -> f64 {
        self.jet(p).map_or(0.0, |j| j.value)
    }

    pub fn negated(&self) -> Bump {
        Bump {
            amplitude: -self.amplitude,
            ..*self
        }
    }
}
