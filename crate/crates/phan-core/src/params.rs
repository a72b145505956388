use serde::{Deserialize, Serialize};

use crate::error::{PhanError, Result};

/// Magnetic field strength `h`, anchoring strength `l_h` on the weakly
/// anchored wall, and film thickness `d`, all dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub h: f64,
    pub l_h: f64,
    pub d: f64,
    /// Critical thickness `arctan(h / l_h) / h`.
    pub d_c: f64,
}

pub fn critical_thickness(h: f64, l_h: f64) -> f64 {
    (h / l_h).atan() / h
}

pub fn validate_params(h: f64, l_h: f64, d: f64) -> Result<PhysParams> {
    for (name, v) in [("h", h), ("L_H", l_h), ("d", d)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(PhanError::NonPositiveParameter(name));
        }
    }
    Ok(PhysParams {
        h,
        l_h,
        d,
        d_c: critical_thickness(h, l_h),
    })
}

impl PhysParams {
    /// Same field and anchoring at a different thickness.
    pub fn with_d(&self, d: f64) -> Result<PhysParams> {
        validate_params(self.h, self.l_h, d)
    }

    pub fn above_threshold(&self) -> bool {
        self.d > self.d_c
    }
}
