//! Uniform linear array algebra.
//!
//! Steering vectors follow `[a(θ)]_k = exp(j·2π·(d/λ)·k·sin θ)` for
//! `k = 0..N-1`, so element 0 is the phase reference. Angles are degrees at
//! the API boundary; derivatives are taken with respect to radians.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, RMatrix, C64};
use crate::precoder::Precoder;

/// Geometry of the transmit ULA.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArrayConfig {
    pub num_elements: usize,
    /// Element spacing over wavelength, `d/λ`.
    pub spacing_ratio: f64,
    /// Carrier frequency in Hz. Informational only.
    pub carrier_hz: f64,
}

impl Default for ArrayConfig {
    /// 64 elements at half-wavelength spacing, 28 GHz.
    fn default() -> Self {
        ArrayConfig {
            num_elements: 64,
            spacing_ratio: 0.5,
            carrier_hz: 28e9,
        }
    }
}

/// Require `theta` in the open interval (-90°, 90°).
pub(crate) fn check_angle(theta_deg: f64) -> Result<()> {
    if theta_deg.is_finite() && theta_deg > -90.0 && theta_deg < 90.0 {
        Ok(())
    } else {
        Err(Error::Domain("angle (deg)", theta_deg))
    }
}

impl ArrayConfig {
    pub fn new(num_elements: usize, spacing_ratio: f64, carrier_hz: f64) -> Result<Self> {
        let cfg = ArrayConfig {
            num_elements,
            spacing_ratio,
            carrier_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Half-wavelength ULA with `n` elements at 28 GHz.
    pub fn half_wavelength(n: usize) -> Result<Self> {
        Self::new(n, 0.5, 28e9)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements < 2 {
            return Err(Error::InvalidConfig("array needs at least 2 elements"));
        }
        if !(self.spacing_ratio.is_finite() && self.spacing_ratio > 0.0) {
            return Err(Error::InvalidConfig("spacing ratio must be positive"));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::InvalidConfig("carrier frequency must be positive"));
        }
        Ok(())
    }

    /// Inter-element phase step `2π(d/λ)sin θ` in radians.
    pub fn spatial_phase(&self, theta_deg: f64) -> f64 {
        2.0 * core::f64::consts::PI * self.spacing_ratio * libm::sin(theta_deg.to_radians())
    }

    pub fn steering_vector(&self, theta_deg: f64) -> Result<CVector> {
        check_angle(theta_deg)?;
        let step = self.spatial_phase(theta_deg);
        Ok(CVector::from_fn(self.num_elements, |k, _| cis(step * k as f64)))
    }

    /// `∂a(θ)/∂θ` with θ in radians.
    pub fn derivative_beam(&self, theta_deg: f64) -> Result<CVector> {
        check_angle(theta_deg)?;
        let theta = theta_deg.to_radians();
        let step = self.spatial_phase(theta_deg);
        let slope = 2.0 * core::f64::consts::PI * self.spacing_ratio * libm::cos(theta);
        Ok(CVector::from_fn(self.num_elements, |k, _| {
            C64::new(0.0, slope * k as f64) * cis(step * k as f64)
        }))
    }

    /// Steering vectors stacked column-wise, one per angle.
    pub fn steering_matrix(&self, angles_deg: &[f64]) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.num_elements, angles_deg.len());
        for (j, &theta) in angles_deg.iter().enumerate() {
            out.set_column(j, &self.steering_vector(theta)?);
        }
        Ok(out)
    }

    /// Derivative beams stacked column-wise.
    pub fn derivative_matrix(&self, angles_deg: &[f64]) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.num_elements, angles_deg.len());
        for (j, &theta) in angles_deg.iter().enumerate() {
            out.set_column(j, &self.derivative_beam(theta)?);
        }
        Ok(out)
    }

    /// `J1 = [I, 0]` and `J2 = [0, I]`, both `(N-1)×N`.
    pub fn selection_matrices(&self) -> (RMatrix, RMatrix) {
        let n = self.num_elements;
        let j1 = RMatrix::from_fn(n - 1, n, |r, c| if c == r { 1.0 } else { 0.0 });
        let j2 = RMatrix::from_fn(n - 1, n, |r, c| if c == r + 1 { 1.0 } else { 0.0 });
        (j1, j2)
    }

    /// `A(grid)^T · F`, shape `N_grid × M`.
    pub fn beampattern(&self, precoder: &Precoder, grid: &AngleGrid) -> Result<CMatrix> {
        let f = precoder.matrix();
        if f.nrows() != self.num_elements {
            return Err(Error::DimensionMismatch {
                context: "beampattern precoder rows",
                expected: self.num_elements,
                found: f.nrows(),
            });
        }
        let a = self.steering_matrix(grid.angles())?;
        Ok(a.transpose() * f)
    }

    /// Inverse of [`spatial_phase`](Self::spatial_phase), in degrees.
    pub fn phase_to_angle(&self, phase: f64) -> Result<f64> {
        if !phase.is_finite() {
            return Err(Error::NonFinite("spatial phase"));
        }
        let reach = 2.0 * core::f64::consts::PI * self.spacing_ratio;
        if phase.abs() > reach {
            return Err(Error::UnreachablePhase(phase));
        }
        // Aliases phase ± 2π are also reachable once d/λ > 0.5.
        let tau = 2.0 * core::f64::consts::PI;
        if (phase + tau).abs() <= reach || (phase - tau).abs() <= reach {
            return Err(Error::AmbiguousPhase(phase));
        }
        let s = (phase / reach).clamp(-1.0, 1.0);
        Ok(libm::asin(s).to_degrees())
    }

    /// Default synthesis grid: `16·N` angles uniform over [-89.5°, 89.5°].
    pub fn default_grid(&self) -> AngleGrid {
        AngleGrid::uniform(-89.5, 89.5, 16 * self.num_elements).expect("default grid is valid")
    }
}

/// Strictly increasing angles inside (-90°, 90°).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AngleGrid {
    angles_deg: Vec<f64>,
}

impl AngleGrid {
    pub fn new(angles_deg: Vec<f64>) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::InvalidConfig("angle grid is empty"));
        }
        for &a in &angles_deg {
            check_angle(a)?;
        }
        if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("angle grid must be strictly increasing"));
        }
        Ok(AngleGrid { angles_deg })
    }

    /// `count` points from `lo` to `hi` inclusive. A single point sits at the
    /// midpoint.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("angle grid is empty"));
        }
        if count == 1 {
            return Self::new(alloc::vec![0.5 * (lo + hi)]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        let mut angles: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
        angles[count - 1] = hi;
        Self::new(angles)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }
}
