//! Sum/difference beam codebook used as the ESPRIT-unaware baseline.

use alloc::vec::Vec;

use crate::array::{check_angle, AngleGrid, ArrayConfig};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMatrix};
use crate::precoder::Precoder;

/// Default difference-beam weight.
pub const DEFAULT_GAMMA: f64 = 0.01;

/// Prior AoD interval `[θ_min, θ_max]` for one path.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UncertaintyInterval {
    pub path_index: usize,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
}

impl UncertaintyInterval {
    pub fn new(path_index: usize, theta_min_deg: f64, theta_max_deg: f64) -> Result<Self> {
        let u = UncertaintyInterval {
            path_index,
            theta_min_deg,
            theta_max_deg,
        };
        u.validate()?;
        Ok(u)
    }

    /// `[center - half_width, center + half_width]`.
    pub fn around(path_index: usize, center_deg: f64, half_width_deg: f64) -> Result<Self> {
        Self::new(path_index, center_deg - half_width_deg, center_deg + half_width_deg)
    }

    pub fn validate(&self) -> Result<()> {
        check_angle(self.theta_min_deg)?;
        check_angle(self.theta_max_deg)?;
        if self.theta_min_deg >= self.theta_max_deg {
            return Err(Error::InvalidConfig("uncertainty interval must have min < max"));
        }
        Ok(())
    }

    pub fn width_deg(&self) -> f64 {
        self.theta_max_deg - self.theta_min_deg
    }

    pub fn center_deg(&self) -> f64 {
        0.5 * (self.theta_min_deg + self.theta_max_deg)
    }

    pub fn reflected(&self) -> Self {
        UncertaintyInterval {
            path_index: self.path_index,
            theta_min_deg: -self.theta_max_deg,
            theta_max_deg: -self.theta_min_deg,
        }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSpec {
    pub intervals: Vec<UncertaintyInterval>,
    /// Difference-beam weight `γ`.
    pub gamma: f64,
    pub include_diff: bool,
    /// Lower bound on the number of beams per interval. `1` reproduces the
    /// plain 3 dB rule.
    #[cfg_attr(feature = "serde", serde(default = "default_min_beams"))]
    pub min_beams_per_path: usize,
}

#[cfg(feature = "serde")]
fn default_min_beams() -> usize {
    1
}

impl CodebookSpec {
    pub fn new(intervals: Vec<UncertaintyInterval>, gamma: f64, include_diff: bool) -> Self {
        CodebookSpec {
            intervals,
            gamma,
            include_diff,
            min_beams_per_path: 1,
        }
    }

    pub fn with_min_beams(mut self, min: usize) -> Self {
        self.min_beams_per_path = min;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::InvalidConfig("codebook needs at least one interval"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfig("gamma must be non-negative"));
        }
        if self.min_beams_per_path == 0 {
            return Err(Error::InvalidConfig("min_beams_per_path must be at least 1"));
        }
        for u in &self.intervals {
            u.validate()?;
        }
        Ok(())
    }
}

/// Approximate ULA half-power beamwidth `0.886 / (N (d/λ) cos θ)` in radians.
pub fn beamwidth_3db(cfg: &ArrayConfig, theta_deg: f64) -> Result<f64> {
    check_angle(theta_deg)?;
    Ok(0.886 / (cfg.num_elements as f64 * cfg.spacing_ratio * libm::cos(theta_deg.to_radians())))
}

/// Number of beams the 3 dB rule assigns to an interval.
pub fn beam_count(cfg: &ArrayConfig, interval: &UncertaintyInterval) -> Result<usize> {
    interval.validate()?;
    let bw = beamwidth_3db(cfg, interval.center_deg())?.to_degrees();
    let n = libm::ceil(interval.width_deg() / bw) as usize;
    Ok(n.max(1))
}

/// Uniform beam directions covering `interval`, endpoint-inclusive.
pub fn beam_grid(cfg: &ArrayConfig, interval: &UncertaintyInterval) -> Result<AngleGrid> {
    let n = beam_count(cfg, interval)?;
    symmetric_grid(interval, n)
}

fn symmetric_grid(interval: &UncertaintyInterval, n: usize) -> Result<AngleGrid> {
    let center = interval.center_deg();
    if n == 1 {
        return AngleGrid::new(alloc::vec![center]);
    }
    let step = interval.width_deg() / (n - 1) as f64;
    let half = (n - 1) as f64 / 2.0;
    AngleGrid::new((0..n).map(|i| center + (i as f64 - half) * step).collect())
}

/// Beam directions per path after applying `min_beams_per_path`.
pub fn path_grids(cfg: &ArrayConfig, spec: &CodebookSpec) -> Result<Vec<AngleGrid>> {
    spec.validate()?;
    spec.intervals
        .iter()
        .map(|u| {
            let n = beam_count(cfg, u)?.max(spec.min_beams_per_path);
            symmetric_grid(u, n)
        })
        .collect()
}

fn flatten(grids: &[AngleGrid]) -> Vec<f64> {
    grids.iter().flat_map(|g| g.angles().iter().copied()).collect()
}

/// `F_sum`: conjugated steering vectors, unit modulus, not power-normalized.
pub fn sum_beams(cfg: &ArrayConfig, spec: &CodebookSpec) -> Result<CMatrix> {
    let angles = flatten(&path_grids(cfg, spec)?);
    Ok(cfg.steering_matrix(&angles)?.conjugate())
}

/// `F_diff`: conjugated derivative beams, not power-normalized.
pub fn difference_beams(cfg: &ArrayConfig, spec: &CodebookSpec) -> Result<CMatrix> {
    let angles = flatten(&path_grids(cfg, spec)?);
    Ok(cfg.derivative_matrix(&angles)?.conjugate())
}

/// `F_base = [F_sum, γ F_diff]` with `‖F_sum‖_F = ‖F_diff‖_F` before `γ`,
/// scaled to `trace(F F^H) = M`.
pub fn build_baseline(cfg: &ArrayConfig, spec: &CodebookSpec) -> Result<Precoder> {
    let sum = sum_beams(cfg, spec)?;
    let matrix = if spec.include_diff {
        let diff = difference_beams(cfg, spec)?;
        let ratio = libm::sqrt(frobenius_sq(&sum) / frobenius_sq(&diff));
        let diff = diff.scale(ratio * spec.gamma);
        let mut out = CMatrix::zeros(sum.nrows(), sum.ncols() + diff.ncols());
        out.columns_mut(0, sum.ncols()).copy_from(&sum);
        out.columns_mut(sum.ncols(), diff.ncols()).copy_from(&diff);
        out
    } else {
        sum
    };
    Precoder::new(matrix).normalized()
}

/// Power-normalized precoder made only of difference beams at `angles_deg`.
pub fn difference_beam_precoder(cfg: &ArrayConfig, angles_deg: &[f64]) -> Result<Precoder> {
    if angles_deg.is_empty() {
        return Err(Error::InvalidConfig("no beam directions"));
    }
    Precoder::new(cfg.derivative_matrix(angles_deg)?.conjugate()).normalized()
}

/// Power-normalized precoder made only of sum beams at `angles_deg`.
pub fn sum_beam_precoder(cfg: &ArrayConfig, angles_deg: &[f64]) -> Result<Precoder> {
    if angles_deg.is_empty() {
        return Err(Error::InvalidConfig("no beam directions"));
    }
    Precoder::new(cfg.steering_matrix(angles_deg)?.conjugate()).normalized()
}
