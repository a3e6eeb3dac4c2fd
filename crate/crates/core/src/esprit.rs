//! 1-D beamspace ESPRIT.
//!
//! Given `Λ` and the deflation projector `Q` of the precoder in use:
//!
//! 1. `U_s` = `L` dominant eigenvectors of the sample covariance,
//! 2. `Π̃ = (Q U_s)† Q Λᵀ U_s`,
//! 3. the eigenvalues of `Π̃` estimate `e^{j2π(d/λ) sin θ_ℓ}`.

use alloc::vec::Vec;

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, hermitian_eig_desc, pinv, CMatrix, C64};
use crate::sip::SipSolution;

pub const DEFAULT_PINV_TOL: f64 = 1e-10;

/// `L` dominant eigenvectors of a Hermitian PSD matrix, `M × L`.
pub fn signal_subspace(r: &CMatrix, num_paths: usize) -> Result<CMatrix> {
    if r.nrows() != r.ncols() {
        return Err(Error::DimensionMismatch {
            context: "covariance must be square",
            expected: r.nrows(),
            found: r.ncols(),
        });
    }
    if num_paths == 0 || num_paths > r.nrows() {
        return Err(Error::DimensionMismatch {
            context: "signal subspace dimension",
            expected: r.nrows(),
            found: num_paths,
        });
    }
    if !crate::linalg::all_finite(r) {
        return Err(Error::NonFinite("covariance"));
    }
    let (_, vectors) = hermitian_eig_desc(r);
    Ok(vectors.columns(0, num_paths).into_owned())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoDEstimate {
    /// Sorted ascending.
    pub angles_deg: Vec<f64>,
    /// Eigenvalues of `Π̃`, in the same order as `angles_deg`. Ideally on the
    /// unit circle; `|λ|` is a quality indicator.
    pub eigenvalues: Vec<C64>,
    /// Condition number of `Q U_s`.
    pub deflated_condition: f64,
}

/// Estimator bound to one precoder's `Λ` and `Q`.
#[derive(Debug, Clone)]
pub struct BeamspaceEsprit {
    num_paths: usize,
    projector: CMatrix,
    projected_lambda_t: CMatrix,
    pinv_tol: f64,
}

impl BeamspaceEsprit {
    pub fn new(sip: &SipSolution, num_paths: usize) -> Result<Self> {
        let m = sip.num_beams();
        if num_paths == 0 || m < num_paths + 2 {
            return Err(Error::DimensionMismatch {
                context: "ESPRIT needs M - 2 >= L beams",
                expected: num_paths + 2,
                found: m,
            });
        }
        let projector = sip.projector().clone();
        let projected_lambda_t = &projector * sip.lambda().transpose();
        Ok(BeamspaceEsprit {
            num_paths,
            projector,
            projected_lambda_t,
            pinv_tol: DEFAULT_PINV_TOL,
        })
    }

    pub fn with_pinv_tol(mut self, tol: f64) -> Self {
        self.pinv_tol = tol;
        self
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn num_beams(&self) -> usize {
        self.projector.nrows()
    }

    /// `Π̃ = (Q U_s)† Q Λᵀ U_s` and the condition number of `Q U_s`.
    pub fn rotation_operator(&self, us: &CMatrix) -> Result<(CMatrix, f64)> {
        let qu = &self.projector * us;
        let (qu_pinv, rank) = pinv(&qu, self.pinv_tol);
        if rank < self.num_paths {
            return Err(Error::SubspaceCollapse {
                rank,
                required: self.num_paths,
            });
        }
        let sv = crate::linalg::singular_values(&qu);
        let condition = sv[0] / sv[self.num_paths - 1];
        Ok((qu_pinv * (&self.projected_lambda_t * us), condition))
    }

    pub fn estimate(&self, r: &CMatrix, arr: &ArrayConfig) -> Result<AoDEstimate> {
        if r.nrows() != self.num_beams() {
            return Err(Error::DimensionMismatch {
                context: "covariance size vs precoder beams",
                expected: self.num_beams(),
                found: r.nrows(),
            });
        }
        let us = signal_subspace(r, self.num_paths)?;
        let (pi, deflated_condition) = self.rotation_operator(&us)?;
        let eig = eigenvalues(&pi).ok_or(Error::NonFinite("rotation operator eigenvalues"))?;
        let mut pairs: Vec<(f64, C64)> = Vec::with_capacity(eig.len());
        for z in eig {
            let angle = arr.phase_to_angle(z.arg())?;
            if !(angle > -90.0 && angle < 90.0) {
                return Err(Error::UnreachablePhase(z.arg()));
            }
            pairs.push((angle, z));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(AoDEstimate {
            angles_deg: pairs.iter().map(|p| p.0).collect(),
            eigenvalues: pairs.iter().map(|p| p.1).collect(),
            deflated_condition,
        })
    }
}
