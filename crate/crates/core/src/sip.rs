//! Shift-invariance algebra: least-squares `Λ`, SIP residual and the
//! deflation projector `Q` used by beamspace ESPRIT.
//!
//! With `J1 = [I, 0]` and `J2 = [0, I]`, `J1 F` is `F` without its last row
//! and `J2 F` is `F` without its first row, so no selection matrix is ever
//! materialized here.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, orthonormal_basis, singular_values, CMatrix, CVector};

/// Relative rank tolerance for the Gram-Schmidt basis of `G`.
pub const BASIS_RANK_TOL: f64 = 1e-12;
/// `J2 F` is treated as rank deficient below this reciprocal condition number.
pub const MIN_RCOND: f64 = 1e-12;

fn upper(f: &CMatrix) -> CMatrix {
    f.rows(0, f.nrows() - 1).into_owned()
}

fn lower(f: &CMatrix) -> CMatrix {
    f.rows(1, f.nrows() - 1).into_owned()
}

/// `J1 F - J2 F Λ`.
pub fn sip_residual(f: &CMatrix, lambda: &CMatrix) -> CMatrix {
    upper(f) - lower(f) * lambda
}

/// `‖J1 F - J2 F Λ‖_F²`.
pub fn sip_error(f: &CMatrix, lambda: &CMatrix) -> f64 {
    frobenius_sq(&sip_residual(f, lambda))
}

/// Least-squares SIP-restoring matrix for a fixed precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFit {
    pub lambda: CMatrix,
    /// `‖J1 F - J2 F Λ‖_F²` at the optimum.
    pub residual: f64,
    /// Condition number of `J2 F`.
    pub condition: f64,
    /// Condition number of `Λ` itself; large values mean `Λ` is close to
    /// singular.
    pub lambda_condition: f64,
}

fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `Λ = (F^H J2^H J2 F)^{-1} F^H J2^H J1 F`, solved through a QR
/// factorization of `J2 F`.
pub fn lambda_ls(f: &CMatrix) -> Result<LambdaFit> {
    let (n, m) = f.shape();
    if n < 2 {
        return Err(Error::DimensionMismatch {
            context: "lambda_ls precoder rows",
            expected: 2,
            found: n,
        });
    }
    if !crate::linalg::all_finite(f) {
        return Err(Error::NonFinite("precoder"));
    }
    if n - 1 < m {
        return Err(Error::Singular {
            context: "lambda_ls: J2 F has more columns than rows",
            condition: f64::INFINITY,
        });
    }
    let x1 = upper(f);
    let x2 = lower(f);
    let condition = condition_number(&x2);
    if !(condition.is_finite() && 1.0 / condition > MIN_RCOND) {
        return Err(Error::Singular {
            context: "lambda_ls: J2 F is rank deficient",
            condition,
        });
    }
    let qr = x2.clone().qr();
    let rhs = qr.q().adjoint() * &x1;
    let lambda = qr.r().solve_upper_triangular(&rhs).ok_or(Error::Singular {
        context: "lambda_ls: triangular solve",
        condition,
    })?;
    let residual = frobenius_sq(&(x1 - x2 * &lambda));
    let lambda_condition = condition_number(&lambda);
    Ok(LambdaFit {
        lambda,
        residual,
        condition,
        lambda_condition,
    })
}

/// A least-squares minimizer of `‖J1 F - J2 F Λ‖_F²` that also covers a
/// rank-deficient `J2 F`: falls back to the minimum-norm solution
/// `(J2 F)† J1 F` when [`lambda_ls`] reports a singular system.
pub fn lambda_ls_min_norm(f: &CMatrix) -> Result<LambdaFit> {
    match lambda_ls(f) {
        Err(Error::Singular { condition, .. }) if f.nrows() >= 2 => {
            let x1 = upper(f);
            let x2 = lower(f);
            let (x2_pinv, _) = crate::linalg::pinv(&x2, MIN_RCOND);
            let lambda = x2_pinv * &x1;
            let residual = frobenius_sq(&(x1 - x2 * &lambda));
            let lambda_condition = condition_number(&lambda);
            Ok(LambdaFit {
                lambda,
                residual,
                condition,
                lambda_condition,
            })
        }
        other => other,
    }
}

/// `Q = I - Σ q_i q_i^H` annihilating `G = [F^T e_N, Λ^T F^T e_1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deflation {
    pub projector: CMatrix,
    /// Orthonormal basis of `range(G)`; one or two vectors, or none if `G = 0`.
    pub basis: Vec<CVector>,
}

impl Deflation {
    pub fn rank(&self) -> usize {
        self.projector.nrows() - self.basis.len()
    }
}

/// The two boundary terms `[F^T e_N, Λ^T F^T e_1]` as an `M × 2` matrix.
pub fn boundary_terms(f: &CMatrix, lambda: &CMatrix) -> CMatrix {
    let n = f.nrows();
    let last = f.row(n - 1).transpose();
    let first = lambda.transpose() * f.row(0).transpose();
    CMatrix::from_columns(&[last, first])
}

pub fn deflation_projector(f: &CMatrix, lambda: &CMatrix) -> Result<Deflation> {
    let m = f.ncols();
    if m < 3 {
        return Err(Error::DimensionMismatch {
            context: "deflation projector needs at least 3 beams",
            expected: 3,
            found: m,
        });
    }
    if lambda.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            context: "lambda must be M x M",
            expected: m,
            found: lambda.nrows(),
        });
    }
    let g = boundary_terms(f, lambda);
    let basis = orthonormal_basis(&g, BASIS_RANK_TOL);
    let mut projector = CMatrix::identity(m, m);
    for q in &basis {
        projector -= q * q.adjoint();
    }
    Ok(Deflation { projector, basis })
}

/// Everything the estimator needs to know about a precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SipSolution {
    pub fit: LambdaFit,
    pub deflation: Deflation,
}

impl SipSolution {
    pub fn new(f: &CMatrix) -> Result<Self> {
        let fit = lambda_ls(f)?;
        Self::from_fit(f, fit)
    }

    pub fn from_fit(f: &CMatrix, fit: LambdaFit) -> Result<Self> {
        let deflation = deflation_projector(f, &fit.lambda)?;
        Ok(SipSolution { fit, deflation })
    }

    pub fn lambda(&self) -> &CMatrix {
        &self.fit.lambda
    }

    pub fn projector(&self) -> &CMatrix {
        &self.deflation.projector
    }

    pub fn residual(&self) -> f64 {
        self.fit.residual
    }

    pub fn num_beams(&self) -> usize {
        self.fit.lambda.nrows()
    }
}
