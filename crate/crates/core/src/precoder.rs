use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMatrix, C64};

/// An `N_tx × M` transmit precoding matrix; column `m` is the beam used at
/// transmission `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    matrix: CMatrix,
}

impl Precoder {
    pub fn new(matrix: CMatrix) -> Self {
        Precoder { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn num_antennas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_beams(&self) -> usize {
        self.matrix.ncols()
    }

    /// `trace(F F^H)`.
    pub fn power(&self) -> f64 {
        frobenius_sq(&self.matrix)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.power())
    }

    /// Rescale so that `trace(F F^H) = target`.
    pub fn with_power(&self, target: f64) -> Result<Precoder> {
        let p = self.power();
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidConfig("cannot normalize a zero precoder"));
        }
        Ok(Precoder::new(self.matrix.scale(libm::sqrt(target / p))))
    }

    /// Rescale so that `trace(F F^H) = M`.
    pub fn normalized(&self) -> Result<Precoder> {
        self.with_power(self.num_beams() as f64)
    }

    pub fn is_unit_modulus(&self, tol: f64) -> bool {
        self.matrix.iter().all(|z| (z.norm() - 1.0).abs() <= tol)
    }

    /// Entry-wise `z / |z|`, mapping exact zeros to 1.
    pub fn unit_modulus(&self) -> Precoder {
        Precoder::new(self.matrix.map(project_entry))
    }
}

#[inline]
pub(crate) fn project_entry(z: C64) -> C64 {
    let n = z.norm();
    if n == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z.unscale(n)
    }
}
