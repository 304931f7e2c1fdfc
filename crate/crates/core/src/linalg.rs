//! Complex matrix products routed through real GEMM kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Complex matrix stored as separate real and imaginary parts.
#[derive(Debug, Clone)]
pub(crate) struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self {
            re: m.map(|c| c.re),
            im: m.map(|c| c.im),
        }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &SplitMatrix) -> SplitMatrix {
        let re = &self.re * &rhs.re - &self.im * &rhs.im;
        let im = &self.re * &rhs.im + &self.im * &rhs.re;
        SplitMatrix { re, im }
    }

    /// `self^H * rhs`.
    pub fn adjoint_mul(&self, rhs: &SplitMatrix) -> SplitMatrix {
        let rt = self.re.transpose();
        let it = self.im.transpose();
        let re = &rt * &rhs.re + &it * &rhs.im;
        let im = &rt * &rhs.im - &it * &rhs.re;
        SplitMatrix { re, im }
    }
}

/// `(m + m^H) / 2`.
pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Real part of the Frobenius inner product `tr(a^H b)`.
pub(crate) fn inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}
