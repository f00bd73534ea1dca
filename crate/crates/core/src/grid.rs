use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform staggered grid on `[0, b_x] x [0, b_y]`.
///
/// `n_x`, `n_y` count pressure cells. Horizontal velocity lives on the
/// `(n_x - 1) x n_y` interior vertical faces, vertical velocity on the
/// `n_x x (n_y - 1)` interior horizontal faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub n_x: usize,
    pub n_y: usize,
    pub b_x: T,
    pub b_y: T,
    /// Reynolds number; the viscosity is `1 / reynolds`.
    pub reynolds: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(n_x: usize, n_y: usize, b_x: T, b_y: T, reynolds: T) -> Result<Self> {
        let g = Self { n_x, n_y, b_x, b_y, reynolds };
        g.validate()?;
        Ok(g)
    }

    /// Unit square with `n x n` cells.
    pub fn unit_square(n: usize, reynolds: T) -> Result<Self> {
        Self::new(n, n, T::one(), T::one(), reynolds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 3 || self.n_y < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 cells per direction, got {}x{}",
                self.n_x, self.n_y
            )));
        }
        if !(self.b_x > T::zero() && self.b_y > T::zero()) {
            return Err(Error::InvalidGrid("domain lengths must be positive".into()));
        }
        if !(self.reynolds > T::zero()) || !self.reynolds.is_finite() {
            return Err(Error::InvalidGrid("Reynolds number must be positive".into()));
        }
        Ok(())
    }

    pub fn h_x(&self) -> T {
        self.b_x / T::from_usize_lossy(self.n_x)
    }

    pub fn h_y(&self) -> T {
        self.b_y / T::from_usize_lossy(self.n_y)
    }

    pub fn viscosity(&self) -> T {
        T::one() / self.reynolds
    }

    pub fn u_shape(&self) -> (usize, usize) {
        (self.n_x - 1, self.n_y)
    }

    pub fn v_shape(&self) -> (usize, usize) {
        (self.n_x, self.n_y - 1)
    }

    pub fn p_shape(&self) -> (usize, usize) {
        (self.n_x, self.n_y)
    }

    /// x coordinate of U row `i` (a vertical face).
    pub fn x_face(&self, i: usize) -> T {
        T::from_usize_lossy(i + 1) * self.h_x()
    }

    /// x coordinate of cell centre `i`.
    pub fn x_centre(&self, i: usize) -> T {
        (T::from_usize_lossy(i) + T::lit(0.5)) * self.h_x()
    }

    /// y coordinate of V column `j` (a horizontal face).
    pub fn y_face(&self, j: usize) -> T {
        T::from_usize_lossy(j + 1) * self.h_y()
    }

    pub fn y_centre(&self, j: usize) -> T {
        (T::from_usize_lossy(j) + T::lit(0.5)) * self.h_y()
    }

    /// Weight of the discrete L2 inner product, `h_x * h_y`.
    pub fn cell_area(&self) -> T {
        self.h_x() * self.h_y()
    }

    pub fn cast<S: Real>(&self) -> GridSpec<S> {
        GridSpec {
            n_x: self.n_x,
            n_y: self.n_y,
            b_x: S::lit(self.b_x.as_f64()),
            b_y: S::lit(self.b_y.as_f64()),
            reynolds: S::lit(self.reynolds.as_f64()),
        }
    }
}
