//! Periodic computational box, discrete complex fields, and inner products.
//!
//! The domain is the cube `[0, L)^3` sampled on `n` points per axis with
//! spacing `h = L/n`. All integrals are rectangle-rule sums with quadrature
//! weight `w = h^3`, which is spectrally accurate for smooth periodic fields.
//! The frequency lattice per axis is `(2*pi/L) * {-n/2, ..., n/2 - 1}`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Periodic cubic grid: `n` points per axis (power of two), box side `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "box length must be positive and finite, got {length}"
            )));
        }
        Ok(Grid { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.length
    }

    /// Spacing `h = L/n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight `w = h^3`.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Total number of samples `n^3`.
    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Coordinate of sample index `i` along one axis, in `[0, L)`.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Box center `L/2` (a lattice point, index `n/2`).
    pub fn center(&self) -> f64 {
        0.5 * self.length
    }

    /// Signed frequency of FFT bin `j` along one axis:
    /// `(2*pi/L) * j` for `j < n/2`, else `(2*pi/L) * (j - n)`.
    pub fn freq(&self, j: usize) -> f64 {
        let step = 2.0 * std::f64::consts::PI / self.length;
        if j < self.n / 2 {
            step * j as f64
        } else {
            step * (j as f64 - self.n as f64)
        }
    }

    /// Largest frequency magnitude on the lattice, `sqrt(3) * pi * n / L`.
    pub fn freq_max(&self) -> f64 {
        3f64.sqrt() * std::f64::consts::PI * self.n as f64 / self.length
    }

    /// Row-major sample index for axis indices `(i, j, k)` = (x, y, z).
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n + j) * self.n + i
    }
}

/// Model parameters: Riesz exponent `alpha` in (0,1), perturbation strength
/// `beta`, particle mass `m >= 0`, and the mass constraint `N > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub mass_m: f64,
    pub constraint_n: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, mass_m: f64, constraint_n: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
        }
        if !(mass_m >= 0.0) || !mass_m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass m must be >= 0 and finite, got {mass_m}"
            )));
        }
        if !(constraint_n > 0.0) || !constraint_n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass constraint N must be positive, got {constraint_n}"
            )));
        }
        Ok(ModelParams {
            alpha,
            beta,
            mass_m,
            constraint_n,
        })
    }
}

/// Complex-valued function sampled on a [`Grid`], row-major axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.points()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.points(),
                values.len()
            )));
        }
        Ok(ComplexField { grid, values })
    }

    /// Sample `f(x, y, z)` on the grid.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64, f64) -> Complex64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.points());
        for k in 0..n {
            let z = grid.coord(k);
            for j in 0..n {
                let y = grid.coord(j);
                for i in 0..n {
                    values.push(f(grid.coord(i), y, z));
                }
            }
        }
        ComplexField { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Reinterpret the same samples on a rescaled box `L -> L/b` with the
    /// amplitude scaled by `a`. This realizes `a * f(b x)` exactly on the
    /// grid (the samples of the dilated profile coincide with the original
    /// samples at the rescaled lattice).
    pub fn rescaled_box(&self, a: f64, b: f64) -> Result<ComplexField> {
        let grid = Grid::new(self.grid.n(), self.grid.box_length() / b)?;
        let values = self.values.iter().map(|v| v * a).collect();
        Ok(ComplexField { grid, values })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Asserts both fields live on the same grid.
pub fn check_same_grid(f: &ComplexField, g: &ComplexField) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch(format!(
            "fields on different grids: ({}, {}) vs ({}, {})",
            f.grid().n(),
            f.grid().box_length(),
            g.grid().n(),
            g.grid().box_length()
        )));
    }
    Ok(())
}

/// Discrete L2 product `w * sum conj(f_i) g_i`; conjugate-linear in `f`.
pub fn inner(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    check_same_grid(f, g)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.values().iter().zip(g.values()) {
        acc += a.conj() * b;
    }
    Ok(acc * f.grid().weight())
}

/// `||f||_2^2 = inner(f, f)` as a real number.
pub fn mass(f: &ComplexField) -> f64 {
    let mut acc = 0.0;
    for v in f.values() {
        acc += v.norm_sqr();
    }
    acc * f.grid().weight()
}

/// Rescales `f` so that `mass(result) = target_n`.
pub fn normalize(f: &ComplexField, target_n: f64) -> Result<ComplexField> {
    if !(target_n > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalization target must be positive, got {target_n}"
        )));
    }
    let m = mass(f);
    if m <= 0.0 || !m.is_finite() {
        return Err(Error::ZeroField("normalize"));
    }
    let c = (target_n / m).sqrt();
    let values = f.values().iter().map(|v| v * c).collect();
    ComplexField::from_values(f.grid(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(7, 1.0).is_err());
        assert!(Grid::new(12, 1.0).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(8, -1.0).is_err());
        assert!(Grid::new(16, 2.0).is_ok());
    }

    #[test]
    fn frequency_lattice_layout() {
        let g = Grid::new(8, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(g.freq(0), 0.0);
        assert_eq!(g.freq(1), 1.0);
        assert_eq!(g.freq(3), 3.0);
        assert_eq!(g.freq(4), -4.0);
        assert_eq!(g.freq(7), -1.0);
    }

    #[test]
    fn inner_of_unit_constant_is_box_volume() {
        let l = 2.0 * std::f64::consts::PI;
        let g = Grid::new(8, l).unwrap();
        let one = ComplexField::from_fn(g, |_, _, _| Complex64::new(1.0, 0.0));
        let v = inner(&one, &one).unwrap();
        let expect = l.powi(3);
        assert!((v.re - expect).abs() <= 1e-12 * expect, "got {v}");
        assert!(v.im.abs() <= 1e-12 * expect);
    }

    #[test]
    fn inner_zero_and_positivity() {
        let g = Grid::new(8, 1.0).unwrap();
        let z = ComplexField::zeros(g);
        let f = ComplexField::from_fn(g, |x, y, _| Complex64::new(x + 0.25, y - 0.5));
        assert_eq!(inner(&z, &f).unwrap(), Complex64::new(0.0, 0.0));
        let ff = inner(&f, &f).unwrap();
        assert!(ff.re >= 0.0);
        assert!(ff.im.abs() <= 1e-13 * ff.re);
    }

    #[test]
    fn inner_rejects_grid_mismatch() {
        let f = ComplexField::zeros(Grid::new(8, 1.0).unwrap());
        let g = ComplexField::zeros(Grid::new(16, 1.0).unwrap());
        assert!(matches!(inner(&f, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn mass_is_phase_invariant() {
        let g = Grid::new(8, 3.0).unwrap();
        let f = ComplexField::from_fn(g, |x, y, z| Complex64::new(x * y + 1.0, z));
        let theta = 0.7391;
        let rot = Complex64::from_polar(1.0, theta);
        let fr = ComplexField::from_values(g, f.values().iter().map(|v| v * rot).collect()).unwrap();
        let (m0, m1) = (mass(&f), mass(&fr));
        assert!((m0 - m1).abs() <= 1e-12 * m0);
    }

    #[test]
    fn normalize_scales_mass_and_is_idempotent() {
        let g = Grid::new(8, 2.0).unwrap();
        let f = ComplexField::from_fn(g, |x, y, z| Complex64::new(1.0 + x, y - z));
        let f1 = normalize(&f, 4.0).unwrap();
        assert!((mass(&f1) - 4.0).abs() <= 1e-12 * 4.0);
        let f2 = normalize(&f1, 4.0).unwrap();
        for (a, b) in f1.values().iter().zip(f2.values()) {
            assert!((a - b).norm() <= 1e-15 * a.norm().max(1.0));
        }
        assert!(matches!(
            normalize(&ComplexField::zeros(g), 1.0),
            Err(Error::ZeroField(_))
        ));
    }

    #[test]
    fn model_params_validation() {
        assert!(ModelParams::new(0.5, 0.1, 1.0, 2.0).is_ok());
        assert!(ModelParams::new(0.0, 0.1, 1.0, 2.0).is_err());
        assert!(ModelParams::new(1.0, 0.1, 1.0, 2.0).is_err());
        assert!(ModelParams::new(0.5, 0.1, -1.0, 2.0).is_err());
        assert!(ModelParams::new(0.5, 0.1, 1.0, 0.0).is_err());
    }
}
