//! Fourier-multiplier operators and Riesz convolution kernels.
//!
//! The relativistic dispersion `sqrt(-lap + m^2)`, fractional powers of the
//! Laplacian, and the convolutions against `1/|x|^theta` are all realized as
//! real multipliers on the frequency lattice. With the unnormalized-forward /
//! `1/n^3`-inverse transform pair, applying the continuum kernel transform
//! `C(theta)/|xi|^(3-theta)` bin by bin approximates the continuum
//! convolution directly (the `h^3` forward and `n^3/L^3` inverse unit factors
//! cancel). The kernel zero mode is the mean of the kernel truncated to the
//! inscribed ball, `4 pi (L/2)^(3-theta) / (3 - theta)`; it only shifts
//! potentials by a constant times the total mass, and that shift cancels in
//! energy differences of equal-mass fields.
//!
//! A brute-force direct-summation convolution over the same kernel definition
//! serves as the independent verification oracle for small grids.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{check_same_grid, ComplexField, Grid};

/// Real non-negative multiplier sampled over the frequency lattice.
#[derive(Debug, Clone)]
pub struct Multiplier {
    grid: Grid,
    values: Vec<f64>,
}

impl Multiplier {
    /// Builds a multiplier from a function of the frequency vector.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.points());
        for k in 0..n {
            let zk = grid.freq(k);
            for j in 0..n {
                let yj = grid.freq(j);
                for i in 0..n {
                    values.push(f(grid.freq(i), yj, zk));
                }
            }
        }
        Multiplier { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// `sqrt(|xi|^2 + m^2)`; the zero mode equals `m`.
pub fn relativistic_multiplier(grid: Grid, m: f64) -> Multiplier {
    Multiplier::from_fn(grid, |x, y, z| (x * x + y * y + z * z + m * m).sqrt())
}

/// `|xi|` (the massless dispersion `sqrt(-lap)`).
pub fn massless_multiplier(grid: Grid) -> Multiplier {
    relativistic_multiplier(grid, 0.0)
}

/// `1/|xi|` with the zero mode excluded (set to 0).
pub fn inverse_massless_multiplier(grid: Grid) -> Multiplier {
    Multiplier::from_fn(grid, |x, y, z| {
        let q2 = x * x + y * y + z * z;
        if q2 == 0.0 {
            0.0
        } else {
            1.0 / q2.sqrt()
        }
    })
}

/// `(1 + |xi|^2)^(1/4)`, the discrete H^{1/2} weight.
pub fn h_half_multiplier(grid: Grid) -> Multiplier {
    Multiplier::from_fn(grid, |x, y, z| (1.0 + x * x + y * y + z * z).powf(0.25))
}

/// Applies a real multiplier: `inverse_fft(mult * forward_fft(f))`.
pub fn apply_multiplier(mult: &Multiplier, f: &ComplexField) -> Result<ComplexField> {
    if mult.grid() != f.grid() {
        return Err(Error::GridMismatch(format!(
            "multiplier on ({}, {}), field on ({}, {})",
            mult.grid().n(),
            mult.grid().box_length(),
            f.grid().n(),
            f.grid().box_length()
        )));
    }
    let fft = Fft3::new(f.grid().n());
    let mut buf = f.values().to_vec();
    fft.forward(&mut buf);
    for (v, m) in buf.iter_mut().zip(mult.values()) {
        *v *= *m;
    }
    fft.inverse(&mut buf);
    ComplexField::from_values(f.grid(), buf)
}

/// Continuum Fourier transform constant of `|x|^-theta` in 3D:
/// `C(theta) = 2^(3-theta) pi^(3/2) Gamma((3-theta)/2) / Gamma(theta/2)`.
pub fn riesz_constant(theta: f64) -> f64 {
    2f64.powf(3.0 - theta) * std::f64::consts::PI.powf(1.5) * gamma((3.0 - theta) / 2.0)
        / gamma(theta / 2.0)
}

/// Spectral realization of convolution against `1/|x|^theta`.
#[derive(Debug, Clone)]
pub struct RieszKernel {
    theta: f64,
    multiplier: Multiplier,
}

impl RieszKernel {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }
}

/// Builds the Riesz kernel for `theta` in (0, 2) on the given grid.
pub fn riesz_kernel(grid: Grid, theta: f64) -> Result<RieszKernel> {
    if !(theta > 0.0 && theta < 2.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let c = riesz_constant(theta);
    let l = grid.box_length();
    let zero_mode = 4.0 * std::f64::consts::PI * (0.5 * l).powf(3.0 - theta) / (3.0 - theta);
    let multiplier = Multiplier::from_fn(grid, |x, y, z| {
        let q2 = x * x + y * y + z * z;
        if q2 == 0.0 {
            zero_mode
        } else {
            c / q2.powf(0.5 * (3.0 - theta))
        }
    });
    Ok(RieszKernel { theta, multiplier })
}

/// Maximum imaginary residue tolerated in a "real" density, relative to the
/// largest sample magnitude.
const REAL_TOLERANCE: f64 = 1e-12;

/// Periodic convolution of a real density against the Riesz kernel via the
/// transform path. The imaginary residue of the output is checked and
/// discarded.
pub fn convolve_riesz(kernel: &RieszKernel, rho: &ComplexField) -> Result<ComplexField> {
    if kernel.multiplier.grid() != rho.grid() {
        return Err(Error::GridMismatch("kernel grid differs from density grid".into()));
    }
    let scale = rho.max_abs();
    let max_imag = rho.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if scale > 0.0 && max_imag > REAL_TOLERANCE * scale {
        return Err(Error::ComplexDensity {
            max_imag,
            limit: REAL_TOLERANCE * scale,
        });
    }
    let real: Vec<f64> = rho.values().iter().map(|v| v.re).collect();
    let out = convolve_real(kernel, rho.grid(), &real);
    ComplexField::from_values(
        rho.grid(),
        out.into_iter().map(|r| Complex64::new(r, 0.0)).collect(),
    )
}

/// Transform-path convolution on a plain real density. Internal fast path;
/// the imaginary residue of the inverse transform is discarded.
pub(crate) fn convolve_real(kernel: &RieszKernel, grid: Grid, rho: &[f64]) -> Vec<f64> {
    let fft = Fft3::new(grid.n());
    let mut buf: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    fft.forward(&mut buf);
    for (v, m) in buf.iter_mut().zip(kernel.multiplier.values()) {
        *v *= *m;
    }
    fft.inverse(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

/// Largest grid accepted by the O(N^2) direct-summation oracle.
pub const ORACLE_MAX_N: usize = 16;

/// Independent direct-summation convolution path.
///
/// Tabulates the periodic kernel once as the inverse transform of the
/// multiplier, evaluated by explicit summation over frequency bins, then
/// performs the cyclic convolution `out(x) = w * sum_y K(x - y) rho(y)` by
/// direct summation. Shares only the kernel definition with the transform
/// path.
pub fn direct_convolution_oracle(theta: f64, rho: &ComplexField) -> Result<ComplexField> {
    let grid = rho.grid();
    let n = grid.n();
    if n > ORACLE_MAX_N {
        return Err(Error::GridTooLarge { n, limit: ORACLE_MAX_N });
    }
    let kernel = riesz_kernel(grid, theta)?;

    let scale = rho.max_abs();
    let max_imag = rho.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if scale > 0.0 && max_imag > REAL_TOLERANCE * scale {
        return Err(Error::ComplexDensity {
            max_imag,
            limit: REAL_TOLERANCE * scale,
        });
    }

    // Kernel tabulation K(x_j) = (1/L^3) sum_k M_k cos(xi_k . x_j); the sine
    // part cancels because the multiplier is even on the lattice.
    let mut tab = vec![0.0f64; grid.points()];
    let inv_vol = 1.0 / grid.box_length().powi(3);
    let mvals = kernel.multiplier.values();
    for kz in 0..n {
        for ky in 0..n {
            for kx in 0..n {
                let m = mvals[grid.idx(kx, ky, kz)];
                if m == 0.0 {
                    continue;
                }
                let (fx, fy, fz) = (grid.freq(kx), grid.freq(ky), grid.freq(kz));
                for jz in 0..n {
                    let pz = fz * grid.coord(jz);
                    for jy in 0..n {
                        let pyz = pz + fy * grid.coord(jy);
                        for jx in 0..n {
                            let phase = pyz + fx * grid.coord(jx);
                            tab[grid.idx(jx, jy, jz)] += m * phase.cos();
                        }
                    }
                }
            }
        }
    }
    for t in tab.iter_mut() {
        *t *= inv_vol;
    }

    // Direct cyclic convolution.
    let w = grid.weight();
    let mut out = vec![0.0f64; grid.points()];
    for oz in 0..n {
        for oy in 0..n {
            for ox in 0..n {
                let mut acc = 0.0;
                for sz in 0..n {
                    let dz = (oz + n - sz) % n;
                    for sy in 0..n {
                        let dy = (oy + n - sy) % n;
                        for sx in 0..n {
                            let dx = (ox + n - sx) % n;
                            acc += tab[grid.idx(dx, dy, dz)] * rho.values()[grid.idx(sx, sy, sz)].re;
                        }
                    }
                }
                out[grid.idx(ox, oy, oz)] = acc * w;
            }
        }
    }

    ComplexField::from_values(
        grid,
        out.into_iter().map(|r| Complex64::new(r, 0.0)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, mass};
    use rand::Rng;

    fn random_real_field(grid: Grid, seed: u64) -> ComplexField {
        let mut rng = crate::rng::rng_for(seed, "spectral-test");
        ComplexField::from_values(
            grid,
            (0..grid.points())
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0))
                .collect(),
        )
        .unwrap()
    }

    fn random_complex_field(grid: Grid, seed: u64) -> ComplexField {
        let mut rng = crate::rng::rng_for(seed, "spectral-test-c");
        ComplexField::from_values(
            grid,
            (0..grid.points())
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn relativistic_zero_mode_is_m() {
        let grid = Grid::new(8, 5.0).unwrap();
        assert_eq!(relativistic_multiplier(grid, 0.0).values()[0], 0.0);
        assert_eq!(relativistic_multiplier(grid, 1.0).values()[0], 1.0);
    }

    #[test]
    fn relativistic_minus_massless_bounded_by_inverse() {
        // sqrt(q^2 + m^2) - q <= m^2 / (2 q) on every nonzero lattice mode.
        let grid = Grid::new(16, 7.3).unwrap();
        let m = 1.7;
        let rel = relativistic_multiplier(grid, m);
        let lap = massless_multiplier(grid);
        for (a, b) in rel.values().iter().zip(lap.values()) {
            if *b == 0.0 {
                continue;
            }
            assert!(a - b <= m * m / (2.0 * b) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn plane_wave_is_an_eigenfunction() {
        let grid = Grid::new(8, 4.0).unwrap();
        let m = 0.8;
        let mult = relativistic_multiplier(grid, m);
        // every lattice frequency
        for bz in 0..8 {
            for by in 0..8 {
                for bx in 0..8 {
                    let (fx, fy, fz) = (grid.freq(bx), grid.freq(by), grid.freq(bz));
                    let wave = ComplexField::from_fn(grid, |x, y, z| {
                        Complex64::from_polar(1.0, fx * x + fy * y + fz * z)
                    });
                    let out = apply_multiplier(&mult, &wave).unwrap();
                    let lambda = (fx * fx + fy * fy + fz * fz + m * m).sqrt();
                    for (o, v) in out.values().iter().zip(wave.values()) {
                        assert!((o - v * lambda).norm() <= 1e-12 * lambda.max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn identity_multiplier_is_identity() {
        let grid = Grid::new(8, 2.0).unwrap();
        let ident = Multiplier::from_fn(grid, |_, _, _| 1.0);
        let f = random_complex_field(grid, 3);
        let out = apply_multiplier(&ident, &f).unwrap();
        let scale = f.max_abs();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn multiplier_is_self_adjoint() {
        let grid = Grid::new(8, 3.0).unwrap();
        let mult = relativistic_multiplier(grid, 0.5);
        let f = random_complex_field(grid, 11);
        let g = random_complex_field(grid, 12);
        let lhs = inner(&f, &apply_multiplier(&mult, &g).unwrap()).unwrap();
        let rhs = inner(&apply_multiplier(&mult, &f).unwrap(), &g).unwrap();
        let scale = mass(&f).sqrt() * mass(&g).sqrt() * mult.max_value();
        assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn riesz_theta_one_is_coulomb() {
        let grid = Grid::new(8, 6.0).unwrap();
        let kernel = riesz_kernel(grid, 1.0).unwrap();
        for kz in 0..8 {
            for ky in 0..8 {
                for kx in 0..8 {
                    let q2 = grid.freq(kx).powi(2) + grid.freq(ky).powi(2) + grid.freq(kz).powi(2);
                    if q2 == 0.0 {
                        continue;
                    }
                    let expect = 4.0 * std::f64::consts::PI / q2;
                    let got = kernel.multiplier().values()[grid.idx(kx, ky, kz)];
                    assert!((got - expect).abs() <= 1e-12 * expect);
                }
            }
        }
        assert!(riesz_kernel(grid, 0.0).is_err());
        assert!(riesz_kernel(grid, 2.0).is_err());
    }

    #[test]
    fn riesz_multiplier_reflection_symmetric() {
        let grid = Grid::new(8, 2.5).unwrap();
        let kernel = riesz_kernel(grid, 0.5).unwrap();
        let n = 8usize;
        let refl = |i: usize| (n - i) % n;
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    let a = kernel.multiplier().values()[grid.idx(kx, ky, kz)];
                    let b = kernel.multiplier().values()[grid.idx(refl(kx), refl(ky), refl(kz))];
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn convolve_rejects_complex_density() {
        let grid = Grid::new(8, 2.0).unwrap();
        let kernel = riesz_kernel(grid, 1.0).unwrap();
        let f = random_complex_field(grid, 4);
        assert!(matches!(
            convolve_riesz(&kernel, &f),
            Err(Error::ComplexDensity { .. })
        ));
    }

    #[test]
    fn convolve_zero_is_zero_and_symmetry_preserved() {
        let grid = Grid::new(8, 2.0).unwrap();
        let kernel = riesz_kernel(grid, 0.7).unwrap();
        let zero = ComplexField::zeros(grid);
        let out = convolve_riesz(&kernel, &zero).unwrap();
        assert!(out.values().iter().all(|v| v.norm() == 0.0));

        // even density about the box center stays even
        let c = grid.center();
        let even = ComplexField::from_fn(grid, |x, y, z| {
            let d2 = (x - c).powi(2) + (y - c).powi(2) + (z - c).powi(2);
            Complex64::new((-d2).exp(), 0.0)
        });
        let out = convolve_riesz(&kernel, &even).unwrap();
        let n = grid.n();
        let refl = |i: usize| (n - i) % n;
        let scale = out.max_abs();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    // evenness about the center index n/2 maps i -> n - i mod n
                    let a = out.values()[grid.idx(i, j, k)];
                    let b = out.values()[grid.idx(refl(i), refl(j), refl(k))];
                    assert!((a - b).norm() <= 1e-11 * scale);
                }
            }
        }
    }

    #[test]
    fn oracle_delta_reproduces_kernel_tabulation() {
        let grid = Grid::new(8, 2.0).unwrap();
        let mut delta = ComplexField::zeros(grid);
        delta.values_mut()[grid.idx(2, 5, 1)] = Complex64::new(1.0, 0.0);
        let out = direct_convolution_oracle(1.0, &delta).unwrap();
        // convolving the shifted delta must agree with the FFT path
        let kernel = riesz_kernel(grid, 1.0).unwrap();
        let fast = convolve_riesz(&kernel, &delta).unwrap();
        let scale = fast.max_abs();
        for (a, b) in out.values().iter().zip(fast.values()) {
            assert!((a - b).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn oracle_is_linear() {
        let grid = Grid::new(8, 3.0).unwrap();
        let r1 = random_real_field(grid, 21);
        let r2 = random_real_field(grid, 22);
        let sum = ComplexField::from_values(
            grid,
            r1.values().iter().zip(r2.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let o1 = direct_convolution_oracle(0.5, &r1).unwrap();
        let o2 = direct_convolution_oracle(0.5, &r2).unwrap();
        let os = direct_convolution_oracle(0.5, &sum).unwrap();
        let scale = os.max_abs();
        for ((a, b), s) in o1.values().iter().zip(o2.values()).zip(os.values()) {
            assert!((a + b - s).norm() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn fft_and_direct_paths_agree() {
        for (seed, theta) in [(31u64, 0.5), (32, 1.0), (33, 1.5)] {
            let grid = Grid::new(8, 2.7).unwrap();
            let rho = random_real_field(grid, seed);
            let kernel = riesz_kernel(grid, theta).unwrap();
            let fast = convolve_riesz(&kernel, &rho).unwrap();
            let slow = direct_convolution_oracle(theta, &rho).unwrap();
            let scale = fast.max_abs();
            for (a, b) in fast.values().iter().zip(slow.values()) {
                assert!((a - b).norm() <= 1e-10 * scale, "theta {theta}");
            }
        }
    }

    #[test]
    fn oracle_rejects_large_grids() {
        let grid = Grid::new(32, 2.0).unwrap();
        let rho = ComplexField::zeros(grid);
        assert!(matches!(
            direct_convolution_oracle(1.0, &rho),
            Err(Error::GridTooLarge { .. })
        ));
    }
}
