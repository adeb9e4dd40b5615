//! The constrained energy functional, its Euler-Lagrange operator, and the
//! diagnostic functionals (Lagrange multiplier, interpolation-inequality
//! ratio, dilation identities, test-function energies).
//!
//! With `rho = |phi|^2` and kernels `K_theta = |x|^-theta`,
//!
//! ```text
//! E_beta(phi) = 1/2 <phi, sqrt(-lap + m^2) phi>
//!             - 1/4 int (K_1 * rho) rho
//!             + beta/4 int (K_alpha * rho) rho,
//! ```
//!
//! and the EL operator is
//! `H[phi] = sqrt(-lap + m^2) phi + ((beta K_alpha - K_1) * rho) phi`,
//! which is exactly the real Frechet gradient of `E_beta`:
//! `d/de E(phi + e h) = Re <H[phi], h>`.
//!
//! Quadratic and quartic forms are evaluated in spectral space (Parseval), so
//! a full breakdown costs two forward transforms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{mass, ComplexField, Grid, ModelParams};
use crate::resample::{half_mass_radius, rescale_profile};
use crate::spectral::{
    inverse_massless_multiplier, massless_multiplier, relativistic_multiplier, riesz_kernel,
    Multiplier, RieszKernel,
};

/// Term-by-term energy decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `1/2 <phi, sqrt(-lap + m^2) phi>`
    pub kinetic: f64,
    /// `1/4 int (|x|^-1 * rho) rho`
    pub coulomb: f64,
    /// `1/4 int (|x|^-alpha * rho) rho`
    pub riesz_alpha: f64,
    /// `kinetic - coulomb + beta * riesz_alpha`
    pub total: f64,
    /// `<phi, sqrt(-lap) phi>` (no 1/2 factor)
    pub massless_kinetic: f64,
    /// `<phi, (-lap)^{-1/2} phi>`, zero mode excluded
    pub inv_kinetic: f64,
}

/// Grid-bound multipliers and kernels for one parameter set; build once per
/// solver run, reuse across evaluations.
pub struct Operators {
    grid: Grid,
    pub(crate) mass_m: f64,
    pub(crate) alpha: f64,
    pub(crate) relativistic: Multiplier,
    pub(crate) massless: Multiplier,
    pub(crate) inv_massless: Multiplier,
    pub(crate) coulomb: RieszKernel,
    pub(crate) riesz: RieszKernel,
}

impl Operators {
    pub fn new(grid: Grid, params: &ModelParams) -> Result<Self> {
        Ok(Operators {
            grid,
            mass_m: params.mass_m,
            alpha: params.alpha,
            relativistic: relativistic_multiplier(grid, params.mass_m),
            massless: massless_multiplier(grid),
            inv_massless: inverse_massless_multiplier(grid),
            coulomb: riesz_kernel(grid, 1.0)?,
            riesz: riesz_kernel(grid, params.alpha)?,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn check(&self, phi: &ComplexField, params: &ModelParams) -> Result<()> {
        if phi.grid() != self.grid {
            return Err(Error::GridMismatch("field grid differs from operator grid".into()));
        }
        if params.mass_m != self.mass_m || params.alpha != self.alpha {
            return Err(Error::InvalidParameter(
                "operators were built for different (m, alpha)".into(),
            ));
        }
        Ok(())
    }
}

/// Forward spectra of a field and its density; enough to assemble both the
/// energy and the EL operator.
pub(crate) struct FieldSpectra {
    pub phi_hat: Vec<Complex64>,
    pub rho: Vec<f64>,
    pub rho_hat: Vec<Complex64>,
}

/// `w/n^3 * sum_k M_k |v_k|^2` (the quadratic form `<f, M f>` by Parseval).
fn quad_form(grid: Grid, hat: &[Complex64], mult: &Multiplier) -> f64 {
    let scale = grid.weight() / grid.points() as f64;
    let mut acc = 0.0;
    for (m, v) in mult.values().iter().zip(hat) {
        acc += m * v.norm_sqr();
    }
    acc * scale
}

pub(crate) fn eval_energy(
    ops: &Operators,
    phi: &ComplexField,
    params: &ModelParams,
) -> Result<(EnergyBreakdown, FieldSpectra)> {
    ops.check(phi, params)?;
    let grid = ops.grid;
    let fft = Fft3::new(grid.n());

    let mut phi_hat = phi.values().to_vec();
    fft.forward(&mut phi_hat);

    let rho: Vec<f64> = phi.values().iter().map(|v| v.norm_sqr()).collect();
    let mut rho_hat: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    fft.forward(&mut rho_hat);

    let kinetic = 0.5 * quad_form(grid, &phi_hat, &ops.relativistic);
    let massless_kinetic = quad_form(grid, &phi_hat, &ops.massless);
    let inv_kinetic = quad_form(grid, &phi_hat, &ops.inv_massless);
    let coulomb = 0.25 * quad_form(grid, &rho_hat, ops.coulomb.multiplier());
    let riesz_alpha = 0.25 * quad_form(grid, &rho_hat, ops.riesz.multiplier());
    let total = kinetic - coulomb + params.beta * riesz_alpha;

    Ok((
        EnergyBreakdown {
            kinetic,
            coulomb,
            riesz_alpha,
            total,
            massless_kinetic,
            inv_kinetic,
        },
        FieldSpectra { phi_hat, rho, rho_hat },
    ))
}

/// Assembles `H[phi]` from precomputed spectra (two inverse transforms).
pub(crate) fn el_from_spectra(
    ops: &Operators,
    phi: &ComplexField,
    spectra: &FieldSpectra,
    beta: f64,
) -> ComplexField {
    let grid = ops.grid;
    let fft = Fft3::new(grid.n());

    let mut kin = spectra.phi_hat.clone();
    for (v, m) in kin.iter_mut().zip(ops.relativistic.values()) {
        *v *= *m;
    }
    fft.inverse(&mut kin);

    let mut pot_hat = spectra.rho_hat.clone();
    for ((v, ka), k1) in pot_hat
        .iter_mut()
        .zip(ops.riesz.multiplier().values())
        .zip(ops.coulomb.multiplier().values())
    {
        *v *= beta * ka - k1;
    }
    fft.inverse(&mut pot_hat);

    let values: Vec<Complex64> = kin
        .iter()
        .zip(pot_hat.iter())
        .zip(phi.values())
        .map(|((t, v), p)| t + p * v.re)
        .collect();
    ComplexField::from_values(grid, values).expect("length preserved")
}

/// Full energy breakdown of a field.
pub fn energy(phi: &ComplexField, params: &ModelParams) -> Result<EnergyBreakdown> {
    let ops = Operators::new(phi.grid(), params)?;
    Ok(eval_energy(&ops, phi, params)?.0)
}

/// The Euler-Lagrange operator
/// `H[phi] = sqrt(-lap + m^2) phi + ((beta |x|^-alpha - |x|^-1) * |phi|^2) phi`.
pub fn el_operator(phi: &ComplexField, params: &ModelParams) -> Result<ComplexField> {
    let ops = Operators::new(phi.grid(), params)?;
    let (_, spectra) = eval_energy(&ops, phi, params)?;
    Ok(el_from_spectra(&ops, phi, &spectra, params.beta))
}

/// Both evaluations of the Lagrange multiplier and their discrepancy.
#[derive(Debug, Clone, Copy)]
pub struct MultiplierReport {
    /// `Re <phi, H[phi]> / mass(phi)`
    pub mu_proj: f64,
    /// `(2 E - C4/2 + beta R4/2) / mass(phi)` with `C4`, `R4` the Coulomb and
    /// Riesz quadruple integrals (the identity obtained by pairing the EL
    /// equation with `phi`)
    pub mu_formula: f64,
    pub discrepancy: f64,
}

/// Evaluates the Lagrange multiplier two ways. `e_value` is the energy to use
/// in the closed formula (normally `energy(phi, params).total`).
pub fn lagrange_multiplier(
    phi: &ComplexField,
    params: &ModelParams,
    e_value: f64,
) -> Result<MultiplierReport> {
    let m = mass(phi);
    if m <= 0.0 {
        return Err(Error::ZeroField("lagrange_multiplier"));
    }
    let ops = Operators::new(phi.grid(), params)?;
    let (bd, spectra) = eval_energy(&ops, phi, params)?;
    let h = el_from_spectra(&ops, phi, &spectra, params.beta);
    let mut proj = 0.0;
    for (p, hv) in phi.values().iter().zip(h.values()) {
        proj += (p.conj() * hv).re;
    }
    proj *= phi.grid().weight() / m;

    let c4 = 4.0 * bd.coulomb;
    let r4 = 4.0 * bd.riesz_alpha;
    let formula = (2.0 * e_value - 0.5 * c4 + 0.5 * params.beta * r4) / m;

    Ok(MultiplierReport {
        mu_proj: proj,
        mu_formula: formula,
        discrepancy: (proj - formula).abs(),
    })
}

/// Coulomb quadruple integral `int (|x|^-1 * |phi|^2) |phi|^2`.
pub fn coulomb_quadruple(phi: &ComplexField) -> Result<f64> {
    let grid = phi.grid();
    let kernel = riesz_kernel(grid, 1.0)?;
    quartic(grid, phi, &kernel)
}

/// Riesz quadruple integral `int (|x|^-alpha * |phi|^2) |phi|^2`.
pub fn riesz_quadruple(phi: &ComplexField, alpha: f64) -> Result<f64> {
    let grid = phi.grid();
    let kernel = riesz_kernel(grid, alpha)?;
    quartic(grid, phi, &kernel)
}

fn quartic(grid: Grid, phi: &ComplexField, kernel: &RieszKernel) -> Result<f64> {
    let fft = Fft3::new(grid.n());
    let mut rho_hat: Vec<Complex64> = phi
        .values()
        .iter()
        .map(|v| Complex64::new(v.norm_sqr(), 0.0))
        .collect();
    fft.forward(&mut rho_hat);
    Ok(quad_form(grid, &rho_hat, kernel.multiplier()))
}

/// The scale-invariant interpolation ratio
/// `J(psi) = <psi, sqrt(-lap) psi> <psi, psi> / int (|x|^-1 * |psi|^2)|psi|^2`.
/// Its infimum over nonzero fields is `N_c / 2`.
pub fn gn_ratio(psi: &ComplexField) -> Result<f64> {
    let m = mass(psi);
    if m <= 0.0 {
        return Err(Error::ZeroField("gn_ratio"));
    }
    let grid = psi.grid();
    let fft = Fft3::new(grid.n());
    let mut
        phi_hat = psi.values().to_vec();
    fft.forward(&mut phi_hat);
    let a = quad_form(grid, &phi_hat, &massless_multiplier(grid));
    let c4 = coulomb_quadruple(psi)?;
    if c4 <= 0.0 {
        return Err(Error::ZeroField("gn_ratio: vanishing Coulomb interaction"));
    }
    Ok(a * m / c4)
}

/// The three dilation-identity ratios of an optimizer candidate; all equal 1
/// for the exact optimizer.
#[derive(Debug, Clone, Copy)]
pub struct PohozaevReport {
    /// `<Q, sqrt(-lap) Q> / int |Q|^2`
    pub r1: f64,
    /// `int (|x|^-1 * |Q|^2)|Q|^2 / (2 int |Q|^2)`
    pub r2: f64,
    /// `<Q, sqrt(-lap) Q> / (int (|x|^-1 * |Q|^2)|Q|^2 / 2)`
    pub r3: f64,
}

pub fn pohozaev_report(q: &ComplexField) -> Result<PohozaevReport> {
    let m = mass(q);
    if m <= 0.0 {
        return Err(Error::ZeroField("pohozaev_report"));
    }
    let grid = q.grid();
    let fft = Fft3::new(grid.n());
    let mut q_hat = q.values().to_vec();
    fft.forward(&mut q_hat);
    let a = quad_form(grid, &q_hat, &massless_multiplier(grid));
    let c4 = coulomb_quadruple(q)?;
    Ok(PohozaevReport {
        r1: a / m,
        r2: c4 / (2.0 * m),
        r3: a / (0.5 * c4),
    })
}

/// Evaluates `E_beta(sqrt(N/N_c) Q^lambda)` with `Q^lambda = lambda^{3/2} Q(lambda x)`
/// realized by trilinear profile rescaling about the box center.
///
/// At `m = 0`, `N = N_c` the dilation identities cancel the kinetic and
/// Coulomb terms, leaving `(beta lambda^alpha / 4) int (|x|^-alpha * |Q|^2)|Q|^2`.
pub fn test_function_energy(
    lambda: f64,
    params: &ModelParams,
    q_field: &ComplexField,
) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let grid = q_field.grid();
    let width = half_mass_radius(q_field);
    let scaled_width = width / lambda;
    let (min_w, max_w) = (4.0 * grid.spacing(), grid.box_length() / 4.0);
    if scaled_width < min_w || scaled_width > max_w {
        return Err(Error::ResolutionGuard {
            width: scaled_width,
            min: min_w,
            max: max_w,
            spacing: grid.spacing(),
        });
    }
    let m_q = mass(q_field);
    if m_q <= 0.0 {
        return Err(Error::ZeroField("test_function_energy"));
    }
    let rescaled = rescale_profile(q_field, lambda);
    let amp = (params.constraint_n / m_q).sqrt();
    let values = rescaled.values().iter().map(|v| v * amp).collect();
    let field = ComplexField::from_values(grid, values)?;
    Ok(energy(&field, params)?.total)
}
