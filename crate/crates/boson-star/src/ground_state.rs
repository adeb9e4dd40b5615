//! Constrained minimizers.
//!
//! `minimize` runs a normalized gradient flow (projected gradient with
//! backtracking) for the mass-constrained energy; explicit steps are stable
//! because the relativistic multiplier is bounded on a fixed grid, with
//! `dt0 = 0.5 / sqrt(xi_max^2 + m^2)` by default. Steps are accepted only if
//! the energy does not increase, so the stored trace is monotone.
//!
//! `compute_q` finds the interpolation-ratio optimizer in three stages:
//! (1) gradient flow on the quotient `J = A M / C` (no mass constraint; `J`
//! is invariant under both amplitude scaling and dilation), (2) a closed-form
//! two-parameter rescale `Q = a psi(b x)` that makes the Euler-Lagrange
//! multiplier exactly -1 and the dilation identity `r1 = 1`, realized exactly
//! by reinterpreting the samples on the box `L/b`, and (3) recentering to the
//! box center with the global phase removed. The critical-mass estimate is
//! `mass(Q) = 2 J(psi)`, refined by a box-doubling study at `(2n, 2L)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::energy::{
    el_from_spectra, eval_energy, EnergyBreakdown, MultiplierReport, Operators, PohozaevReport,
};
use crate::error::Error;
use crate::fft::Fft3;
use crate::grid::{mass, normalize, ComplexField, Grid, ModelParams};
use crate::resample::{center_of_mass, half_mass_radius, shift_lattice, wrap_displacement};
use crate::spectral::{massless_multiplier, riesz_kernel, Multiplier, RieszKernel};

/// Initial state selector.
#[derive(Debug, Clone)]
pub enum Init {
    /// Centered real Gaussian of width `gaussian_width`, normalized to the
    /// target mass, with optional seeded relative noise.
    Gaussian,
    /// Start from a provided field (warm start / loaded from disk).
    Field(ComplexField),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Initial flow step; defaults to `0.5 / sqrt(xi_max^2 + m^2)`.
    pub dt0: Option<f64>,
    /// Relative Euler-Lagrange residual target.
    pub residual_tol: f64,
    pub backtrack_factor: f64,
    pub init: Init,
    pub gaussian_width: f64,
    /// Relative amplitude of seeded Gaussian noise in the initializer.
    pub init_noise: f64,
    pub rng_seed: u64,
    /// Unbounded-below verdict fires when `E < -factor * m * N` ...
    pub energy_floor_factor: f64,
    /// ... and the kinetic term has grown by this factor from the start.
    pub kinetic_growth_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 20_000,
            dt0: None,
            residual_tol: 1e-6,
            backtrack_factor: 0.5,
            init: Init::Gaussian,
            gaussian_width: 2.0,
            init_noise: 0.0,
            rng_seed: 0,
            energy_floor_factor: 10.0,
            kinetic_growth_factor: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

#[derive(Debug)]
pub struct GroundStateResult {
    pub field: ComplexField,
    pub energy: EnergyBreakdown,
    pub mu: MultiplierReport,
    /// `||H[phi] - mu_proj phi||_2 / ||phi||_2`
    pub residual: f64,
    pub iterations: usize,
    pub trace: Trace,
}

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("flow did not reach residual {tol:e} in {iters} iterations (last residual {last:e})")]
    NotConverged {
        tol: f64,
        iters: usize,
        last: f64,
        trace: Trace,
    },
    #[error("energy unbounded below: E = {energy:.6e} under floor {floor:.6e} with kinetic growth x{growth:.1}")]
    UnboundedBelow {
        energy: f64,
        floor: f64,
        growth: f64,
        trace: Trace,
    },
    #[error(transparent)]
    Invalid(#[from] Error),
}

/// Centered real Gaussian `exp(-|x - c|^2 / (2 width^2))` with optional
/// seeded relative noise, normalized to `target_n`.
pub fn gaussian_init(
    grid: Grid,
    width: f64,
    target_n: f64,
    noise: f64,
    seed: u64,
) -> Result<ComplexField, Error> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gaussian width must be positive, got {width}"
        )));
    }
    let c = grid.center();
    let l = grid.box_length();
    let mut field = ComplexField::from_fn(grid, |x, y, z| {
        let d2 = wrap_displacement(x, c, l).powi(2)
            + wrap_displacement(y, c, l).powi(2)
            + wrap_displacement(z, c, l).powi(2);
        Complex64::new((-d2 / (2.0 * width * width)).exp(), 0.0)
    });
    if noise != 0.0 {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::rng::rng_for(seed, "gaussian-init-noise");
        for v in field.values_mut() {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *v *= 1.0 + noise * xi;
        }
    }
    normalize(&field, target_n)
}

/// Removes the component of `g` along `v` (real inner product).
fn project_out(g: &mut [Complex64], v: &[Complex64]) {
    let mut gv = 0.0;
    let mut vv = 0.0;
    for (gi, vi) in g.iter().zip(v) {
        gv += (gi.conj() * vi).re;
        vv += vi.norm_sqr();
    }
    if vv > 0.0 {
        let coef = gv / vv;
        for (gi, vi) in g.iter_mut().zip(v) {
            *gi -= vi * coef;
        }
    }
}

fn l2_norm(grid: Grid, values: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for v in values {
        acc += v.norm_sqr();
    }
    (acc * grid.weight()).sqrt()
}

fn re_inner(grid: Grid, f: &ComplexField, g: &ComplexField) -> f64 {
    let mut acc = 0.0;
    for (a, b) in f.values().iter().zip(g.values()) {
        acc += (a.conj() * b).re;
    }
    acc * grid.weight()
}

/// Normalized gradient flow for `E(beta, N)` at `N = params.constraint_n`.
pub fn minimize(
    params: &ModelParams,
    grid: Grid,
    cfg: &SolverConfig,
) -> Result<GroundStateResult, MinimizeError> {
    if !(cfg.residual_tol > 0.0) || !(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0) {
        return Err(Error::InvalidParameter(
            "solver config requires residual_tol > 0 and backtrack_factor in (0,1)".into(),
        )
        .into());
    }
    let n_target = params.constraint_n;
    let ops = Operators::new(grid, params)?;
    let dt0 = cfg
        .dt0
        .unwrap_or_else(|| 0.5 / (grid.freq_max().powi(2) + params.mass_m.powi(2)).sqrt());
    if !(dt0 > 0.0) {
        return Err(Error::InvalidParameter(format!("dt0 must be positive, got {dt0}")).into());
    }

    let mut phi = match &cfg.init {
        Init::Gaussian => gaussian_init(
            grid,
            cfg.gaussian_width,
            n_target,
            cfg.init_noise,
            cfg.rng_seed,
        )?,
        Init::Field(f) => {
            if f.grid() != grid {
                return Err(Error::GridMismatch("warm-start field grid differs".into()).into());
            }
            normalize(f, n_target)?
        }
    };

    let (mut bd, mut spectra) = eval_energy(&ops, &phi, params)?;
    let kinetic0 = bd.kinetic;
    let floor = -cfg.energy_floor_factor * params.mass_m * n_target;
    let norm_phi = n_target.sqrt();

    let mut dt = dt0;
    let mut trace = Trace::default();
    let dt_floor = dt0 * 1e-12;

    for iter in 0..=cfg.max_iters {
        // EL residual of the current iterate
        let h = el_from_spectra(&ops, &phi, &spectra, params.beta);
        let mu_proj = re_inner(grid, &phi, &h) / n_target;
        let resid_values: Vec<Complex64> = h
            .values()
            .iter()
            .zip(phi.values())
            .map(|(hv, pv)| hv - pv * mu_proj)
            .collect();
        let residual = l2_norm(grid, &resid_values) / norm_phi;
        trace.rows.push(TraceRow {
            iter,
            energy: bd.total,
            residual,
            dt,
        });

        if !bd.total.is_finite() || !residual.is_finite() {
            return Err(MinimizeError::NotConverged {
                tol: cfg.residual_tol,
                iters: iter,
                last: residual,
                trace,
            });
        }

        if residual <= cfg.residual_tol {
            let c4 = 4.0 * bd.coulomb;
            let r4 = 4.0 * bd.riesz_alpha;
            let mu_formula = (2.0 * bd.total - 0.5 * c4 + 0.5 * params.beta * r4) / n_target;
            return Ok(GroundStateResult {
                field: phi,
                energy: bd,
                mu: MultiplierReport {
                    mu_proj,
                    mu_formula,
                    discrepancy: (mu_proj - mu_formula).abs(),
                },
                residual,
                iterations: iter,
                trace,
            });
        }

        if bd.total < floor && bd.kinetic >= cfg.kinetic_growth_factor * kinetic0 {
            return Err(MinimizeError::UnboundedBelow {
                energy: bd.total,
                floor,
                growth: bd.kinetic / kinetic0,
                trace,
            });
        }

        if iter == cfg.max_iters {
            break;
        }

        // backtracking descent step
        let mut accepted = false;
        while dt >= dt_floor {
            let trial_values: Vec<Complex64> = phi
                .values()
                .iter()
                .zip(&resid_values)
                .map(|(pv, rv)| pv - rv * dt)
                .collect();
            let trial = match ComplexField::from_values(grid, trial_values)
                .and_then(|f| normalize(&f, n_target))
            {
                Ok(f) => f,
                Err(_) => {
                    dt *= cfg.backtrack_factor;
                    continue;
                }
            };
            let (bd_t, spectra_t) = eval_energy(&ops, &trial, params)?;
            if bd_t.total.is_finite() && bd_t.total <= bd.total {
                phi = trial;
                bd = bd_t;
                spectra = spectra_t;
                dt = (dt * 1.2).min(dt0);
                accepted = true;
                break;
            }
            dt *= cfg.backtrack_factor;
        }
        if !accepted {
            let last = trace.rows.last().map(|r| r.residual).unwrap_or(f64::NAN);
            return Err(MinimizeError::NotConverged {
                tol: cfg.residual_tol,
                iters: trace.rows.len(),
                last,
                trace,
            });
        }
    }

    let last = trace.rows.last().map(|r| r.residual).unwrap_or(f64::NAN);
    Err(MinimizeError::NotConverged {
        tol: cfg.residual_tol,
        iters: cfg.max_iters,
        last,
        trace,
    })
}

/// Box-doubling refinement record for the critical-mass estimate.
#[derive(Debug, Clone, Copy)]
pub struct BoxStudy {
    pub nc_coarse: f64,
    pub nc_fine: f64,
    /// `|nc_fine - nc_coarse| / nc_fine`
    pub drift: f64,
}

/// The computed optimizer profile and its certificates.
#[derive(Debug)]
pub struct QProfile {
    /// Real positive optimizer, centered, on its own (rescaled) grid.
    pub field: ComplexField,
    /// `mass(field)` on the profile's own grid.
    pub nc: f64,
    pub pohozaev: PohozaevReport,
    pub box_study: BoxStudy,
    pub iterations: usize,
}

/// `(value, error_bar)`: critical mass at the finer resolution, with the
/// absolute box-doubling drift as the error bar.
pub fn estimate_nc(q: &QProfile) -> (f64, f64) {
    (
        q.box_study.nc_fine,
        (q.box_study.nc_fine - q.box_study.nc_coarse).abs(),
    )
}

struct QuotientEval {
    a: f64,
    m: f64,
    c4: f64,
    j: f64,
    psi_hat: Vec<Complex64>,
    rho_hat: Vec<Complex64>,
}

struct QuotientOps {
    grid: Grid,
    massless: Multiplier,
    coulomb: RieszKernel,
}

impl QuotientOps {
    fn new(grid: Grid) -> Result<Self, Error> {
        Ok(QuotientOps {
            grid,
            massless: massless_multiplier(grid),
            coulomb: riesz_kernel(grid, 1.0)?,
        })
    }

    fn eval(&self, psi: &ComplexField) -> QuotientEval {
        let grid = self.grid;
        let fft = Fft3::new(grid.n());
        let mut psi_hat = psi.values().to_vec();
        fft.forward(&mut psi_hat);
        let mut rho_hat: Vec<Complex64> = psi
            .values()
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect();
        fft.forward(&mut rho_hat);

        let scale = grid.weight() / grid.points() as f64;
        let mut a = 0.0;
        for (m, v) in self.massless.values().iter().zip(&psi_hat) {
            a += m * v.norm_sqr();
        }
        a *= scale;
        let mut c4 = 0.0;
        for (m, v) in self.coulomb.multiplier().values().iter().zip(&rho_hat) {
            c4 += m * v.norm_sqr();
        }
        c4 *= scale;
        let m = mass(psi);
        QuotientEval {
            a,
            m,
            c4,
            j: a * m / c4,
            psi_hat,
            rho_hat,
        }
    }

    /// Real gradient of `J`: `dJ[h] = Re<g, h>` with
    /// `g = (2/C) [ M T psi + A psi - (2 A M / C) (K_1 * rho) psi ]`,
    /// with the dilation generator projected out.
    ///
    /// `J` is dilation-invariant in the continuum, but the box breaks the
    /// invariance and turns the width direction into a slow downhill slide
    /// (toward grid-scale spikes on one side and box-filling constants on
    /// the other). Flowing on the quotient modulo the symmetry removes that
    /// scaling drift mode: the gradient is projected orthogonal to
    /// `v = 3/2 psi + (x - c) . grad psi`, the generator of
    /// `lambda^{3/2} psi(lambda x)`.
    fn gradient(&self, psi: &ComplexField, ev: &QuotientEval) -> Vec<Complex64> {
        let grid = self.grid;
        let fft = Fft3::new(grid.n());

        let mut t_psi = ev.psi_hat.clone();
        for (v, m) in t_psi.iter_mut().zip(self.massless.values()) {
            *v *= *m;
        }
        fft.inverse(&mut t_psi);

        let mut pot = ev.rho_hat.clone();
        for (v, m) in pot.iter_mut().zip(self.coulomb.multiplier().values()) {
            *v *= *m;
        }
        fft.inverse(&mut pot);

        let c = 2.0 / ev.c4;
        let vc = 2.0 * ev.a * ev.m / ev.c4;
        let mut g: Vec<Complex64> = t_psi
            .iter()
            .zip(pot.iter())
            .zip(psi.values())
            .map(|((t, v), p)| (t * ev.m + p * ev.a - p * (v.re * vc)) * c)
            .collect();

        let v = self.dilation_generator(psi, &ev.psi_hat);
        project_out(&mut g, &v);
        g
    }

    /// Preconditioned descent direction `d = P^{-1} g` with the diagonal
    /// (Fourier) preconditioner `P = M |xi| + A` (the positive quadratic part
    /// of the quotient's curvature), re-projected so the dilation gauge stays
    /// frozen. Because the gradient is already orthogonal to the generator,
    /// `<g, d> = <g, P^{-1} g> > 0` and `d` is a guaranteed descent direction.
    fn descent_direction(
        &self,
        psi: &ComplexField,
        ev: &QuotientEval,
        g: &[Complex64],
    ) -> Vec<Complex64> {
        let grid = self.grid;
        let fft = Fft3::new(grid.n());
        let mut d = g.to_vec();
        fft.forward(&mut d);
        for (dv, m) in d.iter_mut().zip(self.massless.values()) {
            *dv /= ev.m * m + ev.a;
        }
        fft.inverse(&mut d);
        let v = self.dilation_generator(psi, &ev.psi_hat);
        project_out(&mut d, &v);
        d
    }

    /// `v = 3/2 psi + (x - c) . grad psi` with spectral derivatives and
    /// centered minimal-image coordinates.
    fn dilation_generator(&self, psi: &ComplexField, psi_hat: &[Complex64]) -> Vec<Complex64> {
        let grid = self.grid;
        let n = grid.n();
        let fft = Fft3::new(n);
        let center = grid.center();
        let l = grid.box_length();
        let mut v: Vec<Complex64> = psi.values().iter().map(|p| p * 1.5).collect();

        let mut deriv = vec![Complex64::default(); grid.points()];
        for axis in 0..3 {
            for k in 0..n {
                let fz = grid.freq(k);
                for j in 0..n {
                    let fy = grid.freq(j);
                    for i in 0..n {
                        let f = match axis {
                            0 => grid.freq(i),
                            1 => fy,
                            _ => fz,
                        };
                        let idx = grid.idx(i, j, k);
                        deriv[idx] = psi_hat[idx] * Complex64::new(0.0, f);
                    }
                }
            }
            fft.inverse(&mut deriv);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let coord = match axis {
                            0 => grid.coord(i),
                            1 => grid.coord(j),
                            _ => grid.coord(k),
                        };
                        let x = wrap_displacement(coord, center, l);
                        let idx = grid.idx(i, j, k);
                        v[idx] += deriv[idx] * x;
                    }
                }
            }
        }
        v
    }
}

/// Stage-1 quotient flow; returns the converged field, its evaluation, and
/// the iteration count.
fn quotient_flow(
    grid: Grid,
    cfg: &SolverConfig,
    start: ComplexField,
) -> Result<(ComplexField, QuotientEval, usize), MinimizeError> {
    let ops = QuotientOps::new(grid)?;
    let mut psi = start;
    let mut ev = ops.eval(&psi);

    // for the preconditioned direction the natural step is ~ C/2
    let mut dt_max = 0.5 * ev.c4;
    let mut dt = 0.5 * dt_max;
    let dt_floor_rel = 1e-12;

    for iter in 0..=cfg.max_iters {
        let g = ops.gradient(&psi, &ev);
        let gnorm = l2_norm(grid, &g);
        let res = gnorm * ev.m.sqrt() / ev.j;
        if res <= cfg.residual_tol {
            return Ok((psi, ev, iter));
        }
        if iter == cfg.max_iters {
            break;
        }
        if iter % 25 == 0 {
            // crash guard: the projected flow freezes the width gauge; a
            // profile leaving this corridor is collapsing to a spike or
            // spreading into the box.
            let width = half_mass_radius(&psi);
            if width < 2.0 * grid.spacing() || width > grid.box_length() / 3.0 {
                return Err(Error::ResolutionGuard {
                    width,
                    min: 2.0 * grid.spacing(),
                    max: grid.box_length() / 3.0,
                    spacing: grid.spacing(),
                }
                .into());
            }
        }
        let dir = ops.descent_direction(&psi, &ev, &g);
        let mut accepted = false;
        while dt >= dt_floor_rel * dt_max {
            let trial_values: Vec<Complex64> = psi
                .values()
                .iter()
                .zip(&dir)
                .map(|(p, dv)| p - dv * dt)
                .collect();
            let trial = ComplexField::from_values(grid, trial_values)?;
            let ev_t = ops.eval(&trial);
            if ev_t.j.is_finite() && ev_t.j <= ev.j {
                psi = trial;
                ev = ev_t;
                dt_max = 0.5 * ev.c4;
                dt = (dt * 1.2).min(dt_max);
                accepted = true;
                break;
            }
            dt *= cfg.backtrack_factor;
        }
        if !accepted {
            // quotient flow stagnation
            let res = l2_norm(grid, &ops.gradient(&psi, &ev)) * ev.m.sqrt() / ev.j;
            return Err(MinimizeError::NotConverged {
                tol: cfg.residual_tol,
                iters: iter,
                last: res,
                trace: Trace::default(),
            });
        }
    }
    let res = l2_norm(grid, &ops.gradient(&psi, &ev)) * ev.m.sqrt() / ev.j;
    Err(MinimizeError::NotConverged {
        tol: cfg.residual_tol,
        iters: cfg.max_iters,
        last: res,
        trace: Trace::default(),
    })
}

/// Runs stages 1-3 on one grid. Returns the finished profile, the raw stage-1
/// field (for warm starts), and the iteration count.
fn q_single_grid(
    grid: Grid,
    cfg: &SolverConfig,
    start: ComplexField,
) -> Result<(ComplexField, ComplexField, usize), MinimizeError> {
    let (psi, ev, iters) = quotient_flow(grid, cfg, start)?;

    // Resolution guard on the rescale. width/spacing is invariant under the
    // exact box rescale, so the check on the flow grid covers the output.
    let width = half_mass_radius(&psi);
    let (min_w, max_w) = (4.0 * grid.spacing(), grid.box_length() / 4.0);
    if width < min_w || width > max_w {
        return Err(Error::ResolutionGuard {
            width,
            min: min_w,
            max: max_w,
            spacing: grid.spacing(),
        }
        .into());
    }

    // Stage 2: Q = a psi(b x) with b = M/A and a^2 = 2 M^3 / (C A^2) makes
    // the EL multiplier exactly -1 and the dilation identity r1 = 1.
    let b = ev.m / ev.a;
    let a = (2.0 * ev.m.powi(3) / (ev.c4 * ev.a * ev.a)).sqrt();
    let q_raw = psi.rescaled_box(a, b)?;

    // Stage 3: recenter to the box center and strip the global phase.
    let qgrid = q_raw.grid();
    let com = center_of_mass(&q_raw);
    let target = qgrid.center();
    let shift = [
        (wrap_displacement(target, com[0], qgrid.box_length()) / qgrid.spacing()).round() as i64,
        (wrap_displacement(target, com[1], qgrid.box_length()) / qgrid.spacing()).round() as i64,
        (wrap_displacement(target, com[2], qgrid.box_length()) / qgrid.spacing()).round() as i64,
    ];
    let centered = shift_lattice(&q_raw, shift);
    let phase: Complex64 = centered.values().iter().sum();
    let rot = if phase.norm() > 0.0 {
        Complex64::from_polar(1.0, -phase.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let q = ComplexField::from_values(
        qgrid,
        centered.values().iter().map(|v| v * rot).collect(),
    )?;

    Ok((q, psi, iters))
}

/// Embeds a field into the doubled box `(2n, 2L)` (same spacing), centered.
fn embed_doubled(f: &ComplexField) -> Result<ComplexField, Error> {
    let g = f.grid();
    let n = g.n();
    let big = Grid::new(2 * n, 2.0 * g.box_length())?;
    let mut out = ComplexField::zeros(big);
    let off = n / 2;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let dst = big.idx(i + off, j + off, k + off);
                out.values_mut()[dst] = f.values()[g.idx(i, j, k)];
            }
        }
    }
    Ok(out)
}

/// Computes the optimizer profile with certificates and the box-doubling
/// study.
pub fn compute_q(grid: Grid, cfg: &SolverConfig) -> Result<QProfile, MinimizeError> {
    let start = match &cfg.init {
        Init::Gaussian => {
            gaussian_init(grid, cfg.gaussian_width, 1.0, cfg.init_noise, cfg.rng_seed)?
        }
        Init::Field(f) => {
            if f.grid() != grid {
                return Err(Error::GridMismatch("q start field grid differs".into()).into());
            }
            f.clone()
        }
    };

    let (q_coarse, psi_coarse, iters_coarse) = q_single_grid(grid, cfg, start)?;
    let nc_coarse = mass(&q_coarse);

    // Box-doubling refinement at (2n, 2L), warm-started from the embedded
    // stage-1 field.
    let warm_fine = embed_doubled(&psi_coarse)?;
    let (q_fine, _, iters_fine) = q_single_grid(warm_fine.grid(), cfg, warm_fine)?;
    let nc_fine = mass(&q_fine);

    let pohozaev = crate::energy::pohozaev_report(&q_coarse)?;
    Ok(QProfile {
        field: q_coarse,
        nc: nc_coarse,
        pohozaev,
        box_study: BoxStudy {
            nc_coarse,
            nc_fine,
            drift: (nc_fine - nc_coarse).abs() / nc_fine,
        },
        iterations: iters_coarse + iters_fine,
    })
}
