//! Periodic profile utilities: density center of mass (circular mean), rms
//! width, trilinear interpolation with periodic wrap, profile dilation, and
//! lattice shifts. Dilations stay continuous in the scale factor because they
//! resample the trilinear interpolant instead of requiring integer grid
//! ratios.

use num_complex::Complex64;

use crate::grid::{ComplexField, Grid};

/// Center of mass of `|f|^2` per axis, computed as the periodic circular
/// mean, mapped into `[0, L)`.
pub fn center_of_mass(f: &ComplexField) -> [f64; 3] {
    let grid = f.grid();
    let n = grid.n();
    let tau = 2.0 * std::f64::consts::PI / grid.box_length();
    let mut sin = [0.0f64; 3];
    let mut cos = [0.0f64; 3];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let rho = f.values()[grid.idx(i, j, k)].norm_sqr();
                if rho == 0.0 {
                    continue;
                }
                for (axis, &idx) in [i, j, k].iter().enumerate() {
                    let theta = tau * grid.coord(idx);
                    sin[axis] += rho * theta.sin();
                    cos[axis] += rho * theta.cos();
                }
            }
        }
    }
    let mut com = [0.0f64; 3];
    for axis in 0..3 {
        let mut x = sin[axis].atan2(cos[axis]) / tau;
        if x < 0.0 {
            x += grid.box_length();
        }
        com[axis] = x;
    }
    com
}

/// Minimal-image displacement `a - b` on the periodic axis of length `l`,
/// in `[-l/2, l/2)`.
pub fn wrap_displacement(a: f64, b: f64, l: f64) -> f64 {
    let mut d = (a - b) % l;
    if d < -0.5 * l {
        d += l;
    } else if d >= 0.5 * l {
        d -= l;
    }
    d
}

/// Root-mean-square radius of `|f|^2` about its center of mass, with
/// minimal-image distances.
pub fn rms_width(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let l = grid.box_length();
    let com = center_of_mass(f);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let dz = wrap_displacement(grid.coord(k), com[2], l);
        for j in 0..n {
            let dy = wrap_displacement(grid.coord(j), com[1], l);
            for i in 0..n {
                let dx = wrap_displacement(grid.coord(i), com[0], l);
                let rho = f.values()[grid.idx(i, j, k)].norm_sqr();
                num += rho * (dx * dx + dy * dy + dz * dz);
                den += rho;
            }
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Radius of the minimal-image ball about the center of mass that encloses
/// half of the total mass. Unlike the rms radius this is core-dominated and
/// insensitive to slowly decaying tails wrapping around the box, which makes
/// it the right width measure for resolution guards and box policies.
pub fn half_mass_radius(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let l = grid.box_length();
    let com = center_of_mass(f);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(grid.points());
    let mut total = 0.0;
    for k in 0..n {
        let dz = wrap_displacement(grid.coord(k), com[2], l);
        for j in 0..n {
            let dy = wrap_displacement(grid.coord(j), com[1], l);
            for i in 0..n {
                let dx = wrap_displacement(grid.coord(i), com[0], l);
                let rho = f.values()[grid.idx(i, j, k)].norm_sqr();
                total += rho;
                samples.push((dx * dx + dy * dy + dz * dz, rho));
            }
        }
    }
    if total == 0.0 {
        return 0.0;
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut acc = 0.0;
    for (d2, rho) in samples {
        acc += rho;
        if acc >= 0.5 * total {
            return d2.sqrt();
        }
    }
    0.0
}

/// Trilinear sample of `f` at an arbitrary point with periodic wrap.
pub fn trilinear(f: &ComplexField, p: [f64; 3]) -> Complex64 {
    let grid = f.grid();
    let n = grid.n() as i64;
    let h = grid.spacing();
    let l = grid.box_length();

    let mut base = [0i64; 3];
    let mut frac = [0.0f64; 3];
    for axis in 0..3 {
        let mut x = p[axis] % l;
        if x < 0.0 {
            x += l;
        }
        let u = x / h;
        let b = u.floor();
        base[axis] = b as i64;
        frac[axis] = u - b;
    }

    let mut acc = Complex64::new(0.0, 0.0);
    for dz in 0..2i64 {
        let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
        let kz = ((base[2] + dz) % n + n) % n;
        for dy in 0..2i64 {
            let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
            let ky = ((base[1] + dy) % n + n) % n;
            for dx in 0..2i64 {
                let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
                let kx = ((base[0] + dx) % n + n) % n;
                let w = wx * wy * wz;
                if w != 0.0 {
                    acc += f.values()[grid.idx(kx as usize, ky as usize, kz as usize)] * w;
                }
            }
        }
    }
    acc
}

/// Unitary dilation about the box center: `out(x) = lambda^{3/2} f(c + lambda (x - c))`,
/// realized by trilinear resampling on the same grid.
pub fn rescale_profile(f: &ComplexField, lambda: f64) -> ComplexField {
    let grid = f.grid();
    let c = grid.center();
    let amp = lambda.powf(1.5);
    sample_on(grid, |x, y, z| {
        trilinear(
            f,
            [c + lambda * (x - c), c + lambda * (y - c), c + lambda * (z - c)],
        ) * amp
    })
}

/// Samples a closure over a grid (row-major).
pub fn sample_on(grid: Grid, mut f: impl FnMut(f64, f64, f64) -> Complex64) -> ComplexField {
    ComplexField::from_fn(grid, move |x, y, z| f(x, y, z))
}

/// Integer circular shift: `out[(i + di) mod n, ...] = f[i, ...]`.
pub fn shift_lattice(f: &ComplexField, shift: [i64; 3]) -> ComplexField {
    let grid = f.grid();
    let n = grid.n() as i64;
    let mut out = ComplexField::zeros(grid);
    let wrap = |i: i64, d: i64| -> usize { (((i + d) % n + n) % n) as usize };
    for k in 0..grid.n() {
        for j in 0..grid.n() {
            for i in 0..grid.n() {
                let dst = grid.idx(
                    wrap(i as i64, shift[0]),
                    wrap(j as i64, shift[1]),
                    wrap(k as i64, shift[2]),
                );
                out.values_mut()[dst] = f.values()[grid.idx(i, j, k)];
            }
        }
    }
    out
}
