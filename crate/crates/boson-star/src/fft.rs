//! In-place 3D FFT over row-major cubes, built on per-length cached plans.
//!
//! Forward is the plain unnormalized sum, inverse carries `1/n^3`. Lines are
//! transformed axis by axis; the y and z passes move each slab through a
//! small transpose buffer so every 1D transform runs on contiguous data.
//! Line batches are distributed with rayon; each task writes a disjoint
//! region, so results are bitwise independent of the thread schedule.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

static PLAN_CACHE: Lazy<Mutex<HashMap<usize, Plans>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plans_for(n: usize) -> Plans {
    let mut cache = PLAN_CACHE.lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

/// 3D transform handle for an `n x n x n` cube.
pub struct Fft3 {
    n: usize,
    plans: Plans,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        Fft3 { n, plans: plans_for(n) }
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n * self.n);
        self.pass_x(data, true);
        self.pass_y(data, true);
        self.pass_z(data, true);
    }

    /// Inverse transform with `1/n^3` normalization, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n * self.n);
        self.pass_x(data, false);
        self.pass_y(data, false);
        self.pass_z(data, false);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        data.par_chunks_mut(self.n * self.n).for_each(|chunk| {
            for v in chunk {
                *v *= scale;
            }
        });
    }

    fn fft(&self, forward: bool) -> &Arc<dyn Fft<f64>> {
        if forward {
            &self.plans.forward
        } else {
            &self.plans.inverse
        }
    }

    /// x-lines are contiguous rows of length n.
    fn pass_x(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let fft = self.fft(forward);
        data.par_chunks_mut(n * n).for_each_init(
            || vec![Complex64::default(); fft.get_inplace_scratch_len()],
            |scratch, plane| {
                for row in plane.chunks_mut(n) {
                    fft.process_with_scratch(row, scratch);
                }
            },
        );
    }

    /// y-lines are columns within each contiguous z-plane; transpose the
    /// plane, transform rows, transpose back.
    fn pass_y(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let fft = self.fft(forward);
        data.par_chunks_mut(n * n).for_each_init(
            || {
                (
                    vec![Complex64::default(); n * n],
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), plane| {
                transpose_square(plane, buf, n);
                for row in buf.chunks_mut(n) {
                    fft.process_with_scratch(row, scratch);
                }
                transpose_square(buf, plane, n);
            },
        );
    }

    /// z-lines have stride n^2. For fixed y-index j the samples form an
    /// n x n slab whose rows (fixed z) are contiguous; stage the slab,
    /// transpose, transform, and write back.
    fn pass_z(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let fft = self.fft(forward);
        let ptr = SendPtr(data.as_mut_ptr());
        (0..n).into_par_iter().for_each_init(
            || {
                (
                    vec![Complex64::default(); n * n],
                    vec![Complex64::default(); n * n],
                    vec![Complex64::default(); fft.get_inplace_scratch_len()],
                )
            },
            |(slab, tbuf, scratch), j| {
                let base = ptr;
                // Safety: tasks touch disjoint index sets {(i, j, k): all i, k}
                // for distinct j.
                let data = unsafe { std::slice::from_raw_parts_mut(base.0, n * n * n) };
                for k in 0..n {
                    let off = (k * n + j) * n;
                    slab[k * n..(k + 1) * n].copy_from_slice(&data[off..off + n]);
                }
                transpose_square(slab, tbuf, n);
                for row in tbuf.chunks_mut(n) {
                    fft.process_with_scratch(row, scratch);
                }
                transpose_square(tbuf, slab, n);
                for k in 0..n {
                    let off = (k * n + j) * n;
                    data[off..off + n].copy_from_slice(&slab[k * n..(k + 1) * n]);
                }
            },
        );
    }
}

#[derive(Clone, Copy)]
struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

fn transpose_square(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const TILE: usize = 16;
    for jb in (0..n).step_by(TILE) {
        for ib in (0..n).step_by(TILE) {
            for j in jb..(jb + TILE).min(n) {
                for i in ib..(ib + TILE).min(n) {
                    dst[i * n + j] = src[j * n + i];
                }
            }
        }
    }
}
