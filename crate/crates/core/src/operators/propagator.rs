//! Time-ordered propagators by midpoint time slicing.
//!
//! `Û ≈ Π_k exp(−iĤ(t_k)Δt/ℏ)` with `t_k` the slice midpoints, later slices to
//! the left. The global error is O(Δt²). Each slice exponential is applied to
//! the running product column by column: `Ĥ(t)` is tridiagonal in the number
//! basis, so a Taylor series summed to machine precision costs O(N) per
//! column and term, and columns evolve independently.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fock::{max_abs, FockOperator};
use super::hamiltonian::Tridiagonal;
use super::protocol::DriveProtocol;
use crate::error::{Error, Result};
use crate::par;

/// Unitarity defect beyond which a propagator is rejected.
pub const UNITARITY_TOL: f64 = 1e-8;

const TAYLOR_TOL: f64 = 1e-17;
const MAX_TAYLOR_TERMS: usize = 60;

/// One slice `exp(−i H dt/ℏ)` prepared for repeated application.
#[derive(Clone, Debug)]
struct Slice {
    h: Tridiagonal,
    center: f64,
    substeps: usize,
    /// `−i dt / (ℏ · substeps)`
    factor: Complex64,
}

impl Slice {
    fn new(h: Tridiagonal, dt_over_hbar: f64) -> Self {
        let (lo, hi) = h.spectral_bounds();
        let center = 0.5 * (lo + hi);
        let radius = 0.5 * (hi - lo) * dt_over_hbar.abs();
        // Keep the Taylor argument below 1 so the series is well conditioned.
        let substeps = radius.ceil().max(1.0) as usize;
        Self {
            h,
            center,
            substeps,
            factor: Complex64::new(0.0, -dt_over_hbar / substeps as f64),
        }
    }

    /// `v ← exp(factor·(H − center)) v`, then the scalar phase for `center`.
    fn apply(&self, v: &mut [Complex64], term: &mut Vec<Complex64>, next: &mut Vec<Complex64>) {
        let n = v.len();
        let phase = (self.factor * self.center).exp();
        for _ in 0..self.substeps {
            term.copy_from_slice(v);
            for j in 1..=MAX_TAYLOR_TERMS {
                let scale = self.factor / j as f64;
                let d = &self.h.diag;
                let e = &self.h.off;
                for i in 0..n {
                    let mut acc = (d[i] - self.center) * term[i];
                    if i > 0 {
                        acc += e[i - 1] * term[i - 1];
                    }
                    if i + 1 < n {
                        acc += e[i] * term[i + 1];
                    }
                    next[i] = acc * scale;
                }
                let mut tnorm = 0.0_f64;
                let mut vnorm = 0.0_f64;
                for i in 0..n {
                    v[i] += next[i];
                    tnorm = tnorm.max(next[i].norm_sqr());
                    vnorm = vnorm.max(v[i].norm_sqr());
                }
                std::mem::swap(term, next);
                if tnorm <= TAYLOR_TOL * TAYLOR_TOL * vnorm {
                    break;
                }
            }
            for z in v.iter_mut() {
                *z *= phase;
            }
        }
    }
}

/// Product of slices applied in order (first slice acts first).
fn slice_product(slices: &[Slice], dim: usize) -> DMatrix<Complex64> {
    let columns = par::map_range(dim, |j| {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[j] = Complex64::new(1.0, 0.0);
        let mut term = v.clone();
        let mut next = v.clone();
        for s in slices {
            s.apply(&mut v, &mut term, &mut next);
        }
        v
    });
    DMatrix::from_fn(dim, dim, |i, j| columns[j][i])
}

fn check_unitary(u: FockOperator, steps: usize) -> Result<FockOperator> {
    let defect = u.unitarity_defect();
    if !(defect < UNITARITY_TOL) {
        return Err(Error::Accuracy { defect, steps });
    }
    Ok(u)
}

fn validate_request(p: &DriveProtocol, t0: f64, t1: f64, steps: usize, dim: usize) -> Result<()> {
    p.validate()?;
    p.check_time(t0)?;
    p.check_time(t1)?;
    if !(t0 < t1) {
        return Err(Error::InvalidArgument(format!(
            "propagator needs t0 < t1, got {t0} and {t1}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("propagator needs at least one step".into()));
    }
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "propagator needs at least 2 levels".into(),
        });
    }
    Ok(())
}

/// Time-ordered propagator of the dragged oscillator from `t0` to `t1`.
pub fn propagator(
    p: &DriveProtocol,
    t0: f64,
    t1: f64,
    steps: usize,
    dim: usize,
) -> Result<FockOperator> {
    validate_request(p, t0, t1, steps, dim)?;
    let dt = (t1 - t0) / steps as f64;
    let slices: Vec<Slice> = (0..steps)
        .map(|k| {
            let t = t0 + (k as f64 + 0.5) * dt;
            Slice::new(Tridiagonal::hamiltonian(p, t, dim), dt / p.hbar)
        })
        .collect();
    check_unitary(FockOperator::new(slice_product(&slices, dim), false)?, steps)
}

/// Propagator of the time-reversed drive `Ĥᴿ(s) = Ĥ(τ − s)`, `s ∈ [0, τ]`.
pub fn reversed_propagator(p: &DriveProtocol, steps: usize, dim: usize) -> Result<FockOperator> {
    validate_request(p, 0.0, p.duration, steps, dim)?;
    let dt = p.duration / steps as f64;
    let slices: Vec<Slice> = (0..steps)
        .map(|k| {
            let s = (k as f64 + 0.5) * dt;
            Slice::new(Tridiagonal::hamiltonian(p, p.duration - s, dim), dt / p.hbar)
        })
        .collect();
    check_unitary(FockOperator::new(slice_product(&slices, dim), false)?, steps)
}

/// A single slice exponential `exp(−iĤ(t)Δt/ℏ)` as a dense matrix.
pub fn slice_exponential(p: &DriveProtocol, t: f64, dt: f64, dim: usize) -> Result<FockOperator> {
    p.validate()?;
    p.check_time(t)?;
    let slice = Slice::new(Tridiagonal::hamiltonian(p, t, dim), dt / p.hbar);
    FockOperator::new(slice_product(std::slice::from_ref(&slice), dim), false)
}

/// Step-doubling diagnostic for the midpoint scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub steps: usize,
    /// `max |U(steps) − U(2·steps)|`
    pub coarse_change: f64,
    /// `max |U(2·steps) − U(4·steps)|`
    pub fine_change: f64,
}

impl ConvergenceReport {
    /// Close to 4 for a second-order scheme in its asymptotic regime.
    pub fn ratio(&self) -> f64 {
        self.coarse_change / self.fine_change
    }

    /// Richardson estimate of the error remaining at `4·steps`.
    pub fn error_estimate(&self) -> f64 {
        self.fine_change / 3.0
    }
}

pub fn propagator_convergence(
    p: &DriveProtocol,
    t0: f64,
    t1: f64,
    steps: usize,
    dim: usize,
) -> Result<ConvergenceReport> {
    let u1 = propagator(p, t0, t1, steps, dim)?;
    let u2 = propagator(p, t0, t1, 2 * steps, dim)?;
    let u4 = propagator(p, t0, t1, 4 * steps, dim)?;
    Ok(ConvergenceReport {
        steps,
        coarse_change: max_abs(&(u1.matrix() - u2.matrix())),
        fine_change: max_abs(&(u2.matrix() - u4.matrix())),
    })
}
