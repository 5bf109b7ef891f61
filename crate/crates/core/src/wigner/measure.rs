//! Projective energy measurement and its phase-space signature.

use num_complex::Complex64;

use super::field::{WignerEvaluator, WignerField};
use crate::classical::PhasePoint;
use crate::error::{Error, Result};
use crate::operators::{DensityMatrix, DriveProtocol, FockOperator, Spectrum};
use crate::par;

/// Spectral gap below which the measurement basis is ambiguous.
pub const DEGENERACY_TOL: f64 = 1e-10;
pub const ANGULAR_ORDER: usize = 512;
/// Largest `|W|` allowed, relative to the peak, where a rotation can carry
/// the field off the grid.
pub const ROTATION_LEAK_TOL: f64 = 1e-6;

/// Remove the coherences of `ρ` in the eigenbasis of `h0`.
pub fn dephase(rho: &DensityMatrix, h0: &FockOperator) -> Result<DensityMatrix> {
    h0.require_dim(rho.dim())?;
    let spectrum = Spectrum::of(h0)?;
    if let Some((level, gap)) = spectrum.min_gap() {
        if gap < DEGENERACY_TOL {
            return Err(Error::Degenerate { level, gap });
        }
    }
    let r = spectrum.to_eigenbasis(rho.matrix());
    let v = spectrum.eigenvectors();
    let mut scaled = v.clone();
    for j in 0..rho.dim() {
        let w = Complex64::new(r[(j, j)].re, 0.0);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= w;
        }
    }
    DensityMatrix::new(scaled * v.adjoint())
}

/// `(1/2π)∮ W(r, θ) dθ` at every grid point, by polar resampling in scaled
/// coordinates with [`ANGULAR_ORDER`] equally spaced angles.
pub fn angular_average(field: &WignerField, p: &DriveProtocol) -> Result<WignerField> {
    angular_average_with(field, p, ANGULAR_ORDER)
}

pub fn angular_average_with(field: &WignerField, p: &DriveProtocol, order: usize) -> Result<WignerField> {
    if order < 8 {
        return Err(Error::InvalidArgument(format!("angular order {order} too small")));
    }
    let g = field.grid;
    let s = (p.mass * p.omega).sqrt();
    let (x_lo, x_hi, p_lo, p_hi) = (g.x_min * s, g.x_max * s, g.p_min / s, g.p_max / s);
    if !(x_lo <= 0.0 && x_hi >= 0.0 && p_lo <= 0.0 && p_hi >= 0.0) {
        return Err(Error::Coverage("grid does not contain the well origin".into()));
    }
    // Circles beyond the inscribed radius leave the grid somewhere.
    let inscribed = (-x_lo).min(x_hi).min(-p_lo).min(p_hi);
    let peak = field.max_abs();
    for i in 0..g.n_x {
        for j in 0..g.n_p {
            let r = (g.x(i) * s).hypot(g.p(j) / s);
            if r > inscribed && field.value(i, j).abs() > ROTATION_LEAK_TOL * peak {
                return Err(Error::Coverage(format!(
                    "field {:.3e} at radius {r:.4} beyond the inscribed circle {inscribed:.4}",
                    field.value(i, j)
                )));
            }
        }
    }
    let trig: Vec<(f64, f64)> = (0..order)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / order as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let rows = par::map_range(g.n_x, |i| {
        (0..g.n_p)
            .map(|j| {
                let r = (g.x(i) * s).hypot(g.p(j) / s);
                let sum: f64 = trig
                    .iter()
                    .map(|&(c, sn)| field.interpolate(r * c / s, r * sn * s))
                    .sum();
                sum / order as f64
            })
            .collect::<Vec<f64>>()
    });
    WignerField::new(g, rows.concat(), field.hbar, field.imag_residual)
}

/// Largest variance over angle of `W(r, θ)` on `radii` circles up to
/// `r_max` (scaled coordinates), evaluated pointwise from `ρ`.
pub fn angular_variance(rho: &DensityMatrix, p: &DriveProtocol, r_max: f64, radii: usize) -> f64 {
    let eval = WignerEvaluator::new(rho);
    let s = (p.mass * p.omega).sqrt();
    let per_radius = par::map_range(radii, |k| {
        let r = r_max * (k + 1) as f64 / radii as f64;
        let vals: Vec<f64> = (0..ANGULAR_ORDER)
            .map(|a| {
                let t = 2.0 * std::f64::consts::PI * a as f64 / ANGULAR_ORDER as f64;
                eval.value(PhasePoint::new(r * t.cos() / s, r * t.sin() * s), p)
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64
    });
    per_radius.into_iter().fold(0.0, f64::max)
}
