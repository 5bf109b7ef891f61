//! Wigner fields on rectangular phase-space grids.

use num_complex::Complex64;

use super::kernels::{alpha, laguerre_functions, ln_factorials, UNDERFLOW_Y};
use crate::classical::PhasePoint;
use crate::error::{Error, Result};
use crate::operators::{DensityMatrix, DriveProtocol};
use crate::par;

pub const MIN_GRID_POINTS: usize = 64;
/// Half-width of the required coverage, in thermal standard deviations.
pub const COVERAGE_SIGMAS: f64 = 6.0;
pub const NORMALIZATION_TOL: f64 = 1e-4;
pub const IMAG_RESIDUAL_TOL: f64 = 1e-10;

/// Rectangular grid with inclusive end points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_x: usize,
    pub n_p: usize,
}

impl PhaseGrid {
    pub fn new(x: (f64, f64), p: (f64, f64), n_x: usize, n_p: usize) -> Result<Self> {
        let grid = Self {
            x_min: x.0,
            x_max: x.1,
            p_min: p.0,
            p_max: p.1,
            n_x,
            n_p,
        };
        if n_x < MIN_GRID_POINTS || n_p < MIN_GRID_POINTS {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {MIN_GRID_POINTS} points per axis, got {n_x}x{n_p}"
            )));
        }
        let finite = [x.0, x.1, p.0, p.1].iter().all(|v| v.is_finite());
        if !finite || !(x.0 < x.1) || !(p.0 < p.1) {
            return Err(Error::InvalidArgument(format!(
                "grid ranges must be finite and increasing, got x {x:?} p {p:?}"
            )));
        }
        Ok(grid)
    }

    /// Square grid `[−a, a]` in scaled coordinates, mapped back to `(x, p)`.
    pub fn centered(p: &DriveProtocol, half_width: f64, points: usize) -> Result<Self> {
        let s = (p.mass * p.omega).sqrt();
        Self::new(
            (-half_width / s, half_width / s),
            (-half_width * s, half_width * s),
            points,
            points,
        )
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize) -> PhasePoint {
        PhasePoint::new(self.x(i), self.p(j))
    }

    /// Error unless the grid contains `mean ± 6σ` with thermal `σ`.
    pub fn check_coverage(&self, mean: PhasePoint, p: &DriveProtocol) -> Result<()> {
        let (sx, sp) = thermal_widths(p);
        let need_x = (mean.x - COVERAGE_SIGMAS * sx, mean.x + COVERAGE_SIGMAS * sx);
        let need_p = (mean.p - COVERAGE_SIGMAS * sp, mean.p + COVERAGE_SIGMAS * sp);
        if need_x.0 < self.x_min || need_x.1 > self.x_max || need_p.0 < self.p_min || need_p.1 > self.p_max {
            return Err(Error::Coverage(format!(
                "grid x [{}, {}] p [{}, {}] does not contain x [{:.4}, {:.4}] p [{:.4}, {:.4}]",
                self.x_min, self.x_max, self.p_min, self.p_max, need_x.0, need_x.1, need_p.0, need_p.1
            )));
        }
        Ok(())
    }
}

/// Thermal standard deviations `(σ_x, σ_p)` of the oscillator.
pub fn thermal_widths(p: &DriveProtocol) -> (f64, f64) {
    let coth = 1.0 / (0.5 * p.beta * p.hbar * p.omega).tanh();
    (
        (p.hbar / (2.0 * p.mass * p.omega) * coth).sqrt(),
        (p.hbar * p.mass * p.omega / 2.0 * coth).sqrt(),
    )
}

/// Real Wigner function sampled on a grid; `values[i·n_p + j]` is the value
/// at `(x_i, p_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub hbar: f64,
    /// Largest imaginary part met while summing the kernels.
    pub imag_residual: f64,
}

impl WignerField {
    /// Wrap sampled values, checking normalization and realness.
    pub fn new(grid: PhaseGrid, values: Vec<f64>, hbar: f64, imag_residual: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let field = Self {
            grid,
            values,
            hbar,
            imag_residual,
        };
        if !(imag_residual < IMAG_RESIDUAL_TOL) {
            return Err(Error::Consistency(format!(
                "Wigner transform imaginary residual {imag_residual:.3e}"
            )));
        }
        let integral = field.integral();
        if !((integral - 1.0).abs() < NORMALIZATION_TOL) {
            return Err(Error::Coverage(format!(
                "field integrates to {integral:.8} on the grid; widen the ranges"
            )));
        }
        Ok(field)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_p + j]
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let g = &self.grid;
        let mut acc = par::CompensatedSum::new();
        for i in 0..g.n_x {
            let wx = if i == 0 || i + 1 == g.n_x { 0.5 } else { 1.0 };
            for j in 0..g.n_p {
                let wp = if j == 0 || j + 1 == g.n_p { 0.5 } else { 1.0 };
                acc.add(wx * wp * self.value(i, j));
            }
        }
        acc.value() * g.dx() * g.dp()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |self − other|` on a common grid.
    pub fn linf_distance(&self, other: &WignerField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64, p: f64) -> f64 {
        let g = &self.grid;
        let fx = (x - g.x_min) / g.dx();
        let fp = (p - g.p_min) / g.dp();
        let (lx, lp) = ((g.n_x - 1) as f64, (g.n_p - 1) as f64);
        if !(fx >= 0.0 && fx <= lx && fp >= 0.0 && fp <= lp) {
            return 0.0;
        }
        let i = (fx.floor() as usize).min(g.n_x - 2);
        let j = (fp.floor() as usize).min(g.n_p - 2);
        let (t, s) = (fx - i as f64, fp - j as f64);
        (1.0 - t) * ((1.0 - s) * self.value(i, j) + s * self.value(i, j + 1))
            + t * ((1.0 - s) * self.value(i + 1, j) + s * self.value(i + 1, j + 1))
    }
}

/// Evaluates `2πℏ·W(z)` of a fixed density matrix at single points.
pub struct WignerEvaluator<'a> {
    rho: &'a DensityMatrix,
    ln_fact: Vec<f64>,
    /// Off-diagonals `k` with any entry above rounding level.
    active: Vec<usize>,
}

impl<'a> WignerEvaluator<'a> {
    pub fn new(rho: &'a DensityMatrix) -> Self {
        let n = rho.dim();
        let m = rho.matrix();
        let scale = m.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        let active = (0..n)
            .filter(|&k| {
                k == 0
                    || (0..n - k).any(|i| {
                        m[(i + k, i)].norm() > 1e-18 * scale || m[(i, i + k)].norm() > 1e-18 * scale
                    })
            })
            .collect();
        Self {
            rho,
            ln_fact: ln_factorials(n),
            active,
        }
    }

    /// `(Re, |Im|)` of `Σ ρ_mn K_nm`; the imaginary part only collects the
    /// anti-Hermitian rounding of `ρ`.
    pub fn kernel_sum(&self, z: PhasePoint, p: &DriveProtocol, phi: &mut Vec<f64>) -> (f64, f64) {
        let n = self.rho.dim();
        let m = self.rho.matrix();
        let a = alpha(z, p);
        let y = 4.0 * a.norm_sqr();
        if y > UNDERFLOW_Y {
            return (0.0, 0.0);
        }
        // e^{−i arg α}
        let unit = if a.norm() > 0.0 { a.conj() / a.norm() } else { Complex64::new(1.0, 0.0) };
        let mut acc = Complex64::new(0.0, 0.0);
        for &k in &self.active {
            let len = n - k;
            phi.resize(len, 0.0);
            laguerre_functions(k, y, self.ln_fact[k], &mut phi[..len]);
            let phase = unit.powu(k as u32);
            let mut diag = Complex64::new(0.0, 0.0);
            for (j, &f) in phi[..len].iter().enumerate() {
                let sign = if j % 2 == 0 { 2.0 } else { -2.0 };
                let kernel = phase * (sign * f);
                // K_{j+k, j} weights ρ_{j+k, j}; its conjugate weights ρ_{j, j+k}.
                diag += m[(j + k, j)] * kernel;
                if k > 0 {
                    diag += m[(j, j + k)] * kernel.conj();
                }
            }
            acc += diag;
        }
        (acc.re, acc.im.abs())
    }

    pub fn value(&self, z: PhasePoint, p: &DriveProtocol) -> f64 {
        let mut phi = Vec::new();
        self.kernel_sum(z, p, &mut phi).0 / (2.0 * std::f64::consts::PI * p.hbar)
    }
}

/// Phase-space mean `(⟨x⟩, ⟨p⟩)` of `ρ`.
pub fn state_mean(rho: &DensityMatrix, p: &DriveProtocol) -> PhasePoint {
    // ⟨a⟩ = Σ √(n+1) ρ_{n+1,n}
    let m = rho.matrix();
    let mut a = Complex64::new(0.0, 0.0);
    for n in 0..rho.dim() - 1 {
        a += m[(n + 1, n)] * ((n + 1) as f64).sqrt();
    }
    let s = (p.mass * p.omega).sqrt();
    let scale = (2.0 * p.hbar).sqrt();
    PhasePoint::new(a.re * scale / s, a.im * scale * s)
}

/// `W(x, p) = (1/2πℏ) Σ_{mn} ρ_mn W_mn(x, p)` on every grid point.
pub fn wigner_transform(rho: &DensityMatrix, grid: &PhaseGrid, p: &DriveProtocol) -> Result<WignerField> {
    p.validate()?;
    grid.check_coverage(state_mean(rho, p), p)?;
    let eval = WignerEvaluator::new(rho);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * p.hbar);
    let rows = par::map_range(grid.n_x, |i| {
        let mut phi = Vec::new();
        let mut row = Vec::with_capacity(grid.n_p);
        let mut imag = 0.0_f64;
        for j in 0..grid.n_p {
            let (re, im) = eval.kernel_sum(grid.point(i, j), p, &mut phi);
            row.push(re * norm);
            imag = imag.max(im * norm);
        }
        (row, imag)
    });
    let imag = rows.iter().fold(0.0_f64, |m, r| m.max(r.1));
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    WignerField::new(*grid, values, p.hbar, imag)
}
