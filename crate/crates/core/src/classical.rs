//! Classical counterpart of the dragged oscillator.
//!
//! Newton's equations are solved in closed form, work is the endpoint energy
//! difference, and the work characteristic function is available both in
//! closed form and by Monte Carlo over the Gaussian initial density.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::DriveProtocol;
use crate::par::{self, CompensatedSum};
use crate::workstats::{CharacteristicSamples, JarzynskiReport, WorkDefinition};

/// A point `z = (x, p)` in phase space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub const fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.x - other.x).hypot(self.p - other.p)
    }
}

/// Flow of a harmonic well whose center moves as `c₀ + v s`, after elapsed
/// time `s`.
pub fn newton_map_with_center(
    z0: PhasePoint,
    s: f64,
    p: &DriveProtocol,
    c0: f64,
    v: f64,
) -> PhasePoint {
    let (sin, cos) = (p.omega * s).sin_cos();
    let mw = p.mass * p.omega;
    let dx = z0.x - c0;
    let dp = z0.p - p.mass * v;
    PhasePoint {
        x: c0 + v * s + dx * cos + dp / mw * sin,
        p: p.mass * v + dp * cos - mw * dx * sin,
    }
}

/// `z(t)` from `z(0)` under the forward drive (well center `u t`).
pub fn newton_map(z0: PhasePoint, t: f64, p: &DriveProtocol) -> PhasePoint {
    let (sin, cos) = (p.omega * t).sin_cos();
    let (m, w, u) = (p.mass, p.omega, p.drag_speed);
    PhasePoint {
        x: z0.x * cos + z0.p / (m * w) * sin + u * t - u / w * sin,
        p: -z0.x * m * w * sin + z0.p * cos + m * u * (1.0 - cos),
    }
}

/// `z(0)` from `z(t)`; exact inverse of [`newton_map`].
pub fn inverse_map(zt: PhasePoint, t: f64, p: &DriveProtocol) -> PhasePoint {
    let (sin, cos) = (p.omega * t).sin_cos();
    let (m, w, u) = (p.mass, p.omega, p.drag_speed);
    PhasePoint {
        x: zt.x * cos - zt.p / (m * w) * sin - u * (t * cos - sin / w),
        p: zt.x * m * w * sin + zt.p * cos - m * u * (w * t * sin + cos - 1.0),
    }
}

/// Classical Hamiltonian `H(z, t)`.
pub fn hamiltonian(z: PhasePoint, t: f64, p: &DriveProtocol) -> f64 {
    let dx = z.x - p.well_center(t);
    z.p * z.p / (2.0 * p.mass) + 0.5 * p.mass * p.omega * p.omega * dx * dx
}

/// `∂H/∂t` at `(z, t)`.
pub fn power(z: PhasePoint, t: f64, p: &DriveProtocol) -> f64 {
    -p.mass * p.omega * p.omega * p.drag_speed * (z.x - p.well_center(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalWorkSample {
    pub initial: PhasePoint,
    pub final_point: PhasePoint,
    pub work: f64,
}

/// Work along the Newton trajectory from `z0` over `[0, τ]`.
pub fn classical_work(z0: PhasePoint, p: &DriveProtocol) -> ClassicalWorkSample {
    let zt = newton_map(z0, p.duration, p);
    let work = if p.drag_speed == 0.0 {
        0.0
    } else {
        hamiltonian(zt, p.duration, p) - hamiltonian(z0, 0.0, p)
    };
    ClassicalWorkSample {
        initial: z0,
        final_point: zt,
        work,
    }
}

/// `∫₀^τ ∂ₜH dt` along the trajectory by composite Simpson quadrature.
pub fn work_by_quadrature(z0: PhasePoint, p: &DriveProtocol, intervals: usize) -> f64 {
    let n = (intervals.max(2) + 1) & !1;
    let h = p.duration / n as f64;
    let f = |k: usize| {
        let t = k as f64 * h;
        power(newton_map(z0, t, p), t, p)
    };
    let mut acc = f(0) + f(n);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    acc * h / 3.0
}

/// Axis-aligned Gaussian density on phase space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPhaseDensity {
    pub mean: PhasePoint,
    pub var_x: f64,
    pub var_p: f64,
    pub normalization: f64,
}

impl GaussianPhaseDensity {
    pub fn new(mean: PhasePoint, var_x: f64, var_p: f64) -> Result<Self> {
        if !(var_x > 0.0 && var_p > 0.0 && mean.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Gaussian density needs positive variances, got {var_x}, {var_p}"
            )));
        }
        Ok(Self {
            mean,
            var_x,
            var_p,
            normalization: 1.0 / (2.0 * std::f64::consts::PI * (var_x * var_p).sqrt()),
        })
    }

    pub fn density(&self, z: PhasePoint) -> f64 {
        let dx = z.x - self.mean.x;
        let dp = z.p - self.mean.p;
        self.normalization * (-0.5 * (dx * dx / self.var_x + dp * dp / self.var_p)).exp()
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> PhasePoint {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        PhasePoint::new(self.mean.x + self.var_x.sqrt() * a, self.mean.p + self.var_p.sqrt() * b)
    }

    fn as_gaussian2(&self) -> Gaussian2 {
        Gaussian2 {
            mean: [self.mean.x, self.mean.p],
            cov: [[self.var_x, 0.0], [0.0, self.var_p]],
        }
    }
}

/// Equilibrium density of `H(z, t)` at inverse temperature β.
pub fn equilibrium_density(p: &DriveProtocol, t: f64) -> GaussianPhaseDensity {
    let var_x = 1.0 / (p.beta * p.mass * p.omega * p.omega);
    let var_p = p.mass / p.beta;
    GaussianPhaseDensity::new(PhasePoint::new(p.well_center(t), 0.0), var_x, var_p)
        .expect("validated protocol gives positive variances")
}

/// Classical state at `t = 0`: the equilibrium at `−τ′` carried by the flow.
pub fn classical_initial_density(p: &DriveProtocol) -> Result<GaussianPhaseDensity> {
    p.validate()?;
    let (x0, p0) = p.initial_center();
    let eq = equilibrium_density(p, 0.0);
    GaussianPhaseDensity::new(PhasePoint::new(x0, p0), eq.var_x, eq.var_p)
}

/// Mean and variance of the classical work.
pub fn classical_work_moments(p: &DriveProtocol) -> (f64, f64) {
    let (w, tp, tau) = (p.omega, p.pre_duration, p.duration);
    let mu2 = p.mass * p.drag_speed * p.drag_speed;
    let mean = mu2 * ((w * tp).cos() - (w * (tp + tau)).cos());
    let var = 2.0 * mu2 * (1.0 - (w * tau).cos()) / p.beta;
    (mean, var)
}

/// Closed-form classical work characteristic function at one `η`.
pub fn cf_classical_value(eta: f64, p: &DriveProtocol) -> Complex64 {
    let (mean, var) = classical_work_moments(p);
    Complex64::new(-0.5 * eta * eta * var, eta * mean).exp()
}

pub fn cf_classical_closed(etas: &[f64], p: &DriveProtocol) -> Result<CharacteristicSamples> {
    p.validate()?;
    let values = etas.iter().map(|&e| cf_classical_value(e, p)).collect();
    CharacteristicSamples::new(WorkDefinition::Classical, etas.to_vec(), values)
}

/// Monte Carlo estimate with per-η standard errors of the real and
/// imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloCf {
    pub samples: CharacteristicSamples,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
    pub n_samples: usize,
}

impl MonteCarloCf {
    /// Largest `|Δ|/σ` over real and imaginary parts against a reference.
    /// Components with zero standard error must match exactly.
    pub fn max_sigma_deviation(&self, reference: &CharacteristicSamples) -> f64 {
        let mut worst = 0.0_f64;
        for (i, (mc, exact)) in self
            .samples
            .values
            .iter()
            .zip(reference.values.iter())
            .enumerate()
        {
            for (d, s) in [
                ((mc.re - exact.re).abs(), self.stderr_re[i]),
                ((mc.im - exact.im).abs(), self.stderr_im[i]),
            ] {
                let z = if s > 0.0 {
                    d / s
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

pub const MIN_MC_SAMPLES: usize = 1000;
const CHUNK: usize = 8192;

/// Deterministic RNG for chunk `c` of a run with master `seed`.
fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Works of `n` samples drawn from the initial density, chunked so that the
/// sample sequence is independent of the thread count.
fn sample_chunks<T, F>(p: &DriveProtocol, n_samples: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    let density = classical_initial_density(p)?;
    let chunks = n_samples.div_ceil(CHUNK);
    Ok(par::map_range(chunks, |c| {
        let mut rng = chunk_rng(seed, c);
        let len = CHUNK.min(n_samples - c * CHUNK);
        let works: Vec<f64> = (0..len)
            .map(|_| classical_work(density.sample(&mut rng), p).work)
            .collect();
        f(&works)
    }))
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {n_samples}"
        )));
    }
    Ok(())
}

pub fn cf_classical_mc(
    etas: &[f64],
    p: &DriveProtocol,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloCf> {
    check_samples(n_samples)?;
    let k = etas.len();
    // Per chunk: Σcos, Σsin, Σcos², Σsin² for every η.
    let partials = sample_chunks(p, n_samples, seed, |works| {
        let mut acc = vec![CompensatedSum::new(); 4 * k];
        for &w in works {
            for (j, &eta) in etas.iter().enumerate() {
                let (s, c) = (eta * w).sin_cos();
                acc[4 * j].add(c);
                acc[4 * j + 1].add(s);
                acc[4 * j + 2].add(c * c);
                acc[4 * j + 3].add(s * s);
            }
        }
        acc
    })?;
    let mut total = vec![CompensatedSum::new(); 4 * k];
    for part in &partials {
        for (t, q) in total.iter_mut().zip(part) {
            t.merge(q);
        }
    }
    let n = n_samples as f64;
    let mut values = Vec::with_capacity(k);
    let mut stderr_re = Vec::with_capacity(k);
    let mut stderr_im = Vec::with_capacity(k);
    for j in 0..k {
        let mc = total[4 * j].value() / n;
        let ms = total[4 * j + 1].value() / n;
        let var_c = (total[4 * j + 2].value() / n - mc * mc).max(0.0) * n / (n - 1.0);
        let var_s = (total[4 * j + 3].value() / n - ms * ms).max(0.0) * n / (n - 1.0);
        values.push(Complex64::new(mc, ms));
        stderr_re.push((var_c / n).sqrt());
        stderr_im.push((var_s / n).sqrt());
    }
    Ok(MonteCarloCf {
        samples: CharacteristicSamples::new(WorkDefinition::Classical, etas.to_vec(), values)?,
        stderr_re,
        stderr_im,
        n_samples,
    })
}

/// Sample mean and variance of `W` (for moment checks).
pub fn classical_work_sample_moments(
    p: &DriveProtocol,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_samples(n_samples)?;
    let partials = sample_chunks(p, n_samples, seed, |works| {
        let mut s = CompensatedSum::new();
        let mut s2 = CompensatedSum::new();
        for &w in works {
            s.add(w);
            s2.add(w * w);
        }
        (s, s2)
    })?;
    let (mut s, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
    for (a, b) in &partials {
        s.merge(a);
        s2.merge(b);
    }
    let n = n_samples as f64;
    let mean = s.value() / n;
    Ok((mean, (s2.value() / n - mean * mean) * n / (n - 1.0)))
}

/// 2-D Gaussian in `(x, p)` with full covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Gaussian2 {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

fn inv2(m: [[f64; 2]; 2]) -> ([[f64; 2]; 2], f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (
        [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]],
        det,
    )
}

impl Gaussian2 {
    /// Push forward through `z ↦ A z + b`.
    fn affine(&self, a: [[f64; 2]; 2], b: [f64; 2]) -> Self {
        let m = &self.mean;
        let mean = [
            a[0][0] * m[0] + a[0][1] * m[1] + b[0],
            a[1][0] * m[0] + a[1][1] * m[1] + b[1],
        ];
        let c = &self.cov;
        let mut ac = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                ac[i][j] = a[i][0] * c[0][j] + a[i][1] * c[1][j];
            }
        }
        let mut cov = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] = ac[i][0] * a[j][0] + ac[i][1] * a[j][1];
            }
        }
        Self { mean, cov }
    }

    /// Log-density as `−½ zᵀPz + hᵀz + k`.
    fn quadratic_form(&self) -> ([[f64; 2]; 2], [f64; 2], f64) {
        let (prec, det) = inv2(self.cov);
        let m = self.mean;
        let h = [
            prec[0][0] * m[0] + prec[0][1] * m[1],
            prec[1][0] * m[0] + prec[1][1] * m[1],
        ];
        let k = -0.5 * (h[0] * m[0] + h[1] * m[1])
            - (2.0 * std::f64::consts::PI).ln()
            - 0.5 * det.ln();
        (prec, h, k)
    }
}

/// Affine part `(A, b)` of a flow map, read off by evaluating it.
fn affine_of<F: Fn(PhasePoint) -> PhasePoint>(f: F) -> ([[f64; 2]; 2], [f64; 2]) {
    let o = f(PhasePoint::new(0.0, 0.0));
    let ex = f(PhasePoint::new(1.0, 0.0));
    let ep = f(PhasePoint::new(0.0, 1.0));
    (
        [[ex.x - o.x, ep.x - o.x], [ex.p - o.p, ep.p - o.p]],
        [o.x, o.p],
    )
}

/// `∫ pᴿ(x, −p, τ) p(x, p, 0) / p^eq(x, p, 0) dx dp` in closed form.
///
/// `pᴿ` is the equilibrium density of `H(·, τ)` carried for a time τ by the
/// reversed drive (well center `u(τ − s)`); all factors are Gaussian.
pub fn gong_rhs(p: &DriveProtocol) -> Result<f64> {
    let initial = classical_initial_density(p)?.as_gaussian2();
    let eq0 = equilibrium_density(p, 0.0).as_gaussian2();
    let eq_tau = equilibrium_density(p, p.duration).as_gaussian2();

    let (a, b) = affine_of(|z| {
        newton_map_with_center(z, p.duration, p, p.well_center(p.duration), -p.drag_speed)
    });
    let reverse_final = eq_tau.affine(a, b);
    let flipped = reverse_final.affine([[1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]);

    // log integrand = flipped + initial − eq0 (all quadratic forms).
    let (pf, hf, kf) = flipped.quadratic_form();
    let (pi, hi, ki) = initial.quadratic_form();
    let (pe, he, ke) = eq0.quadratic_form();
    let mut prec = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            prec[i][j] = pf[i][j] + pi[i][j] - pe[i][j];
        }
    }
    let h = [hf[0] + hi[0] - he[0], hf[1] + hi[1] - he[1]];
    let k = kf + ki - ke;
    let (cov, det) = inv2(prec);
    if !(det > 0.0 && prec[0][0] > 0.0) {
        return Err(Error::Consistency(
            "reverse-process integrand is not normalizable".into(),
        ));
    }
    let quad = h[0] * (cov[0][0] * h[0] + cov[0][1] * h[1]) + h[1] * (cov[1][0] * h[0] + cov[1][1] * h[1]);
    Ok((k + 0.5 * quad + (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln()).exp())
}

/// Classical generalized Jarzynski check for the coherent-counterpart state.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalJarzynski {
    pub report: JarzynskiReport,
    pub lhs_stderr: f64,
    pub n_samples: usize,
    /// Set when the relative standard error of the lhs exceeds 10 %.
    pub warning: Option<String>,
}

impl ClassicalJarzynski {
    pub fn sigma_deviation(&self) -> f64 {
        if self.lhs_stderr > 0.0 {
            self.report.discrepancy / self.lhs_stderr
        } else if self.report.discrepancy == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn gong_jarzynski_check(
    p: &DriveProtocol,
    n_samples: usize,
    seed: u64,
) -> Result<ClassicalJarzynski> {
    check_samples(n_samples)?;
    // Identical spectra at t = 0 and t = τ: ΔF = 0.
    let delta_f = 0.0;
    let partials = sample_chunks(p, n_samples, seed, |works| {
        let mut s = CompensatedSum::new();
        let mut s2 = CompensatedSum::new();
        for &w in works {
            let v = (-p.beta * (w - delta_f)).exp();
            s.add(v);
            s2.add(v * v);
        }
        (s, s2)
    })?;
    let (mut s, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
    for (a, b) in &partials {
        s.merge(a);
        s2.merge(b);
    }
    let n = n_samples as f64;
    let lhs = s.value() / n;
    let var = (s2.value() / n - lhs * lhs).max(0.0) * n / (n - 1.0);
    let lhs_stderr = (var / n).sqrt();
    let rhs = gong_rhs(p)?;
    let warning = (lhs_stderr > 0.1 * lhs.abs()).then(|| {
        format!(
            "relative standard error {:.3} exceeds 10%; increase the sample count",
            lhs_stderr / lhs.abs()
        )
    });
    Ok(ClassicalJarzynski {
        report: JarzynskiReport::new(WorkDefinition::Classical, lhs, rhs, delta_f),
        lhs_stderr,
        n_samples,
        warning,
    })
}
