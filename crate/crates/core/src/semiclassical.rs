//! ℏ-expansion of the FCS and MH characteristic functions.
//!
//! `Φ(η; ℏ)` is computed exactly in a truncated basis on a ladder of ℏ values
//! with everything else fixed, and a polynomial in ℏ is fitted to the real
//! and imaginary parts. With `Φ = Σ_k (iℏ)^k Φ⁽ᵏ⁾` the fitted coefficients map
//! to `Φ⁽⁰⁾ = c₀`, `Φ⁽¹⁾ = c₁/i`, `Φ⁽²⁾ = −c₂`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{cf_classical_value, PhasePoint};
use crate::error::{Error, Result};
use crate::operators::DriveProtocol;
use crate::par;
use crate::workstats::{WorkDefinition, WorkProblem};

/// `f(s, z, t) = s²/(8m)·[V'' − (s/3)V'² − (s/3m)p²V'']` for the dragged
/// well, at a complex counting argument `s`. The characteristic function
/// uses `s = iη`; the thermal symbol of `e^{−βĤ}` uses `s = β`.
pub fn wigner_kirkwood_f_complex(s: Complex64, z: PhasePoint, t: f64, p: &DriveProtocol) -> Complex64 {
    let k = p.mass * p.omega * p.omega;
    let v1 = k * (z.x - p.well_center(t));
    let v2 = k;
    let bracket = v2 - s / 3.0 * v1 * v1 - s / (3.0 * p.mass) * z.p * z.p * v2;
    s * s / (8.0 * p.mass) * bracket
}

/// `f(iη, z, t)`.
pub fn wigner_kirkwood_f(eta: f64, z: PhasePoint, t: f64, p: &DriveProtocol) -> Complex64 {
    wigner_kirkwood_f_complex(Complex64::new(0.0, eta), z, t, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerKirkwoodTerm {
    pub eta: f64,
    pub z: PhasePoint,
    pub t: f64,
    pub value: Complex64,
}

impl WignerKirkwoodTerm {
    pub fn evaluate(eta: f64, z: PhasePoint, t: f64, p: &DriveProtocol) -> Self {
        Self {
            eta,
            z,
            t,
            value: wigner_kirkwood_f(eta, z, t, p),
        }
    }
}

/// How the ℏ ladder is sampled and fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPolicy {
    /// Strictly descending ℏ values.
    pub hbars: Vec<f64>,
    /// Polynomial degree in ℏ.
    pub degree: usize,
    /// `N(ℏ) = ceil(dim_factor / ℏ)`. States that do not fit raise a
    /// truncation error.
    pub dim_factor: f64,
    pub max_dim: usize,
    /// Time slices of the propagator over `[0, τ]`.
    pub steps: usize,
}

impl Default for ScanPolicy {
    fn default() -> Self {
        Self {
            hbars: (0..9).map(|k| 0.5 * 0.85_f64.powi(k)).collect(),
            degree: 5,
            dim_factor: 40.0,
            max_dim: 1200,
            steps: 1000,
        }
    }
}

impl ScanPolicy {
    pub fn validate(&self, p: &DriveProtocol) -> Result<()> {
        let h = &self.hbars;
        if h.len() < 4 {
            return Err(Error::ScanInvalid(format!(
                "need at least 4 hbar values, got {}",
                h.len()
            )));
        }
        if !h.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::ScanInvalid("hbar values must be strictly descending".into()));
        }
        if !(h[h.len() - 1] > 0.0) || h[0] > p.hbar {
            return Err(Error::ScanInvalid(format!(
                "hbar values must lie in (0, {}] (the protocol hbar)",
                p.hbar
            )));
        }
        if self.degree < 3 {
            return Err(Error::ScanInvalid(format!("degree {} below 3", self.degree)));
        }
        if h.len() < self.degree + 2 {
            return Err(Error::ScanInvalid(format!(
                "degree {} needs at least {} hbar values for the residual and truncation estimates",
                self.degree,
                self.degree + 2
            )));
        }
        if !(self.dim_factor > 0.0) || self.steps == 0 {
            return Err(Error::ScanInvalid("dim_factor and steps must be positive".into()));
        }
        Ok(())
    }

    /// Truncation used at a given ℏ.
    pub fn dimension(&self, p: &DriveProtocol) -> Result<usize> {
        let n = (self.dim_factor / p.hbar).ceil() as usize;
        if n > self.max_dim {
            return Err(Error::InvalidDimension {
                dim: n,
                reason: format!("exceeds the scan cap {} at hbar = {}", self.max_dim, p.hbar),
            });
        }
        Ok(n)
    }
}

/// Least-squares polynomial fit of complex data in a real variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub coefficients: Vec<Complex64>,
    /// Standard error of each coefficient: OLS errors of the real and
    /// imaginary parts combined with the change when the degree is raised.
    pub uncertainties: Vec<f64>,
    /// Largest `|fit − data|` over the samples.
    pub residual: f64,
}

/// OLS of one real series on `1, x, …, x^deg` with `x = h / max h`, via QR.
/// Returns coefficients in the original variable and their standard errors.
fn ols(h: &[f64], y: &[f64], degree: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = h.len();
    let k = degree + 1;
    if n < k {
        return Err(Error::ScanInvalid(format!("{n} samples cannot fix degree {degree}")));
    }
    let scale = h.iter().copied().fold(0.0_f64, f64::max);
    let a = DMatrix::from_fn(n, k, |i, j| (h[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let qr = a.clone().qr();
    let r = qr.r();
    let qtb = qr.q().transpose() * &b;
    let c = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::ScanInvalid("singular Vandermonde matrix".into()))?;
    let fitted = &a * &c;
    let resid: Vec<f64> = (0..n).map(|i| fitted[i] - y[i]).collect();
    let dof = n - k;
    let sigma = if dof > 0 {
        let s2 = resid.iter().map(|r| r * r).sum::<f64>() / dof as f64;
        let r_inv = r
            .try_inverse()
            .ok_or_else(|| Error::ScanInvalid("singular R factor".into()))?;
        // (AᵀA)⁻¹ = R⁻¹R⁻ᵀ
        (0..k)
            .map(|j| (s2 * r_inv.row(j).iter().map(|v| v * v).sum::<f64>()).sqrt())
            .collect()
    } else {
        vec![0.0; k]
    };
    let unscale = |v: f64, j: usize| v / scale.powi(j as i32);
    Ok((
        (0..k).map(|j| unscale(c[j], j)).collect(),
        (0..k).map(|j| unscale(sigma[j], j)).collect(),
        resid,
    ))
}

pub fn fit_polynomial(h: &[f64], values: &[Complex64], degree: usize) -> Result<PolyFit> {
    if h.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: values.len(),
        });
    }
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = values.iter().map(|v| v.im).collect();
    let (cr, sr, rr) = ols(h, &re, degree)?;
    let (ci, si, ri) = ols(h, &im, degree)?;
    let coefficients: Vec<Complex64> = cr.iter().zip(&ci).map(|(a, b)| Complex64::new(*a, *b)).collect();
    let mut uncertainties: Vec<f64> = sr.iter().zip(&si).map(|(a, b)| a.hypot(*b)).collect();
    if h.len() >= degree + 2 {
        let (hr, _, _) = ols(h, &re, degree + 1)?;
        let (hi, _, _) = ols(h, &im, degree + 1)?;
        for j in 0..=degree {
            let shift = Complex64::new(hr[j], hi[j]) - coefficients[j];
            uncertainties[j] = uncertainties[j].hypot(shift.norm());
        }
    }
    let residual = rr.iter().zip(&ri).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
    Ok(PolyFit {
        coefficients,
        uncertainties,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HbarScanResult {
    pub eta: f64,
    pub definition: WorkDefinition,
    pub hbars: Vec<f64>,
    pub dims: Vec<usize>,
    pub values: Vec<Complex64>,
    pub fit: PolyFit,
}

impl HbarScanResult {
    /// Coefficient `c_k` of `ℏ^k`.
    pub fn coefficient(&self, k: usize) -> Complex64 {
        self.fit.coefficients.get(k).copied().unwrap_or_default()
    }

    pub fn uncertainty(&self, k: usize) -> f64 {
        self.fit.uncertainties.get(k).copied().unwrap_or(0.0)
    }

    pub fn phi0(&self) -> Complex64 {
        self.coefficient(0)
    }

    pub fn phi1(&self) -> Complex64 {
        self.coefficient(1) / Complex64::i()
    }

    pub fn phi2(&self) -> Complex64 {
        -self.coefficient(2)
    }

    pub fn residual(&self) -> f64 {
        self.fit.residual
    }

    fn check_gate(&self) -> Result<()> {
        let c0 = self.phi0().norm();
        if !(self.fit.residual < 1e-2 * c0) {
            return Err(Error::ScanInvalid(format!(
                "{} fit at eta = {}: residual {:.3e} not below 1e-2 |c0| = {:.3e}; \
                 samples at hbar {:?} are {:?}",
                self.definition,
                self.eta,
                self.fit.residual,
                1e-2 * c0,
                self.hbars,
                self.values
            )));
        }
        Ok(())
    }
}

/// Exact CFs at every ℏ of the policy, for every η and definition, then one
/// fit per `(η, definition)`. Results are ordered definition-major.
pub fn hbar_scan_grid(
    etas: &[f64],
    p: &DriveProtocol,
    definitions: &[WorkDefinition],
    policy: &ScanPolicy,
) -> Result<Vec<HbarScanResult>> {
    policy.validate(p)?;
    if definitions.iter().any(|d| !matches!(d, WorkDefinition::Fcs | WorkDefinition::Mh | WorkDefinition::Tpm)) {
        return Err(Error::InvalidArgument("hbar scans need a quantum definition".into()));
    }
    let per_hbar: Result<Vec<(usize, Vec<Complex64>)>> = policy
        .hbars
        .iter()
        .map(|&hbar| {
            let ph = p.with_hbar(hbar)?;
            let dim = policy.dimension(&ph)?;
            let problem = WorkProblem::for_protocol(&ph, dim, policy.steps)?;
            let pairs: Vec<(WorkDefinition, f64)> = definitions
                .iter()
                .flat_map(|&d| etas.iter().map(move |&e| (d, e)))
                .collect();
            let values: Result<Vec<Complex64>> =
                par::map_slice(&pairs, |&(d, e)| problem.value(d, e)).into_iter().collect();
            Ok((dim, values?))
        })
        .collect();
    let per_hbar = per_hbar?;
    let dims: Vec<usize> = per_hbar.iter().map(|(d, _)| *d).collect();
    let mut out = Vec::with_capacity(definitions.len() * etas.len());
    for (di, &definition) in definitions.iter().enumerate() {
        for (ei, &eta) in etas.iter().enumerate() {
            let values: Vec<Complex64> = per_hbar.iter().map(|(_, v)| v[di * etas.len() + ei]).collect();
            let fit = fit_polynomial(&policy.hbars, &values, policy.degree)?;
            let result = HbarScanResult {
                eta,
                definition,
                hbars: policy.hbars.clone(),
                dims: dims.clone(),
                values,
                fit,
            };
            result.check_gate()?;
            out.push(result);
        }
    }
    Ok(out)
}

pub fn hbar_scan(
    eta: f64,
    p: &DriveProtocol,
    definition: WorkDefinition,
    policy: &ScanPolicy,
) -> Result<HbarScanResult> {
    let mut v = hbar_scan_grid(&[eta], p, &[definition], policy)?;
    Ok(v.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi2Row {
    pub eta: f64,
    pub phi2_fcs: Complex64,
    pub phi2_mh: Complex64,
    pub difference: Complex64,
    /// Combined fit uncertainty of the difference.
    pub uncertainty: f64,
    /// `|difference| > 3 · uncertainty`.
    pub significant: bool,
}

fn phi2_rows(etas: &[f64], scans: &[HbarScanResult]) -> Vec<Phi2Row> {
    let n = etas.len();
    (0..n)
        .map(|i| {
            let (f, m) = (&scans[i], &scans[n + i]);
            let difference = f.phi2() - m.phi2();
            let uncertainty = f.uncertainty(2).hypot(m.uncertainty(2));
            Phi2Row {
                eta: etas[i],
                phi2_fcs: f.phi2(),
                phi2_mh: m.phi2(),
                difference,
                uncertainty,
                significant: difference.norm() > 3.0 * uncertainty,
            }
        })
        .collect()
}

/// Second-order coefficients of FCS and MH side by side.
pub fn phi2_compare(etas: &[f64], p: &DriveProtocol, policy: &ScanPolicy) -> Result<Vec<Phi2Row>> {
    let scans = hbar_scan_grid(etas, p, &[WorkDefinition::Fcs, WorkDefinition::Mh], policy)?;
    Ok(phi2_rows(etas, &scans))
}

/// One η of the five comparison series: classical, zeroth order, and the FCS
/// and MH second-order corrections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1Row {
    pub eta: f64,
    pub classical: Complex64,
    /// Zeroth order, averaged over the FCS and MH fits.
    pub phi0: Complex64,
    /// `Φ⁽⁰⁾ + (iℏ)²Φ⁽²⁾` at the protocol ℏ.
    pub fcs_second_order: Complex64,
    pub mh_second_order: Complex64,
    pub phi2: Phi2Row,
}

pub fn fig1_table(p: &DriveProtocol, etas: &[f64], policy: &ScanPolicy) -> Result<Vec<Fig1Row>> {
    let scans = hbar_scan_grid(etas, p, &[WorkDefinition::Fcs, WorkDefinition::Mh], policy)?;
    let rows = phi2_rows(etas, &scans);
    let n = etas.len();
    let h2 = Complex64::new(0.0, p.hbar).powi(2);
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, phi2)| {
            let (f, m) = (&scans[i], &scans[n + i]);
            Fig1Row {
                eta: etas[i],
                classical: cf_classical_value(etas[i], p),
                phi0: 0.5 * (f.phi0() + m.phi0()),
                fcs_second_order: f.phi0() + h2 * f.phi2(),
                mh_second_order: m.phi0() + h2 * m.phi2(),
                phi2,
            }
        })
        .collect())
}
