//! Characteristic functions, quasi-distributions and moments from the
//! spectral decomposition of the initial and final Hamiltonians.
//!
//! With `Ũ = V_τ† Û V_0` and `r = V_0† ρ̂(0) V_0`, every definition has the
//! form `Φ(η) = Σ_m e^{iηE_m(τ)} Σ_{n,k} Ũ_mn M_nk(η) conj(Ũ_mk)`, so the
//! eigenbases are computed once and each η costs a few matrix products.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::types::{CharacteristicSamples, WorkDefinition, WorkQuasiDistribution};
use crate::error::{Error, Result};
use crate::operators::{
    build_hamiltonian, displaced_thermal, propagator, CMatrix, DensityMatrix, DriveProtocol,
    FockOperator, Spectrum, UNITARITY_TOL,
};
use crate::par;

/// Imaginary residual above which a merged weight is rejected.
pub const IMAG_RESIDUAL_TOL: f64 = 1e-8;

/// Default support merge tolerance in units of `ℏω`.
pub const DEFAULT_MERGE_FACTOR: f64 = 1e-6;

/// First three raw moments of a work distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkMoments {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

impl WorkMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.first * self.first
    }
}

/// Precomputed spectral data for one `(ρ̂(0), Ĥ(0), Ĥ(τ), Û)`.
#[derive(Clone, Debug)]
pub struct WorkProblem {
    e0: Vec<f64>,
    et: Vec<f64>,
    ut: CMatrix,
    r: CMatrix,
    /// `|Ũ_mn|² r_nn`: TPM weights on the dephased state.
    tpm: DMatrix<f64>,
    /// `½(Ũ_mn (rŨ†)_nm + (Ũr)_mn conj Ũ_mn)`: MH weights before taking the real part.
    mh: CMatrix,
}

impl WorkProblem {
    pub fn new(
        rho0: &DensityMatrix,
        h0: &FockOperator,
        ht: &FockOperator,
        u: &FockOperator,
    ) -> Result<Self> {
        let dim = rho0.dim();
        h0.require_dim(dim)?;
        ht.require_dim(dim)?;
        u.require_dim(dim)?;
        let defect = u.unitarity_defect();
        if !(defect < UNITARITY_TOL) {
            return Err(Error::InvalidArgument(format!(
                "propagator is not unitary (defect {defect:.3e})"
            )));
        }
        let s0 = Spectrum::of(h0)?;
        let st = Spectrum::of(ht)?;
        let ut = st.eigenvectors().adjoint() * u.matrix() * s0.eigenvectors();
        let r = s0.to_eigenbasis(rho0.matrix());
        let ur = &ut * &r;
        let rud = &r * ut.adjoint();
        let tpm = DMatrix::from_fn(dim, dim, |m, n| ut[(m, n)].norm_sqr() * r[(n, n)].re);
        let mh = CMatrix::from_fn(dim, dim, |m, n| {
            0.5 * (ut[(m, n)] * rud[(n, m)] + ur[(m, n)] * ut[(m, n)].conj())
        });
        Ok(Self {
            e0: s0.eigenvalues().iter().copied().collect(),
            et: st.eigenvalues().iter().copied().collect(),
            ut,
            r,
            tpm,
            mh,
        })
    }

    /// The dragged oscillator: `ρ̂(0)` from the pre-drive, `Ĥ(0)`, `Ĥ(τ)` and
    /// the propagator over `[0, τ]` with `steps` slices.
    pub fn for_protocol(p: &DriveProtocol, dim: usize, steps: usize) -> Result<Self> {
        let rho0 = displaced_thermal(p, dim)?;
        Self::for_state(&rho0, p, steps)
    }

    /// As [`WorkProblem::for_protocol`] with a caller-supplied initial state.
    pub fn for_state(rho0: &DensityMatrix, p: &DriveProtocol, steps: usize) -> Result<Self> {
        let dim = rho0.dim();
        let h0 = build_hamiltonian(p, 0.0, dim)?;
        let ht = build_hamiltonian(p, p.duration, dim)?;
        let u = propagator(p, 0.0, p.duration, steps, dim)?;
        Self::new(rho0, &h0, &ht, &u)
    }

    pub fn dim(&self) -> usize {
        self.e0.len()
    }

    pub fn initial_energies(&self) -> &[f64] {
        &self.e0
    }

    pub fn final_energies(&self) -> &[f64] {
        &self.et
    }

    /// Initial state in the eigenbasis of `Ĥ(0)`.
    pub fn initial_state(&self) -> &CMatrix {
        &self.r
    }

    /// `⟨m(τ)|Û|n(0)⟩`.
    pub fn transition_amplitudes(&self) -> &CMatrix {
        &self.ut
    }

    /// `Tr[Ĥ(τ)ρ̂(τ)] − Tr[Ĥ(0)ρ̂(0)]`.
    pub fn energy_change(&self) -> f64 {
        let rho_t = &self.ut * &self.r * self.ut.adjoint();
        let after: f64 = self.et.iter().enumerate().map(|(m, e)| e * rho_t[(m, m)].re).sum();
        let before: f64 = self.e0.iter().enumerate().map(|(n, e)| e * self.r[(n, n)].re).sum();
        after - before
    }

    fn pair_sum(&self, kernel: impl Fn(usize, usize) -> Complex64, eta: f64) -> Complex64 {
        let dim = self.dim();
        let left: Vec<Complex64> = self.et.iter().map(|e| Complex64::from_polar(1.0, eta * e)).collect();
        let right: Vec<Complex64> = self.e0.iter().map(|e| Complex64::from_polar(1.0, -eta * e)).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..dim {
            let mut row = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                row += kernel(m, n) * right[n];
            }
            total += left[m] * row;
        }
        total
    }

    /// `Φ(η)` for a single η.
    pub fn value(&self, definition: WorkDefinition, eta: f64) -> Result<Complex64> {
        match definition {
            WorkDefinition::Tpm => Ok(self.pair_sum(|m, n| Complex64::new(self.tpm[(m, n)], 0.0), eta)),
            WorkDefinition::Mh => Ok(self.pair_sum(|m, n| self.mh[(m, n)], eta)),
            WorkDefinition::Fcs => Ok(self.fcs_value(eta)),
            WorkDefinition::Classical => Err(Error::InvalidArgument(
                "classical characteristic function is not defined on a quantum problem".into(),
            )),
        }
    }

    fn fcs_value(&self, eta: f64) -> Complex64 {
        let dim = self.dim();
        let half: Vec<Complex64> = self.e0.iter().map(|e| Complex64::from_polar(1.0, -0.5 * eta * e)).collect();
        let b = CMatrix::from_fn(dim, dim, |m, n| self.ut[(m, n)] * half[n]);
        let br = &b * &self.r;
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..dim {
            let mut d = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                d += br[(m, k)] * half[k] * self.ut[(m, k)].conj();
            }
            total += Complex64::from_polar(1.0, eta * self.et[m]) * d;
        }
        total
    }

    /// `Φ` on a grid; η points are evaluated concurrently.
    pub fn characteristic(&self, definition: WorkDefinition, etas: &[f64]) -> Result<CharacteristicSamples> {
        let values: Result<Vec<Complex64>> =
            par::map_slice(etas, |&eta| self.value(definition, eta)).into_iter().collect();
        CharacteristicSamples::new(definition, etas.to_vec(), values?)
    }

    /// Unmerged support points with complex weights.
    fn raw_points(&self, definition: WorkDefinition, merge_tol: f64) -> Result<Vec<(f64, Complex64)>> {
        let dim = self.dim();
        match definition {
            WorkDefinition::Tpm | WorkDefinition::Mh => {
                let mut pts = Vec::with_capacity(dim * dim);
                for m in 0..dim {
                    for n in 0..dim {
                        let w = if definition == WorkDefinition::Tpm {
                            Complex64::new(self.tpm[(m, n)], 0.0)
                        } else {
                            self.mh[(m, n)]
                        };
                        pts.push((self.et[m] - self.e0[n], w));
                    }
                }
                Ok(pts)
            }
            WorkDefinition::Fcs => {
                // Cluster the pair energies (E_n + E_k)/2 once, then accumulate
                // the FCS triple sum per final level into those clusters.
                let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(dim * dim);
                for n in 0..dim {
                    for k in 0..dim {
                        pairs.push((0.5 * (self.e0[n] + self.e0[k]), n * dim + k));
                    }
                }
                let clusters = cluster(&mut pairs, merge_tol);
                let mut id = vec![0usize; dim * dim];
                let mut centers = Vec::with_capacity(clusters.len());
                for (c, members) in clusters.iter().enumerate() {
                    let mean = members.iter().map(|(s, _)| s).sum::<f64>() / members.len() as f64;
                    centers.push(mean);
                    for &(_, idx) in members {
                        id[idx] = c;
                    }
                }
                let per_m = par::map_range(dim, |m| {
                    let mut acc = vec![Complex64::new(0.0, 0.0); centers.len()];
                    for n in 0..dim {
                        let a = self.ut[(m, n)];
                        for k in 0..dim {
                            acc[id[n * dim + k]] += a * self.r[(n, k)] * self.ut[(m, k)].conj();
                        }
                    }
                    acc
                });
                let mut pts = Vec::with_capacity(dim * centers.len());
                for (m, acc) in per_m.into_iter().enumerate() {
                    for (c, w) in acc.into_iter().enumerate() {
                        pts.push((self.et[m] - centers[c], w));
                    }
                }
                Ok(pts)
            }
            WorkDefinition::Classical => Err(Error::InvalidArgument(
                "classical work has no discrete quasi-distribution".into(),
            )),
        }
    }

    /// Work quasi-distribution with support values closer than `merge_tol`
    /// merged. The result is checked against the characteristic function.
    pub fn quasi_distribution(
        &self,
        definition: WorkDefinition,
        merge_tol: f64,
    ) -> Result<WorkQuasiDistribution> {
        let spacing = self.min_level_spacing();
        if !(merge_tol > 0.0 && merge_tol < spacing / 10.0) {
            return Err(Error::InvalidArgument(format!(
                "merge tolerance {merge_tol:e} must be positive and below a tenth of the level spacing {spacing:e}"
            )));
        }
        let mut pts = self.raw_points(definition, merge_tol)?;
        let clusters = cluster(&mut pts, merge_tol);
        let mut support = Vec::with_capacity(clusters.len());
        let mut weights = Vec::with_capacity(clusters.len());
        let mut max_imag = 0.0_f64;
        for members in clusters {
            let w = members.iter().map(|(x, _)| x).sum::<f64>() / members.len() as f64;
            let total: Complex64 = members.iter().map(|(_, z)| z).sum();
            max_imag = max_imag.max(total.im.abs());
            support.push(w);
            weights.push(total.re);
        }
        if max_imag > IMAG_RESIDUAL_TOL {
            return Err(Error::Consistency(format!(
                "{definition} weights keep an imaginary residual {max_imag:.3e}"
            )));
        }
        let dist = WorkQuasiDistribution {
            definition,
            support,
            weights,
            merge_tol,
            max_imag_residual: max_imag,
        };
        let sum = dist.total_weight();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Consistency(format!(
                "{definition} weights sum to {sum:.15}"
            )));
        }
        if definition == WorkDefinition::Tpm && dist.min_weight() < -1e-12 {
            return Err(Error::Consistency(format!(
                "negative TPM weight {:.3e}",
                dist.min_weight()
            )));
        }
        Ok(dist)
    }

    /// Smallest gap between consecutive levels of `Ĥ(0)` and `Ĥ(τ)`.
    pub fn min_level_spacing(&self) -> f64 {
        [&self.e0, &self.et]
            .iter()
            .flat_map(|e| e.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Moments by direct summation over the spectral sums.
    pub fn moments(&self, definition: WorkDefinition) -> Result<WorkMoments> {
        let tol = DEFAULT_MERGE_FACTOR * self.min_level_spacing();
        let pts = self.raw_points(definition, tol)?;
        let mut m = [0.0_f64; 3];
        for (w, z) in pts {
            m[0] += z.re * w;
            m[1] += z.re * w * w;
            m[2] += z.re * w * w * w;
        }
        Ok(WorkMoments {
            first: m[0],
            second: m[1],
            third: m[2],
        })
    }

    /// Moments from central differences of `Φ` with step `h`.
    pub fn moments_finite_difference(&self, definition: WorkDefinition, h: f64) -> Result<WorkMoments> {
        let f = |e: f64| self.value(definition, e);
        let (p1, m1, p2, m2) = (f(h)?, f(-h)?, f(2.0 * h)?, f(-2.0 * h)?);
        let one = Complex64::new(1.0, 0.0);
        let d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        let d2 = (-p2 + 16.0 * p1 - 30.0 * one + 16.0 * m1 - m2) / (12.0 * h * h);
        let d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h);
        Ok(WorkMoments {
            first: d1.im,
            second: -d2.re,
            third: -d3.im,
        })
    }
}

/// Sort by value and split greedily: a cluster ends once a value exceeds the
/// cluster's first value by more than `tol`.
fn cluster<T: Copy>(items: &mut [(f64, T)], tol: f64) -> Vec<Vec<(f64, T)>> {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Vec<(f64, T)>> = Vec::new();
    let mut start = f64::NEG_INFINITY;
    for &item in items.iter() {
        match out.last_mut() {
            Some(last) if item.0 - start <= tol => last.push(item),
            _ => {
                start = item.0;
                out.push(vec![item]);
            }
        }
    }
    out
}

/// `Φ_TPM` of the projectively measured (dephased) initial state.
pub fn cf_tpm(
    rho0: &DensityMatrix,
    h0: &FockOperator,
    ht: &FockOperator,
    u: &FockOperator,
    etas: &[f64],
) -> Result<CharacteristicSamples> {
    WorkProblem::new(rho0, h0, ht, u)?.characteristic(WorkDefinition::Tpm, etas)
}

pub fn cf_fcs(
    rho0: &DensityMatrix,
    h0: &FockOperator,
    ht: &FockOperator,
    u: &FockOperator,
    etas: &[f64],
) -> Result<CharacteristicSamples> {
    WorkProblem::new(rho0, h0, ht, u)?.characteristic(WorkDefinition::Fcs, etas)
}

pub fn cf_mh(
    rho0: &DensityMatrix,
    h0: &FockOperator,
    ht: &FockOperator,
    u: &FockOperator,
    etas: &[f64],
) -> Result<CharacteristicSamples> {
    WorkProblem::new(rho0, h0, ht, u)?.characteristic(WorkDefinition::Mh, etas)
}

pub fn quasi_distribution(
    rho0: &DensityMatrix,
    h0: &FockOperator,
    ht: &FockOperator,
    u: &FockOperator,
    definition: WorkDefinition,
    merge_tol: f64,
) -> Result<WorkQuasiDistribution> {
    WorkProblem::new(rho0, h0, ht, u)?.quasi_distribution(definition, merge_tol)
}
