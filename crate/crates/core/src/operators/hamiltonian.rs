use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fock::{herm_exp, DensityMatrix, FockOperator, Spectrum};
use super::protocol::DriveProtocol;
use crate::classical::{newton_map_with_center, PhasePoint};
use crate::error::{Error, Result};

/// Number of top levels whose population is checked against [`TAIL_TOL`].
pub const TAIL_LEVELS: usize = 5;
pub const TAIL_TOL: f64 = 1e-10;

/// Annihilation and creation operators on `dim` levels.
pub fn build_ladder(dim: usize) -> Result<(FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "ladder operators need at least 2 levels".into(),
        });
    }
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    let create = a.transpose();
    Ok((
        FockOperator::from_real(a, false)?,
        FockOperator::from_real(create, false)?,
    ))
}

/// Position operator `√(ℏ/2mω) (a + a†)`.
pub fn position(p: &DriveProtocol, dim: usize) -> Result<FockOperator> {
    let (a, ad) = build_ladder(dim)?;
    let scale = (p.hbar / (2.0 * p.mass * p.omega)).sqrt();
    FockOperator::new((a.matrix() + ad.matrix()) * Complex64::new(scale, 0.0), true)
}

/// Momentum operator `i √(ℏmω/2) (a† − a)`.
pub fn momentum(p: &DriveProtocol, dim: usize) -> Result<FockOperator> {
    let (a, ad) = build_ladder(dim)?;
    let scale = (p.hbar * p.mass * p.omega / 2.0).sqrt();
    FockOperator::new((ad.matrix() - a.matrix()) * Complex64::new(0.0, scale), true)
}

/// The real symmetric tridiagonal form of `H(t)` in the number basis.
///
/// `H(t) = ℏω(n + ½) − mω²ut x + ½mω²(ut)²`, which is
/// `p²/2m + ½mω²(x − ut)²` with the oscillator part kept exactly diagonal
/// (squaring truncated `x` and `p` would corrupt the top level).
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn hamiltonian(p: &DriveProtocol, t: f64, dim: usize) -> Self {
        let shift = 0.5 * p.mass * p.omega * p.omega * p.well_center(t).powi(2);
        let force = -p.mass * p.omega * p.omega * p.well_center(t);
        let x_scale = (p.hbar / (2.0 * p.mass * p.omega)).sqrt();
        let diag = (0..dim)
            .map(|n| p.hbar * p.omega * (n as f64 + 0.5) + shift)
            .collect();
        let off = (1..dim)
            .map(|n| force * x_scale * (n as f64).sqrt())
            .collect();
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_operator(&self) -> FockOperator {
        let n = self.dim();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.off.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        FockOperator::from_real(m, true).expect("tridiagonal form is symmetric")
    }

    /// Gershgorin bounds on the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

/// `Ĥ(t)` of the dragged oscillator on `dim` levels, `t ∈ [−τ′, τ]`.
pub fn build_hamiltonian(p: &DriveProtocol, t: f64, dim: usize) -> Result<FockOperator> {
    p.validate()?;
    p.check_time(t)?;
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "Hamiltonian needs at least 2 levels".into(),
        });
    }
    Ok(Tridiagonal::hamiltonian(p, t, dim).to_operator())
}

/// `|α|²` of a phase-space point measured from the origin of the number basis.
fn coherent_amplitude_sq(p: &DriveProtocol, z: PhasePoint) -> f64 {
    let mw = p.mass * p.omega;
    (mw * z.x * z.x + z.p * z.p / mw) / (2.0 * p.hbar)
}

/// Levels needed so that a thermal state displaced by `|α|²` keeps the top
/// [`TAIL_LEVELS`] populations below [`TAIL_TOL`], with margin.
pub fn estimate_dimension(p: &DriveProtocol, alpha_sq: f64) -> usize {
    let q = p.beta * p.hbar * p.omega;
    // Geometric thermal tail e^{-qK} below 1e-12.
    let thermal_levels = (1e12_f64).ln() / q;
    let n = (alpha_sq.max(0.0).sqrt() + thermal_levels.sqrt()).powi(2);
    (n.ceil() as usize + TAIL_LEVELS + 5).max(8)
}

/// Largest `|α|²` reached by the state centers over the forward protocol, the
/// equilibrium states at `−τ′`, `0`, `τ`, and the reversed protocol.
pub fn max_excursion(p: &DriveProtocol) -> f64 {
    let samples = 64;
    let mut worst = 0.0_f64;
    let start = PhasePoint::new(p.well_center(-p.pre_duration), 0.0);
    let total = p.pre_duration + p.duration;
    for i in 0..=samples {
        let s = total * i as f64 / samples as f64;
        let z = newton_map_with_center(start, s, p, p.well_center(-p.pre_duration), p.drag_speed);
        worst = worst.max(coherent_amplitude_sq(p, z));
    }
    let rev_start = PhasePoint::new(p.well_center(p.duration), 0.0);
    for i in 0..=samples {
        let s = p.duration * i as f64 / samples as f64;
        let z = newton_map_with_center(rev_start, s, p, p.well_center(p.duration), -p.drag_speed);
        worst = worst.max(coherent_amplitude_sq(p, z));
    }
    worst
}

/// Default truncation for a protocol.
pub fn auto_dimension(p: &DriveProtocol) -> usize {
    estimate_dimension(p, max_excursion(p))
}

fn check_tail(rho: &DensityMatrix, p: &DriveProtocol, alpha_sq: f64) -> Result<()> {
    let tail = rho.tail_population(TAIL_LEVELS);
    if tail >= TAIL_TOL {
        return Err(Error::TruncationTooSmall {
            dim: rho.dim(),
            required: estimate_dimension(p, alpha_sq).max(rho.dim() + 1),
            tail,
        });
    }
    Ok(())
}

/// Truncated partition function `Σ e^{−βE_n}` of `Ĥ(t)`.
pub fn partition_function(p: &DriveProtocol, t: f64, dim: usize) -> Result<f64> {
    let h = build_hamiltonian(p, t, dim)?;
    let s = Spectrum::of(&h)?;
    Ok(s.eigenvalues().iter().map(|e| (-p.beta * e).exp()).sum())
}

/// Gibbs state `exp(−βĤ(t))/Z` in the truncated basis.
pub fn thermal_state(p: &DriveProtocol, t: f64, dim: usize) -> Result<DensityMatrix> {
    let h = build_hamiltonian(p, t, dim)?;
    let spectrum = Spectrum::of(&h)?;
    let ground = spectrum.eigenvalues()[0];
    let m = spectrum.apply_fn(|e| Complex64::new((-p.beta * (e - ground)).exp(), 0.0));
    let rho = DensityMatrix::normalized(m)?;
    let alpha_sq = coherent_amplitude_sq(p, PhasePoint::new(p.well_center(t), 0.0));
    check_tail(&rho, p, alpha_sq)?;
    Ok(rho)
}

/// Displacement operator `exp(i(p₀x̂ − x₀p̂)/ℏ)`, built as a spectral
/// exponential of the Hermitian generator.
pub fn displacement(p: &DriveProtocol, center: PhasePoint, dim: usize) -> Result<FockOperator> {
    let x = position(p, dim)?;
    let mom = momentum(p, dim)?;
    let gen = x.matrix() * Complex64::new(center.p, 0.0) - mom.matrix() * Complex64::new(center.x, 0.0);
    let gen = FockOperator::hermitian_part(&gen);
    herm_exp(&gen, Complex64::new(0.0, 1.0 / p.hbar))
}

/// The state `ρ̂(0)` at the end of the pre-drive: the thermal state of
/// `Ĥ(0)` displaced to `(x₀, p₀) = (−(u/ω) sin ωτ′, mu(1 − cos ωτ′))`.
pub fn displaced_thermal(p: &DriveProtocol, dim: usize) -> Result<DensityMatrix> {
    let thermal = thermal_state(p, 0.0, dim)?;
    let (x0, p0) = p.initial_center();
    if x0 == 0.0 && p0 == 0.0 {
        return Ok(thermal);
    }
    let center = PhasePoint::new(x0, p0);
    let d = displacement(p, center, dim)?;
    let shifted = DensityMatrix::new(thermal.evolve(&d)?.into_matrix())?;
    check_tail(&shifted, p, coherent_amplitude_sq(p, center))?;
    Ok(shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fock::max_abs;

    #[test]
    fn ladder_entries_n3() {
        let (a, ad) = build_ladder(3).unwrap();
        let m = a.matrix();
        assert_eq!(m[(0, 1)].re, 1.0);
        assert!((m[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        let nonzero = m.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
        assert_eq!(ad.matrix(), &a.matrix().adjoint());
    }

    #[test]
    fn ladder_commutator_block() {
        let n = 30;
        let (a, ad) = build_ladder(n).unwrap();
        let comm = a.matrix() * ad.matrix() - ad.matrix() * a.matrix();
        let mut worst = 0.0_f64;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((comm[(i, j)] - target).norm());
            }
        }
        assert!(worst < 1e-14);
    }

    #[test]
    fn ladder_rejects_single_level() {
        assert!(matches!(build_ladder(1), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn static_hamiltonian_at_t0() {
        let p = DriveProtocol::fig1();
        let h = build_hamiltonian(&p, 0.0, 20).unwrap();
        let s = Spectrum::of(&h).unwrap();
        assert!((s.eigenvalues()[0] - 0.5).abs() < 1e-12);
        let (a, ad) = build_ladder(20).unwrap();
        let number = ad.matrix() * a.matrix();
        let expected = number.map(|z| z * p.hbar * p.omega)
            + nalgebra::DMatrix::<Complex64>::identity(20, 20) * Complex64::new(0.5, 0.0);
        assert!(max_abs(&(h.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn displaced_well_keeps_ground_energy() {
        let p = DriveProtocol::fig1();
        let h = build_hamiltonian(&p, 1.0, 80).unwrap();
        let s = Spectrum::of(&h).unwrap();
        assert!((s.eigenvalues()[0] - 0.5).abs() < 1e-10);
        for n in 0..40 {
            assert!((s.eigenvalues()[n] - (n as f64 + 0.5)).abs() < 1e-8, "level {n}");
        }
    }

    #[test]
    fn hamiltonian_time_domain() {
        let p = DriveProtocol::fig1();
        assert!(matches!(
            build_hamiltonian(&p, 2.5, 10),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(build_hamiltonian(&p, -1.0, 10).is_ok());
    }

    #[test]
    fn thermal_ground_population() {
        let p = DriveProtocol::fig1();
        let rho = thermal_state(&p, 0.0, 60).unwrap();
        let p0 = 1.0 - (-1.0_f64).exp();
        assert!((rho.populations()[0] - p0).abs() < 1e-12);
        assert!((rho.populations()[0] - 0.632_121).abs() < 1e-6);
    }

    #[test]
    fn cold_thermal_is_pure() {
        let p = DriveProtocol { beta: 50.0, ..DriveProtocol::fig1() };
        let rho = thermal_state(&p, 0.0, 20).unwrap();
        assert!(rho.purity() > 1.0 - 1e-10);
    }

    #[test]
    fn thermal_tail_error_names_dimension() {
        let p = DriveProtocol { beta: 0.2, ..DriveProtocol::fig1() };
        match thermal_state(&p, 0.0, 30) {
            Err(Error::TruncationTooSmall { dim, required, .. }) => {
                assert_eq!(dim, 30);
                assert!(required > 30);
                assert!(thermal_state(&p, 0.0, required).is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_partition_function_matches_closed_form() {
        let p = DriveProtocol::fig1();
        let z = partition_function(&p, 0.0, 80).unwrap();
        assert!((z - p.quantum_partition_function()).abs() < 1e-12);
        assert!((z - 0.959_517).abs() < 1e-6);
    }

    #[test]
    fn no_pre_drive_gives_thermal_state() {
        let p = DriveProtocol { pre_duration: 0.0, ..DriveProtocol::fig1() };
        let rho = displaced_thermal(&p, 40).unwrap();
        let th = thermal_state(&p, 0.0, 40).unwrap();
        assert_eq!(rho, th);
        let h = build_hamiltonian(&p, 0.0, 40).unwrap();
        let comm = h.matrix() * rho.matrix() - rho.matrix() * h.matrix();
        assert!(max_abs(&comm) < 1e-14);
    }

    #[test]
    fn displaced_thermal_moments() {
        let p = DriveProtocol::fig1();
        let n = 60;
        let rho = displaced_thermal(&p, n).unwrap();
        let x = position(&p, n).unwrap();
        let mom = momentum(&p, n).unwrap();
        let (x0, p0) = p.initial_center();
        assert!((rho.expectation(&x).re - x0).abs() < 1e-10);
        assert!((rho.expectation(&mom).re - p0).abs() < 1e-10);
        assert!((x0 + 0.841_471).abs() < 1e-6);
        assert!((p0 - 0.459_698).abs() < 1e-6);
    }

    #[test]
    fn auto_dimension_passes_tail_checks() {
        let p = DriveProtocol::fig1();
        let n = auto_dimension(&p);
        assert!(n < 120, "auto dimension {n} unexpectedly large");
        assert!(thermal_state(&p, p.duration, n).is_ok());
        assert!(thermal_state(&p, -p.pre_duration, n).is_ok());
        assert!(displaced_thermal(&p, n).is_ok());
    }
}
