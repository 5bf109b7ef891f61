//! Number-basis Wigner kernels.
//!
//! In scaled coordinates `X = x√(mω)`, `P = p/√(mω)` and `α = (X + iP)/√(2ℏ)`,
//! the Wigner function of `|m⟩⟨n|` (m = n + k ≥ n) is
//! `(1/2πℏ)·K_mn` with
//! `K_mn = 2(−1)ⁿ e^{−ik·arg α} Φₙ⁽ᵏ⁾(4|α|²)` and
//! `Φₙ⁽ᵏ⁾(y) = √(n!/(n+k)!) y^{k/2} e^{−y/2} Lₙ⁽ᵏ⁾(y)`, and `K_nm = conj K_mn`.

use num_complex::Complex64;

use crate::classical::PhasePoint;
use crate::operators::DriveProtocol;

/// Beyond this `y = 4|α|²` every kernel is below `e^{−y/2 + …}` and is
/// reported as zero.
pub const UNDERFLOW_Y: f64 = 1400.0;

/// Scaled coordinates and `α` of a phase-space point.
pub fn alpha(z: PhasePoint, p: &DriveProtocol) -> Complex64 {
    let s = (p.mass * p.omega).sqrt();
    Complex64::new(z.x * s, z.p / s) / (2.0 * p.hbar).sqrt()
}

/// `ln k!` for `k < len`.
pub(crate) fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len.max(1));
    out.push(0.0);
    for k in 1..len {
        out.push(out[k - 1] + (k as f64).ln());
    }
    out
}

/// `Φₙ⁽ᵏ⁾(y)` for `n = 0..count` by the three-term recurrence, written to
/// `out`. `ln_k_fact` is `ln k!`.
pub(crate) fn laguerre_functions(k: usize, y: f64, ln_k_fact: f64, out: &mut [f64]) {
    let count = out.len();
    if count == 0 {
        return;
    }
    let kf = k as f64;
    let phi0 = if k == 0 {
        (-0.5 * y).exp()
    } else if y == 0.0 {
        0.0
    } else {
        (0.5 * kf * y.ln() - 0.5 * y - 0.5 * ln_k_fact).exp()
    };
    out[0] = phi0;
    if count == 1 {
        return;
    }
    out[1] = (1.0 + kf - y) * phi0 / (kf + 1.0).sqrt();
    for n in 1..count - 1 {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0 + kf - y) * out[n] - (nf * (nf + kf)).sqrt() * out[n - 1])
            / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
    }
}

/// Plain Laguerre polynomials `Lₙ(x)` for `n = 0..=n_max`.
pub fn laguerre(n_max: usize, x: f64) -> Vec<f64> {
    let mut l = Vec::with_capacity(n_max + 1);
    l.push(1.0);
    if n_max >= 1 {
        l.push(1.0 - x);
    }
    for n in 1..n_max {
        let nf = n as f64;
        l.push(((2.0 * nf + 1.0 - x) * l[n] - nf * l[n - 1]) / (nf + 1.0));
    }
    l
}

/// `F_n(z)`, the Fock-state Wigner function times `2πℏ`, with a flag set
/// when the Gaussian envelope underflows and 0 is returned.
pub fn fock_wigner_checked(n: usize, z: PhasePoint, p: &DriveProtocol) -> (f64, bool) {
    let y = 4.0 * alpha(z, p).norm_sqr();
    if y > UNDERFLOW_Y {
        return (0.0, true);
    }
    let mut phi = vec![0.0; n + 1];
    laguerre_functions(0, y, 0.0, &mut phi);
    let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
    (sign * phi[n], false)
}

/// `F_n(z) = 2(−1)ⁿ e^{−2|α|²} Lₙ(4|α|²)`.
pub fn fock_wigner(n: usize, z: PhasePoint, p: &DriveProtocol) -> f64 {
    fock_wigner_checked(n, z, p).0
}

/// `Σ_{n≤N} Lₙ(x)Lₙ(y) e^{−(x+y)/2}`; tends to `δ(x − y)` as `N` grows.
pub fn laguerre_kernel(x: f64, y: f64, n_max: usize) -> f64 {
    let lx = laguerre(n_max, x);
    let ly = laguerre(n_max, y);
    lx.iter().zip(&ly).map(|(a, b)| a * b).sum::<f64>() * (-(x + y) / 2.0).exp()
}

/// Truncation diagnostic for the Laguerre completeness relation: integral
/// and second moment about `x` of `y ↦ kernel(x, y)` on `[0, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaguerreDiagnostic {
    pub n_max: usize,
    pub integral: f64,
    /// `√∫(y − x)² K dy`, shrinking as the kernel concentrates.
    pub spread: f64,
}

pub fn laguerre_identity_diagnostic(x: f64, n_max: usize, y_max: f64, samples: usize) -> LaguerreDiagnostic {
    let samples = samples.max(2) & !1;
    let h = y_max / samples as f64;
    let mut integral = 0.0;
    let mut second = 0.0;
    for i in 0..=samples {
        let y = i as f64 * h;
        let w = if i == 0 || i == samples {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let k = laguerre_kernel(x, y, n_max);
        integral += w * k;
        second += w * k * (y - x) * (y - x);
    }
    LaguerreDiagnostic {
        n_max,
        integral: integral * h / 3.0,
        spread: (second * h / 3.0).abs().sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DriveProtocol {
        DriveProtocol::fig1()
    }

    #[test]
    fn fock_values_at_origin() {
        let o = PhasePoint::new(0.0, 0.0);
        assert!((fock_wigner(0, o, &unit()) - 2.0).abs() < 1e-15);
        assert!((fock_wigner(1, o, &unit()) + 2.0).abs() < 1e-15);
        assert!((fock_wigner(4, o, &unit()) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn recurrence_matches_explicit_laguerre() {
        // L₂⁽³⁾(y) = (y² − 10y + 20)/2
        let y: f64 = 1.7;
        let mut phi = vec![0.0; 3];
        let lf = ln_factorials(8);
        laguerre_functions(3, y, lf[3], &mut phi);
        let l = 0.5 * (y * y - 10.0 * y + 20.0);
        let expected = (2.0_f64 / 120.0).sqrt() * y.powf(1.5) * (-0.5 * y).exp() * l;
        assert!((phi[2] - expected).abs() < 1e-14);
        let plain = laguerre(5, y);
        let mut phi0 = vec![0.0; 6];
        laguerre_functions(0, y, 0.0, &mut phi0);
        for n in 0..6 {
            assert!((phi0[n] - (-0.5 * y).exp() * plain[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn fock_normalization_by_quadrature() {
        let p = DriveProtocol { mass: 2.0, omega: 0.5, hbar: 0.7, ..unit() };
        for n in [0, 1, 3, 6] {
            // Radial quadrature in scaled coordinates: dx dp = dX dP.
            let (r_max, steps) = (9.0, 6000);
            let h = r_max / steps as f64;
            let mut acc = 0.0;
            for i in 0..=steps {
                let r = i as f64 * h;
                let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let s = (p.mass * p.omega).sqrt();
                let z = PhasePoint::new(r / s, 0.0);
                acc += w * fock_wigner(n, z, &p) * 2.0 * std::f64::consts::PI * r;
            }
            let integral = acc * h / 3.0 / (2.0 * std::f64::consts::PI * p.hbar);
            assert!((integral - 1.0).abs() < 1e-6, "n={n}: {integral}");
        }
    }

    #[test]
    fn far_points_underflow_to_zero() {
        let (v, flag) = fock_wigner_checked(3, PhasePoint::new(40.0, 0.0), &unit());
        assert_eq!(v, 0.0);
        assert!(flag);
        let (_, flag) = fock_wigner_checked(3, PhasePoint::new(1.0, 0.0), &unit());
        assert!(!flag);
    }

    #[test]
    fn laguerre_kernel_concentrates() {
        let a = laguerre_identity_diagnostic(5.0, 20, 60.0, 4000);
        let b = laguerre_identity_diagnostic(5.0, 80, 60.0, 4000);
        assert!(b.spread < a.spread);
        assert!((b.integral - 1.0).abs() < 0.1, "{}", b.integral);
    }
}
