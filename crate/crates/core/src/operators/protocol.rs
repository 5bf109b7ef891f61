use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the linearly dragged harmonic oscillator
/// `H(t) = p²/2m + ½ m ω² (x − u t)²`.
///
/// The system starts in equilibrium at `t = −pre_duration`, is dragged up to
/// `t = 0` (which prepares a coherent initial state), and work is counted over
/// the second stage `t ∈ [0, duration]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    pub mass: f64,
    pub omega: f64,
    pub drag_speed: f64,
    pub pre_duration: f64,
    pub duration: f64,
    pub beta: f64,
    pub hbar: f64,
}

impl DriveProtocol {
    pub fn new(
        mass: f64,
        omega: f64,
        drag_speed: f64,
        pre_duration: f64,
        duration: f64,
        beta: f64,
        hbar: f64,
    ) -> Result<Self> {
        let p = Self {
            mass,
            omega,
            drag_speed,
            pre_duration,
            duration,
            beta,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    /// β = u = m = ω = ℏ = 1, τ′ = 1, τ = 2.
    pub fn fig1() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            drag_speed: 1.0,
            pre_duration: 1.0,
            duration: 2.0,
            beta: 1.0,
            hbar: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("omega", self.omega),
            ("beta", self.beta),
            ("hbar", self.hbar),
            ("duration", self.duration),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProtocol(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.pre_duration.is_finite() && self.pre_duration >= 0.0) {
            return Err(Error::InvalidProtocol(format!(
                "pre_duration must be finite and >= 0, got {}",
                self.pre_duration
            )));
        }
        if !self.drag_speed.is_finite() {
            return Err(Error::InvalidProtocol("drag_speed must be finite".into()));
        }
        Ok(())
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validate()?;
        Ok(self)
    }

    pub fn with_pre_duration(mut self, pre_duration: f64) -> Result<Self> {
        self.pre_duration = pre_duration;
        self.validate()?;
        Ok(self)
    }

    pub fn with_drag_speed(mut self, drag_speed: f64) -> Result<Self> {
        self.drag_speed = drag_speed;
        self.validate()?;
        Ok(self)
    }

    /// Center of the well at time `t`.
    pub fn well_center(&self, t: f64) -> f64 {
        self.drag_speed * t
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let (start, end) = (-self.pre_duration, self.duration);
        // Allow a few ulps so that end points computed by accumulation pass.
        let slack = 1e-12 * (1.0 + start.abs().max(end.abs()));
        if !(t.is_finite() && t >= start - slack && t <= end + slack) {
            return Err(Error::TimeOutOfRange { t, start, end });
        }
        Ok(())
    }

    /// Phase-space center `(x₀, p₀)` of the state at `t = 0`, reached by
    /// dragging the equilibrium state from `t = −τ′`.
    pub fn initial_center(&self) -> (f64, f64) {
        let wt = self.omega * self.pre_duration;
        (
            -(self.drag_speed / self.omega) * wt.sin(),
            self.mass * self.drag_speed * (1.0 - wt.cos()),
        )
    }

    /// Quantum partition function `1 / (2 sinh(βℏω/2))` of the infinite basis.
    pub fn quantum_partition_function(&self) -> f64 {
        1.0 / (2.0 * (0.5 * self.beta * self.hbar * self.omega).sinh())
    }

    /// Classical partition function `2π / (βω)`.
    pub fn classical_partition_function(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.beta * self.omega)
    }

    /// Thermal occupation `1/(e^{βℏω} − 1)`.
    pub fn mean_occupation(&self) -> f64 {
        1.0 / (self.beta * self.hbar * self.omega).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        let p = DriveProtocol::fig1();
        assert!(DriveProtocol { mass: 0.0, ..p }.validate().is_err());
        assert!(DriveProtocol { hbar: -1.0, ..p }.validate().is_err());
        assert!(DriveProtocol { duration: 0.0, ..p }.validate().is_err());
        assert!(DriveProtocol { pre_duration: -0.1, ..p }.validate().is_err());
        assert!(DriveProtocol { pre_duration: 0.0, ..p }.validate().is_ok());
        assert!(DriveProtocol { beta: f64::NAN, ..p }.validate().is_err());
    }

    #[test]
    fn fig1_initial_center() {
        let (x0, p0) = DriveProtocol::fig1().initial_center();
        assert!((x0 + 0.841_470_984_807_896_5).abs() < 1e-15);
        assert!((p0 - 0.459_697_694_131_860_3).abs() < 1e-15);
    }

    #[test]
    fn partition_functions() {
        let p = DriveProtocol::fig1();
        assert!((p.quantum_partition_function() - 0.959_517_375_667_471_9).abs() < 1e-12);
        assert!((p.classical_partition_function() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn time_window() {
        let p = DriveProtocol::fig1();
        assert!(p.check_time(-1.0).is_ok());
        assert!(p.check_time(2.0).is_ok());
        assert!(p.check_time(2.1).is_err());
        assert!(p.check_time(-1.5).is_err());
    }
}
