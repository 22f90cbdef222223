//! Driving field `B = B₀ cos(ωt + φ)`, its exponential turn-on, and the small
//! parameters derived from it.
//!
//! All quantities are evaluated in the caller's units: frequencies in rad per
//! unit time and times in the same unit. The formulas are homogeneous, so
//! choosing ω = 1 simply measures time in units of 1/ω.

use std::fmt;

use crate::{Error, Result};

/// Adiabaticity thresholds below which a [`Warning`] is attached.
pub const MIN_TAU_SW_OMEGA: f64 = 50.0;
pub const MIN_TAU_SW_G0M: f64 = 10.0;

/// Upper bound (exclusive) on η₀ = g0M / 4ω.
pub const MAX_ETA0: f64 = 0.25;

/// How the Bloch-Siegert shift Δ(t) = g₀²(t)/4ω is handled by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BsCompensation {
    /// The drive frequency tracks Δ(t) continuously.
    #[default]
    Dynamic,
    /// A fixed counter-shift equal to the saturated Δ(∞).
    Static,
    /// No compensation; the system sees the full Bloch-Siegert detuning.
    Off,
}

impl fmt::Display for BsCompensation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BsCompensation::Dynamic => "dynamic",
            BsCompensation::Static => "static",
            BsCompensation::Off => "off",
        })
    }
}

impl std::str::FromStr for BsCompensation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dynamic" | "true" | "on" => Ok(BsCompensation::Dynamic),
            "static" => Ok(BsCompensation::Static),
            "off" | "false" | "none" => Ok(BsCompensation::Off),
            other => Err(format!(
                "unknown compensation `{other}` (expected dynamic, static or off)"
            )),
        }
    }
}

/// Soft violations of the adiabatic-switching premise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// τ_sw·ω below [`MIN_TAU_SW_OMEGA`].
    FastSwitchingVsDrive { tau_sw_omega: f64 },
    /// τ_sw·g0M below [`MIN_TAU_SW_G0M`].
    FastSwitchingVsRabi { tau_sw_g0m: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::FastSwitchingVsDrive { tau_sw_omega } => write!(
                f,
                "τ_sw·ω = {tau_sw_omega} < {MIN_TAU_SW_OMEGA}: switching is not adiabatic w.r.t. the drive"
            ),
            Warning::FastSwitchingVsRabi { tau_sw_g0m } => write!(
                f,
                "τ_sw·g0M = {tau_sw_g0m} < {MIN_TAU_SW_G0M}: switching is not adiabatic w.r.t. the Rabi frequency"
            ),
        }
    }
}

/// Parameters of the resonant drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    g0m: f64,
    omega: f64,
    phi: f64,
    tau_sw: f64,
    compensation: BsCompensation,
}

impl FieldParams {
    /// `g0m` is the peak Rabi frequency, `omega` the (resonant) drive
    /// frequency, `phi` the initial field phase and `tau_sw` the switching
    /// time constant. `tau_sw = 0` selects an instantaneous turn-on and
    /// `g0m = 0` an undriven system.
    pub fn new(g0m: f64, omega: f64, phi: f64, tau_sw: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                reason: "must be positive and finite",
            });
        }
        if !(g0m.is_finite() && g0m >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "g0M",
                value: g0m,
                reason: "must be non-negative and finite",
            });
        }
        if g0m / (4.0 * omega) >= MAX_ETA0 {
            return Err(Error::InvalidParameter {
                name: "g0M",
                value: g0m,
                reason: "η₀ = g0M/4ω must stay below 0.25",
            });
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "must be finite",
            });
        }
        if !(tau_sw.is_finite() && tau_sw >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau_sw",
                value: tau_sw,
                reason: "must be non-negative and finite",
            });
        }
        Ok(FieldParams {
            g0m,
            omega,
            phi,
            tau_sw,
            compensation: BsCompensation::default(),
        })
    }

    /// Parameters with peak coupling given through η₀ instead of g0M.
    pub fn from_eta0(eta0: f64, omega: f64, phi: f64, tau_sw: f64) -> Result<Self> {
        Self::new(4.0 * eta0 * omega, omega, phi, tau_sw)
    }

    pub fn with_compensation(mut self, compensation: BsCompensation) -> Self {
        self.compensation = compensation;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_tau_sw(self, tau_sw: f64) -> Result<Self> {
        Self::new(self.g0m, self.omega, self.phi, tau_sw)
            .map(|p| p.with_compensation(self.compensation))
    }

    pub fn g0m(&self) -> f64 {
        self.g0m
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn tau_sw(&self) -> f64 {
        self.tau_sw
    }

    pub fn compensation(&self) -> BsCompensation {
        self.compensation
    }

    pub fn is_instantaneous(&self) -> bool {
        self.tau_sw == 0.0
    }

    /// η₀ = g0M / 4ω.
    pub fn eta0(&self) -> f64 {
        self.g0m / (4.0 * self.omega)
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let mut out = Vec::new();
        let tau_sw_omega = self.tau_sw * self.omega;
        if tau_sw_omega < MIN_TAU_SW_OMEGA {
            out.push(Warning::FastSwitchingVsDrive { tau_sw_omega });
        }
        let tau_sw_g0m = self.tau_sw * self.g0m;
        if self.g0m > 0.0 && tau_sw_g0m < MIN_TAU_SW_G0M {
            out.push(Warning::FastSwitchingVsRabi { tau_sw_g0m });
        }
        out
    }

    /// Phase of the field at time `t`, ωt + φ.
    pub fn field_phase(&self, t: f64) -> f64 {
        self.omega * t + self.phi
    }

    /// g₀(t) = g0M[1 − exp(−t/τ_sw)].
    pub fn switching_profile(&self, t: f64) -> Result<f64> {
        check_nonneg(t)?;
        Ok(self.envelope(t))
    }

    /// Time average of the envelope, g₀′(t) = (1/t)∫₀ᵗ g₀(s) ds.
    pub fn effective_rabi(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain("t", t, "effective Rabi frequency needs t > 0"));
        }
        if self.is_instantaneous() {
            return Ok(self.g0m);
        }
        Ok(self.rabi_angle_unchecked(t) / t)
    }

    /// η(t) = g₀(t) / 4ω.
    pub fn eta(&self, t: f64) -> Result<f64> {
        Ok(self.switching_profile(t)? / (4.0 * self.omega))
    }

    /// Δ(t) = g₀²(t) / 4ω.
    pub fn bloch_siegert_shift(&self, t: f64) -> Result<f64> {
        let g = self.switching_profile(t)?;
        Ok(g * g / (4.0 * self.omega))
    }

    /// Accumulated Rabi angle θ(t) = ∫₀ᵗ g₀(s) ds = g₀′(t)·t.
    pub fn rabi_angle(&self, t: f64) -> Result<f64> {
        check_nonneg(t)?;
        Ok(self.rabi_angle_unchecked(t))
    }

    pub(crate) fn envelope(&self, t: f64) -> f64 {
        if self.is_instantaneous() {
            self.g0m
        } else {
            -self.g0m * (-t / self.tau_sw).exp_m1()
        }
    }

    pub(crate) fn eta_unchecked(&self, t: f64) -> f64 {
        self.envelope(t) / (4.0 * self.omega)
    }

    pub(crate) fn rabi_angle_unchecked(&self, t: f64) -> f64 {
        if self.is_instantaneous() {
            return self.g0m * t;
        }
        self.g0m * self.tau_sw * lagged_ramp(t / self.tau_sw)
    }

    /// Diagonal counter-shift applied by the solvers at time `t`.
    pub(crate) fn compensation_shift(&self, t: f64) -> f64 {
        match self.compensation {
            BsCompensation::Dynamic => {
                let g = self.envelope(t);
                g * g / (4.0 * self.omega)
            }
            BsCompensation::Static => self.g0m * self.g0m / (4.0 * self.omega),
            BsCompensation::Off => 0.0,
        }
    }
}

fn check_nonneg(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("t", t, "time must be non-negative"))
    }
}

/// x − (1 − e^{−x}), evaluated without cancellation near zero.
fn lagged_ramp(x: f64) -> f64 {
    if x < 1e-3 {
        // x²/2 − x³/6 + x⁴/24 − x⁵/120
        let x2 = x * x;
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0)
    } else {
        x + (-x).exp_m1()
    }
}
