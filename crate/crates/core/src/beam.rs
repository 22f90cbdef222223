//! Atomic-beam realization: the field switches on in space, atoms of speed v
//! see it switch on in time with τ_sw = z_sw/v, and the detector at a fixed
//! position averages over the Maxwell-Boltzmann flux distribution
//! f(v) = 2v³u⁻⁴ exp(−v²/u²).
//!
//! The observed population factorizes as S(t) = A + B sin(2ωt + 2φ) with
//!
//! ```text
//! A = ∫ f(v) sin²(θ_v/2) dv,   B = η₀ ∫ f(v) sin θ_v dv,
//! ```
//!
//! where θ_v is the Rabi angle accumulated over τ_v = τ̄u/v. Since
//! τ_v / τ_sw,v = τ̄u/z_sw is the same for every group, θ_v = (u/v)θ_u and the
//! integrand oscillates without bound as v → 0. The velocity integral is
//! therefore split: Gauss-Legendre panels in v above `v_split·u`, panels in
//! w = u/v sized to the local oscillation below it, and the negligible mass
//! under `v_floor·u` taken at its phase average.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::analytic::solve_rabi_angle;
use crate::quadrature::GaussLegendre;
use crate::{Error, FieldParams, Result};

/// Largest change allowed when the node count is doubled.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Velocity-integral discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityQuadrature {
    /// Gauss-Legendre nodes per panel in the smooth region (half that in
    /// the oscillatory region, never fewer than 4).
    pub nodes: usize,
    /// Upper cut-off in units of u.
    pub v_max: f64,
    /// Boundary between the two regions, in units of u.
    pub v_split: f64,
    /// Below this speed (units of u) only the phase-averaged mass is kept.
    pub v_floor: f64,
}

impl Default for VelocityQuadrature {
    fn default() -> Self {
        VelocityQuadrature {
            nodes: 16,
            v_max: 6.0,
            v_split: 0.5,
            v_floor: 0.0067,
        }
    }
}

impl VelocityQuadrature {
    pub fn doubled(&self) -> Self {
        VelocityQuadrature {
            nodes: 2 * self.nodes,
            ..*self
        }
    }
}

/// Which velocity population reaches the detector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum VelocitySpread {
    /// Full effusive distribution.
    #[default]
    Thermal,
    /// Effusive distribution restricted to u(1 ± half_width), renormalized.
    Window { half_width: f64 },
    /// Every atom moves at u.
    Mono,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    u: f64,
    z0: f64,
    z_sw: f64,
    tau_bar: f64,
    pub quadrature: VelocityQuadrature,
    pub spread: VelocitySpread,
}

impl BeamParams {
    /// Beam whose most-probable-speed atoms receive a π/2 pulse, i.e. τ̄
    /// solves g₀′(τ̄)τ̄ = π/2 with τ_sw = z_sw/u.
    pub fn new(u: f64, z0: f64, z_sw: f64, p: &FieldParams) -> Result<Self> {
        check_positive("u", u)?;
        check_positive("z_sw", z_sw)?;
        let tau_bar = solve_rabi_angle(&p.with_tau_sw(z_sw / u)?, FRAC_PI_2)?;
        Self::with_tau_bar(u, z0, z_sw, tau_bar)
    }

    pub fn with_tau_bar(u: f64, z0: f64, z_sw: f64, tau_bar: f64) -> Result<Self> {
        check_positive("u", u)?;
        check_positive("z_sw", z_sw)?;
        check_positive("tau_bar", tau_bar)?;
        if !z0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "z0",
                value: z0,
                reason: "must be finite",
            });
        }
        Ok(BeamParams {
            u,
            z0,
            z_sw,
            tau_bar,
            quadrature: VelocityQuadrature::default(),
            spread: VelocitySpread::default(),
        })
    }

    pub fn with_spread(mut self, spread: VelocitySpread) -> Self {
        self.spread = spread;
        self
    }

    pub fn with_quadrature(mut self, quadrature: VelocityQuadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
    pub fn z_sw(&self) -> f64 {
        self.z_sw
    }
    pub fn tau_bar(&self) -> f64 {
        self.tau_bar
    }

    /// Detector position z₀ + uτ̄.
    pub fn observation_position(&self) -> f64 {
        self.z0 + self.u * self.tau_bar
    }

    /// τ_v = τ̄u/v.
    pub fn interaction_time(&self, v: f64) -> f64 {
        self.tau_bar * self.u / v
    }

    /// Field as seen by atoms moving at `v`: τ_sw = z_sw/v.
    pub fn group_field(&self, p: &FieldParams, v: f64) -> Result<FieldParams> {
        p.with_tau_sw(self.z_sw / v)
    }

    /// Rabi angle accumulated by the velocity group `v` on its way to the
    /// detector.
    pub fn group_rabi_angle(&self, p: &FieldParams, v: f64) -> Result<f64> {
        self.group_field(p, v)?.rabi_angle(self.interaction_time(v))
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

/// f(v) = 2v³u⁻⁴ exp(−v²/u²).
pub fn velocity_pdf(b: &BeamParams, v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::domain("v", v, "speed must be non-negative"));
    }
    Ok(pdf(b.u, v))
}

fn pdf(u: f64, v: f64) -> f64 {
    let x = v / u;
    2.0 * x * x * x / u * (-x * x).exp()
}

/// ∫₀ᵛ f = 1 − (1 + v²/u²) exp(−v²/u²).
fn cdf(u: f64, v: f64) -> f64 {
    let x2 = (v / u).powi(2);
    -(-x2).exp_m1() - x2 * (-x2).exp()
}

/// g₀(z): zero before z₀, then g0M[1 − exp(−(z − z₀)/z_sw)].
pub fn spatial_profile(b: &BeamParams, p: &FieldParams, z: f64) -> f64 {
    if z < b.z0 {
        0.0
    } else {
        -p.g0m() * (-(z - b.z0) / b.z_sw).exp_m1()
    }
}

/// Time-independent coefficients of S(t) = dc + amplitude·sin(2ωt + 2φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamCoefficients {
    pub dc: f64,
    pub amplitude: f64,
    /// Probability mass captured by the quadrature before renormalization.
    pub mass: f64,
    /// Largest change of (dc, amplitude) under node doubling.
    pub doubling_change: f64,
}

impl BeamCoefficients {
    pub fn signal(&self, p: &FieldParams, t: f64) -> f64 {
        self.dc + self.amplitude * (2.0 * p.field_phase(t)).sin()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    excited: f64,
    envelope: f64,
    mass: f64,
}

impl std::ops::AddAssign for Moments {
    fn add_assign(&mut self, o: Moments) {
        self.excited += o.excited;
        self.envelope += o.envelope;
        self.mass += o.mass;
    }
}

fn moments(b: &BeamParams, p: &FieldParams, q: &VelocityQuadrature, lo: f64, hi: f64) -> Result<Moments> {
    let u = b.u;
    let theta_u = b.group_rabi_angle(p, u)?;
    let theta = |v: f64| theta_u * u / v;
    let mut m = Moments::default();
    if hi <= lo {
        return Ok(m);
    }

    let floor = (q.v_floor * u).min(hi);
    if lo < floor {
        let mass = cdf(u, floor) - cdf(u, lo);
        m += Moments {
            excited: 0.5 * mass,
            envelope: 0.0,
            mass,
        };
    }

    let split = (q.v_split * u).clamp(lo, hi);
    let smooth = GaussLegendre::new(q.nodes.max(2));
    if split < hi {
        let cycles = (theta(split) - theta(hi)) / TAU;
        let panels = 4 + (2.0 * cycles).ceil() as usize;
        let width = (hi - split) / panels as f64;
        for k in 0..panels {
            let a = split + k as f64 * width;
            for (v, w) in smooth.mapped(a, a + width) {
                let f = pdf(u, v) * w;
                let th = theta(v);
                m += Moments {
                    excited: f * (0.5 * th).sin().powi(2),
                    envelope: f * th.sin(),
                    mass: f,
                };
            }
        }
    }

    let low = floor.max(lo);
    if low < split {
        // w = u/v; f(v) dv = f(u/w) u/w² dw and θ is linear in w
        let (w_lo, w_hi) = (u / split, u / low);
        let cycles = theta_u * (w_hi - w_lo) / TAU;
        let panels = 2 + (2.0 * cycles).ceil() as usize;
        let rule = GaussLegendre::new((q.nodes / 2).max(4));
        let width = (w_hi - w_lo) / panels as f64;
        for k in 0..panels {
            let a = w_lo + k as f64 * width;
            for (x, w) in rule.mapped(a, a + width) {
                let v = u / x;
                let f = pdf(u, v) * u / (x * x) * w;
                let th = theta_u * x;
                m += Moments {
                    excited: f * (0.5 * th).sin().powi(2),
                    envelope: f * th.sin(),
                    mass: f,
                };
            }
        }
    }
    Ok(m)
}

fn coefficients_with(b: &BeamParams, p: &FieldParams, q: &VelocityQuadrature) -> Result<(f64, f64, f64)> {
    let u = b.u;
    let eta0 = p.eta0();
    match b.spread {
        VelocitySpread::Mono => {
            let th = b.group_rabi_angle(p, u)?;
            Ok(((0.5 * th).sin().powi(2), eta0 * th.sin(), 1.0))
        }
        VelocitySpread::Thermal => {
            let m = moments(b, p, q, 0.0, q.v_max * u)?;
            Ok((m.excited, eta0 * m.envelope, m.mass))
        }
        VelocitySpread::Window { half_width } => {
            if !(half_width > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "half_width",
                    value: half_width,
                    reason: "window must have positive width",
                });
            }
            let lo = (u * (1.0 - half_width)).max(0.0);
            let hi = (u * (1.0 + half_width)).min(q.v_max * u);
            let m = moments(b, p, q, lo, hi)?;
            Ok((m.excited / m.mass, eta0 * m.envelope / m.mass, m.mass))
        }
    }
}

/// Quadrature of A and B, checked by doubling the node count.
pub fn beam_coefficients(b: &BeamParams, p: &FieldParams) -> Result<BeamCoefficients> {
    let (dc, amplitude, mass) = coefficients_with(b, p, &b.quadrature)?;
    let (dc2, amp2, _) = coefficients_with(b, p, &b.quadrature.doubled())?;
    let change = (dc - dc2).abs().max((amplitude - amp2).abs());
    if !(change <= QUADRATURE_TOL) {
        return Err(Error::Accuracy { change });
    }
    Ok(BeamCoefficients {
        dc,
        amplitude,
        mass,
        doubling_change: change,
    })
}

/// Normalized excited population at the detector at time `t`.
pub fn beam_signal(b: &BeamParams, p: &FieldParams, t: f64) -> Result<f64> {
    Ok(beam_coefficients(b, p)?.signal(p, t))
}

/// S(t) at every time in `times`, sharing one quadrature.
pub fn beam_signal_series(b: &BeamParams, p: &FieldParams, times: &[f64]) -> Result<Vec<f64>> {
    let c = beam_coefficients(b, p)?;
    Ok(times.iter().map(|&t| c.signal(p, t)).collect())
}

/// ∫ f over the truncated velocity grid.
pub fn velocity_mass(b: &BeamParams) -> f64 {
    let q = &b.quadrature;
    let rule = GaussLegendre::new(q.nodes.max(2));
    rule.integrate_composite(0.0, q.v_max * b.u, 16, |v| pdf(b.u, v))
}

/// Lock-in reference F(t) = F₀ cos(2ωt + 2φ_ref − π/2 − θ), averaged over
/// an integer number of signal periods π/ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockIn {
    pub amplitude: f64,
    /// Averaging window (time units).
    pub window: f64,
    pub samples_per_period: usize,
    /// Phase the reference is derived from; `None` uses the field's φ.
    pub reference_phi: Option<f64>,
}

impl LockIn {
    pub const DEFAULT_PERIODS: u32 = 64;

    pub fn periods(p: &FieldParams, periods: u32) -> Self {
        LockIn {
            amplitude: 1.0,
            window: f64::from(periods) * PI / p.omega(),
            samples_per_period: 64,
            reference_phi: None,
        }
    }

    pub fn reference(&self, p: &FieldParams, theta: f64, t: f64) -> f64 {
        let phi_ref = self.reference_phi.unwrap_or(p.phi());
        self.amplitude * (2.0 * p.omega() * t + 2.0 * phi_ref - FRAC_PI_2 - theta).cos()
    }

    fn period_count(&self, p: &FieldParams) -> Result<usize> {
        let period = PI / p.omega();
        let n = self.window / period;
        let rounded = n.round();
        if !(rounded >= 1.0) || (n - rounded).abs() > 1e-9 * rounded {
            return Err(Error::Window {
                window: self.window,
                period,
            });
        }
        Ok(rounded as usize)
    }
}

/// dc component of S(t)·F(t) for precomputed beam coefficients.
pub fn lock_in_dc_from(c: &BeamCoefficients, p: &FieldParams, theta: f64, lock: &LockIn) -> Result<f64> {
    let periods = lock.period_count(p)?;
    let n = periods * lock.samples_per_period.max(8);
    let h = lock.window / n as f64;
    let sum: f64 = (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * h;
            c.signal(p, t) * lock.reference(p, theta, t)
        })
        .sum();
    Ok(sum / n as f64)
}

/// Time average of S(t)·F(t) over the lock-in window; equals
/// (B·F₀/2)·cos θ when the reference follows the field phase.
pub fn lock_in_dc(b: &BeamParams, p: &FieldParams, theta: f64, lock: &LockIn) -> Result<f64> {
    lock_in_dc_from(&beam_coefficients(b, p)?, p, theta, lock)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> FieldParams {
        FieldParams::from_eta0(0.05, 1.0, 0.4, 100.0).unwrap()
    }

    fn beam() -> BeamParams {
        BeamParams::new(1.0, 0.0, 100.0, &field()).unwrap()
    }

    #[test]
    fn pdf_values() {
        let b = beam();
        assert_eq!(velocity_pdf(&b, 0.0).unwrap(), 0.0);
        assert!(velocity_pdf(&b, -0.1).is_err());
        // mode at u√(3/2)
        let mode = (1.5f64).sqrt();
        let f = |v| velocity_pdf(&b, v).unwrap();
        let h = 1e-5;
        assert!(f(mode) > f(mode - h) && f(mode) > f(mode + h));
        assert!(((f(mode + h) - f(mode - h)) / (2.0 * h)).abs() < 1e-8);
        assert!((velocity_mass(&b) - 1.0).abs() < 1e-6);
        assert!((cdf(1.0, 50.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spatial_profile_values() {
        let p = field();
        let b = BeamParams::with_tau_bar(2.0, 5.0, 30.0, 40.0).unwrap();
        assert_eq!(spatial_profile(&b, &p, 4.9), 0.0);
        assert_eq!(spatial_profile(&b, &p, 5.0), 0.0);
        assert!((spatial_profile(&b, &p, 1e6) - p.g0m()).abs() < 1e-15);
        // z = z0 + v t maps to the temporal envelope with τ_sw = z_sw/v
        let v = 2.5;
        let g = b.group_field(&p, v).unwrap();
        for t in [0.3, 7.0, 55.0] {
            let z = b.z0() + v * t;
            assert!((spatial_profile(&b, &p, z) - g.switching_profile(t).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn tau_bar_is_pi_half_for_u() {
        let p = field();
        let b = beam();
        assert!((b.group_rabi_angle(&p, b.u()).unwrap() - FRAC_PI_2).abs() < 1e-10);
        // θ_v = (u/v) θ_u
        for v in [0.3, 1.7, 4.0] {
            let th = b.group_rabi_angle(&p, v).unwrap();
            assert!((th - FRAC_PI_2 / v).abs() < 1e-10);
        }
    }

    #[test]
    fn monovelocity_limit() {
        let p = field();
        let b = beam().with_spread(VelocitySpread::Mono);
        let c = beam_coefficients(&b, &p).unwrap();
        assert!((c.dc - 0.5).abs() < 1e-10);
        assert!((c.amplitude - p.eta0()).abs() < 1e-10);
        for t in [0.0, 1.3, 8.8] {
            let want = 0.5 + p.eta0() * (2.0 * p.omega() * t + 2.0 * p.phi()).sin();
            assert!((beam_signal(&b, &p, t).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn thermal_average_attenuates() {
        let p = field();
        let c = beam_coefficients(&beam(), &p).unwrap();
        assert!(c.amplitude > 0.0 && c.amplitude < p.eta0());
        assert!(c.doubling_change <= QUADRATURE_TOL);
        assert!((c.mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quarter_phase_flips_oscillation() {
        let p = field();
        let q = p.with_phi(p.phi() + FRAC_PI_2);
        let b = beam();
        let c = beam_coefficients(&b, &p).unwrap();
        let cq = beam_coefficients(&b, &q).unwrap();
        assert_eq!(c.dc, cq.dc);
        for t in [0.2, 3.0, 9.1] {
            let osc = c.signal(&p, t) - c.dc;
            let osc_q = cq.signal(&q, t) - cq.dc;
            assert!((osc + osc_q).abs() < 1e-14);
        }
    }

    #[test]
    fn too_few_nodes_is_an_accuracy_error() {
        let p = field();
        let coarse = VelocityQuadrature {
            nodes: 4,
            ..Default::default()
        };
        let b = beam().with_quadrature(coarse);
        assert!(matches!(beam_coefficients(&b, &p), Err(Error::Accuracy { .. })));
    }

    #[test]
    fn lock_in_law() {
        let p = field();
        let b = beam();
        let lock = LockIn::periods(&p, LockIn::DEFAULT_PERIODS);
        let c = beam_coefficients(&b, &p).unwrap();
        let dc0 = lock_in_dc(&b, &p, 0.0, &lock).unwrap();
        assert!((dc0 - c.amplitude * lock.amplitude / 2.0).abs() < 1e-12);
        assert!(lock_in_dc(&b, &p, FRAC_PI_2, &lock).unwrap().abs() < 1e-12);
        for theta in [0.1, 1.0, 2.5] {
            let a = lock_in_dc(&b, &p, theta, &lock).unwrap();
            let z = lock_in_dc(&b, &p, theta + PI, &lock).unwrap();
            assert!((a + z).abs() < 1e-12);
        }
        let bad = LockIn {
            window: 10.5 * PI,
            ..lock
        };
        assert!(matches!(lock_in_dc(&b, &p, 0.0, &bad), Err(Error::Window { .. })));
    }
}
