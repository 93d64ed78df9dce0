//! Adiabatic flux through the tube: schedule `q(t)`, gauge function `F`, and
//! the potential `A = A₀(t) + ∇F` with `A₀(t) = (0, 2πq(t)/l)`.
//!
//! Bond phases use exact line integrals: `⟨δ, A₀⟩` for the constant part and
//! `F(x+δ) − F(x)` for the gradient part.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use faer::c64;

use crate::lattice::{Lattice, TubeGeometry};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleShape {
    Linear,
    Smoothstep,
}

/// Flux quanta `q(t)` threading the tube, with `q(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxSchedule {
    pub q_final: f64,
    pub shape: ScheduleShape,
}

impl FluxSchedule {
    pub fn linear(q_final: f64) -> Self {
        FluxSchedule {
            q_final,
            shape: ScheduleShape::Linear,
        }
    }

    pub fn smoothstep(q_final: f64) -> Self {
        FluxSchedule {
            q_final,
            shape: ScheduleShape::Smoothstep,
        }
    }

    pub fn q(&self, t: f64) -> f64 {
        let s = match self.shape {
            ScheduleShape::Linear => t,
            ScheduleShape::Smoothstep => t * t * (3.0 - 2.0 * t),
        };
        self.q_final * s
    }

    pub fn dq(&self, t: f64) -> f64 {
        match self.shape {
            ScheduleShape::Linear => self.q_final,
            ScheduleShape::Smoothstep => self.q_final * 6.0 * t * (1.0 - t),
        }
    }

    /// `q̄ = max |q(t)|`; both shapes are monotone.
    pub fn q_bar(&self) -> f64 {
        self.q_final.abs()
    }

    /// Final flux as an integer, or an error for fractional flux.
    pub fn integer_flux(&self) -> Result<i64> {
        if self.q_final.fract() != 0.0 || !self.q_final.is_finite() {
            return Err(Error::NonIntegerFlux(self.q_final));
        }
        Ok(self.q_final as i64)
    }
}

type CustomGauge = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Smooth `F(x1, x2, t)`, `l`-periodic in `x2`, vanishing at `t = 0`.
#[derive(Clone)]
pub enum GaugeFunction {
    Zero,
    /// `t·ε·sin(2πx2/l)·x1/L`
    Sine { epsilon: f64 },
    /// Arbitrary closure `(x1, x2, t) ↦ F`; its gradient is taken by central
    /// differences.
    Custom(CustomGauge),
}

impl fmt::Debug for GaugeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeFunction::Zero => f.write_str("Zero"),
            GaugeFunction::Sine { epsilon } => write!(f, "Sine {{ epsilon: {epsilon} }}"),
            GaugeFunction::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl GaugeFunction {
    pub fn custom(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        GaugeFunction::Custom(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, GaugeFunction::Zero)
    }

    /// `F` on the closed tube `0 ≤ x1 ≤ L`.
    pub fn value(&self, x1: f64, x2: f64, t: f64, geom: &TubeGeometry) -> f64 {
        match self {
            GaugeFunction::Zero => 0.0,
            GaugeFunction::Sine { epsilon } => {
                t * epsilon * (2.0 * PI * x2 / geom.circumference()).sin() * x1 / geom.length()
            }
            GaugeFunction::Custom(f) => f(x1, x2, t),
        }
    }

    /// `F` continued evenly across both tube ends, so that a fictitious site
    /// and its mirror image carry the same gauge value.
    pub fn value_extended(&self, x1: f64, x2: f64, t: f64, geom: &TubeGeometry) -> f64 {
        let len = geom.length();
        let x1 = if x1 < 0.0 {
            -x1
        } else if x1 > len {
            2.0 * len - x1
        } else {
            x1
        };
        self.value(x1, x2, t, geom)
    }

    /// `∇F` at an interior point.
    pub fn gradient(&self, x1: f64, x2: f64, t: f64, geom: &TubeGeometry) -> (f64, f64) {
        match self {
            GaugeFunction::Zero => (0.0, 0.0),
            GaugeFunction::Sine { epsilon } => {
                let (l, len) = (geom.circumference(), geom.length());
                let w = 2.0 * PI / l;
                (
                    t * epsilon * (w * x2).sin() / len,
                    t * epsilon * w * (w * x2).cos() * x1 / len,
                )
            }
            GaugeFunction::Custom(_) => {
                let h = geom.a * 1e-4;
                let f = |a, b| self.value(a, b, t, geom);
                (
                    (f(x1 + h, x2) - f(x1 - h, x2)) / (2.0 * h),
                    (f(x1, x2 + h) - f(x1, x2 - h)) / (2.0 * h),
                )
            }
        }
    }
}

/// Flux schedule together with a gauge function.
#[derive(Clone, Debug)]
pub struct FluxExperiment {
    pub schedule: FluxSchedule,
    pub gauge: GaugeFunction,
}

impl FluxExperiment {
    pub fn new(schedule: FluxSchedule, gauge: GaugeFunction) -> Self {
        FluxExperiment { schedule, gauge }
    }

    /// Same schedule, zero gauge.
    pub fn constant_part(&self) -> Self {
        FluxExperiment {
            schedule: self.schedule,
            gauge: GaugeFunction::Zero,
        }
    }

    /// `A₀(t) = (0, 2πq(t)/l)`.
    pub fn a0(&self, t: f64, geom: &TubeGeometry) -> (f64, f64) {
        (0.0, 2.0 * PI * self.schedule.q(t) / geom.circumference())
    }

    /// `(A1, A2) = (∂F/∂x1, 2πq(t)/l + ∂F/∂x2)`.
    pub fn potential(&self, x1: f64, x2: f64, t: f64, geom: &TubeGeometry) -> (f64, f64) {
        let (g1, g2) = self.gauge.gradient(x1, x2, t, geom);
        let (_, a2) = self.a0(t, geom);
        (g1, a2 + g2)
    }

    /// `∮ A2 dx2` around the circumference at fixed `x1`, by the trapezoid rule
    /// (spectrally accurate for periodic integrands).
    pub fn circulation(&self, x1: f64, t: f64, geom: &TubeGeometry, nodes: usize) -> f64 {
        let l = geom.circumference();
        let h = l / nodes as f64;
        (0..nodes)
            .map(|k| self.potential(x1, k as f64 * h, t, geom).1)
            .sum::<f64>()
            * h
    }

    /// `exp(−i ∫ ⟨δ, A(x + τδ)⟩ dτ)` along the straight bond from `x`.
    pub fn bond_phase(&self, x: (f64, f64), delta: (f64, f64), t: f64, geom: &TubeGeometry) -> c64 {
        let (_, a2) = self.a0(t, geom);
        let mut integral = delta.1 * a2;
        if !self.gauge.is_zero() {
            let to = (x.0 + delta.0, x.1 + delta.1);
            integral += self.gauge.value_extended(to.0, to.1, t, geom)
                - self.gauge.value_extended(x.0, x.1, t, geom);
        }
        c64::cis(-integral)
    }

    /// Diagonal entries `e^{iF(x,t)}` of the gauge unitary `U_t`.
    pub fn gauge_unitary(&self, lattice: &Lattice, t: f64) -> Vec<c64> {
        let geom = lattice.geometry();
        lattice
            .sites()
            .iter()
            .map(|s| c64::cis(self.gauge.value(s.position.0, s.position.1, t, geom)))
            .collect()
    }

    /// `S(x) = 2π q_final x2 / l + F(x, 1)`, the phase that closes the loop.
    pub fn closure_phase(&self, x1: f64, x2: f64, geom: &TubeGeometry) -> f64 {
        2.0 * PI * self.schedule.q_final * x2 / geom.circumference()
            + self.gauge.value(x1, x2, 1.0, geom)
    }
}
