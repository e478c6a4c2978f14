//! Prescribed velocity fields, the closed-form flow of the radial test field,
//! and closest-point projection onto that flow's curves.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::point::Vec2;

/// Minimum `|x|` at which the radial field is evaluated.
pub const ORIGIN_EXCLUSION: f64 = 1e-8;

/// Default retraction-tube radius for closest-point projection.
pub const DEFAULT_TUBE_RADIUS: f64 = 0.2;

/// Number of samples in the global optimality sweep.
pub const SWEEP_SAMPLES: usize = 512;

/// Squared aspect ratio of the initial ellipse `x^2 + 9 y^2 = 1`.
const ASPECT_SQ: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityField {
    Zero,
    Constant(Vec2),
    /// Rigid rotation about the origin with angular speed `omega`.
    Rotation(f64),
    /// Radial transport with speed `1 - r0(theta)` along each ray; carries
    /// the 3:1 ellipse onto the unit circle at `t = 1`.
    EllipseRadial,
}

impl VelocityField {
    pub fn eval(&self, x: Vec2, _t: f64) -> Result<Vec2> {
        match *self {
            VelocityField::Zero => Ok(Vec2::ZERO),
            VelocityField::Constant(c) => Ok(c),
            VelocityField::Rotation(omega) => Ok(omega * x.rotate_ccw()),
            VelocityField::EllipseRadial => {
                let r2 = x.norm_squared();
                let r = r2.sqrt();
                if !(r >= ORIGIN_EXCLUSION) {
                    return Err(Error::FieldDomain { x: x.x, y: x.y });
                }
                let speed = 1.0 - (r2 / (x.x * x.x + ASPECT_SQ * x.y * x.y)).sqrt();
                Ok(x * (speed / r))
            }
        }
    }

    /// Whether a closed-form exact flow is available for error measurement.
    pub fn has_exact_flow(&self) -> bool {
        matches!(self, VelocityField::EllipseRadial)
    }
}

impl fmt::Display for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityField::Zero => write!(f, "zero"),
            VelocityField::Constant(c) => write!(f, "constant:{},{}", c.x, c.y),
            VelocityField::Rotation(omega) => write!(f, "rotation:{omega}"),
            VelocityField::EllipseRadial => write!(f, "ellipse-radial"),
        }
    }
}

impl FromStr for VelocityField {
    type Err = Error;

    /// Parses `zero | constant:<cx>,<cy> | rotation:<omega> | ellipse-radial`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognized velocity field `{s}`"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        match (name, args) {
            ("zero", None) => Ok(VelocityField::Zero),
            ("ellipse-radial", None) => Ok(VelocityField::EllipseRadial),
            ("rotation", Some(a)) => Ok(VelocityField::Rotation(num(a)?)),
            ("constant", Some(a)) => {
                let (cx, cy) = a.split_once(',').ok_or_else(bad)?;
                Ok(VelocityField::Constant(Vec2::new(num(cx)?, num(cy)?)))
            }
            _ => Err(bad()),
        }
    }
}

/// `r0(theta) = (cos^2 + 9 sin^2)^(-1/2)` and its first two derivatives.
fn initial_radius(theta: f64) -> (f64, f64, f64) {
    let (sn, cs) = theta.sin_cos();
    let s = 1.0 + (ASPECT_SQ - 1.0) * sn * sn;
    let ds = (ASPECT_SQ - 1.0) * 2.0 * sn * cs;
    let dds = (ASPECT_SQ - 1.0) * 2.0 * (cs * cs - sn * sn);
    let r = s.powf(-0.5);
    let dr = -0.5 * s.powf(-1.5) * ds;
    let ddr = 0.75 * s.powf(-2.5) * ds * ds - 0.5 * s.powf(-1.5) * dds;
    (r, dr, ddr)
}

/// Exact flow of [`VelocityField::EllipseRadial`] from the 3:1 ellipse:
/// `gamma(t, theta) = ((1 - t) r0(theta) + t) (cos theta, sin theta)`.
///
/// The field is constant along each ray, so each point moves in a straight
/// line at constant velocity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EllipseRadialFlow;

impl EllipseRadialFlow {
    pub fn radius(&self, t: f64, theta: f64) -> f64 {
        (1.0 - t) * initial_radius(theta).0 + t
    }

    pub fn point(&self, t: f64, theta: f64) -> Vec2 {
        Vec2::from_polar(self.radius(t, theta), theta)
    }

    /// `(gamma, d gamma / d theta, d^2 gamma / d theta^2)`.
    pub fn derivatives(&self, t: f64, theta: f64) -> (Vec2, Vec2, Vec2) {
        let (r0, dr0, ddr0) = initial_radius(theta);
        let r = (1.0 - t) * r0 + t;
        let dr = (1.0 - t) * dr0;
        let ddr = (1.0 - t) * ddr0;
        let e = Vec2::from_polar(1.0, theta);
        let ep = e.rotate_ccw();
        (r * e, dr * e + r * ep, ddr * e + 2.0 * dr * ep - r * e)
    }

    /// The curve at time `t` with a precomputed optimality sweep.
    pub fn at(&self, t: f64) -> ExactCurve {
        ExactCurve::new(*self, t, DEFAULT_TUBE_RADIUS)
    }
}

/// Result of projecting a point onto an exact curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub theta: f64,
    pub foot: Vec2,
    pub distance: f64,
}

/// `Gamma(t)` of the exact flow frozen at one time, ready for closest-point
/// queries.
#[derive(Debug, Clone)]
pub struct ExactCurve {
    flow: EllipseRadialFlow,
    t: f64,
    tube: f64,
    sweep: Vec<Vec2>,
}

const NEWTON_ITERS: usize = 50;
const STATIONARITY_TOLERANCE: f64 = 1e-12;
const FALLBACK_HALF_WIDTH: f64 = PI / 16.0;

impl ExactCurve {
    pub fn new(flow: EllipseRadialFlow, t: f64, tube: f64) -> Self {
        let sweep = (0..SWEEP_SAMPLES)
            .map(|i| flow.point(t, TAU * i as f64 / SWEEP_SAMPLES as f64))
            .collect();
        ExactCurve {
            flow,
            t,
            tube,
            sweep,
        }
    }

    pub fn with_tube(mut self, tube: f64) -> Self {
        self.tube = tube;
        self
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn tube(&self) -> f64 {
        self.tube
    }

    pub fn sweep(&self) -> &[Vec2] {
        &self.sweep
    }

    /// `g(theta) = (gamma - p) . gamma'`, half the derivative of the squared
    /// distance, and its derivative.
    fn stationarity(&self, p: Vec2, theta: f64) -> (f64, f64) {
        let (g, d1, d2) = self.flow.derivatives(self.t, theta);
        let diff = g - p;
        (diff.dot(d1), d1.dot(d1) + diff.dot(d2))
    }

    fn newton(&self, p: Vec2, theta0: f64) -> Option<f64> {
        let mut theta = theta0;
        for _ in 0..NEWTON_ITERS {
            let (g, dg) = self.stationarity(p, theta);
            if g.abs() <= STATIONARITY_TOLERANCE && dg > 0.0 {
                return Some(theta);
            }
            if !(dg > 0.0) {
                return None;
            }
            let step = (g / dg).clamp(-FALLBACK_HALF_WIDTH, FALLBACK_HALF_WIDTH);
            theta -= step;
        }
        let (g, dg) = self.stationarity(p, theta);
        (g.abs() <= STATIONARITY_TOLERANCE && dg > 0.0).then_some(theta)
    }

    fn golden_section(&self, p: Vec2, theta0: f64) -> f64 {
        let dist2 = |th: f64| (self.flow.point(self.t, th) - p).norm_squared();
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (theta0 - FALLBACK_HALF_WIDTH, theta0 + FALLBACK_HALF_WIDTH);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (dist2(c), dist2(d));
        while b - a > 1e-15 * theta0.abs().max(1.0) {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = dist2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = dist2(d);
            }
        }
        0.5 * (a + b)
    }

    /// Closest point on the curve to `p`.
    ///
    /// Newton from the polar angle of `p`, with a golden-section fallback on a
    /// bracket of width `pi/8`; the result is checked against the
    /// [`SWEEP_SAMPLES`]-point sweep and against the retraction tube.
    pub fn closest_point(&self, p: Vec2) -> Result<Projection> {
        let theta0 = p.y.atan2(p.x);
        let theta = match self.newton(p, theta0) {
            Some(theta) => theta,
            None => {
                let theta = self.golden_section(p, theta0);
                // golden section only reaches ~sqrt(eps) in theta; polish it
                self.newton(p, theta).unwrap_or(theta)
            }
        };
        let foot = self.flow.point(self.t, theta);
        let distance = foot.distance(p);
        let sweep_best = self
            .sweep
            .iter()
            .map(|q| q.distance(p))
            .fold(f64::INFINITY, f64::min);
        if distance > sweep_best * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::NonConvergence { x: p.x, y: p.y });
        }
        if !(distance < self.tube) {
            return Err(Error::ProjectionDomain {
                x: p.x,
                y: p.y,
                distance,
                tube: self.tube,
            });
        }
        Ok(Projection {
            theta: theta.rem_euclid(TAU),
            foot,
            distance,
        })
    }
}
