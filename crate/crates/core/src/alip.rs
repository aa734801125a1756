//! Linear inverted pendulum dynamics with contact-point angular momentum.
//!
//! Sign convention, used everywhere in the crate:
//!
//! ```text
//!   x_dot = L_y / (m dz)        L_y_dot =  m g (x - cop_x)
//!   y_dot = -L_x / (m dz)       L_x_dot = -m g (y - cop_y)
//! ```
//!
//! so `L_y > 0` moves the CoM forward and `L_x > 0` moves it to the right.
//! With this choice the lateral row of the step law carries `+L_x` while the
//! forward row carries `-L_y`.

use libm::{cosh, sinh, sqrt};

use crate::{Error, Result, Vec2};

/// Physical and gait constants shared by the dynamics and the step planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitParams {
    /// Total mass [kg].
    pub mass: f64,
    /// Gravitational acceleration [m/s^2].
    pub gravity: f64,
    /// Nominal pendulum height [m].
    pub height: f64,
    /// Step duration [s].
    pub step_time: f64,
    /// Desired closed-loop step-to-step eigenvalue.
    pub lambda: f64,
    /// Desired step width [m].
    pub step_width: f64,
    /// Commanded planar velocity in the heading frame [m/s].
    pub velocity: Vec2,
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            mass: 90.0,
            gravity: 9.81,
            height: 0.95,
            step_time: 0.4,
            lambda: 0.3,
            step_width: 0.25,
            velocity: Vec2::ZERO,
        }
    }
}

impl GaitParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.mass > 0.0, "mass", "m > 0", self.mass),
            (self.gravity > 0.0, "gravity", "g > 0", self.gravity),
            (self.height > 0.0, "height", "dz > 0", self.height),
            (self.step_time > 0.0, "step_time", "T > 0", self.step_time),
            (self.lambda.abs() < 1.0, "lambda", "|lambda| < 1", self.lambda),
            (self.step_width >= 0.0, "step_width", "mu >= 0", self.step_width),
            (self.velocity.x.is_finite(), "velocity.x", "finite", self.velocity.x),
            (self.velocity.y.is_finite(), "velocity.y", "finite", self.velocity.y),
        ];
        for (ok, what, constraint, value) in checks {
            // NaN fails every comparison above, so it lands here too.
            if !ok {
                return Err(Error::domain(what, constraint, value));
            }
        }
        Ok(())
    }

    /// `m * dz`, the factor converting velocity to contact-point momentum.
    pub fn momentum_scale(&self) -> f64 {
        self.mass * self.height
    }

    pub fn with_velocity(mut self, velocity: Vec2) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn with_height(mut self, height: f64) -> Self {
        self.height = height;
        self
    }
}

/// In-stance state: CoM offset from the contact point and angular momentum
/// about it.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlipState {
    pub x: f64,
    pub y: f64,
    pub lx: f64,
    pub ly: f64,
}

impl AlipState {
    pub const fn new(x: f64, y: f64, lx: f64, ly: f64) -> Self {
        AlipState { x, y, lx, ly }
    }

    /// Builds a state from a CoM offset and a CoM velocity at height `dz`.
    pub fn from_velocity(offset: Vec2, velocity: Vec2, params: &GaitParams) -> Self {
        let k = params.momentum_scale();
        AlipState::new(offset.x, offset.y, -k * velocity.y, k * velocity.x)
    }

    pub fn offset(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn momentum(&self) -> Vec2 {
        Vec2::new(self.lx, self.ly)
    }

    /// CoM velocity implied by the momentum at the nominal height.
    pub fn velocity(&self, params: &GaitParams) -> Vec2 {
        let k = params.momentum_scale();
        Vec2::new(self.ly / k, -self.lx / k)
    }

    /// Rotates offset and momentum counter-clockwise by `angle`. Both are
    /// planar vectors, so the dynamics are invariant under this map.
    pub fn rotate(&self, angle: f64) -> AlipState {
        let p = self.offset().rotate(angle);
        let l = self.momentum().rotate(angle);
        AlipState::new(p.x, p.y, l.x, l.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.lx.is_finite() && self.ly.is_finite()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.lx, self.ly]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        AlipState::new(a[0], a[1], a[2], a[3])
    }
}

/// Real 2x2 matrix acting on `(position, rate)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Transition2 {
    pub const IDENTITY: Transition2 = Transition2 {
        a11: 1.0,
        a12: 0.0,
        a21: 0.0,
        a22: 1.0,
    };

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (
            self.a11 * v.0 + self.a12 * v.1,
            self.a21 * v.0 + self.a22 * v.1,
        )
    }

    pub fn mul(&self, rhs: &Transition2) -> Transition2 {
        Transition2 {
            a11: self.a11 * rhs.a11 + self.a12 * rhs.a21,
            a12: self.a11 * rhs.a12 + self.a12 * rhs.a22,
            a21: self.a21 * rhs.a11 + self.a22 * rhs.a21,
            a22: self.a21 * rhs.a12 + self.a22 * rhs.a22,
        }
    }

    /// Real eigenvalues in descending order, or `None` for a complex pair.
    pub fn eigenvalues(&self) -> Option<(f64, f64)> {
        let tr = self.trace();
        let det = self.det();
        let half = 0.5 * tr;
        let disc = half * half - det;
        if disc < 0.0 {
            return None;
        }
        let r = sqrt(disc);
        // Avoid cancellation in the smaller root.
        let big = if half >= 0.0 { half + r } else { half - r };
        let small = if big != 0.0 { det / big } else { 0.0 };
        Some(if big >= small { (big, small) } else { (small, big) })
    }
}

/// `omega = sqrt(g / dz)`.
pub fn natural_frequency(params: &GaitParams) -> Result<f64> {
    if !(params.height > 0.0) {
        return Err(Error::domain("height", "dz > 0", params.height));
    }
    if !(params.gravity > 0.0) {
        return Err(Error::domain("gravity", "g > 0", params.gravity));
    }
    Ok(sqrt(params.gravity / params.height))
}

fn check_dt(dt: f64) -> Result<()> {
    if dt >= 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("dt", "dt >= 0", dt))
    }
}

/// Closed-form map of `(x, L_y)` over `dt` seconds.
pub fn alip_transition(params: &GaitParams, dt: f64) -> Result<Transition2> {
    check_dt(dt)?;
    let w = natural_frequency(params)?;
    let (c, s) = (cosh(w * dt), sinh(w * dt));
    let k = params.momentum_scale() * w;
    Ok(Transition2 {
        a11: c,
        a12: s / k,
        a21: k * s,
        a22: c,
    })
}

/// Closed-form map of `(x, x_dot)` over `dt` seconds.
pub fn lip_transition(params: &GaitParams, dt: f64) -> Result<Transition2> {
    check_dt(dt)?;
    let w = natural_frequency(params)?;
    let (c, s) = (cosh(w * dt), sinh(w * dt));
    Ok(Transition2 {
        a11: c,
        a12: s / w,
        a21: w * s,
        a22: c,
    })
}

/// Advances both planar axes by the closed-form map.
pub fn alip_propagate(state: &AlipState, params: &GaitParams, dt: f64) -> Result<AlipState> {
    let a = alip_transition(params, dt)?;
    let (x, ly) = a.apply((state.x, state.ly));
    // (y, -L_x) obeys the same equations as (x, L_y).
    let (y, neg_lx) = a.apply((state.y, -state.lx));
    Ok(AlipState::new(x, y, -neg_lx, ly))
}

/// Time derivative with the CoP displaced to `cop` (relative to the contact
/// point). With `cop = 0` this is the plain point-foot model.
pub fn alip_vector_field(state: &AlipState, params: &GaitParams, cop: Vec2) -> AlipState {
    let k = params.momentum_scale();
    let mg = params.mass * params.gravity;
    AlipState {
        x: state.ly / k,
        y: -state.lx / k,
        lx: -mg * (state.y - cop.y),
        ly: mg * (state.x - cop.x),
    }
}
