//! Rigid-body motion with quaternion attitude.
//!
//! State `{X_G, V, omega, q}` with `omega` in the global frame evolves as
//! `X' = V`, `m V' = m g + F`, `(R I Rᵀ) omega' = M - omega x (R I Rᵀ) omega`,
//! `q' = ½ [0, omega] q`, integrated by classical RK4 with the quaternion
//! projected back to unit norm after every step.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion<T: Real> {
    pub s: T,
    pub v: Vector3<T>,
}

impl<T: Real> Quaternion<T> {
    pub fn new(s: T, x: T, y: T, z: T) -> Self {
        Self {
            s,
            v: Vector3::new(x, y, z),
        }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    /// `[0, v]`.
    pub fn pure(v: Vector3<T>) -> Self {
        Self { s: T::zero(), v }
    }

    /// Rotation by `angle` about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<T>, angle: T) -> Self {
        let half = angle * T::lit(0.5);
        Self {
            s: half.cos(),
            v: axis.normalize() * half.sin(),
        }
    }

    pub fn norm_squared(&self) -> T {
        self.s * self.s + self.v.norm_squared()
    }

    /// `sqrt(s² + |v|²)`.
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            s: self.s / n,
            v: self.v / n,
        }
    }

    pub fn conjugate(&self) -> Self {
        Self { s: self.s, v: -self.v }
    }

    pub fn inverse(&self) -> Self {
        let n2 = self.norm_squared();
        let c = self.conjugate();
        Self {
            s: c.s / n2,
            v: c.v / n2,
        }
    }

    pub fn dot(&self, other: &Self) -> T {
        self.s * other.s + self.v.dot(&other.v)
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            s: self.s * k,
            v: self.v * k,
        }
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::lit(UNIT_TOLERANCE)
    }

    /// Standard rotation matrix of a unit quaternion (body to global).
    pub fn to_rotation(&self) -> Result<Matrix3<T>> {
        if !self.is_unit() {
            return Err(Error::Domain(format!("quaternion norm {} is not 1", self.norm())));
        }
        Ok(self.rotation_unchecked())
    }

    fn rotation_unchecked(&self) -> Matrix3<T> {
        let (s, x, y, z) = (self.s, self.v.x, self.v.y, self.v.z);
        let one = T::one();
        let two = T::lit(2.0);
        Matrix3::new(
            one - two * (y * y + z * z),
            two * (x * y - s * z),
            two * (x * z + s * y),
            two * (x * y + s * z),
            one - two * (x * x + z * z),
            two * (y * z - s * x),
            two * (x * z - s * y),
            two * (y * z + s * x),
            one - two * (x * x + y * y),
        )
    }

    /// `q [0, x] q⁻¹`.
    pub fn rotate(&self, x: &Vector3<T>) -> Vector3<T> {
        (*self * Self::pure(*x) * self.inverse()).v
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.s, self.v.x, self.v.y, self.v.z]
    }
}

/// `[s1 s2 - v1·v2, s1 v2 + s2 v1 + v1 x v2]`.
impl<T: Real> Mul for Quaternion<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self {
            s: self.s * rhs.s - self.v.dot(&rhs.v),
            v: rhs.v * self.s + self.v * rhs.s + self.v.cross(&rhs.v),
        }
    }
}

impl<T: Real> Add for Quaternion<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            s: self.s + rhs.s,
            v: self.v + rhs.v,
        }
    }
}

impl<T: Real> Neg for Quaternion<T> {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

pub fn quat_product<T: Real>(q1: &Quaternion<T>, q2: &Quaternion<T>) -> Quaternion<T> {
    *q1 * *q2
}

pub fn quat_to_rotation<T: Real>(q: &Quaternion<T>) -> Result<Matrix3<T>> {
    q.to_rotation()
}

/// `½ [0, omega] q`.
pub fn quat_derivative<T: Real>(q: &Quaternion<T>, omega: &Vector3<T>) -> Quaternion<T> {
    (Quaternion::pure(*omega) * *q).scale(T::lit(0.5))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyState<T: Real> {
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    /// Global frame.
    pub omega: Vector3<T>,
    pub attitude: Quaternion<T>,
}

impl<T: Real> RigidBodyState<T> {
    pub fn at_rest() -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            omega: Vector3::zeros(),
            attitude: Quaternion::identity(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyProperties<T: Real> {
    mass: T,
    inertia: Matrix3<T>,
    gravity: Vector3<T>,
}

impl<T: Real> BodyProperties<T> {
    /// Mass > 0 and a symmetric positive-definite body-frame inertia.
    pub fn new(mass: T, inertia: Matrix3<T>, gravity: Vector3<T>) -> Result<Self> {
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        let scale = inertia.amax().max(T::one());
        if (inertia - inertia.transpose()).amax() > T::lit(1e-12) * scale {
            return Err(Error::Domain("inertia tensor is not symmetric".into()));
        }
        if inertia.cholesky().is_none() {
            return Err(Error::Domain("inertia tensor is not positive definite".into()));
        }
        Ok(Self {
            mass,
            inertia,
            gravity,
        })
    }

    /// Gravity `(0, 0, -9.81)`.
    pub fn with_default_gravity(mass: T, inertia: Matrix3<T>) -> Result<Self> {
        Self::new(mass, inertia, Vector3::new(T::zero(), T::zero(), T::lit(-9.81)))
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<T> {
        &self.inertia
    }

    pub fn gravity(&self) -> &Vector3<T> {
        &self.gravity
    }

    /// `R I_G Rᵀ`.
    pub fn world_inertia(&self, r: &Matrix3<T>) -> Matrix3<T> {
        r * self.inertia * r.transpose()
    }
}

/// External force and moment about the center of mass, both in the global frame.
pub trait ForceModel<T: Real>: Sync {
    fn evaluate(&self, t: T, state: &RigidBodyState<T>) -> (Vector3<T>, Vector3<T>);
}

impl<T: Real, F> ForceModel<T> for F
where
    F: Fn(T, &RigidBodyState<T>) -> (Vector3<T>, Vector3<T>) + Sync,
{
    fn evaluate(&self, t: T, state: &RigidBodyState<T>) -> (Vector3<T>, Vector3<T>) {
        self(t, state)
    }
}

/// No hydrodynamic loads.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoLoads;

impl<T: Real> ForceModel<T> for NoLoads {
    fn evaluate(&self, _: T, _: &RigidBodyState<T>) -> (Vector3<T>, Vector3<T>) {
        (Vector3::zeros(), Vector3::zeros())
    }
}

#[derive(Clone, Copy)]
struct Rate<T: Real> {
    dx: Vector3<T>,
    dv: Vector3<T>,
    dw: Vector3<T>,
    dq: Quaternion<T>,
}

fn rate<T: Real>(
    state: &RigidBodyState<T>,
    props: &BodyProperties<T>,
    forces: &dyn ForceModel<T>,
    t: T,
) -> Result<Rate<T>> {
    let r = state.attitude.normalized().rotation_unchecked();
    let iw = props.world_inertia(&r);
    let (f, m) = forces.evaluate(t, state);
    let rhs = m - state.omega.cross(&(iw * state.omega));
    let dw = iw
        .cholesky()
        .ok_or_else(|| Error::Singular("world-frame inertia".into()))?
        .solve(&rhs);
    Ok(Rate {
        dx: state.velocity,
        dv: props.gravity + f / props.mass,
        dw,
        dq: quat_derivative(&state.attitude, &state.omega),
    })
}

fn advance<T: Real>(s: &RigidBodyState<T>, k: &Rate<T>, h: T) -> RigidBodyState<T> {
    RigidBodyState {
        position: s.position + k.dx * h,
        velocity: s.velocity + k.dv * h,
        omega: s.omega + k.dw * h,
        attitude: s.attitude + k.dq.scale(h),
    }
}

/// One RK4 step, also returning `| |q| - 1 |` before renormalization.
pub fn step_with_drift<T: Real>(
    state: &RigidBodyState<T>,
    props: &BodyProperties<T>,
    forces: &dyn ForceModel<T>,
    t: T,
    dt: T,
) -> Result<(RigidBodyState<T>, T)> {
    if !(dt > T::zero()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if !state.attitude.is_unit() {
        return Err(Error::Domain(format!(
            "attitude quaternion norm {} is not 1",
            state.attitude.norm()
        )));
    }
    let half = dt * T::lit(0.5);
    let k1 = rate(state, props, forces, t)?;
    let k2 = rate(&advance(state, &k1, half), props, forces, t + half)?;
    let k3 = rate(&advance(state, &k2, half), props, forces, t + half)?;
    let k4 = rate(&advance(state, &k3, dt), props, forces, t + dt)?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let comb = |a: Vector3<T>, b: Vector3<T>, c: Vector3<T>, d: Vector3<T>| (a + (b + c) * two + d) * sixth;
    let dq = (k1.dq + (k2.dq + k3.dq).scale(two) + k4.dq).scale(sixth);
    let q = state.attitude + dq;
    let drift = (q.norm() - T::one()).abs();
    Ok((
        RigidBodyState {
            position: state.position + comb(k1.dx, k2.dx, k3.dx, k4.dx),
            velocity: state.velocity + comb(k1.dv, k2.dv, k3.dv, k4.dv),
            omega: state.omega + comb(k1.dw, k2.dw, k3.dw, k4.dw),
            attitude: q.normalized(),
        },
        drift,
    ))
}

pub fn step<T: Real>(
    state: &RigidBodyState<T>,
    props: &BodyProperties<T>,
    forces: &dyn ForceModel<T>,
    t: T,
    dt: T,
) -> Result<RigidBodyState<T>> {
    step_with_drift(state, props, forces, t, dt).map(|(s, _)| s)
}

/// States at `t0, t0 + dt, ...` up to `t_end` (the last step is shortened to
/// land on `t_end`).
pub fn simulate<T: Real>(
    initial: &RigidBodyState<T>,
    props: &BodyProperties<T>,
    forces: &dyn ForceModel<T>,
    t0: T,
    t_end: T,
    dt: T,
) -> Result<Vec<(T, RigidBodyState<T>)>> {
    if !(t_end >= t0) {
        return Err(Error::Domain("end time precedes start time".into()));
    }
    let steps = ((t_end - t0) / dt).ceil().as_f64() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = *initial;
    out.push((t0, state));
    for k in 0..steps {
        let t = t0 + dt * T::from_count(k);
        let h = dt.min(t_end - t);
        if h <= T::zero() {
            break;
        }
        state = step(&state, props, forces, t, h)?;
        out.push((t + h, state));
    }
    Ok(out)
}

/// Global angular momentum `R I_G Rᵀ omega`.
pub fn angular_momentum<T: Real>(state: &RigidBodyState<T>, props: &BodyProperties<T>) -> Vector3<T> {
    props.world_inertia(&state.attitude.rotation_unchecked()) * state.omega
}

/// `½ omegaᵀ (R I_G Rᵀ) omega`.
pub fn rotational_energy<T: Real>(state: &RigidBodyState<T>, props: &BodyProperties<T>) -> T {
    state.omega.dot(&angular_momentum(state, props)) * T::lit(0.5)
}

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,vx,vy,vz,wx,wy,wz,qs,qx,qy,qz";

pub fn trajectory_csv<T: Real>(trajectory: &[(T, RigidBodyState<T>)]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, s) in trajectory {
        let q = s.attitude.to_array();
        let cells = std::iter::once(*t)
            .chain(s.position.iter().copied())
            .chain(s.velocity.iter().copied())
            .chain(s.omega.iter().copied())
            .chain(q);
        let row: Vec<String> = cells.map(|x| x.as_f64().to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

// ---- JSON configuration ---------------------------------------------------

/// Body, initial state and a simple load model, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub mass: f64,
    /// Row-major body-frame inertia.
    pub inertia: [[f64; 3]; 3],
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub loads: LoadConfig,
}

fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -9.81]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub omega: [f64; 3],
    /// `[s, x, y, z]`.
    pub attitude: [f64; 4],
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            position: [0.0; 3],
            velocity: [0.0; 3],
            omega: [0.0; 3],
            attitude: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

/// `F = F0 - c_v V`, `M = M0 - c_w omega`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadConfig {
    pub force: [f64; 3],
    pub moment: [f64; 3],
    pub linear_damping: f64,
    pub angular_damping: f64,
}

impl ForceModel<f64> for LoadConfig {
    fn evaluate(&self, _: f64, s: &RigidBodyState<f64>) -> (Vector3<f64>, Vector3<f64>) {
        (
            Vector3::from(self.force) - s.velocity * self.linear_damping,
            Vector3::from(self.moment) - s.omega * self.angular_damping,
        )
    }
}

impl BodyConfig {
    pub fn properties(&self) -> Result<BodyProperties<f64>> {
        let i = &self.inertia;
        BodyProperties::new(
            self.mass,
            Matrix3::new(i[0][0], i[0][1], i[0][2], i[1][0], i[1][1], i[1][2], i[2][0], i[2][1], i[2][2]),
            Vector3::from(self.gravity),
        )
    }

    pub fn initial_state(&self) -> Result<RigidBodyState<f64>> {
        let a = self.initial.attitude;
        let q = Quaternion::new(a[0], a[1], a[2], a[3]);
        if !q.is_unit() {
            return Err(Error::Domain(format!("initial attitude norm {} is not 1", q.norm())));
        }
        Ok(RigidBodyState {
            position: Vector3::from(self.initial.position),
            velocity: Vector3::from(self.initial.velocity),
            omega: Vector3::from(self.initial.omega),
            attitude: q,
        })
    }
}
