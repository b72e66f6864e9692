//! The constrained eight-dimensional system in relative coordinates.
//!
//! A state is `(u, v, z, w)` with `u = x - z`, `v = y - w`, where `x, y` are
//! position and velocity of the first particle and `z, w` those of the
//! second. The rigid link of unit length gives the constraints
//! `c1 = <u,u> - 1 = 0` and `c2 = <u,v> = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{PotentialModel, SquaredRadius};

/// The two masses. `M = m1 m2 / (2 (m1 + m2))` is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    m1: f64,
    m2: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    m1: f64,
    m2: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.m1, raw.m2)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams { m1: p.m1, m2: p.m2 }
    }
}

impl Params {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        if !(m1 > 0.0 && m2 > 0.0) || !m1.is_finite() || !m2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "masses must be positive and finite, got m1={m1}, m2={m2}"
            )));
        }
        Ok(Params { m1, m2 })
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn total(&self) -> f64 {
        self.m1 + self.m2
    }

    /// `m1 m2 / (2 (m1 + m2))`, the inverse of the canonical `{c1, c2}`.
    pub fn big_m(&self) -> f64 {
        self.m1 * self.m2 / (2.0 * (self.m1 + self.m2))
    }

    /// `m1 / (m1 + m2)`.
    pub fn mu1(&self) -> f64 {
        self.m1 / self.total()
    }

    /// `m2 / (m1 + m2)`.
    pub fn mu2(&self) -> f64 {
        self.m2 / self.total()
    }

    pub fn equal_masses(&self, tol: f64) -> bool {
        (self.m1 - self.m2).abs() <= tol * self.total()
    }
}

pub type Vec2 = [f64; 2];

#[inline]
pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
fn scale(k: f64, a: Vec2) -> Vec2 {
    [k * a[0], k * a[1]]
}

#[inline]
fn rotate2(theta: f64, a: Vec2) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c * a[0] - s * a[1], s * a[0] + c * a[1]]
}

/// Phase point `(u, v, z, w)`; flat order `u1 u2 v1 v2 z1 z2 w1 w2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState {
    pub u: Vec2,
    pub v: Vec2,
    pub z: Vec2,
    pub w: Vec2,
}

impl FullState {
    pub fn new(u: Vec2, v: Vec2, z: Vec2, w: Vec2) -> Self {
        FullState { u, v, z, w }
    }

    /// Build from absolute coordinates of both particles.
    pub fn from_absolute(x: Vec2, y: Vec2, z: Vec2, w: Vec2) -> Self {
        FullState {
            u: [x[0] - z[0], x[1] - z[1]],
            v: [y[0] - w[0], y[1] - w[1]],
            z,
            w,
        }
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        FullState {
            u: [a[0], a[1]],
            v: [a[2], a[3]],
            z: [a[4], a[5]],
            w: [a[6], a[7]],
        }
    }

    pub fn from_slice(a: &[f64]) -> Result<Self> {
        let arr: &[f64; 8] = a.try_into().map_err(|_| {
            Error::InvalidArgument(format!("full state needs 8 components, got {}", a.len()))
        })?;
        Ok(Self::from_array(arr))
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.u[0], self.u[1], self.v[0], self.v[1], self.z[0], self.z[1], self.w[0],
            self.w[1],
        ]
    }

    /// Position of the first particle.
    pub fn x(&self) -> Vec2 {
        add(self.u, self.z)
    }

    /// Velocity of the first particle.
    pub fn y(&self) -> Vec2 {
        add(self.v, self.w)
    }

    /// Apply the same rotation to all four blocks.
    pub fn rotated(&self, theta: f64) -> Self {
        FullState {
            u: rotate2(theta, self.u),
            v: rotate2(theta, self.v),
            z: rotate2(theta, self.z),
            w: rotate2(theta, self.w),
        }
    }

    /// Infinitesimal generator of the rotation action at this point.
    pub fn generator(&self) -> [f64; 8] {
        let b = |a: Vec2| [-a[1], a[0]];
        let (u, v, z, w) = (b(self.u), b(self.v), b(self.z), b(self.w));
        [u[0], u[1], v[0], v[1], z[0], z[1], w[0], w[1]]
    }
}

/// `(c1, c2) = (<u,u> - 1, <u,v>)`.
pub fn constraints(st: &FullState) -> (f64, f64) {
    (dot(st.u, st.u) - 1.0, dot(st.u, st.v))
}

pub fn hamiltonian(st: &FullState, p: &Params, pot: &PotentialModel) -> Result<f64> {
    let x = st.x();
    let y = st.y();
    Ok(0.5 * p.m1 * dot(y, y)
        + 0.5 * p.m2 * dot(st.w, st.w)
        + p.m1 * pot.energy(SquaredRadius::of(x))?
        + p.m2 * pot.energy(SquaredRadius::of(st.z))?)
}

/// Gradient of the Hamiltonian in `(u, v, z, w)` coordinates. Needs only `U'`.
pub fn hamiltonian_gradient(st: &FullState, p: &Params, pot: &PotentialModel) -> Result<[f64; 8]> {
    let x = st.x();
    let y = st.y();
    let ax = pot.uprime(SquaredRadius::of(x))?;
    let az = pot.uprime(SquaredRadius::of(st.z))?;
    let gu = scale(2.0 * p.m1 * ax, x);
    let gv = scale(p.m1, y);
    let gz = add(gu, scale(2.0 * p.m2 * az, st.z));
    let gw = add(gv, scale(p.m2, st.w));
    Ok([gu[0], gu[1], gv[0], gv[1], gz[0], gz[1], gw[0], gw[1]])
}

/// `<v,v> - 2 <u, U'(<u+z,u+z>) (u+z) - U'(<z,z>) z>`.
pub fn atilde(st: &FullState, pot: &PotentialModel) -> Result<f64> {
    let x = st.x();
    let ax = pot.uprime(SquaredRadius::of(x))?;
    let az = pot.uprime(SquaredRadius::of(st.z))?;
    let force = [ax * x[0] - az * st.z[0], ax * x[1] - az * st.z[1]];
    Ok(dot(st.v, st.v) - 2.0 * dot(st.u, force))
}

/// Right-hand side `(u', v', z', w')` of the constrained equations of motion.
///
/// The constraint force uses `atilde / <u,u>`, the exact multiplier off the
/// constraint manifold. On the manifold this is the usual `atilde`; off it,
/// `c2` is conserved exactly and `c1' = 2 c2`, so numerical drift stays
/// linear instead of being amplified exponentially.
pub fn dirac_rhs(st: &FullState, p: &Params, pot: &PotentialModel) -> Result<[f64; 8]> {
    let x = st.x();
    let ax = pot.uprime(SquaredRadius::of(x))?;
    let az = pot.uprime(SquaredRadius::of(st.z))?;
    let a = atilde(st, pot)? / dot(st.u, st.u);
    let mut out = [0.0; 8];
    for i in 0..2 {
        out[i] = st.v[i];
        out[2 + i] = -2.0 * ax * x[i] + 2.0 * az * st.z[i] - a * st.u[i];
        out[4 + i] = st.w[i];
        out[6 + i] = -2.0 * az * st.z[i] + p.mu1() * a * st.u[i];
    }
    Ok(out)
}

/// `J = m1 (y1 x2 - x1 y2) + m2 (w1 z2 - z1 w2)`.
pub fn angular_momentum(st: &FullState, p: &Params) -> f64 {
    let x = st.x();
    let y = st.y();
    p.m1 * (y[0] * x[1] - x[0] * y[1]) + p.m2 * (st.w[0] * st.z[1] - st.z[0] * st.w[1])
}

/// Normalize `u` and strip the component of `v` along it.
pub fn project_to_constraints(st: &FullState) -> Result<FullState> {
    let uu = dot(st.u, st.u);
    if !(uu >= 1e-12) {
        return Err(Error::DegenerateInput(format!(
            "cannot project: <u,u> = {uu:e}"
        )));
    }
    let u = scale(1.0 / uu.sqrt(), st.u);
    let uv = dot(u, st.v);
    let v = [st.v[0] - uv * u[0], st.v[1] - uv * u[1]];
    Ok(FullState { u, v, ..*st })
}

/// A smooth scalar function on phase space.
///
/// Gradients are with respect to `(u1, u2, v1, v2, z1, z2, w1, w2)`. The
/// default gradient uses central differences with step `1e-6` scaled by the
/// coordinate magnitude.
pub trait Observable {
    fn value(&self, st: &FullState) -> Result<f64>;

    fn gradient(&self, st: &FullState) -> Result<[f64; 8]> {
        finite_difference_gradient(|s| self.value(s), st)
    }
}

pub fn finite_difference_gradient<F>(f: F, st: &FullState) -> Result<[f64; 8]>
where
    F: Fn(&FullState) -> Result<f64>,
{
    let base = st.to_array();
    let mut g = [0.0; 8];
    for k in 0..8 {
        let h = 1e-6 * base[k].abs().max(1.0);
        let mut plus = base;
        let mut minus = base;
        plus[k] += h;
        minus[k] -= h;
        g[k] = (f(&FullState::from_array(&plus))? - f(&FullState::from_array(&minus))?)
            / (2.0 * h);
    }
    Ok(g)
}

/// `c1 = <u,u> - 1` with exact gradient.
pub struct LinkLength;

impl Observable for LinkLength {
    fn value(&self, st: &FullState) -> Result<f64> {
        Ok(constraints(st).0)
    }
    fn gradient(&self, st: &FullState) -> Result<[f64; 8]> {
        Ok([2.0 * st.u[0], 2.0 * st.u[1], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }
}

/// `c2 = <u,v>` with exact gradient.
pub struct LinkVelocity;

impl Observable for LinkVelocity {
    fn value(&self, st: &FullState) -> Result<f64> {
        Ok(constraints(st).1)
    }
    fn gradient(&self, st: &FullState) -> Result<[f64; 8]> {
        Ok([st.v[0], st.v[1], st.u[0], st.u[1], 0.0, 0.0, 0.0, 0.0])
    }
}

/// The Hamiltonian as an observable with analytic gradient.
pub struct Energy<'a> {
    pub params: &'a Params,
    pub potential: &'a PotentialModel,
}

impl Observable for Energy<'_> {
    fn value(&self, st: &FullState) -> Result<f64> {
        hamiltonian(st, self.params, self.potential)
    }
    fn gradient(&self, st: &FullState) -> Result<[f64; 8]> {
        hamiltonian_gradient(st, self.params, self.potential)
    }
}

/// A single coordinate, flat index `0..8`.
pub struct Coordinate(pub usize);

impl Observable for Coordinate {
    fn value(&self, st: &FullState) -> Result<f64> {
        Ok(st.to_array()[self.0])
    }
    fn gradient(&self, _st: &FullState) -> Result<[f64; 8]> {
        let mut g = [0.0; 8];
        g[self.0] = 1.0;
        Ok(g)
    }
}

/// Closure-backed observable, optionally with an analytic gradient.
pub struct FnObservable<F, G = fn(&FullState) -> Result<[f64; 8]>> {
    value: F,
    gradient: Option<G>,
}

impl<F> FnObservable<F>
where
    F: Fn(&FullState) -> Result<f64>,
{
    pub fn new(value: F) -> Self {
        FnObservable {
            value,
            gradient: None,
        }
    }
}

impl<F, G> FnObservable<F, G>
where
    F: Fn(&FullState) -> Result<f64>,
    G: Fn(&FullState) -> Result<[f64; 8]>,
{
    pub fn with_gradient(value: F, gradient: G) -> Self {
        FnObservable {
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> Observable for FnObservable<F, G>
where
    F: Fn(&FullState) -> Result<f64>,
    G: Fn(&FullState) -> Result<[f64; 8]>,
{
    fn value(&self, st: &FullState) -> Result<f64> {
        (self.value)(st)
    }
    fn gradient(&self, st: &FullState) -> Result<[f64; 8]> {
        match &self.gradient {
            Some(g) => g(st),
            None => finite_difference_gradient(|s| (self.value)(s), st),
        }
    }
}

/// Canonical bracket written in `(u, v, z, w)` coordinates.
///
/// With `x = u + z`, `y = v + w` the partials transform as
/// `d/dx = d/du`, `d/dy = d/dv`, `d/dz|x = d/dz - d/du`, `d/dw|y = d/dw - d/dv`.
pub fn canonical_bracket_from_gradients(fg: &[f64; 8], gg: &[f64; 8], p: &Params) -> f64 {
    let split = |g: &[f64; 8]| {
        let gx = [g[0], g[1]];
        let gy = [g[2], g[3]];
        let gz = [g[4] - g[0], g[5] - g[1]];
        let gw = [g[6] - g[2], g[7] - g[3]];
        (gx, gy, gz, gw)
    };
    let (fx, fy, fz, fw) = split(fg);
    let (gx, gy, gz, gw) = split(gg);
    (dot(fx, gy) - dot(fy, gx)) / p.m1 + (dot(fz, gw) - dot(fw, gz)) / p.m2
}

pub fn canonical_bracket(
    f: &dyn Observable,
    g: &dyn Observable,
    st: &FullState,
    p: &Params,
) -> Result<f64> {
    Ok(canonical_bracket_from_gradients(
        &f.gradient(st)?,
        &g.gradient(st)?,
        p,
    ))
}

/// Poisson-Dirac bracket
/// `{f,g}* = {f,g} - ({f,c1}, {f,c2}) C ({c1,g}, {c2,g})^T`, `C = M [[0,-1],[1,0]]`.
///
/// `C` is taken as the exact inverse of `({ci,cj})`, i.e. scaled by
/// `1 / <u,u>`, so `c1` and `c2` are Casimirs everywhere, not only on the
/// constraint manifold.
pub fn dirac_bracket(
    f: &dyn Observable,
    g: &dyn Observable,
    st: &FullState,
    p: &Params,
) -> Result<f64> {
    let fg = f.gradient(st)?;
    let gg = g.gradient(st)?;
    let c1 = LinkLength.gradient(st)?;
    let c2 = LinkVelocity.gradient(st)?;
    let br = |a: &[f64; 8], b: &[f64; 8]| canonical_bracket_from_gradients(a, b, p);
    let (f_c1, f_c2) = (br(&fg, &c1), br(&fg, &c2));
    let (c1_g, c2_g) = (br(&c1, &gg), br(&c2, &gg));
    let m = p.big_m() / dot(st.u, st.u);
    // C * (c1_g, c2_g) = M (-c2_g, c1_g)
    let correction = f_c1 * (-m * c2_g) + f_c2 * (m * c1_g);
    Ok(br(&fg, &gg) - correction)
}

/// Lift a reduced point to a representative full state with `u = (1, 0)`.
pub fn lift_reduced(s: &crate::reduced::ReducedState) -> FullState {
    FullState {
        u: [1.0, 0.0],
        v: [0.0, -s.s3],
        z: [s.s4, -s.s5],
        w: [s.s6, -s.s7],
    }
}
