//! Sine-Gordon `u_tt = u_xx - sin u` in first-order form `(u, v = u_t)`, its
//! auto-Bäcklund transform, and the linear objects attached to a transform
//! pair.
//!
//! The transform with parameter `a` relates `x = (u, v)` and `y = (u', v')`:
//!
//! ```text
//! F1 = u_x + v' - a sin((u + u')/2) - (1/a) sin((u - u')/2)
//! F2 = v + u'_x - (1/a) sin((u - u')/2) + a sin((u + u')/2)
//! ```
//!
//! Its zeros over `y = 0` are the kinks `u = 4 atan(exp(γ(x - ct) + δ))` with
//! `γ = (a + 1/a)/2` and `c = -(1 - a²)/(1 + a²)`: for `a < 1` the kink moves
//! towards negative `x`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dichotomy::{adjoint_solution, CoefficientProfile};
use crate::error::{Error, Result};
use crate::grid::{
    h1_norm, high_order_difference, interpolate, l2_norm, midpoint_values, sup_norm, trapezoid,
    Field, Grid1D,
};

/// Largest stable time step as a fraction of `dx`.
pub const CFL: f64 = 0.9;

/// Residual a transform solver must reach.
pub const BT_TOLERANCE: f64 = 1e-6;

/// Residual below which a pair counts as a transform pair for the linearized
/// objects.
pub const PAIR_TOLERANCE: f64 = 1e-4;

/// Newton iterations allowed to the inverse solver.
pub const MAX_NEWTON: usize = 50;

/// Kink family parameters: Bäcklund parameter `a ∈ (0, 1)` and phase `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkParams {
    a: f64,
    delta: f64,
}

impl KinkParams {
    pub fn new(a: f64, delta: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "a = {a} must lie in (0, 1)"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta = {delta} is not finite"
            )));
        }
        Ok(Self { a, delta })
    }

    /// Parameters of the kink whose centre sits at `center` at `t = 0`.
    pub fn centered(a: f64, center: f64) -> Result<Self> {
        let gamma = 0.5 * (a + 1.0 / a);
        Self::new(a, -gamma * center)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Spatial steepness `γ = (a + 1/a)/2`.
    pub fn gamma(&self) -> f64 {
        0.5 * (self.a + 1.0 / self.a)
    }

    /// Signed velocity `c = -(1 - a²)/(1 + a²)`; `γ·sqrt(1 - c²) = 1`.
    pub fn speed(&self) -> f64 {
        -(1.0 - self.a * self.a) / (1.0 + self.a * self.a)
    }

    /// Position of the kink centre (`u = π`) at time `t`.
    pub fn center(&self, t: f64) -> f64 {
        self.speed() * t - self.delta / self.gamma()
    }
}

/// A phase-space point `(u, v)` on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SGState {
    u: Field,
    v: Field,
}

impl SGState {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { u, v })
    }

    pub fn grid(&self) -> &Grid1D {
        self.u.grid()
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn v(&self) -> &Field {
        &self.v
    }

    /// Boundary values of `u` rounded to multiples of 2π, as integers.
    pub fn boundary_levels(&self) -> (i64, i64) {
        (
            (self.u.first() / TAU).round() as i64,
            (self.u.last() / TAU).round() as i64,
        )
    }

    /// `k_right - k_left`.
    pub fn kink_index(&self) -> i64 {
        let (l, r) = self.boundary_levels();
        r - l
    }

    /// Largest distance of a boundary value of `u` from its level.
    pub fn boundary_defect(&self) -> f64 {
        let (l, r) = self.boundary_levels();
        (self.u.first() - TAU * l as f64)
            .abs()
            .max((self.u.last() - TAU * r as f64).abs())
    }

    /// Same samples on a grid shifted by whole cells.
    pub fn translated(&self, cells: i64) -> Result<Self> {
        let g = self.grid().translated(cells);
        Self::new(self.u.with_grid(g)?, self.v.with_grid(g)?)
    }
}

pub fn sg_zero(grid: Grid1D) -> SGState {
    SGState {
        u: Field::zeros(grid),
        v: Field::zeros(grid),
    }
}

/// `sech z` without overflow.
fn sech(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// `4 atan(exp z)`, accurate in both tails.
fn kink_angle(z: f64) -> f64 {
    if z > 0.0 {
        TAU - 4.0 * (-z).exp().atan()
    } else {
        4.0 * z.exp().atan()
    }
}

/// Kink samples without the boundary check; used where the profile may be
/// cut off by the domain (fitting, perturbation targets).
pub(crate) fn kink_samples(p: &KinkParams, grid: &Grid1D, t: f64) -> (Vec<f64>, Vec<f64>) {
    let gamma = p.gamma();
    let c = p.speed();
    let amp = 1.0 / p.a - p.a;
    grid.coordinates()
        .map(|x| {
            let z = gamma * (x - c * t) + p.delta;
            (kink_angle(z), amp * sech(z))
        })
        .unzip()
}

/// The traveling kink at time `t`. Fails if `u` is not within 1e-10 of 0 and
/// 2π at the two ends of the grid.
pub fn sg_kink(p: &KinkParams, grid: &Grid1D, t: f64) -> Result<SGState> {
    let (u, v) = kink_samples(p, grid, t);
    let (first, last) = (u[0], u[u.len() - 1]);
    if first.abs() > 1e-10 || (last - TAU).abs() > 1e-10 {
        return Err(Error::DomainTooNarrow(format!(
            "kink reaches {first:.3e} and 2π{:+.3e} at the ends",
            last - TAU
        )));
    }
    SGState::new(Field::new(*grid, u)?, Field::new(*grid, v)?)
}

/// Trapezoid quadrature of `½v² + ½u_x² + (1 - cos u)`.
pub fn sg_energy(s: &SGState) -> f64 {
    let dx = s.grid().dx();
    let u = s.u.samples();
    let ux = high_order_difference(u, dx);
    let density: Vec<f64> = u
        .iter()
        .zip(s.v.samples())
        .zip(&ux)
        .map(|((&u, &v), &ux)| {
            let h = (0.5 * u).sin();
            0.5 * v * v + 0.5 * ux * ux + 2.0 * h * h
        })
        .collect();
    trapezoid(&density, dx)
}

/// `H¹ × L²` distance between two states on the same grid.
pub fn sg_distance(a: &SGState, b: &SGState) -> Result<f64> {
    let du = a.u.sub(&b.u)?;
    let dv = a.v.sub(&b.v)?;
    Ok(h1_norm(&du).hypot(l2_norm(&dv)))
}

fn check_dt(dt: f64, dx: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be positive"
        )));
    }
    let limit = CFL * dx;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    Ok(())
}

/// Position-Verlet stepping on raw buffers; ends are never written.
struct Stepper {
    u: Vec<f64>,
    v: Vec<f64>,
    dx: f64,
}

impl Stepper {
    fn step(&mut self, dt: f64) {
        let n = self.u.len();
        let half = 0.5 * dt;
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        for i in 1..n - 1 {
            self.u[i] += half * self.v[i];
        }
        let u = &self.u;
        for i in 1..n - 1 {
            let lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2;
            self.v[i] += dt * (lap - u[i].sin());
        }
        for i in 1..n - 1 {
            self.u[i] += half * self.v[i];
        }
    }

    fn finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    fn state(&self, grid: Grid1D) -> Result<SGState> {
        SGState::new(
            Field::new(grid, self.u.clone())?,
            Field::new(grid, self.v.clone())?,
        )
    }
}

/// One position-Verlet step: `u += dt/2·v`, `v += dt·(u_xx - sin u)`,
/// `u += dt/2·v`, with both boundary samples held fixed.
pub fn sg_step(s: &SGState, dt: f64) -> Result<SGState> {
    let grid = *s.grid();
    check_dt(dt, grid.dx())?;
    let mut st = Stepper {
        u: s.u.samples().to_vec(),
        v: s.v.samples().to_vec(),
        dx: grid.dx(),
    };
    st.step(dt);
    if !st.finite() {
        return Err(Error::Blowup { t: dt });
    }
    st.state(grid)
}

/// Number of steps and the step actually used to reach `t_final` exactly.
pub(crate) fn step_plan(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "T = {t_final} must be non-negative"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be positive"
        )));
    }
    if t_final == 0.0 {
        return Ok((0, dt));
    }
    let steps = (t_final / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((steps, t_final / steps as f64))
}

/// Evolves to `t_final`, calling `visit` at `t = 0`, every `stride` steps and
/// at `t_final`. The step is shrunk to `t_final / ceil(t_final / dt)`.
pub fn sg_evolve_with(
    s: &SGState,
    t_final: f64,
    dt: f64,
    stride: usize,
    mut visit: impl FnMut(f64, &SGState) -> Result<()>,
) -> Result<SGState> {
    let grid = *s.grid();
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    check_dt(dt, grid.dx())?;
    let (steps, h) = step_plan(t_final, dt)?;
    visit(0.0, s)?;
    let mut st = Stepper {
        u: s.u.samples().to_vec(),
        v: s.v.samples().to_vec(),
        dx: grid.dx(),
    };
    for k in 1..=steps {
        st.step(h);
        let t = k as f64 * h;
        if k % stride == 0 || k == steps {
            if !st.finite() {
                return Err(Error::Blowup { t });
            }
            visit(if k == steps { t_final } else { t }, &st.state(grid)?)?;
        }
    }
    if !st.finite() {
        return Err(Error::Blowup { t: t_final });
    }
    st.state(grid)
}

/// Sampled trajectory `(t, state)`, including `t = 0` and `t = t_final`.
pub fn sg_evolve(s: &SGState, t_final: f64, dt: f64, stride: usize) -> Result<Vec<(f64, SGState)>> {
    let mut out = Vec::new();
    sg_evolve_with(s, t_final, dt, stride, |t, st| {
        out.push((t, st.clone()));
        Ok(())
    })?;
    Ok(out)
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("a = {a} must be positive")))
    }
}

/// Both transform components, with `∂x` taken by the high-order difference.
pub fn bt_residual(x: &SGState, y: &SGState, a: f64) -> Result<(Field, Field)> {
    if x.grid() != y.grid() {
        return Err(Error::GridMismatch);
    }
    check_a(a)?;
    let dx = x.grid().dx();
    let (u, v) = (x.u.samples(), x.v.samples());
    let (up, vp) = (y.u.samples(), y.v.samples());
    let ux = high_order_difference(u, dx);
    let upx = high_order_difference(up, dx);
    let mut f1 = Vec::with_capacity(u.len());
    let mut f2 = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let sp = (0.5 * (u[i] + up[i])).sin();
        let sm = (0.5 * (u[i] - up[i])).sin();
        f1.push(ux[i] + vp[i] - a * sp - sm / a);
        f2.push(v[i] + upx[i] - sm / a + a * sp);
    }
    Ok((Field::new(*x.grid(), f1)?, Field::new(*x.grid(), f2)?))
}

/// Sup norm over both residual components.
pub fn bt_residual_norm(x: &SGState, y: &SGState, a: f64) -> Result<f64> {
    let (f1, f2) = bt_residual(x, y, a)?;
    Ok(sup_norm(&f1).max(sup_norm(&f2)))
}

/// One classical Runge-Kutta step of `w' = rhs(k, w)` where `k` selects the
/// coefficient samples: 0 at the start, 1 at the midpoint, 2 at the end.
fn rk4(w: f64, h: f64, rhs: impl Fn(usize, f64) -> f64) -> f64 {
    let k1 = rhs(0, w);
    let k2 = rhs(1, w + 0.5 * h * k1);
    let k3 = rhs(1, w + 0.5 * h * k2);
    let k4 = rhs(2, w + h * k3);
    w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Solves row 1 for `u` given `y` (outward from the grid midpoint, where
/// `u = u' + 4 atan(exp(γ x + δ))`), then row 2 for `v`.
pub fn bt_forward(y: &SGState, a: f64, delta: f64) -> Result<SGState> {
    check_a(a)?;
    if !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} is not finite"
        )));
    }
    let grid = *y.grid();
    let n = grid.n();
    if n < 4 {
        return Err(Error::GridTooSmall { n, min: 4 });
    }
    let dx = grid.dx();
    let gamma = 0.5 * (a + 1.0 / a);
    let (up, vp) = (y.u.samples(), y.v.samples());
    let (up_mid, vp_mid) = (midpoint_values(up), midpoint_values(vp));
    let rhs = |upk: f64, vpk: f64, u: f64| {
        a * (0.5 * (u + upk)).sin() + (0.5 * (u - upk)).sin() / a - vpk
    };
    let m = grid.midpoint_index();
    let mut u = vec![0.0; n];
    u[m] = up[m] + kink_angle(gamma * grid.x(m) + delta);
    for i in m..n - 1 {
        let pick = |k: usize| match k {
            0 => (up[i], vp[i]),
            1 => (up_mid[i], vp_mid[i]),
            _ => (up[i + 1], vp[i + 1]),
        };
        u[i + 1] = rk4(u[i], dx, |k, w| {
            let (p, q) = pick(k);
            rhs(p, q, w)
        });
    }
    for i in (1..=m).rev() {
        let pick = |k: usize| match k {
            0 => (up[i], vp[i]),
            1 => (up_mid[i - 1], vp_mid[i - 1]),
            _ => (up[i - 1], vp[i - 1]),
        };
        u[i - 1] = rk4(u[i], -dx, |k, w| {
            let (p, q) = pick(k);
            rhs(p, q, w)
        });
    }
    if u.iter().zip(up).any(|(a, b)| !((a - b).abs() < 1e6)) {
        return Err(Error::Blowup { t: 0.0 });
    }
    let upx = high_order_difference(up, dx);
    let v: Vec<f64> = (0..n)
        .map(|i| -upx[i] + (0.5 * (u[i] - up[i])).sin() / a - a * (0.5 * (u[i] + up[i])).sin())
        .collect();
    let x = SGState::new(Field::new(grid, u)?, Field::new(grid, v)?)?;
    let expected = y.kink_index() + 1;
    if x.kink_index() != expected {
        return Err(Error::UnexpectedTopology {
            expected,
            found: x.kink_index(),
        });
    }
    let residual = bt_residual_norm(&x, y, a)?;
    if residual >= BT_TOLERANCE {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: BT_TOLERANCE,
        });
    }
    Ok(x)
}

/// Row 2 of the transform solved for `u'` across `x`, swept inward from both
/// ends towards `anchor`.
struct InverseSweeps<'a> {
    u: &'a [f64],
    v: &'a [f64],
    u_mid: Vec<f64>,
    v_mid: Vec<f64>,
    dx: f64,
    anchor: usize,
    left_level: f64,
    right_level: f64,
}

impl InverseSweeps<'_> {
    fn rhs(a: f64, u: f64, v: f64, up: f64) -> f64 {
        -v + (0.5 * (u - up)).sin() / a - a * (0.5 * (u + up)).sin()
    }

    /// `(u'` on `0..=anchor` from the left, `u'` on `anchor..n` from the right`)`.
    fn sweep(&self, a: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.u.len();
        let m = self.anchor;
        let (u, v) = (self.u, self.v);
        let mut left = vec![self.left_level; m + 1];
        for i in 0..m {
            left[i + 1] = rk4(left[i], self.dx, |k, w| match k {
                0 => Self::rhs(a, u[i], v[i], w),
                1 => Self::rhs(a, self.u_mid[i], self.v_mid[i], w),
                _ => Self::rhs(a, u[i + 1], v[i + 1], w),
            });
        }
        let mut right = vec![self.right_level; n - m];
        for i in (m + 1..n).rev() {
            let r = i - m;
            right[r - 1] = rk4(right[r], -self.dx, |k, w| match k {
                0 => Self::rhs(a, u[i], v[i], w),
                1 => Self::rhs(a, self.u_mid[i - 1], self.v_mid[i - 1], w),
                _ => Self::rhs(a, u[i - 1], v[i - 1], w),
            });
        }
        let ok = left
            .iter()
            .chain(&right)
            .all(|w| w.is_finite() && w.abs() < 1e6);
        ok.then_some((left, right))
    }

    fn mismatch(&self, a: f64) -> Option<(f64, f64)> {
        let (l, r) = self.sweep(a)?;
        Some((l[self.anchor], r[0]))
    }
}

/// Solves `2×2` Newton steps for `(a, s)` from `(L(a) - s, R(a) - s) = 0`.
fn newton_direction(l: f64, r: f64, la: f64, ra: f64, s: f64) -> Option<(f64, f64)> {
    // J = [[la, -1], [ra, -1]], rhs = -(l - s, r - s).
    let det = -la + ra;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let (b1, b2) = (-(l - s), -(r - s));
    let da = (-b1 + b2) / det;
    let ds = (la * b2 - ra * b1) / det;
    Some((da, ds))
}

/// Recovers the transform partner `y` of a 1-kink-like `x` and the parameter
/// `a` by shooting on row 2: `u'` is swept inward from the lowered
/// backgrounds at both ends, and Newton on `(a, u'(anchor))` closes the gap
/// at the steepest point of `u`. `v'` then follows from row 1.
pub fn sg_bt_inverse(x: &SGState, a_guess: f64) -> Result<(SGState, f64)> {
    check_a(a_guess)?;
    let grid = *x.grid();
    let n = grid.n();
    if n < 8 {
        return Err(Error::GridTooSmall { n, min: 8 });
    }
    let dx = grid.dx();
    let (u, v) = (x.u.samples(), x.v.samples());
    let ux = high_order_difference(u, dx);
    let anchor = ux
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap()
        .clamp(1, n - 2);
    let (kl, kr) = x.boundary_levels();
    let sweeps = InverseSweeps {
        u,
        v,
        u_mid: midpoint_values(u),
        v_mid: midpoint_values(v),
        dx,
        anchor,
        left_level: TAU * kl as f64,
        right_level: TAU * (kr - 1) as f64,
    };

    let no_conv = |why: &str| Error::NoConvergence(format!("inverse transform: {why}"));
    let mut a = a_guess;
    let (mut l, mut r) = sweeps
        .mismatch(a)
        .ok_or_else(|| no_conv("initial sweep diverged"))?;
    let mut s = 0.5 * (l + r);
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        if (l - s).abs().max((r - s).abs()) < 1e-12 {
            converged = true;
            break;
        }
        let h = 1e-6 * a;
        let (lp, rp) = sweeps
            .mismatch(a + h)
            .ok_or_else(|| no_conv("derivative sweep"))?;
        let (lm, rm) = sweeps
            .mismatch(a - h)
            .ok_or_else(|| no_conv("derivative sweep"))?;
        let (la, ra) = ((lp - lm) / (2.0 * h), (rp - rm) / (2.0 * h));
        let (da, ds) =
            newton_direction(l, r, la, ra, s).ok_or_else(|| no_conv("singular Jacobian"))?;
        let old = (l - s).abs().max((r - s).abs());
        let mut lambda = 1.0;
        loop {
            let trial = a + lambda * da;
            if trial > 0.0 {
                if let Some((lt, rt)) = sweeps.mismatch(trial) {
                    let st = s + lambda * ds;
                    if (lt - st).abs().max((rt - st).abs()) < old || lambda < 1e-3 {
                        a = trial;
                        l = lt;
                        r = rt;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(no_conv("line search failed"));
            }
        }
        // Row mismatch is linear in s, so s can be re-centred exactly.
        s = 0.5 * (l + r);
    }
    if !converged {
        return Err(no_conv(&format!("{MAX_NEWTON} Newton steps exhausted")));
    }

    let (left, right) = sweeps.sweep(a).ok_or_else(|| no_conv("final sweep"))?;
    let mut up = left;
    up.pop();
    up.push(s);
    up.extend_from_slice(&right[1..]);
    let vp: Vec<f64> = (0..n)
        .map(|i| -ux[i] + a * (0.5 * (u[i] + up[i])).sin() + (0.5 * (u[i] - up[i])).sin() / a)
        .collect();
    let y = SGState::new(Field::new(grid, up)?, Field::new(grid, vp)?)?;
    let residual = bt_residual_norm(x, &y, a)?;
    if residual >= BT_TOLERANCE {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: BT_TOLERANCE,
        });
    }
    Ok((y, a))
}

fn alpha_value(a: f64, u: f64, up: f64) -> f64 {
    0.5 * a * (0.5 * (u + up)).cos() + 0.5 / a * (0.5 * (u - up)).cos()
}

fn snap(v: f64) -> f64 {
    TAU * (v / TAU).round()
}

/// `α = (a/2) cos((u+u')/2) + (1/(2a)) cos((u-u')/2)`, with limits taken at
/// the boundary levels and the anchor at its sign change (grid midpoint if it
/// has none).
pub fn sg_alpha(x: &SGState, y: &SGState, a: f64) -> Result<CoefficientProfile> {
    if x.grid() != y.grid() {
        return Err(Error::GridMismatch);
    }
    check_a(a)?;
    let (u, up) = (x.u.samples(), y.u.samples());
    let alpha: Vec<f64> = u
        .iter()
        .zip(up)
        .map(|(&u, &up)| alpha_value(a, u, up))
        .collect();
    let n = alpha.len();
    let alpha_minus = alpha_value(a, snap(u[0]), snap(up[0]));
    let alpha_plus = alpha_value(a, snap(u[n - 1]), snap(up[n - 1]));
    let anchor = sign_change(&alpha)
        .map(|k| {
            if alpha[k].abs() <= alpha[k + 1].abs() {
                k
            } else {
                k + 1
            }
        })
        .unwrap_or_else(|| x.grid().midpoint_index());
    CoefficientProfile::continuous(
        Field::new(*x.grid(), alpha)?,
        alpha_minus,
        alpha_plus,
        anchor,
    )
}

/// First `k` with `v[k]` and `v[k+1]` of opposite sign (or `v[k] = 0`).
fn sign_change(v: &[f64]) -> Option<usize> {
    v.windows(2)
        .position(|w| w[0] == 0.0 || (w[0] > 0.0) != (w[1] > 0.0))
}

fn require_pair(x: &SGState, y: &SGState, a: f64) -> Result<()> {
    let residual = bt_residual_norm(x, y, a)?;
    if residual < PAIR_TOLERANCE {
        Ok(())
    } else {
        Err(Error::ResidualTooLarge {
            residual,
            tolerance: PAIR_TOLERANCE,
        })
    }
}

/// Kernel of the linearization of the transform in `(u, v)`:
/// `φ = exp(∫ α)` from the sign change of `α`, scaled to unit L² norm, and
/// `ψ = ((1/(2a)) cos((u-u')/2) - (a/2) cos((u+u')/2)) φ`.
pub fn sg_kernel_element(x: &SGState, y: &SGState, a: f64) -> Result<(Field, Field)> {
    require_pair(x, y, a)?;
    let profile = sg_alpha(x, y, a)?;
    let phi = adjoint_solution(&profile.negated()?)?;
    let grid = *x.grid();
    let phi = Field::new(grid, phi.values().to_vec())?;
    let phi = phi.scaled(1.0 / l2_norm(&phi))?;
    let (u, up) = (x.u.samples(), y.u.samples());
    let psi: Vec<f64> = (0..u.len())
        .map(|i| {
            let cp = (0.5 * (u[i] + up[i])).cos();
            let cm = (0.5 * (u[i] - up[i])).cos();
            (0.5 / a * cm - 0.5 * a * cp) * phi.samples()[i]
        })
        .collect();
    Ok((phi, Field::new(grid, psi)?))
}

/// `∫ b μ` with `b = a⁻² sin((u-u')/2) + sin((u+u')/2)` and `μ = exp(∫ α)`,
/// the adjoint solution of the parameter-direction problem, normalized to 1
/// where `α` vanishes (located between grid points by cubic interpolation).
pub fn sg_nondegeneracy(x: &SGState, y: &SGState, a: f64) -> Result<f64> {
    require_pair(x, y, a)?;
    let profile = sg_alpha(x, y, a)?;
    let grid = *x.grid();
    let dx = grid.dx();
    let alpha = profile.alpha();
    let k0 = profile.anchor();
    let log_mu = crate::grid::cumulative_integral(alpha, dx, k0);
    let offset = match sign_change(alpha) {
        Some(k) => {
            let root = cubic_root(alpha, &grid, k);
            integrate_cubic(alpha, &grid, grid.x(k0), root)
        }
        None => 0.0,
    };
    let (u, up) = (x.u.samples(), y.u.samples());
    let integrand: Vec<f64> = (0..u.len())
        .map(|i| {
            let b = (0.5 * (u[i] - up[i])).sin() / (a * a) + (0.5 * (u[i] + up[i])).sin();
            b * (log_mu[i] - offset).exp()
        })
        .collect();
    Ok(trapezoid(&integrand, dx))
}

/// Root of the cubic interpolant of `v` inside `[x_k, x_{k+1}]`.
fn cubic_root(v: &[f64], grid: &Grid1D, k: usize) -> f64 {
    let (mut lo, mut hi) = (grid.x(k), grid.x(k + 1));
    let f_lo = interpolate(v, grid, lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = interpolate(v, grid, mid);
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫_{x0}^{x1}` of the cubic interpolant of `v`, by 3-point Gauss-Legendre
/// on each cell piece (exact for the piecewise cubic).
fn integrate_cubic(v: &[f64], grid: &Grid1D, x0: f64, x1: f64) -> f64 {
    if x1 < x0 {
        return -integrate_cubic(v, grid, x1, x0);
    }
    const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let dx = grid.dx();
    let mut total = 0.0;
    let mut left = x0;
    while left < x1 {
        let cell = ((left - grid.x0()) / dx).floor();
        let right = (grid.x0() + (cell + 1.0) * dx).min(x1).max(left + 1e-300);
        let (c, h) = (0.5 * (left + right), 0.5 * (right - left));
        total += h * NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(t, w)| w * interpolate(v, grid, c + h * t))
            .sum::<f64>();
        if right >= x1 {
            break;
        }
        left = right;
    }
    total
}

/// `u = π` crossing of a 1-kink-like state, by linear interpolation.
pub fn kink_center(s: &SGState) -> Option<f64> {
    let u = s.u.samples();
    let (l, _) = s.boundary_levels();
    let level = TAU * l as f64 + PI;
    let k = u
        .windows(2)
        .position(|w| (w[0] - level) * (w[1] - level) <= 0.0)?;
    let (a, b) = (u[k] - level, u[k + 1] - level);
    let t = if a == b { 0.0 } else { a / (a - b) };
    Some(s.grid().x(k) + t * s.grid().dx())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dx: f64) -> Grid1D {
        Grid1D::symmetric(40.0, dx).unwrap()
    }

    #[test]
    fn params_relations() {
        let p = KinkParams::new(0.5, 0.0).unwrap();
        assert_eq!(p.gamma(), 1.25);
        assert!((p.speed() + 0.6).abs() < 1e-15);
        for a in [0.1, 0.3, 0.5, 0.9] {
            let p = KinkParams::new(a, 0.0).unwrap();
            assert!((p.gamma() * (1.0 - p.speed().powi(2)).sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(KinkParams::new(1.0, 0.0).is_err());
        assert!(KinkParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn zero_state() {
        let z = sg_zero(grid(0.1));
        assert_eq!(z.kink_index(), 0);
        assert_eq!(sg_energy(&z), 0.0);
        assert!(sup_norm(z.u()) == 0.0 && sup_norm(z.v()) == 0.0);
        assert_eq!(sg_step(&z, 0.05).unwrap(), z);
    }

    #[test]
    fn kink_basics() {
        let g = grid(0.01);
        let p = KinkParams::new(0.5, 0.0).unwrap();
        let k = sg_kink(&p, &g, 0.0).unwrap();
        assert_eq!(k.kink_index(), 1);
        let i = g.nearest_index(0.0);
        assert!((k.u().samples()[i] - PI).abs() < g.dx() * p.gamma() * 2.0);
        let narrow = Grid1D::symmetric(5.0, 0.01).unwrap();
        assert!(matches!(
            sg_kink(&p, &narrow, 0.0),
            Err(Error::DomainTooNarrow(_))
        ));
    }

    #[test]
    fn equilibrium_two_pi() {
        let g = grid(0.1);
        let s = SGState::new(Field::constant(g, TAU), Field::zeros(g)).unwrap();
        let next = sg_step(&s, 0.09).unwrap();
        for (a, b) in next.u().samples().iter().zip(s.u().samples()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(sup_norm(next.v()) < 1e-14);
    }

    #[test]
    fn step_rejects_large_dt() {
        let z = sg_zero(grid(0.1));
        assert!(matches!(sg_step(&z, 0.1), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn zero_pair_residual_is_zero() {
        let z = sg_zero(grid(0.1));
        for a in [0.3, 0.7] {
            assert_eq!(bt_residual_norm(&z, &z, a).unwrap(), 0.0);
        }
    }

    #[test]
    fn evolve_zero_time() {
        let g = grid(0.1);
        let k = sg_kink(&KinkParams::new(0.5, 0.0).unwrap(), &g, 0.0).unwrap();
        let traj = sg_evolve(&k, 0.0, 0.05, 1).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj[0].1, k);
    }

    #[test]
    fn alpha_of_zero_pair_is_constant() {
        let z = sg_zero(grid(0.1));
        let cp = sg_alpha(&z, &z, 0.4).unwrap();
        let expect = 0.2 + 1.25;
        assert!(cp.alpha().iter().all(|v| (v - expect).abs() < 1e-15));
    }

    #[test]
    fn integrate_cubic_matches_polynomial() {
        let g = Grid1D::new(0.0, 0.1, 40).unwrap();
        let v: Vec<f64> = g.coordinates().map(|x| x * x * x).collect();
        let got = integrate_cubic(&v, &g, 0.537, 2.216);
        let exact = (2.216f64.powi(4) - 0.537f64.powi(4)) / 4.0;
        assert!((got - exact).abs() < 1e-12);
        let root = cubic_root(
            &g.coordinates().map(|x| x * x - 2.0).collect::<Vec<_>>(),
            &g,
            14,
        );
        assert!((root - 2f64.sqrt()).abs() < 1e-13);
    }
}
