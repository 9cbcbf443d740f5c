//! Toda lattice `q̇_j = p_j`, `ṗ_j = e^{q_{j-1} - q_j} - e^{q_j - q_{j+1}}` on
//! a finite window, and its Bäcklund transform with parameter `κ`:
//!
//! ```text
//! F1_j = p_j  + e^{-(q'_j - q_j - κ)} + e^{-(q_j - q'_{j-1} + κ)} - 2 cosh κ
//! F2_j = p'_j + e^{-(q'_j - q_j - κ)} + e^{-(q_{j+1} - q'_j + κ)} - 2 cosh κ
//! ```
//!
//! Beyond the window the lattice is frozen at the declared asymptotic values
//! `q_left`, `q_right`. The one-soliton over the vacuum is
//!
//! ```text
//! q_j = log cosh(κj + γ) - log cosh(κ(j+1) + γ) - κ
//! p_j = sinh²κ / (cosh(κj + γ) cosh(κ(j+1) + γ))
//! ```
//!
//! which falls from 0 to `-2κ` and moves right at speed `sinh κ / κ`
//! (`γ(t) = γ - t sinh κ`). Transforming `y` into `x` therefore lowers the right
//! asymptote: `x.q_right = y.q_right - 2κ`.

use serde::{Deserialize, Serialize};

use crate::dichotomy::CoefficientProfile;
use crate::error::{Error, Result};
use crate::grid::{l2_seq, sup_norm, LatticeWindow, Seq};

/// Largest admissible time step.
pub const MAX_DT: f64 = 0.1;

/// Residual a forward transform must reach.
pub const FORWARD_TOLERANCE: f64 = 1e-8;

/// Residual an inverse transform must reach.
pub const INVERSE_TOLERANCE: f64 = 1e-6;

/// Newton iterations allowed to the iterative solvers.
pub const MAX_NEWTON: usize = 50;

/// `log cosh x` without overflow.
pub(crate) fn lncosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Soliton parameters: amplitude parameter `κ > 0` and phase `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    kappa: f64,
    gamma_phase: f64,
}

impl SolitonParams {
    pub fn new(kappa: f64, gamma_phase: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa = {kappa} must be positive"
            )));
        }
        if !gamma_phase.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma_phase = {gamma_phase} is not finite"
            )));
        }
        Ok(Self { kappa, gamma_phase })
    }

    /// Parameters of the soliton whose `r`-pulse peaks at lattice position
    /// `center` (between sites `j` and `j + 1` for `center = j + ½`).
    pub fn centered(kappa: f64, center: f64) -> Result<Self> {
        Self::new(kappa, -kappa * (center + 0.5))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma_phase(&self) -> f64 {
        self.gamma_phase
    }

    /// `sinh κ / κ`.
    pub fn speed(&self) -> f64 {
        self.kappa.sinh() / self.kappa
    }

    /// `2κ`, the drop of `q` across the soliton.
    pub fn amplitude(&self) -> f64 {
        2.0 * self.kappa
    }

    /// Peak position of the pulse `r_j = q_j - q_{j+1}`.
    pub fn center(&self) -> f64 {
        -self.gamma_phase / self.kappa - 0.5
    }

    /// The same soliton after time `t`.
    pub fn advanced(&self, t: f64) -> Self {
        Self {
            kappa: self.kappa,
            gamma_phase: self.gamma_phase - self.kappa.sinh() * t,
        }
    }
}

/// Soliton displacement at site `j`.
pub(crate) fn soliton_q(kappa: f64, gamma: f64, j: f64) -> f64 {
    lncosh(kappa * j + gamma) - lncosh(kappa * (j + 1.0) + gamma) - kappa
}

/// Soliton momentum at site `j`.
pub(crate) fn soliton_p(kappa: f64, gamma: f64, j: f64) -> f64 {
    let s = kappa.sinh();
    s * s * (-lncosh(kappa * j + gamma) - lncosh(kappa * (j + 1.0) + gamma)).exp()
}

/// A phase-space point `(q, p)` on a lattice window with the asymptotic
/// values of `q` on either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaState {
    q: Seq,
    p: Seq,
    q_left: f64,
    q_right: f64,
}

impl TodaState {
    pub fn new(q: Seq, p: Seq, q_left: f64, q_right: f64) -> Result<Self> {
        if q.window() != p.window() {
            return Err(Error::WindowMismatch);
        }
        if !(q_left.is_finite() && q_right.is_finite()) {
            return Err(Error::InvalidParameter(
                "asymptotic values must be finite".into(),
            ));
        }
        Ok(Self {
            q,
            p,
            q_left,
            q_right,
        })
    }

    pub fn window(&self) -> &LatticeWindow {
        self.q.window()
    }

    pub fn q(&self) -> &Seq {
        &self.q
    }

    pub fn p(&self) -> &Seq {
        &self.p
    }

    pub fn q_left(&self) -> f64 {
        self.q_left
    }

    pub fn q_right(&self) -> f64 {
        self.q_right
    }

    /// `q_right - q_left`.
    pub fn q_drop(&self) -> f64 {
        self.q_right - self.q_left
    }

    /// Largest distance of the end values of `q` from the declared asymptotes.
    pub fn boundary_defect(&self) -> f64 {
        (self.q.first() - self.q_left)
            .abs()
            .max((self.q.last() - self.q_right).abs())
    }

    /// `r_j = q_j - q_{j+1}` for every site, with `q_right` past the end.
    pub fn stretches(&self) -> Vec<f64> {
        let q = self.q.values();
        (0..q.len())
            .map(|i| q[i] - q.get(i + 1).copied().unwrap_or(self.q_right))
            .collect()
    }

    /// Same values on a window shifted by `shift` sites.
    pub fn translated(&self, shift: i64) -> Result<Self> {
        let w = self.window().translated(shift);
        Self::new(
            Seq::new(w, self.q.values().to_vec())?,
            Seq::new(w, self.p.values().to_vec())?,
            self.q_left,
            self.q_right,
        )
    }
}

pub fn toda_vacuum(w: LatticeWindow) -> TodaState {
    TodaState {
        q: Seq::zeros(w),
        p: Seq::zeros(w),
        q_left: 0.0,
        q_right: 0.0,
    }
}

/// Soliton samples without the width check.
pub(crate) fn soliton_state(sp: &SolitonParams, w: LatticeWindow) -> Result<TodaState> {
    let (k, g) = (sp.kappa, sp.gamma_phase);
    TodaState::new(
        Seq::from_fn(w, |j| soliton_q(k, g, j as f64))?,
        Seq::from_fn(w, |j| soliton_p(k, g, j as f64))?,
        0.0,
        -2.0 * k,
    )
}

/// The one-soliton over the vacuum. Fails unless `q` is within 1e-12 of its
/// limits at both ends of the window.
pub fn toda_soliton(sp: &SolitonParams, w: LatticeWindow) -> Result<TodaState> {
    let s = soliton_state(sp, w)?;
    if s.boundary_defect() > 1e-12 {
        return Err(Error::WindowTooNarrow(format!(
            "soliton tails reach {:.3e} at the window ends",
            s.boundary_defect()
        )));
    }
    Ok(s)
}

/// `Σ ½p² + Σ (e^r - 1 - r)` over the bonds inside the window.
pub fn toda_energy(s: &TodaState) -> f64 {
    let q = s.q.values();
    let kinetic: f64 = s.p.values().iter().map(|p| 0.5 * p * p).sum();
    let potential: f64 = q
        .windows(2)
        .map(|w| {
            let r = w[0] - w[1];
            r.exp_m1() - r
        })
        .sum();
    kinetic + potential
}

/// `Σ p_j`.
pub fn toda_momentum(s: &TodaState) -> f64 {
    s.p.values().iter().sum()
}

/// `ℓ² × ℓ²` distance between two states on the same window.
pub fn toda_distance(a: &TodaState, b: &TodaState) -> Result<f64> {
    Ok(l2_seq(&a.q.sub(&b.q)?).hypot(l2_seq(&a.p.sub(&b.p)?)))
}

/// Velocity-Verlet on raw buffers.
struct Stepper {
    q: Vec<f64>,
    p: Vec<f64>,
    force: Vec<f64>,
}

impl Stepper {
    fn new(s: &TodaState) -> Self {
        let mut st = Self {
            q: s.q.values().to_vec(),
            p: s.p.values().to_vec(),
            force: vec![0.0; s.q.values().len()],
        };
        st.update_force();
        st
    }

    /// `F_j = expm1(r_{j-1}) - expm1(r_j)` with `r = 0` beyond the window.
    fn update_force(&mut self) {
        let n = self.q.len();
        let mut prev = 0.0;
        for j in 0..n {
            let here = if j + 1 < n {
                (self.q[j] - self.q[j + 1]).exp_m1()
            } else {
                0.0
            };
            self.force[j] = prev - here;
            prev = here;
        }
    }

    fn step(&mut self, dt: f64) {
        let half = 0.5 * dt;
        for (p, f) in self.p.iter_mut().zip(&self.force) {
            *p += half * f;
        }
        for (q, p) in self.q.iter_mut().zip(&self.p) {
            *q += dt * p;
        }
        self.update_force();
        for (p, f) in self.p.iter_mut().zip(&self.force) {
            *p += half * f;
        }
    }

    fn finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|x| x.is_finite())
    }

    fn state(&self, like: &TodaState) -> Result<TodaState> {
        let w = *like.window();
        TodaState::new(
            Seq::new(w, self.q.clone())?,
            Seq::new(w, self.p.clone())?,
            like.q_left,
            like.q_right,
        )
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be positive"
        )));
    }
    if dt > MAX_DT {
        return Err(Error::CflViolation { dt, limit: MAX_DT });
    }
    Ok(())
}

/// One velocity-Verlet step (half kick, drift, half kick).
pub fn toda_step(s: &TodaState, dt: f64) -> Result<TodaState> {
    check_dt(dt)?;
    let mut st = Stepper::new(s);
    st.step(dt);
    if !st.finite() {
        return Err(Error::Blowup { t: dt });
    }
    st.state(s)
}

/// Evolves to `t_final`, calling `visit` at `t = 0`, every `stride` steps and
/// at `t_final`. The step is shrunk to `t_final / ceil(t_final / dt)`.
pub fn toda_evolve_with(
    s: &TodaState,
    t_final: f64,
    dt: f64,
    stride: usize,
    mut visit: impl FnMut(f64, &TodaState) -> Result<()>,
) -> Result<TodaState> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    check_dt(dt)?;
    let (steps, h) = crate::sine_gordon::step_plan(t_final, dt)?;
    visit(0.0, s)?;
    let mut st = Stepper::new(s);
    for k in 1..=steps {
        st.step(h);
        if k % stride == 0 || k == steps {
            let t = if k == steps { t_final } else { k as f64 * h };
            if !st.finite() {
                return Err(Error::Blowup { t });
            }
            visit(t, &st.state(s)?)?;
        }
    }
    if !st.finite() {
        return Err(Error::Blowup { t: t_final });
    }
    st.state(s)
}

/// Sampled trajectory `(t, state)`, including `t = 0` and `t = t_final`.
pub fn toda_evolve(
    s: &TodaState,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<(f64, TodaState)>> {
    let mut out = Vec::new();
    toda_evolve_with(s, t_final, dt, stride, |t, st| {
        out.push((t, st.clone()));
        Ok(())
    })?;
    Ok(out)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "kappa = {kappa} must be positive"
        )))
    }
}

/// Both transform components; off-window neighbours are the declared
/// asymptotes `y.q_left` (left of `q'`) and `x.q_right` (right of `q`).
pub fn toda_bt_residual(x: &TodaState, y: &TodaState, kappa: f64) -> Result<(Seq, Seq)> {
    if x.window() != y.window() {
        return Err(Error::WindowMismatch);
    }
    check_kappa(kappa)?;
    let (q, p) = (x.q.values(), x.p.values());
    let (qp, pp) = (y.q.values(), y.p.values());
    let n = q.len();
    let c2 = 2.0 * kappa.cosh();
    let mut f1 = Vec::with_capacity(n);
    let mut f2 = Vec::with_capacity(n);
    for j in 0..n {
        let qp_prev = if j == 0 { y.q_left } else { qp[j - 1] };
        let q_next = if j + 1 < n { q[j + 1] } else { x.q_right };
        let shared = (-(qp[j] - q[j] - kappa)).exp();
        f1.push(p[j] + shared + (-(q[j] - qp_prev + kappa)).exp() - c2);
        f2.push(pp[j] + shared + (-(q_next - qp[j] + kappa)).exp() - c2);
    }
    Ok((Seq::new(*x.window(), f1)?, Seq::new(*x.window(), f2)?))
}

/// Sup norm over both residual components.
pub fn toda_bt_residual_norm(x: &TodaState, y: &TodaState, kappa: f64) -> Result<f64> {
    let (f1, f2) = toda_bt_residual(x, y, kappa)?;
    Ok(sup_norm(&f1).max(sup_norm(&f2)))
}

/// `log` that reports its site when the argument is not positive.
fn checked_ln(arg: f64, site: i64) -> Result<f64> {
    if arg > 0.0 && arg.is_finite() {
        Ok(arg.ln())
    } else {
        Err(Error::LogDomain { site })
    }
}

/// Solves row 2 for `q` given `y`, with `q = seed` at `anchor`: forward
/// `q_{j+1} = q'_j - κ - log(2cosh κ - p'_j - e^{-(q'_j - q_j - κ)})` to the
/// right, its inverse to the left (both contracting over the vacuum), then
/// row 1 for `p`. The result must satisfy the transform to 1e-8.
pub fn toda_bt_forward_at(y: &TodaState, kappa: f64, anchor: i64, seed: f64) -> Result<TodaState> {
    let x = forward_unchecked(y, kappa, anchor, seed)?;
    let residual = toda_bt_residual_norm(&x, y, kappa)?;
    if residual >= FORWARD_TOLERANCE {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: FORWARD_TOLERANCE,
        });
    }
    Ok(x)
}

/// [`toda_bt_forward_at`] anchored at the middle of the window.
pub fn toda_bt_forward(y: &TodaState, kappa: f64, seed: f64) -> Result<TodaState> {
    let w = y.window();
    toda_bt_forward_at(y, kappa, w.site((w.n() - 1) / 2), seed)
}

fn forward_unchecked(y: &TodaState, kappa: f64, anchor: i64, seed: f64) -> Result<TodaState> {
    check_kappa(kappa)?;
    if !seed.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "seed = {seed} is not finite"
        )));
    }
    let w = *y.window();
    let a = w.index_of(anchor).ok_or_else(|| {
        Error::InvalidParameter(format!("anchor site {anchor} outside the window"))
    })?;
    let (qp, pp) = (y.q.values(), y.p.values());
    let n = qp.len();
    let c2 = 2.0 * kappa.cosh();
    let mut q = vec![0.0; n];
    q[a] = seed;
    for j in a..n - 1 {
        let arg = c2 - pp[j] - (-(qp[j] - q[j] - kappa)).exp();
        q[j + 1] = qp[j] - kappa - checked_ln(arg, w.site(j))?;
    }
    for j in (0..a).rev() {
        let arg = c2 - pp[j] - (-(q[j + 1] - qp[j] + kappa)).exp();
        q[j] = qp[j] - kappa + checked_ln(arg, w.site(j))?;
    }
    let p: Vec<f64> = (0..n)
        .map(|j| {
            let qp_prev = if j == 0 { y.q_left } else { qp[j - 1] };
            c2 - (-(qp[j] - q[j] - kappa)).exp() - (-(q[j] - qp_prev + kappa)).exp()
        })
        .collect();
    if q.iter().chain(&p).any(|v| !v.is_finite()) {
        return Err(Error::Blowup { t: 0.0 });
    }
    TodaState::new(
        Seq::new(w, q)?,
        Seq::new(w, p)?,
        y.q_left,
        y.q_right - 2.0 * kappa,
    )
}

/// Width of the matching weights used to pin a soliton's phase.
const PHASE_WEIGHT_RADIUS: i64 = 4;

/// Adds one soliton with parameters `sp` on top of `y`.
///
/// The phase is pinned near the soliton itself: among the transforms of `y`
/// with parameter `κ`, the result is the one whose difference `q - q'`
/// matches the vacuum soliton `q_sol(κ, γ)` in a Gaussian-weighted mean
/// around the soliton's centre. Over the vacuum this is exactly
/// [`toda_soliton`]; elsewhere it is a smooth chart on the family. `κ` must
/// exceed that of every soliton already in `y`.
pub fn toda_add_soliton(y: &TodaState, sp: &SolitonParams) -> Result<TodaState> {
    let w = *y.window();
    let (kappa, gamma) = (sp.kappa, sp.gamma_phase);
    check_kappa(kappa)?;
    let center = sp.center();
    let lo = w.j0() + 5;
    let hi = w.last_site() - 5;
    if lo > hi {
        return Err(Error::WindowTooNarrow(
            "window shorter than 11 sites".into(),
        ));
    }
    let anchor = (center.round() as i64).clamp(lo, hi);
    let sites: Vec<(usize, f64, f64)> = (anchor - PHASE_WEIGHT_RADIUS
        ..=anchor + PHASE_WEIGHT_RADIUS)
        .filter_map(|j| {
            let i = w.index_of(j)?;
            let d = j as f64 - center;
            Some((i, (-0.5 * d * d).exp(), soliton_q(kappa, gamma, j as f64)))
        })
        .collect();
    let ai = w.index_of(anchor).unwrap();
    let qp = y.q.values();
    let mismatch = |seed: f64| -> Result<(f64, TodaState)> {
        let x = forward_unchecked(y, kappa, anchor, seed)?;
        let q = x.q.values();
        let g: f64 = sites
            .iter()
            .map(|&(i, wt, target)| wt * (q[i] - qp[i] - target))
            .sum();
        Ok((g, x))
    };
    let mut seed = qp[ai] + soliton_q(kappa, gamma, anchor as f64);
    let (mut g, mut x) = mismatch(seed)?;
    let scale: f64 = sites.iter().map(|s| s.1).sum();
    for _ in 0..MAX_NEWTON {
        if g.abs() <= 1e-14 * scale {
            return check_forward(x, y, kappa);
        }
        let h = 1e-7;
        let (gp, _) = mismatch(seed + h)?;
        let slope = (gp - g) / h;
        if !(slope.is_finite() && slope != 0.0) {
            break;
        }
        let mut step = -g / slope;
        loop {
            match mismatch(seed + step) {
                Ok((gn, xn)) if gn.abs() < g.abs() => {
                    seed += step;
                    g = gn;
                    x = xn;
                    break;
                }
                _ if step.abs() > 1e-15 => step *= 0.5,
                _ => return check_forward(x, y, kappa),
            }
        }
    }
    if g.abs() <= 1e-10 * scale {
        return check_forward(x, y, kappa);
    }
    Err(Error::NoConvergence(format!(
        "soliton phase matching left mismatch {g:.3e}"
    )))
}

fn check_forward(x: TodaState, y: &TodaState, kappa: f64) -> Result<TodaState> {
    let residual = toda_bt_residual_norm(&x, y, kappa)?;
    if residual >= FORWARD_TOLERANCE {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: FORWARD_TOLERANCE,
        });
    }
    Ok(x)
}

/// Folds [`toda_add_soliton`] over `params`, starting from the vacuum.
///
/// A layer with `κ` below one already present has no regular transform (the
/// summing solution changes sign inside the older soliton), so the `κ`s must
/// increase strictly.
pub fn toda_multisoliton(params: &[SolitonParams], w: LatticeWindow) -> Result<TodaState> {
    if params.windows(2).any(|p| p[1].kappa <= p[0].kappa) {
        return Err(Error::InvalidParameter(
            "soliton kappas must be strictly increasing".into(),
        ));
    }
    params
        .iter()
        .try_fold(toda_vacuum(w), |y, sp| toda_add_soliton(&y, sp))
}

/// `α_j = e^{-(2q'_j - q_j - q_{j+1} - 2κ)}` with limits from the declared
/// asymptotes and the anchor where `α` crosses 1 (window middle otherwise).
pub fn toda_alpha(x: &TodaState, y: &TodaState, kappa: f64) -> Result<CoefficientProfile> {
    if x.window() != y.window() {
        return Err(Error::WindowMismatch);
    }
    check_kappa(kappa)?;
    let (q, qp) = (x.q.values(), y.q.values());
    let n = q.len();
    let exponent = |qp: f64, q: f64, qn: f64| -(2.0 * qp - q - qn - 2.0 * kappa);
    let logs: Vec<f64> = (0..n)
        .map(|j| exponent(qp[j], q[j], q.get(j + 1).copied().unwrap_or(x.q_right)))
        .collect();
    let alpha_minus = exponent(y.q_left, x.q_left, x.q_left).exp();
    let alpha_plus = exponent(y.q_right, x.q_right, x.q_right).exp();
    let anchor = logs
        .windows(2)
        .position(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .map(|k| {
            if logs[k].abs() <= logs[k + 1].abs() {
                k
            } else {
                k + 1
            }
        })
        .unwrap_or((n - 1) / 2);
    let alpha = Seq::new(*x.window(), logs.into_iter().map(f64::exp).collect())?;
    CoefficientProfile::discrete(alpha, alpha_minus, alpha_plus, anchor)
}

/// Row 1 solved for `q'`, swept inward from both ends towards `anchor`.
struct InverseSweeps<'a> {
    x: &'a TodaState,
    anchor: usize,
}

impl InverseSweeps<'_> {
    /// `(q'_0..=q'_anchor` from the left, `q'_anchor..` from the right`)`.
    fn sweep(&self, kappa: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let x = self.x;
        let w = x.window();
        let (q, p) = (x.q.values(), x.p.values());
        let n = q.len();
        let m = self.anchor;
        let c2 = 2.0 * kappa.cosh();
        let mut left = Vec::with_capacity(m + 1);
        let mut prev = x.q_left;
        for j in 0..=m {
            let arg = c2 - p[j] - (-(q[j] - prev + kappa)).exp();
            prev = q[j] + kappa - checked_ln(arg, w.site(j))?;
            left.push(prev);
        }
        // A virtual site past the window carries the asymptotic pair
        // (q_right, q_right + 2κ) with zero momentum.
        let mut right = vec![0.0; n - m];
        let mut next = x.q_right + 2.0 * kappa;
        let mut q_next = x.q_right;
        let mut p_next = 0.0;
        for j in (m..n).rev() {
            let arg = c2 - p_next - (-(next - q_next - kappa)).exp();
            next = q_next + kappa + checked_ln(arg, w.site(j) + 1)?;
            right[j - m] = next;
            q_next = q[j];
            p_next = p[j];
        }
        Ok((left, right))
    }

    fn mismatch(&self, kappa: f64) -> Result<(f64, f64)> {
        let (l, r) = self.sweep(kappa)?;
        Ok((l[self.anchor], r[0]))
    }
}

/// Recovers the transform partner `y` of a soliton-like `x` and the
/// parameter `κ`: row 1 is swept for `q'` inward from both ends (from
/// `q'_left = q_left` and `q'_right = q_right + 2κ`), and damped Newton on
/// `(κ, q'_anchor)` closes the gap at the largest stretch of `x`. `p'` then
/// follows from row 2. The anchor value enters the mismatch linearly, so
/// `seed_guess` only sets the first iterate.
pub fn toda_bt_inverse(
    x: &TodaState,
    kappa_guess: f64,
    seed_guess: f64,
) -> Result<(TodaState, f64)> {
    check_kappa(kappa_guess)?;
    let n = x.window().n();
    let r = x.stretches();
    let anchor = r
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap()
        .min(n - 1);
    let sweeps = InverseSweeps { x, anchor };
    let no_conv = |why: &str| Error::NoConvergence(format!("inverse transform: {why}"));

    // A poor guess can leave the sweeps without a real logarithm; walk
    // outwards from it until both sweeps go through.
    let (mut kappa, (mut l, mut rr)) = (0..=40)
        .map(|k| kappa_guess * 1.05f64.powi(if k % 2 == 0 { k / 2 } else { -(k + 1) / 2 }))
        .find_map(|k| sweeps.mismatch(k).ok().map(|m| (k, m)))
        .ok_or_else(|| no_conv("no starting parameter near the guess"))?;
    let mut s = if seed_guess.is_finite() {
        seed_guess
    } else {
        0.5 * (l + rr)
    };
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let err = (l - s).abs().max((rr - s).abs());
        if err < 1e-13 {
            converged = true;
            break;
        }
        let h = 1e-6 * kappa;
        let (lp, rp) = sweeps.mismatch(kappa + h)?;
        let (lm, rm) = sweeps.mismatch(kappa - h)?;
        let (lk, rk) = ((lp - lm) / (2.0 * h), (rp - rm) / (2.0 * h));
        let det = rk - lk;
        if det == 0.0 || !det.is_finite() {
            return Err(no_conv("singular Jacobian"));
        }
        let (b1, b2) = (-(l - s), -(rr - s));
        let dk = (b2 - b1) / det;
        let ds = (lk * b2 - rk * b1) / det;
        let mut lambda = 1.0;
        loop {
            let trial = kappa + lambda * dk;
            let accepted = if trial > 0.0 {
                match sweeps.mismatch(trial) {
                    Ok((lt, rt)) => {
                        let st = s + lambda * ds;
                        let e = (lt - st).abs().max((rt - st).abs());
                        (e < err || lambda < 1e-3).then_some((trial, st, lt, rt))
                    }
                    Err(_) => None,
                }
            } else {
                None
            };
            if let Some((kt, st, lt, rt)) = accepted {
                kappa = kt;
                s = st;
                l = lt;
                rr = rt;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(no_conv("line search failed"));
            }
        }
    }
    if !converged {
        return Err(no_conv(&format!("{MAX_NEWTON} Newton steps exhausted")));
    }

    let (left, right) = sweeps.sweep(kappa)?;
    let mut qp = left;
    qp.pop();
    qp.push(0.5 * (l + rr));
    qp.extend_from_slice(&right[1..]);
    let q = x.q.values();
    let c2 = 2.0 * kappa.cosh();
    let pp: Vec<f64> = (0..qp.len())
        .map(|j| {
            let q_next = q.get(j + 1).copied().unwrap_or(x.q_right);
            c2 - (-(qp[j] - q[j] - kappa)).exp() - (-(q_next - qp[j] + kappa)).exp()
        })
        .collect();
    let w = *x.window();
    let y = TodaState::new(
        Seq::new(w, qp)?,
        Seq::new(w, pp)?,
        x.q_left,
        x.q_right + 2.0 * kappa,
    )?;
    let residual = toda_bt_residual_norm(x, &y, kappa)?;
    if residual >= INVERSE_TOLERANCE {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: INVERSE_TOLERANCE,
        });
    }
    Ok((y, kappa))
}

/// Peak position of `r_j = q_j - q_{j+1}`, refined by a parabola through the
/// largest sample and its neighbours.
pub fn pulse_center(s: &TodaState) -> f64 {
    let r = s.stretches();
    let k = r
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let site = s.window().site(k) as f64;
    if k == 0 || k + 1 >= r.len() {
        return site;
    }
    let (a, b, c) = (r[k - 1], r[k], r[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        site
    } else {
        site + 0.5 * (a - c) / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> LatticeWindow {
        LatticeWindow::new(-40, 81).unwrap()
    }

    #[test]
    fn raw_formula_value() {
        // log(cosh 0 / cosh 1), before the -κ shift.
        assert!((soliton_q(1.0, 0.0, 0.0) + 1.0 - (-0.433_780_830_483_027)).abs() < 1e-12);
    }

    #[test]
    fn lncosh_is_stable() {
        for x in [-800.0f64, -3.0, 0.0, 0.5, 800.0] {
            let direct = if x.abs() < 300.0 {
                f64::cosh(x).ln()
            } else {
                x.abs() - 2f64.ln()
            };
            assert!((lncosh(x) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn vacuum_is_fixed() {
        let v = toda_vacuum(window());
        assert_eq!(toda_energy(&v), 0.0);
        assert_eq!(toda_step(&v, 0.05).unwrap(), v);
        for k in [0.3, 1.0, 1.5] {
            assert!(toda_bt_residual_norm(&v, &v, k).unwrap() < 1e-15);
        }
    }

    #[test]
    fn soliton_limits_and_speed() {
        let sp = SolitonParams::new(1.0, 0.0).unwrap();
        assert!((sp.speed() * sp.kappa() - 1f64.sinh()).abs() < 1e-12);
        let s = toda_soliton(&sp, window()).unwrap();
        assert!((s.q_drop().abs() - 2.0).abs() < 1e-10);
        assert!(toda_soliton(&sp, LatticeWindow::new(-5, 11).unwrap()).is_err());
    }

    #[test]
    fn time_reversal() {
        let sp = SolitonParams::new(1.0, 0.3).unwrap();
        let s = toda_soliton(&sp, window()).unwrap();
        let a = toda_step(&s, 0.05).unwrap();
        let flipped =
            TodaState::new(a.q.clone(), a.p.map(|v| -v).unwrap(), a.q_left, a.q_right).unwrap();
        let b = toda_step(&flipped, 0.05).unwrap();
        let back = b.p.map(|v| -v).unwrap();
        assert!(sup_norm(&b.q.sub(&s.q).unwrap()) < 1e-12);
        assert!(sup_norm(&back.sub(&s.p).unwrap()) < 1e-12);
    }

    #[test]
    fn step_rejects_large_dt() {
        assert!(matches!(
            toda_step(&toda_vacuum(window()), 0.2),
            Err(Error::CflViolation { .. })
        ));
    }
}
