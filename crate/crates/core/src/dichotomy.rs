//! First-order linear problems `u' - α u = f` on the line and
//! `u_{n+1} - α_n u_n = f_n` on the lattice.
//!
//! Which problem is solvable, and how, is decided by the limits `α±` of the
//! coefficient: in Case 1 every datum has a unique solution vanishing at the
//! anchor; in Case 2 the datum must be orthogonal to the decaying adjoint
//! solution and the value at the anchor is then forced. Every sweep runs in
//! the contracting direction of its half-line, and exponential weights are
//! carried in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    cell_integral, cumulative_integral, h1_norm, high_order_difference, l2_norm, l2_seq, trapezoid,
    Field, Seq,
};

/// Largest admissible `|log μ|`.
pub const LOG_LIMIT: f64 = 700.0;

/// Relative tolerance of the Case-2 orthogonality precondition.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-6;

/// Largest admissible `|u|` over the outer samples of a Case-2 solution.
pub const TAIL_TOLERANCE: f64 = 1e-4;

/// Number of samples at each end inspected by the Case-2 tail check.
const TAIL_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Carrier {
    Continuous(Field),
    Discrete(Seq),
}

impl Carrier {
    pub fn values(&self) -> &[f64] {
        match self {
            Carrier::Continuous(f) => f.samples(),
            Carrier::Discrete(s) => s.values(),
        }
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    fn same_support(&self, other: &Carrier) -> bool {
        match (self, other) {
            (Carrier::Continuous(a), Carrier::Continuous(b)) => a.grid() == b.grid(),
            (Carrier::Discrete(a), Carrier::Discrete(b)) => a.window() == b.window(),
            _ => false,
        }
    }

    fn rebuild(&self, values: Vec<f64>) -> Result<Carrier> {
        Ok(match self {
            Carrier::Continuous(f) => Carrier::Continuous(Field::new(*f.grid(), values)?),
            Carrier::Discrete(s) => Carrier::Discrete(Seq::new(*s.window(), values)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DichotomyCase {
    ContinuousCase1,
    ContinuousCase2,
    DiscreteCase1,
    DiscreteCase2,
}

/// A sampled coefficient together with its declared limits and the anchor
/// index `x₀` / `n₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientProfile {
    carrier: Carrier,
    alpha_minus: f64,
    alpha_plus: f64,
    anchor: usize,
}

impl CoefficientProfile {
    pub fn new(carrier: Carrier, alpha_minus: f64, alpha_plus: f64, anchor: usize) -> Result<Self> {
        if !(alpha_minus.is_finite() && alpha_plus.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "limits ({alpha_minus}, {alpha_plus}) must be finite"
            )));
        }
        if anchor >= carrier.len() {
            return Err(Error::InvalidParameter(format!(
                "anchor {anchor} outside {} samples",
                carrier.len()
            )));
        }
        Ok(Self {
            carrier,
            alpha_minus,
            alpha_plus,
            anchor,
        })
    }

    pub fn continuous(
        alpha: Field,
        alpha_minus: f64,
        alpha_plus: f64,
        anchor: usize,
    ) -> Result<Self> {
        Self::new(Carrier::Continuous(alpha), alpha_minus, alpha_plus, anchor)
    }

    pub fn discrete(alpha: Seq, alpha_minus: f64, alpha_plus: f64, anchor: usize) -> Result<Self> {
        Self::new(Carrier::Discrete(alpha), alpha_minus, alpha_plus, anchor)
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn alpha(&self) -> &[f64] {
        self.carrier.values()
    }

    pub fn alpha_minus(&self) -> f64 {
        self.alpha_minus
    }

    pub fn alpha_plus(&self) -> f64 {
        self.alpha_plus
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// The case the limits place this profile in, or `None` for the
    /// degenerate and same-sign patterns.
    pub fn case(&self) -> Option<DichotomyCase> {
        let (m, p) = (self.alpha_minus, self.alpha_plus);
        match self.carrier {
            Carrier::Continuous(_) if m > 0.0 && p < 0.0 => Some(DichotomyCase::ContinuousCase1),
            Carrier::Continuous(_) if m < 0.0 && p > 0.0 => Some(DichotomyCase::ContinuousCase2),
            Carrier::Discrete(_) if m.abs() > 1.0 && p.abs() < 1.0 => {
                Some(DichotomyCase::DiscreteCase1)
            }
            Carrier::Discrete(_) if m.abs() < 1.0 && p.abs() > 1.0 => {
                Some(DichotomyCase::DiscreteCase2)
            }
            _ => None,
        }
    }

    /// `(∫ or Σ |α - α₋|` left of the anchor, `∫ or Σ |α - α₊|` right of it`)`.
    pub fn tail_deviation(&self) -> (f64, f64) {
        let a = self.alpha();
        let k = self.anchor;
        let left: Vec<f64> = a[..=k]
            .iter()
            .map(|v| (v - self.alpha_minus).abs())
            .collect();
        let right: Vec<f64> = a[k..].iter().map(|v| (v - self.alpha_plus).abs()).collect();
        match &self.carrier {
            Carrier::Continuous(f) => {
                let dx = f.grid().dx();
                (trapezoid(&left, dx), trapezoid(&right, dx))
            }
            Carrier::Discrete(_) => (left[..left.len() - 1].iter().sum(), right[1..].iter().sum()),
        }
    }

    /// Same profile with `α`, `α±` negated: the coefficient of the adjoint
    /// equation.
    pub fn negated(&self) -> Result<Self> {
        let values = self.alpha().iter().map(|v| -v).collect();
        Self::new(
            self.carrier.rebuild(values)?,
            -self.alpha_minus,
            -self.alpha_plus,
            self.anchor,
        )
    }

    fn require(&self, case: DichotomyCase) -> Result<()> {
        if self.case() == Some(case) {
            Ok(())
        } else {
            Err(Error::WrongCase {
                alpha_minus: self.alpha_minus,
                alpha_plus: self.alpha_plus,
            })
        }
    }
}

/// A solution together with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub u: T,
    /// Value at the anchor (0 in Case 1).
    pub u0: f64,
    /// Back-substitution residual: L² on the line, ℓ² on the lattice.
    pub residual: f64,
    /// `‖u‖ / ‖f‖` in the norms of the lemma (`H¹/L²` or `ℓ²/ℓ²`); 0 for `f = 0`.
    pub bound_ratio: f64,
    /// Largest `|u|` over the outermost samples (Case 2 only, else 0).
    pub tail: f64,
}

/// Running `log μ`: `-∫_{x₀}^x α` on the line, and on the lattice the log of
/// the solution of `φ_{n-1} = α_n φ_n` with `φ_{n₀} = 1`.
pub fn log_adjoint(cp: &CoefficientProfile) -> Result<Vec<f64>> {
    let alpha = cp.alpha();
    let k = cp.anchor;
    let logs = match &cp.carrier {
        Carrier::Continuous(f) => cumulative_integral(alpha, f.grid().dx(), k)
            .into_iter()
            .map(|v| -v)
            .collect::<Vec<_>>(),
        Carrier::Discrete(s) => {
            if let Some(i) = alpha.iter().position(|&a| a <= 0.0) {
                return Err(Error::LogDomain {
                    site: s.window().site(i),
                });
            }
            let n = alpha.len();
            let mut l = vec![0.0; n];
            for i in k + 1..n {
                l[i] = l[i - 1] - alpha[i].ln();
            }
            for i in (0..k).rev() {
                l[i] = l[i + 1] + alpha[i + 1].ln();
            }
            l
        }
    };
    if let Some((index, &log_value)) = logs.iter().enumerate().find(|(_, v)| v.abs() > LOG_LIMIT) {
        return Err(Error::Overflow { index, log_value });
    }
    Ok(logs)
}

/// The adjoint solution `μ`, equal to 1 at the anchor.
pub fn adjoint_solution(cp: &CoefficientProfile) -> Result<Carrier> {
    let mu = log_adjoint(cp)?.into_iter().map(f64::exp).collect();
    cp.carrier.rebuild(mu)
}

/// `∫ b μ` (trapezoid) on the line, `Σ b_n μ_n` on the lattice.
pub fn pairing(b: &Carrier, mu: &Carrier) -> Result<f64> {
    if !b.same_support(mu) {
        return Err(Error::CarrierMismatch);
    }
    let products: Vec<f64> = b
        .values()
        .iter()
        .zip(mu.values())
        .map(|(x, y)| x * y)
        .collect();
    Ok(match b {
        Carrier::Continuous(f) => trapezoid(&products, f.grid().dx()),
        Carrier::Discrete(_) => products.iter().sum(),
    })
}

fn field_of(cp: &CoefficientProfile, f: &Field) -> Result<()> {
    match &cp.carrier {
        Carrier::Continuous(a) if a.grid() == f.grid() => Ok(()),
        _ => Err(Error::CarrierMismatch),
    }
}

fn seq_of(cp: &CoefficientProfile, f: &Seq) -> Result<()> {
    match &cp.carrier {
        Carrier::Discrete(a) if a.window() == f.window() => Ok(()),
        _ => Err(Error::CarrierMismatch),
    }
}

/// One exponential-integrator step across the cell between `from` and
/// `to = from ± 1`: `u_to = e^{L_to - L_from} u_from ± ∫ e^{L_to - L(y)} f(y) dy`,
/// where `L = ∫ α` and the sign follows the direction of travel.
fn duhamel_step(l: &[f64], f: &[f64], dx: f64, from: usize, to: usize, u_from: f64) -> f64 {
    let n = l.len();
    let cell = from.min(to);
    let weighted = |k: usize| (l[to] - l[k]).exp() * f[k];
    let integral = cell_integral(weighted, cell, n, dx);
    let sign = if to > from { 1.0 } else { -1.0 };
    (l[to] - l[from]).exp() * u_from + sign * integral
}

fn continuous_residual(u: &[f64], alpha: &[f64], f: &[f64], dx: f64) -> f64 {
    let du = high_order_difference(u, dx);
    let r: Vec<f64> = (0..u.len())
        .map(|i| {
            let e = du[i] - alpha[i] * u[i] - f[i];
            e * e
        })
        .collect();
    trapezoid(&r, dx).sqrt()
}

fn tail_of(u: &[f64]) -> f64 {
    let k = TAIL_SAMPLES.min(u.len());
    u[..k]
        .iter()
        .chain(&u[u.len() - k..])
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Case 1 on the line (`α₋ > 0 > α₊`): the solution of `u' - αu = f` with
/// `u(x₀) = 0`, swept outward from the anchor.
pub fn solve_case1_continuous(cp: &CoefficientProfile, f: &Field) -> Result<Solution<Field>> {
    cp.require(DichotomyCase::ContinuousCase1)?;
    field_of(cp, f)?;
    let dx = f.grid().dx();
    let n = f.grid().n();
    let l = cumulative_integral(cp.alpha(), dx, cp.anchor);
    let fv = f.samples();
    let mut u = vec![0.0; n];
    for i in cp.anchor..n - 1 {
        u[i + 1] = duhamel_step(&l, fv, dx, i, i + 1, u[i]);
    }
    for i in (1..=cp.anchor).rev() {
        u[i - 1] = duhamel_step(&l, fv, dx, i, i - 1, u[i]);
    }
    let residual = continuous_residual(&u, cp.alpha(), fv, dx);
    let u = Field::new(*f.grid(), u)?;
    let fnorm = l2_norm(f);
    let bound_ratio = if fnorm > 0.0 {
        h1_norm(&u) / fnorm
    } else {
        0.0
    };
    Ok(Solution {
        u,
        u0: 0.0,
        residual,
        bound_ratio,
        tail: 0.0,
    })
}

/// Case 2 on the line (`α₋ < 0 < α₊`): requires `∫ f μ = 0` for the decaying
/// adjoint solution `μ`; returns the unique L² solution and its anchor value
/// `u₀ = -∫_{x₀}^∞ μ f`.
pub fn solve_case2_continuous(cp: &CoefficientProfile, f: &Field) -> Result<Solution<Field>> {
    cp.require(DichotomyCase::ContinuousCase2)?;
    field_of(cp, f)?;
    let mu = adjoint_solution(cp)?;
    let mu_norm = trapezoid(
        &mu.values().iter().map(|v| v * v).collect::<Vec<_>>(),
        f.grid().dx(),
    )
    .sqrt();
    check_orthogonal(&Carrier::Continuous(f.clone()), &mu, l2_norm(f) * mu_norm)?;
    let dx = f.grid().dx();
    let n = f.grid().n();
    let k = cp.anchor;
    let l = cumulative_integral(cp.alpha(), dx, k);
    let fv = f.samples();
    // Left half-line swept from the left end, the rest from the right end;
    // the anchor takes the right sweep's value.
    let mut u = vec![0.0; n];
    for i in 0..k {
        u[i + 1] = duhamel_step(&l, fv, dx, i, i + 1, u[i]);
    }
    u[n - 1] = 0.0;
    for i in (k + 1..n).rev() {
        u[i - 1] = duhamel_step(&l, fv, dx, i, i - 1, u[i]);
    }
    let u0 = u[k];
    let tail = tail_of(&u);
    let residual = continuous_residual(&u, cp.alpha(), fv, dx);
    if tail > TAIL_TOLERANCE {
        return Err(Error::TailNotDecayed { tail });
    }
    let u = Field::new(*f.grid(), u)?;
    let fnorm = l2_norm(f);
    let bound_ratio = if fnorm > 0.0 {
        h1_norm(&u) / fnorm
    } else {
        0.0
    };
    Ok(Solution {
        u,
        u0,
        residual,
        bound_ratio,
        tail,
    })
}

fn check_orthogonal(f: &Carrier, mu: &Carrier, scale: f64) -> Result<()> {
    let p = pairing(f, mu)?;
    if p.abs() > ORTHOGONALITY_TOLERANCE * scale {
        Err(Error::NotOrthogonal { pairing: p })
    } else {
        Ok(())
    }
}

fn discrete_residual(u: &[f64], alpha: &[f64], f: &[f64]) -> f64 {
    (0..u.len() - 1)
        .map(|k| {
            let e = u[k + 1] - alpha[k] * u[k] - f[k];
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

/// Case 1 on the lattice (`|α₋| > 1 > |α₊|`): the solution of
/// `u_{n+1} = α_n u_n + f_n` with `u_{n₀} = 0`. The last datum `f` at the
/// final site has no successor and is ignored.
pub fn solve_case1_discrete(cp: &CoefficientProfile, f: &Seq) -> Result<Solution<Seq>> {
    cp.require(DichotomyCase::DiscreteCase1)?;
    seq_of(cp, f)?;
    let alpha = cp.alpha();
    if let Some(i) = alpha[..cp.anchor].iter().position(|&a| a == 0.0) {
        return Err(Error::LogDomain {
            site: f.window().site(i),
        });
    }
    let fv = f.values();
    let n = fv.len();
    let mut u = vec![0.0; n];
    for k in cp.anchor..n - 1 {
        u[k + 1] = alpha[k] * u[k] + fv[k];
    }
    for k in (0..cp.anchor).rev() {
        u[k] = (u[k + 1] - fv[k]) / alpha[k];
    }
    let residual = discrete_residual(&u, alpha, fv);
    let u = Seq::new(*f.window(), u)?;
    let fnorm = l2_seq(f);
    let bound_ratio = if fnorm > 0.0 { l2_seq(&u) / fnorm } else { 0.0 };
    Ok(Solution {
        u,
        u0: 0.0,
        residual,
        bound_ratio,
        tail: 0.0,
    })
}

/// Case 2 on the lattice (`|α₋| < 1 < |α₊|`): requires `Σ f_n φ_n = 0` for the
/// decaying adjoint `φ`; returns the unique ℓ² solution and `u₀ = u_{n₀}`.
pub fn solve_case2_discrete(cp: &CoefficientProfile, f: &Seq) -> Result<Solution<Seq>> {
    cp.require(DichotomyCase::DiscreteCase2)?;
    seq_of(cp, f)?;
    let phi = adjoint_solution(cp)?;
    let phi_norm = phi.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    check_orthogonal(&Carrier::Discrete(f.clone()), &phi, l2_seq(f) * phi_norm)?;
    let alpha = cp.alpha();
    let fv = f.values();
    let n = fv.len();
    let k = cp.anchor;
    let mut u = vec![0.0; n];
    for j in 0..k.saturating_sub(1) {
        u[j + 1] = alpha[j] * u[j] + fv[j];
    }
    for j in (k..n - 1).rev() {
        u[j] = (u[j + 1] - fv[j]) / alpha[j];
    }
    let u0 = u[k];
    let tail = tail_of(&u);
    let residual = discrete_residual(&u, alpha, fv);
    if tail > TAIL_TOLERANCE {
        return Err(Error::TailNotDecayed { tail });
    }
    let u = Seq::new(*f.window(), u)?;
    let fnorm = l2_seq(f);
    let bound_ratio = if fnorm > 0.0 { l2_seq(&u) / fnorm } else { 0.0 };
    Ok(Solution {
        u,
        u0,
        residual,
        bound_ratio,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid1D, LatticeWindow};
    use proptest::prelude::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    fn tanh_profile(sign: f64, half: f64, dx: f64) -> CoefficientProfile {
        let g = Grid1D::symmetric(half, dx).unwrap();
        let a = Field::from_fn(g, |x| sign * x.tanh()).unwrap();
        CoefficientProfile::continuous(a, -sign, sign, g.nearest_index(0.0)).unwrap()
    }

    #[test]
    fn zero_coefficient_gives_unit_adjoint() {
        let g = Grid1D::new(-1.0, 0.1, 21).unwrap();
        let cp = CoefficientProfile::continuous(Field::zeros(g), 1.0, -1.0, 10).unwrap();
        let mu = adjoint_solution(&cp).unwrap();
        assert!(mu.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn adjoint_of_minus_tanh_is_cosh() {
        let cp = tanh_profile(-1.0, 10.0, 0.01);
        let Carrier::Continuous(mu) = adjoint_solution(&cp).unwrap() else {
            panic!()
        };
        for (x, m) in mu.grid().coordinates().zip(mu.samples()) {
            assert!((m / x.cosh() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn discrete_adjoint_of_constant_two() {
        let w = LatticeWindow::new(-10, 21).unwrap();
        let cp =
            CoefficientProfile::discrete(Seq::from_fn(w, |_| 2.0).unwrap(), 2.0, 2.0, 10).unwrap();
        let phi = adjoint_solution(&cp).unwrap();
        for (j, v) in w.sites().zip(phi.values()) {
            assert!((v - 2f64.powi(-j as i32)).abs() <= 1e-15 * v);
        }
    }

    #[test]
    fn discrete_adjoint_rejects_non_positive() {
        let w = LatticeWindow::new(0, 5).unwrap();
        let a = Seq::new(w, vec![1.0, 2.0, -1.0, 2.0, 2.0]).unwrap();
        let cp = CoefficientProfile::discrete(a, 2.0, 0.5, 0).unwrap();
        assert_eq!(
            adjoint_solution(&cp).unwrap_err(),
            Error::LogDomain { site: 2 }
        );
    }

    #[test]
    fn overflow_is_reported() {
        let g = Grid1D::new(0.0, 1.0, 1000).unwrap();
        let cp = CoefficientProfile::continuous(Field::constant(g, -1.0), 1.0, -1.0, 0).unwrap();
        assert!(matches!(adjoint_solution(&cp), Err(Error::Overflow { .. })));
    }

    #[test]
    fn case1_continuous_analytic() {
        let cp = tanh_profile(-1.0, 20.0, 0.01);
        let Carrier::Continuous(a) = cp.carrier() else {
            panic!()
        };
        let f = Field::from_fn(*a.grid(), sech).unwrap();
        let sol = solve_case1_continuous(&cp, &f).unwrap();
        for (x, u) in a.grid().coordinates().zip(sol.u.samples()) {
            assert!((u - x * sech(x)).abs() < 1e-6);
        }
        assert!(sol.residual < 1e-6 * (1.0 + l2_norm(&f)));
        let zero = solve_case1_continuous(&cp, &Field::zeros(*a.grid())).unwrap();
        assert!(zero.u.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn case_mismatch_is_rejected() {
        let cp = tanh_profile(1.0, 5.0, 0.1);
        let Carrier::Continuous(a) = cp.carrier() else {
            panic!()
        };
        assert!(matches!(
            solve_case1_continuous(&cp, &Field::zeros(*a.grid())),
            Err(Error::WrongCase { .. })
        ));
        let g = Grid1D::new(0.0, 0.1, 10).unwrap();
        let flat = CoefficientProfile::continuous(Field::zeros(g), 0.0, -1.0, 0).unwrap();
        assert_eq!(flat.case(), None);
    }

    #[test]
    fn case2_continuous_odd_data() {
        let cp = tanh_profile(1.0, 20.0, 0.01);
        let Carrier::Continuous(a) = cp.carrier() else {
            panic!()
        };
        let f = Field::from_fn(*a.grid(), |x| -sech(x) * x.tanh()).unwrap();
        let sol = solve_case2_continuous(&cp, &f).unwrap();
        // u = sech/2 solves u' - tanh·u = -sech·tanh and is the decaying one.
        for (x, u) in a.grid().coordinates().zip(sol.u.samples()) {
            assert!((u - 0.5 * sech(x)).abs() < 1e-6, "x={x}");
        }
        assert!((sol.u0 - 0.5).abs() < 1e-8);
        assert!(sol.residual < 1e-6);
        assert!(sol.tail < 1e-6);
    }

    #[test]
    fn case2_continuous_even_data_rejected() {
        let cp = tanh_profile(1.0, 20.0, 0.01);
        let Carrier::Continuous(a) = cp.carrier() else {
            panic!()
        };
        let f = Field::from_fn(*a.grid(), sech).unwrap();
        match solve_case2_continuous(&cp, &f) {
            Err(Error::NotOrthogonal { pairing }) => assert!((pairing - 2.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    fn step_profile(left: f64, right: f64) -> CoefficientProfile {
        let w = LatticeWindow::new(-30, 61).unwrap();
        let a = Seq::from_fn(w, |n| if n < 0 { left } else { right }).unwrap();
        CoefficientProfile::discrete(a, left, right, w.index_of(0).unwrap()).unwrap()
    }

    #[test]
    fn case1_discrete_delta() {
        let cp = step_profile(2.0, 0.5);
        let Carrier::Discrete(a) = cp.carrier() else {
            panic!()
        };
        let w = *a.window();
        let f = Seq::from_fn(w, |n| (n == 5) as i64 as f64).unwrap();
        let sol = solve_case1_discrete(&cp, &f).unwrap();
        for (n, u) in w.sites().zip(sol.u.values()) {
            let expect = if n >= 6 {
                2f64.powi(-(n as i32 - 6))
            } else {
                0.0
            };
            assert_eq!(*u, expect);
        }
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn case2_discrete_orthogonalized() {
        let cp = step_profile(0.5, 2.0);
        let Carrier::Discrete(a) = cp.carrier() else {
            panic!()
        };
        let w = *a.window();
        let phi = adjoint_solution(&cp).unwrap();
        let mut rng = crate::rng::Uniform::new(42);
        let raw: Vec<f64> = w
            .sites()
            .map(|n| rng.symmetric() * (-0.1 * (n as f64).powi(2)).exp())
            .collect();
        let pv = phi.values();
        let coef = raw.iter().zip(pv).map(|(a, b)| a * b).sum::<f64>()
            / pv.iter().map(|v| v * v).sum::<f64>();
        let f = Seq::new(w, raw.iter().zip(pv).map(|(a, b)| a - coef * b).collect()).unwrap();
        let sol = solve_case2_discrete(&cp, &f).unwrap();
        assert!(sol.residual < 1e-10, "{}", sol.residual);
        assert!(sol.tail < 1e-6);

        let bad = Seq::new(w, pv.to_vec()).unwrap();
        assert!(matches!(
            solve_case2_discrete(&cp, &bad),
            Err(Error::NotOrthogonal { .. })
        ));
        let zero = solve_case2_discrete(&cp, &Seq::zeros(w)).unwrap();
        assert!(zero.u.values().iter().all(|&v| v == 0.0) && zero.u0 == 0.0);
    }

    #[test]
    fn pairing_cases() {
        let g = Grid1D::symmetric(20.0, 0.01).unwrap();
        let s = Carrier::Continuous(Field::from_fn(g, sech).unwrap());
        assert!((pairing(&s, &s).unwrap() - 2.0).abs() < 1e-8);
        let odd = Carrier::Continuous(Field::from_fn(g, |x| x * sech(x)).unwrap());
        assert!(pairing(&odd, &s).unwrap().abs() < 1e-12);
        let zero = Carrier::Continuous(Field::zeros(g));
        assert_eq!(pairing(&zero, &s).unwrap(), 0.0);
        let w = LatticeWindow::new(0, 3).unwrap();
        let d = Carrier::Discrete(Seq::zeros(w));
        assert_eq!(pairing(&d, &s).unwrap_err(), Error::CarrierMismatch);
    }

    proptest! {
        #[test]
        fn case1_discrete_is_linear(
            a in prop::collection::vec(-1.0..1.0_f64, 41),
            b in prop::collection::vec(-1.0..1.0_f64, 41),
            c in -3.0..3.0_f64,
        ) {
            let w = LatticeWindow::new(-20, 41).unwrap();
            let alpha = Seq::from_fn(w, |n| if n < 0 { 3.0 + 0.1 * (n as f64).sin() } else { 0.3 }).unwrap();
            let cp = CoefficientProfile::discrete(alpha, 3.0, 0.3, 20).unwrap();
            let fa = Seq::new(w, a).unwrap();
            let fb = Seq::new(w, b).unwrap();
            let combo = fa.zip_with(&fb, |x, y| c * x + y).unwrap();
            let ua = solve_case1_discrete(&cp, &fa).unwrap();
            let ub = solve_case1_discrete(&cp, &fb).unwrap();
            let uc = solve_case1_discrete(&cp, &combo).unwrap();
            prop_assert!(uc.residual < 1e-10);
            for i in 0..41 {
                let e = uc.u.values()[i] - (c * ua.u.values()[i] + ub.u.values()[i]);
                prop_assert!(e.abs() < 1e-12);
            }
        }

        #[test]
        fn case1_continuous_is_homogeneous(c in -5.0..5.0_f64, shift in -3.0..3.0_f64) {
            let cp = tanh_profile(-1.0, 15.0, 0.05);
            let Carrier::Continuous(a) = cp.carrier() else { panic!() };
            let f = Field::from_fn(*a.grid(), |x| (-(x - shift).powi(2)).exp()).unwrap();
            let u1 = solve_case1_continuous(&cp, &f).unwrap();
            let uc = solve_case1_continuous(&cp, &f.scaled(c).unwrap()).unwrap();
            for (x, y) in u1.u.samples().iter().zip(uc.u.samples()) {
                prop_assert!((c * x - y).abs() < 1e-12 * (1.0 + c.abs()));
            }
        }
    }
}
