//! Sampled containers for the spatial line and for lattice windows, with the
//! norms and discrete calculus shared by every other module.
//!
//! Norms use the composite trapezoid rule and [`diff_x`] uses second-order
//! centered differences. [`diff_x_high_order`] and [`cumulative_integral`]
//! exist for the places where a second-order error would swamp the quantity
//! being measured (transform residuals, exponentials of running integrals).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `x(i) = x0 + i·dx`, `0 <= i < n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x0: f64,
    dx: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::InvalidParameter(format!("x0 = {x0} is not finite")));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dx = {dx} must be positive"
            )));
        }
        if n < 2 {
            return Err(Error::GridTooSmall { n, min: 2 });
        }
        Ok(Self { x0, dx, n })
    }

    /// Grid on `[-half_width, half_width]` with spacing `dx`; the right end is
    /// rounded to the nearest whole cell.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half width {half_width} must be positive"
            )));
        }
        let cells = (2.0 * half_width / dx).round() as usize;
        Self::new(-half_width, dx, cells + 1)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn midpoint_index(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Same spacing and count, shifted by `cells` whole cells.
    pub fn translated(&self, cells: i64) -> Self {
        Self {
            x0: self.x0 + cells as f64 * self.dx,
            ..*self
        }
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Index of the sample nearest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.x0) / self.dx).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// A real function sampled on a [`Grid1D`]. All samples are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid1D,
    samples: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                found: samples.len(),
            });
        }
        check_finite(&samples)?;
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.coordinates().map(f).collect())
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid1D, value: f64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.n()],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn first(&self) -> f64 {
        self.samples[0]
    }

    pub fn last(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, samples)
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.map(|v| factor * v)
    }

    /// Same samples on a translated grid.
    pub fn with_grid(&self, grid: Grid1D) -> Result<Self> {
        Self::new(grid, self.samples.clone())
    }
}

/// A contiguous block of lattice sites `j0, j0 + 1, ..., j0 + n - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeWindow {
    j0: i64,
    n: usize,
}

impl LatticeWindow {
    pub fn new(j0: i64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall { n, min: 2 });
        }
        Ok(Self { j0, n })
    }

    pub fn j0(&self) -> i64 {
        self.j0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn site(&self, i: usize) -> i64 {
        self.j0 + i as i64
    }

    pub fn last_site(&self) -> i64 {
        self.site(self.n - 1)
    }

    pub fn index_of(&self, site: i64) -> Option<usize> {
        let i = site - self.j0;
        (0..self.n as i64).contains(&i).then_some(i as usize)
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.n).map(|i| self.site(i))
    }

    pub fn translated(&self, shift: i64) -> Self {
        Self {
            j0: self.j0 + shift,
            n: self.n,
        }
    }
}

/// A real sequence on a [`LatticeWindow`]. All values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seq {
    window: LatticeWindow,
    values: Vec<f64>,
}

impl Seq {
    pub fn new(window: LatticeWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.n() {
            return Err(Error::LengthMismatch {
                expected: window.n(),
                found: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self { window, values })
    }

    pub fn from_fn(window: LatticeWindow, f: impl Fn(i64) -> f64) -> Result<Self> {
        Self::new(window, window.sites().map(f).collect())
    }

    pub fn zeros(window: LatticeWindow) -> Self {
        Self {
            window,
            values: vec![0.0; window.n()],
        }
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.window, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Seq, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.window != other.window {
            return Err(Error::WindowMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.window, values)
    }

    pub fn sub(&self, other: &Seq) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Seq) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }
}

/// Anything that exposes its samples as a slice.
pub trait Samples {
    fn as_slice(&self) -> &[f64];
}

impl Samples for Field {
    fn as_slice(&self) -> &[f64] {
        &self.samples
    }
}

impl Samples for Seq {
    fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Composite trapezoid rule over equally spaced samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            dx * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

pub fn l2_norm(f: &Field) -> f64 {
    let squares: Vec<f64> = f.samples.iter().map(|v| v * v).collect();
    trapezoid(&squares, f.grid.dx).sqrt()
}

pub fn h1_norm(f: &Field) -> f64 {
    let dx = f.grid.dx;
    let derivative = if f.grid.n >= 3 {
        centered_difference(&f.samples, dx)
    } else {
        let slope = (f.samples[1] - f.samples[0]) / dx;
        vec![slope; 2]
    };
    let squares: Vec<f64> = derivative.iter().map(|v| v * v).collect();
    let l2 = l2_norm(f);
    (l2 * l2 + trapezoid(&squares, dx)).sqrt()
}

/// Second-order centered differences, with two-point one-sided differences at
/// both ends.
pub fn diff_x(f: &Field) -> Result<Field> {
    if f.grid.n < 3 {
        return Err(Error::GridTooSmall {
            n: f.grid.n,
            min: 3,
        });
    }
    Field::new(f.grid, centered_difference(&f.samples, f.grid.dx))
}

fn centered_difference(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = Vec::with_capacity(n);
    d.push((v[1] - v[0]) / dx);
    for i in 1..n - 1 {
        d.push((v[i + 1] - v[i - 1]) / (2.0 * dx));
    }
    d.push((v[n - 1] - v[n - 2]) / dx);
    d
}

/// Sixth-order centered first derivative, dropping to fourth and second order
/// in the three samples nearest each end.
pub fn diff_x_high_order(f: &Field) -> Result<Field> {
    if f.grid.n < 3 {
        return Err(Error::GridTooSmall {
            n: f.grid.n,
            min: 3,
        });
    }
    Field::new(f.grid, high_order_difference(&f.samples, f.grid.dx))
}

pub(crate) fn high_order_difference(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let from_edge = i.min(n - 1 - i);
            match from_edge {
                0 if i == 0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx),
                0 => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx),
                1 => (v[i + 1] - v[i - 1]) / (2.0 * dx),
                2 => (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * dx),
                _ => {
                    (-v[i - 3] + 9.0 * v[i - 2] - 45.0 * v[i - 1] + 45.0 * v[i + 1]
                        - 9.0 * v[i + 2]
                        + v[i + 3])
                        / (60.0 * dx)
                }
            }
        })
        .collect()
}

pub fn l2_seq(s: &Seq) -> f64 {
    s.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sup_norm<S: Samples + ?Sized>(s: &S) -> f64 {
    s.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Integral of the interpolating cubic over the cell `[x_i, x_{i+1}]`, using
/// a centered four-point stencil inside and one-sided stencils in the first
/// and last cells. Falls back to the trapezoid rule below four samples.
pub(crate) fn cell_integral(g: impl Fn(usize) -> f64, i: usize, n: usize, dx: f64) -> f64 {
    debug_assert!(i + 1 < n);
    if n < 4 {
        return 0.5 * dx * (g(i) + g(i + 1));
    }
    if i == 0 {
        dx * (9.0 * g(0) + 19.0 * g(1) - 5.0 * g(2) + g(3)) / 24.0
    } else if i == n - 2 {
        dx * (g(n - 4) - 5.0 * g(n - 3) + 19.0 * g(n - 2) + 9.0 * g(n - 1)) / 24.0
    } else {
        dx * (-g(i - 1) + 13.0 * g(i) + 13.0 * g(i + 1) - g(i + 2)) / 24.0
    }
}

/// Running integral `I(x_i) = ∫_{x_anchor}^{x_i} f` with fourth-order cell
/// quadrature, accumulated outward from the anchor.
pub fn cumulative_integral(values: &[f64], dx: f64, anchor: usize) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let g = |k: usize| values[k];
    for i in anchor..n.saturating_sub(1) {
        out[i + 1] = out[i] + cell_integral(g, i, n, dx);
    }
    for i in (1..=anchor).rev() {
        out[i - 1] = out[i] - cell_integral(g, i - 1, n, dx);
    }
    out
}

/// Interpolated values at the cell midpoints `x_i + dx/2`, `0 <= i < n - 1`:
/// six-point (quintic) stencils inside, cubic ones in the two outer cells.
pub(crate) fn midpoint_values(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n < 4 {
        return v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    (0..n - 1)
        .map(|i| {
            if i >= 2 && i + 3 < n {
                (3.0 * (v[i - 2] + v[i + 3]) - 25.0 * (v[i - 1] + v[i + 2])
                    + 150.0 * (v[i] + v[i + 1]))
                    / 256.0
            } else if i == 0 {
                (5.0 * v[0] + 15.0 * v[1] - 5.0 * v[2] + v[3]) / 16.0
            } else if i == n - 2 {
                (v[n - 4] - 5.0 * v[n - 3] + 15.0 * v[n - 2] + 5.0 * v[n - 1]) / 16.0
            } else {
                (-v[i - 1] + 9.0 * v[i] + 9.0 * v[i + 1] - v[i + 2]) / 16.0
            }
        })
        .collect()
}

/// Cubic Lagrange interpolation of grid samples at an arbitrary `x` inside
/// the grid.
pub(crate) fn interpolate(v: &[f64], grid: &Grid1D, x: f64) -> f64 {
    let n = v.len();
    let s = ((x - grid.x0()) / grid.dx()).clamp(0.0, (n - 1) as f64);
    if n < 4 {
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        return (1.0 - t) * v[i] + t * v[i + 1];
    }
    let base = (s.floor() as usize).saturating_sub(1).min(n - 4);
    let t = s - base as f64;
    let mut acc = 0.0;
    for k in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != k {
                w *= (t - m as f64) / (k as f64 - m as f64);
            }
        }
        acc += w * v[base + k];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = Grid1D::new(-3.0, 0.1, 61).unwrap();
        let f = Field::zeros(g);
        assert_eq!(l2_norm(&f), 0.0);
        assert_eq!(h1_norm(&f), 0.0);
        assert_eq!(sup_norm(&f), 0.0);
    }

    #[test]
    fn constant_norms_on_unit_interval() {
        let g = Grid1D::new(0.0, 0.01, 101).unwrap();
        assert!((l2_norm(&Field::constant(g, 1.0)) - 1.0).abs() < 1e-12);
        assert!((h1_norm(&Field::constant(g, -2.5)) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn sech_norms() {
        let g = Grid1D::symmetric(20.0, 0.01).unwrap();
        let f = Field::from_fn(g, sech).unwrap();
        assert!((l2_norm(&f) - 2.0_f64.sqrt()).abs() < 1e-6);
        assert!((h1_norm(&f) - (2.0 + 2.0 / 3.0_f64).sqrt()).abs() < 1e-4);
        assert_eq!(sup_norm(&f), 1.0);
    }

    #[test]
    fn diff_x_cases() {
        let g = Grid1D::new(-1.0, 0.05, 41).unwrap();
        let d = diff_x(&Field::from_fn(g, |x| 3.0 * x).unwrap()).unwrap();
        assert!(d.samples().iter().all(|v| (v - 3.0).abs() < 1e-10));
        let d = diff_x(&Field::constant(g, 5.0)).unwrap();
        assert!(d.samples().iter().all(|&v| v == 0.0));

        let g = Grid1D::new(0.0, 0.01, 700).unwrap();
        let d = diff_x(&Field::from_fn(g, f64::sin).unwrap()).unwrap();
        for i in 1..g.n() - 1 {
            assert!((d.samples()[i] - g.x(i).cos()).abs() < 0.01 * 0.01);
        }
    }

    #[test]
    fn diff_x_rejects_tiny_grid() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        assert_eq!(
            diff_x(&Field::zeros(g)).unwrap_err(),
            Error::GridTooSmall { n: 2, min: 3 }
        );
    }

    #[test]
    fn sequence_norms() {
        let w = LatticeWindow::new(-3, 7).unwrap();
        assert_eq!(l2_seq(&Seq::zeros(w)), 0.0);
        assert_eq!(
            l2_seq(&Seq::from_fn(w, |j| (j == 2) as i64 as f64).unwrap()),
            1.0
        );
        let w2 = LatticeWindow::new(0, 2).unwrap();
        assert_eq!(l2_seq(&Seq::new(w2, vec![3.0, 4.0]).unwrap()), 5.0);
        assert_eq!(sup_norm(&Seq::new(w2, vec![-2.0, 1.0]).unwrap()), 2.0);
    }

    #[test]
    fn constructors_validate() {
        assert!(Grid1D::new(0.0, 0.0, 10).is_err());
        assert!(Grid1D::new(0.0, 0.1, 1).is_err());
        assert!(LatticeWindow::new(0, 1).is_err());
        let g = Grid1D::new(0.0, 0.1, 3).unwrap();
        assert_eq!(
            Field::new(g, vec![0.0, f64::NAN, 1.0]).unwrap_err(),
            Error::NonFinite { index: 1 }
        );
        assert!(Field::new(g, vec![0.0; 4]).is_err());
    }

    #[test]
    fn high_order_derivative_of_kink_profile() {
        let g = Grid1D::symmetric(20.0, 0.01).unwrap();
        let f = Field::from_fn(g, |x| 4.0 * x.exp().atan()).unwrap();
        let d = diff_x_high_order(&f).unwrap();
        let err = g
            .coordinates()
            .zip(d.samples())
            .map(|(x, v)| (v - 2.0 * sech(x)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "err = {err}");
    }

    #[test]
    fn cumulative_integral_is_fourth_order() {
        // ∫_0^x tanh = log cosh x
        let errs: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&dx| {
                let g = Grid1D::symmetric(10.0, dx).unwrap();
                let vals: Vec<f64> = g.coordinates().map(f64::tanh).collect();
                let anchor = g.nearest_index(0.0);
                let i = cumulative_integral(&vals, dx, anchor);
                g.coordinates()
                    .zip(&i)
                    .map(|(x, v)| (v - x.cosh().ln()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 1e-9, "{errs:?}");
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn interpolation_helpers() {
        let g = Grid1D::new(0.0, 0.1, 30).unwrap();
        let v: Vec<f64> = g.coordinates().map(|x| x * x * x - x).collect();
        for (i, m) in midpoint_values(&v).iter().enumerate() {
            let x = g.x(i) + 0.05;
            assert!((m - (x * x * x - x)).abs() < 1e-12);
        }
        let q: Vec<f64> = g.coordinates().map(|x| x.powi(5)).collect();
        for (i, m) in midpoint_values(&q).iter().enumerate().skip(2).take(20) {
            assert!((m - (g.x(i) + 0.05).powi(5)).abs() < 1e-11);
        }
        let x = 1.234;
        assert!((interpolate(&v, &g, x) - (x * x * x - x)).abs() < 1e-12);
    }

    #[test]
    fn norms_converge_at_second_order() {
        // f(x) = x² on [0, 1]: ∫ f² = 1/5, ∫ f'² = 4/3.
        let exact_h1 = (0.2_f64 + 4.0 / 3.0).sqrt();
        let err = |n: usize| {
            let g = Grid1D::new(0.0, 1.0 / (n - 1) as f64, n).unwrap();
            let f = Field::from_fn(g, |x| x * x).unwrap();
            (h1_norm(&f) - exact_h1).abs()
        };
        let (e1, e2, e3) = (err(41), err(81), err(161));
        assert!((e1 / e2 - 4.0).abs() < 0.6 && (e2 / e3 - 4.0).abs() < 0.6);
        let l2 = |n: usize| {
            let g = Grid1D::new(0.0, 1.0 / (n - 1) as f64, n).unwrap();
            (l2_norm(&Field::from_fn(g, |x| x * x).unwrap()) - 0.2_f64.sqrt()).abs()
        };
        assert!((l2(41) / l2(81) - 4.0).abs() < 0.3);
    }

    fn field_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
        (
            prop::collection::vec(-10.0..10.0_f64, 16),
            prop::collection::vec(-10.0..10.0_f64, 16),
            -5.0..5.0_f64,
            -5.0..5.0_f64,
        )
    }

    proptest! {
        #[test]
        fn norms_are_seminorms((a, b, s, _t) in field_strategy()) {
            let g = Grid1D::new(0.0, 0.3, 16).unwrap();
            let f = Field::new(g, a.clone()).unwrap();
            let h = Field::new(g, b.clone()).unwrap();
            let sum = f.add(&h).unwrap();
            let tol = 1e-9;
            prop_assert!(l2_norm(&sum) <= l2_norm(&f) + l2_norm(&h) + tol);
            prop_assert!(h1_norm(&sum) <= h1_norm(&f) + h1_norm(&h) + tol);
            prop_assert!(sup_norm(&sum) <= sup_norm(&f) + sup_norm(&h) + tol);
            let scaled = f.scaled(s).unwrap();
            prop_assert!((l2_norm(&scaled) - s.abs() * l2_norm(&f)).abs() < tol);
            prop_assert!((h1_norm(&scaled) - s.abs() * h1_norm(&f)).abs() < tol);
            prop_assert!((sup_norm(&scaled) - s.abs() * sup_norm(&f)).abs() < tol);

            let w = LatticeWindow::new(-4, 16).unwrap();
            let p = Seq::new(w, a).unwrap();
            let q = Seq::new(w, b).unwrap();
            prop_assert!(l2_seq(&p.add(&q).unwrap()) <= l2_seq(&p) + l2_seq(&q) + tol);
            prop_assert!((l2_seq(&p.map(|v| s * v).unwrap()) - s.abs() * l2_seq(&p)).abs() < tol);
        }

        #[test]
        fn diff_x_is_linear((a, b, s, t) in field_strategy()) {
            let g = Grid1D::new(-1.0, 0.2, 16).unwrap();
            let f = Field::new(g, a).unwrap();
            let h = Field::new(g, b).unwrap();
            let combo = f.zip_with(&h, |x, y| s * x + t * y).unwrap();
            let lhs = diff_x(&combo).unwrap();
            let rhs = diff_x(&f).unwrap().zip_with(&diff_x(&h).unwrap(), |x, y| s * x + t * y).unwrap();
            prop_assert!(sup_norm(&lhs.sub(&rhs).unwrap()) < 1e-10);
        }
    }
}
