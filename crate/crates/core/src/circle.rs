//! Trapezoidal quadrature on `|z| = 1`, Laurent polynomials, the q-difference
//! operator `D_q` and its adjoint `T_q`.
//!
//! A "circle function" is any `Fn(Complex64) -> Complex64` that can be
//! evaluated at the grid nodes and at their `q^k` multiples. Operators return
//! new closures, so off-grid samples are always exact evaluations of the
//! underlying rule rather than interpolants.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::QParam;

/// `N` equispaced nodes `e^{2πij/N}` on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleGrid {
    nodes: Vec<Complex64>,
}

impl CircleGrid {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 4 {
            return Err(Error::GridTooSmall(n_nodes));
        }
        let nodes = (0..n_nodes)
            .map(|j| {
                let (s, c) = (TAU * j as f64 / n_nodes as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// The same contour with twice as many nodes.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.len()).expect("refining a valid grid")
    }

    /// Largest value of `metric` over the nodes; NaN propagates.
    pub fn max_over<F: Fn(Complex64) -> f64>(&self, metric: F) -> f64 {
        self.nodes.iter().fold(0.0, |acc, &z| {
            let v = metric(z);
            if v.is_nan() || acc.is_nan() {
                f64::NAN
            } else {
                acc.max(v)
            }
        })
    }
}

impl CircleGrid {
    /// `max |lhs - rhs| / max(1, max |rhs|)` over the nodes, where `sides`
    /// returns `(lhs, rhs)`. NaN propagates.
    pub fn scaled_residual<F: Fn(Complex64) -> (Complex64, Complex64)>(&self, sides: F) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for &z in &self.nodes {
            let (lhs, rhs) = sides(z);
            let v = (lhs - rhs).norm();
            if v.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(v);
            scale = scale.max(rhs.norm());
        }
        worst / scale
    }
}

/// Neumaier-compensated sum; the order of summation is the iteration order.
pub fn compensated_sum<I: IntoIterator<Item = Complex64>>(values: I) -> Complex64 {
    let (mut sre, mut cre) = (0.0f64, 0.0f64);
    let (mut sim, mut cim) = (0.0f64, 0.0f64);
    for v in values {
        neumaier_step(&mut sre, &mut cre, v.re);
        neumaier_step(&mut sim, &mut cim, v.im);
    }
    Complex64::new(sre + cre, sim + cim)
}

#[inline]
fn neumaier_step(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

/// `(1/2πi) ∮ f(z) dz/z` by the `N`-point trapezoidal rule, i.e. the mean of
/// `f` over the nodes. Exact for Laurent polynomials whose degree span is
/// below `N`.
pub fn contour_mean<F: Fn(Complex64) -> Complex64>(f: F, grid: &CircleGrid) -> Complex64 {
    compensated_sum(grid.nodes().iter().map(|&z| f(z))) / grid.len() as f64
}

/// `<f, g>_c = (1/2πi) ∮ f(z) conj(g(z)) dz/z`.
///
/// On the circle `conj(g(z))` equals the bar function evaluated at `1/z`, so no
/// Laurent data is needed for `g`.
pub fn inner_product_c<F, G>(f: F, g: G, grid: &CircleGrid) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    contour_mean(|z| f(z) * g(z).conj(), grid)
}

/// `k`-th Laurent coefficient of `f`, `(1/2πi) ∮ f(z) z^{-k} dz/z`.
pub fn laurent_mode<F: Fn(Complex64) -> Complex64>(f: F, k: i32, grid: &CircleGrid) -> Complex64 {
    contour_mean(|z| f(z) * z.powi(-k), grid)
}

/// `(D_q f)(z) = (f(z) - f(qz)) / ((1 - q) z)`.
pub fn dq_apply<F: Fn(Complex64) -> Complex64>(f: F, q: QParam) -> impl Fn(Complex64) -> Complex64 {
    let qv = q.value();
    move |z| (f(z) - f(z * qv)) / ((1.0 - qv) * z)
}

/// `(T_q f)(z) = z (f(z) - q f(qz)) / (1 - q)`, the adjoint of `D_q` in `<.,.>_c`.
pub fn tq_apply<F: Fn(Complex64) -> Complex64>(f: F, q: QParam) -> impl Fn(Complex64) -> Complex64 {
    let qv = q.value();
    move |z| z * (f(z) - qv * f(z * qv)) / (1.0 - qv)
}

/// `T_q f` written as `q z² (D_q f)(z) + z f(z)`.
pub fn tq_apply_via_dq<F: Fn(Complex64) -> Complex64>(f: F, q: QParam) -> impl Fn(Complex64) -> Complex64 {
    let qv = q.value();
    move |z| {
        let d = (f(z) - f(z * qv)) / ((1.0 - qv) * z);
        qv * z * z * d + z * f(z)
    }
}

/// Coefficients `γ_k` with `(T_q^n f)(z) = z^n Σ_{k=0}^{n} γ_k f(q^k z)`.
///
/// One application of `T_q` maps `γ_k ↦ (γ_k - q^{p+1} γ_{k-1}) / (1 - q)` where
/// `p` is the current power of `z`.
pub fn tq_power_coefficients(n: usize, q: QParam) -> Vec<f64> {
    let qv = q.value();
    let mut gamma = vec![1.0];
    for p in 0..n {
        let shift = qv.powi(p as i32 + 1);
        let mut next = vec![0.0; gamma.len() + 1];
        for (k, slot) in next.iter_mut().enumerate() {
            let cur = gamma.get(k).copied().unwrap_or(0.0);
            let prev = if k > 0 { gamma[k - 1] } else { 0.0 };
            *slot = (cur - shift * prev) / (1.0 - qv);
        }
        gamma = next;
    }
    gamma
}

/// `T_q^n f` with `n + 1` evaluations of `f` per point.
pub fn tq_iterate<F: Fn(Complex64) -> Complex64>(f: F, q: QParam, n: usize) -> impl Fn(Complex64) -> Complex64 {
    let gamma = tq_power_coefficients(n, q);
    let qv = q.value();
    move |z| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zk = z;
        for &g in &gamma {
            acc += g * f(zk);
            zk *= qv;
        }
        acc * z.powi(n as i32)
    }
}

/// Finite Laurent series `Σ c_k z^{min_degree + k}`.
///
/// Stored trimmed: the first and last coefficients are nonzero unless the
/// polynomial is identically zero (then `coefficients` is empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentPoly {
    min_degree: i32,
    coefficients: Vec<Complex64>,
}

impl LaurentPoly {
    pub fn new(min_degree: i32, coefficients: Vec<Complex64>) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let Some(first) = coefficients.iter().position(|&c| c != zero) else {
            return Self::zero();
        };
        let last = coefficients.iter().rposition(|&c| c != zero).unwrap();
        Self { min_degree: min_degree + first as i32, coefficients: coefficients[first..=last].to_vec() }
    }

    pub fn zero() -> Self {
        Self { min_degree: 0, coefficients: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(0, vec![c])
    }

    pub fn monomial(degree: i32, c: Complex64) -> Self {
        Self::new(degree, vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn min_degree(&self) -> i32 {
        self.min_degree
    }

    pub fn max_degree(&self) -> i32 {
        self.min_degree + self.coefficients.len() as i32 - 1
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficient of `z^degree` (zero outside the stored range).
    pub fn coefficient(&self, degree: i32) -> Complex64 {
        let idx = degree - self.min_degree;
        if idx < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients.get(idx as usize).copied().unwrap_or_default()
    }

    /// `max_degree - min_degree`, zero for the zero polynomial.
    pub fn degree_span(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coefficients.iter().enumerate().map(move |(k, &c)| (self.min_degree + k as i32, c))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        // Horner in z from the top, then shift by z^{min_degree}.
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.min_degree)
    }

    /// The bar function: conjugate every Laurent coefficient.
    pub fn bar(&self) -> Self {
        Self { min_degree: self.min_degree, coefficients: self.coefficients.iter().map(|c| c.conj()).collect() }
    }

    /// Map every term through `z^n ↦ factor(n) z^{n + shift}`.
    fn map_terms(&self, shift: i32, factor: impl Fn(i32) -> f64) -> Self {
        Self::new(self.min_degree + shift, self.terms().map(|(n, c)| c * factor(n)).collect())
    }

    /// `D_q` on coefficients: `z^n ↦ ((1 - q^n)/(1 - q)) z^{n-1}`; constants vanish.
    pub fn dq(&self, q: QParam) -> Self {
        let qv = q.value();
        self.map_terms(-1, |n| (1.0 - qv.powi(n)) / (1.0 - qv))
    }

    /// `T_q` on coefficients: `z^n ↦ ((1 - q^{n+1})/(1 - q)) z^{n+1}`.
    pub fn tq(&self, q: QParam) -> Self {
        let qv = q.value();
        self.map_terms(1, |n| (1.0 - qv.powi(n + 1)) / (1.0 - qv))
    }

    /// Derivative `d/dz`.
    pub fn derivative(&self) -> Self {
        self.map_terms(-1, |n| n as f64)
    }

    /// Random coefficients with real and imaginary parts uniform in `[-1, 1]`
    /// on every degree in `min_degree..=max_degree`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, min_degree: i32, max_degree: i32) -> Self {
        let coefficients = (min_degree..=max_degree)
            .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        Self::new(min_degree, coefficients)
    }
}

/// `laurent_dq` as a free function.
pub fn laurent_dq(p: &LaurentPoly, q: QParam) -> LaurentPoly {
    p.dq(q)
}

/// `|<D_q f, g>_c - <f, T_q g>_c|` by quadrature.
pub fn adjoint_residual(f: &LaurentPoly, g: &LaurentPoly, q: QParam, grid: &CircleGrid) -> f64 {
    let (lhs, rhs) = adjoint_sides(f, g, q, grid);
    (lhs - rhs).norm()
}

/// `|<D_q f, g>_c - <f, T_q g>_c|` over the Cauchy–Schwarz bound
/// `max(‖D_q f‖ ‖g‖, ‖f‖ ‖T_q g‖, 1)`.
pub fn adjoint_residual_scaled(f: &LaurentPoly, g: &LaurentPoly, q: QParam, grid: &CircleGrid) -> f64 {
    let (lhs, rhs) = adjoint_sides(f, g, q, grid);
    let norm =
        |h: &dyn Fn(Complex64) -> Complex64| contour_mean(|z| Complex64::new(h(z).norm_sqr(), 0.0), grid).re.sqrt();
    let df = dq_apply(|z| f.eval(z), q);
    let tg = tq_apply(|z| g.eval(z), q);
    let fe = |z| f.eval(z);
    let ge = |z| g.eval(z);
    let bound = (norm(&df) * norm(&ge)).max(norm(&fe) * norm(&tg)).max(1.0);
    (lhs - rhs).norm() / bound
}

/// `(<D_q f, g>_c, <f, T_q g>_c)`.
pub fn adjoint_sides(f: &LaurentPoly, g: &LaurentPoly, q: QParam, grid: &CircleGrid) -> (Complex64, Complex64) {
    let lhs = inner_product_c(dq_apply(|z| f.eval(z), q), |z| g.eval(z), grid);
    let rhs = inner_product_c(|z| f.eval(z), tq_apply(|z| g.eval(z), q), grid);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(CircleGrid::new(3), Err(Error::GridTooSmall(3))));
        let g = CircleGrid::new(16).unwrap();
        assert!(g.nodes().iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        assert_eq!(g.refined().len(), 32);
    }

    #[test]
    fn contour_mean_of_monomials() {
        let g = CircleGrid::new(32).unwrap();
        assert!((contour_mean(|_| c(1.0), &g) - c(1.0)).norm() < 1e-15);
        for k in -40..=40 {
            let m = contour_mean(|z| z.powi(k), &g);
            let expected = if k % 32 == 0 { 1.0 } else { 0.0 };
            assert!((m - c(expected)).norm() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn monomial_inner_products() {
        let g = CircleGrid::new(16).unwrap();
        for m in -7..=7 {
            for n in -7..=7 {
                let v = inner_product_c(|z| z.powi(m), |z| z.powi(n), &g);
                let e = if m == n { 1.0 } else { 0.0 };
                assert!((v - c(e)).norm() < 1e-14);
            }
        }
        let f = |z: Complex64| z * Complex64::new(0.3, 2.0) + 1.0 / z;
        let ff = inner_product_c(f, f, &g);
        assert!(ff.re >= 0.0 && ff.im.abs() < 1e-15);
    }

    #[test]
    fn dq_on_constants_and_monomials() {
        let qq = q(0.3);
        let z = Complex64::from_polar(1.0, 0.7);
        assert_eq!(dq_apply(|_| c(2.5), qq)(z), c(0.0));
        for n in -4..=5 {
            let got = dq_apply(|u: Complex64| u.powi(n), qq)(z);
            let want = z.powi(n - 1) * ((1.0 - 0.3f64.powi(n)) / 0.7);
            assert!((got - want).norm() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn tq_on_constants_and_monomials() {
        let qq = q(0.6);
        let z = Complex64::from_polar(1.0, -1.1);
        assert!((tq_apply(|_| c(1.0), qq)(z) - z).norm() < 1e-15);
        for n in -4..=5 {
            let got = tq_apply(|u: Complex64| u.powi(n), qq)(z);
            let want = z.powi(n + 1) * ((1.0 - 0.6f64.powi(n + 1)) / 0.4);
            assert!((got - want).norm() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn two_forms_of_tq_agree() {
        let g = CircleGrid::new(64).unwrap();
        for qv in [0.2, 0.5, 0.9] {
            let qq = q(qv);
            let fns: Vec<Box<dyn Fn(Complex64) -> Complex64>> = vec![
                Box::new(|z: Complex64| z.exp()),
                Box::new(|z: Complex64| 1.0 / (2.0 - z) + z.powi(-3)),
                Box::new(|z: Complex64| crate::szego::szego_weight(z, q(0.4), 1e-16)),
            ];
            for f in &fns {
                let a = tq_apply(f, qq);
                let b = tq_apply_via_dq(f, qq);
                assert!(g.max_over(|z| (a(z) - b(z)).norm()) < 1e-13);
            }
        }
    }

    #[test]
    fn tq_iterate_matches_nesting() {
        let qq = q(0.5);
        let g = CircleGrid::new(32).unwrap();
        let f = |z: Complex64| z * z;
        let id = tq_iterate(f, qq, 0);
        assert!(g.max_over(|z| (id(z) - f(z)).norm()) == 0.0);
        let one = tq_iterate(f, qq, 1);
        let t1 = tq_apply(f, qq);
        assert!(g.max_over(|z| (one(z) - t1(z)).norm()) < 1e-15);
        let three = tq_iterate(f, qq, 3);
        let nested = tq_apply(tq_apply(tq_apply(f, qq), qq), qq);
        assert!(g.max_over(|z| (three(z) - nested(z)).norm()) < 1e-13);
    }

    #[test]
    fn tq_iterate_matches_repeated_application_on_analytic_functions() {
        let qq = q(0.7);
        let g = CircleGrid::new(32).unwrap();
        let f = |z: Complex64| (z * 0.5).exp() + 1.0 / (3.0 + z);
        let mut nested: Box<dyn Fn(Complex64) -> Complex64> = Box::new(f);
        for n in 1..=6 {
            nested = Box::new(tq_apply(nested, qq));
            let it = tq_iterate(f, qq, n);
            let scale = g.max_over(|z| nested(z).norm()).max(1.0);
            assert!(g.max_over(|z| (it(z) - nested(z)).norm()) < 1e-11 * scale, "n = {n}");
        }
    }

    #[test]
    fn laurent_trimming_and_eval() {
        let p = LaurentPoly::new(-3, vec![c(0.0), c(2.0), c(0.0), c(1.0), c(0.0)]);
        assert_eq!(p.min_degree(), -2);
        assert_eq!(p.max_degree(), 0);
        assert_eq!(p.coefficient(-2), c(2.0));
        assert_eq!(p.coefficient(5), c(0.0));
        let z = Complex64::new(0.3, 0.8);
        assert!((p.eval(z) - (2.0 / (z * z) + 1.0)).norm() < 1e-14);
        assert!(LaurentPoly::new(4, vec![c(0.0); 3]).is_zero());
    }

    #[test]
    fn laurent_dq_examples() {
        let qq = q(0.5);
        assert!(LaurentPoly::constant(c(1.0)).dq(qq).is_zero());
        let p = LaurentPoly::monomial(-2, c(1.0)).dq(qq);
        assert_eq!(p.min_degree(), -3);
        assert!((p.coefficient(-3) - c((1.0 - 4.0) / 0.5)).norm() < 1e-15);
    }

    #[test]
    fn laurent_dq_matches_pointwise_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = CircleGrid::new(64).unwrap();
        let qq = q(0.4);
        for _ in 0..50 {
            let p = LaurentPoly::random(&mut rng, -5, 5);
            let dp = p.dq(qq);
            let op = dq_apply(|z| p.eval(z), qq);
            let scale: f64 = dp.coefficients().iter().map(|c| c.norm()).sum();
            assert!(g.max_over(|z| (dp.eval(z) - op(z)).norm()) < 1e-14 * scale);
        }
    }

    #[test]
    fn adjoint_examples() {
        let g = CircleGrid::new(32).unwrap();
        let qq = q(0.5);
        let one = LaurentPoly::constant(c(1.0));
        assert!(adjoint_residual(&one, &one, qq, &g) < 1e-15);
        let f = LaurentPoly::monomial(3, Complex64::new(0.7, -1.3));
        let h = LaurentPoly::monomial(2, Complex64::new(-0.2, 0.4));
        assert!(adjoint_residual(&f, &h, qq, &g) < 1e-13);
    }

    #[test]
    fn adjoint_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = CircleGrid::new(64).unwrap();
        for qv in [0.2, 0.5, 0.9] {
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let f = LaurentPoly::random(&mut rng, -5, 5);
                let h = LaurentPoly::random(&mut rng, -5, 5);
                worst = worst.max(adjoint_residual(&f, &h, q(qv), &g));
            }
            assert!(worst < 1e-11, "q = {qv}: {worst}");
        }
    }

    #[test]
    fn classical_limit() {
        let p = LaurentPoly::new(0, (0..=6).map(|k| Complex64::new(1.0 / (k + 1) as f64, 0.1 * k as f64)).collect());
        let g = CircleGrid::new(64).unwrap();
        let dp = p.derivative();
        let qq = q(0.999);
        let dev = g.max_over(|z| (dq_apply(|u| p.eval(u), qq)(z) - dp.eval(z)).norm());
        let scale = g.max_over(|z| dp.eval(z).norm());
        assert!(dev < 1e-2 * scale);
    }

    #[test]
    fn bar_matches_conjugation_on_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = LaurentPoly::random(&mut rng, -3, 4);
        let pb = p.bar();
        let z = Complex64::from_polar(1.0, 2.2);
        assert!((pb.eval(z.inv()) - p.eval(z).conj()).norm() < 1e-14);
    }
}
