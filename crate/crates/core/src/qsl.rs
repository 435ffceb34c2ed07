//! Generic q-Sturm–Liouville operator `M y = (1/ω) T_q(p D_q y)` with pluggable
//! coefficient `p` and weight `ω`, and numeric checks of its symmetry,
//! positivity and eigenfunction orthogonality in `L²(ω)`.

use num_complex::Complex64;
use serde_json::json;

use crate::circle::{compensated_sum, contour_mean, dq_apply, tq_apply, CircleGrid, LaurentPoly};
use crate::error::{Error, Result};
use crate::qcore::{QParam, INF_PRODUCT_TOL};
use crate::report::IdentityReport;
use crate::szego::{eigenvalue, szego_poly, szego_weight, WEIGHT_FLOOR};

/// A function on (a neighbourhood of) the unit circle.
pub type CircleFunction = Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Largest imaginary part tolerated in `p` and `ω` on the grid, relative to
/// `max(1, |value|)`.
const REALNESS_TOL: f64 = 1e-12;

/// Residual bound for accepting `(y, λ)` as an eigenpair.
pub const EIGEN_CERTIFICATION_TOL: f64 = 1e-8;

/// Minimal gap `|λ1 - λ2|` for the orthogonality check.
pub const EIGEN_SEPARATION: f64 = 1e-8;

pub struct QslProblem {
    p: CircleFunction,
    omega: CircleFunction,
    q: QParam,
}

impl std::fmt::Debug for QslProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QslProblem").field("q", &self.q.value()).finish_non_exhaustive()
    }
}

impl QslProblem {
    /// Validates that `p` and `ω` are real and positive on `grid`.
    pub fn new(p: CircleFunction, omega: CircleFunction, q: QParam, grid: &CircleGrid) -> Result<Self> {
        for &z in grid.nodes() {
            let w = omega(z);
            if w.im.abs() >= REALNESS_TOL * w.norm().max(1.0) || !(w.re > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "weight must be real and positive on the circle; omega({z}) = {w}"
                )));
            }
            let c = p(z);
            if c.im.abs() >= REALNESS_TOL * c.norm().max(1.0) || !(c.re > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "coefficient must be real and positive on the circle; p({z}) = {c}"
                )));
            }
        }
        Ok(Self { p, omega, q })
    }

    /// `p = ω = w_c(·|q)`.
    pub fn szego(q: QParam, grid: &CircleGrid) -> Result<Self> {
        Self::new(
            Box::new(move |z| szego_weight(z, q, INF_PRODUCT_TOL)),
            Box::new(move |z| szego_weight(z, q, INF_PRODUCT_TOL)),
            q,
            grid,
        )
    }

    /// `p = ω = 1`.
    pub fn flat(q: QParam, grid: &CircleGrid) -> Result<Self> {
        let one = || -> CircleFunction { Box::new(|_| Complex64::new(1.0, 0.0)) };
        Self::new(one(), one(), q, grid)
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn omega(&self, z: Complex64) -> Complex64 {
        (self.omega)(z)
    }

    pub fn p(&self, z: Complex64) -> Complex64 {
        (self.p)(z)
    }

    /// `(f, g)_ω = (1/2πi) ∮ f conj(g) ω dz/z`.
    pub fn inner<F, G>(&self, f: F, g: G, grid: &CircleGrid) -> Complex64
    where
        F: Fn(Complex64) -> Complex64,
        G: Fn(Complex64) -> Complex64,
    {
        contour_mean(|z| f(z) * g(z).conj() * self.omega(z), grid)
    }

    /// `(1/2πi) ∮ p |D_q f|² dz/z`.
    pub fn form<F: Fn(Complex64) -> Complex64>(&self, f: F, grid: &CircleGrid) -> Complex64 {
        let df = dq_apply(f, self.q);
        contour_mean(|z| self.p(z) * df(z).norm_sqr(), grid)
    }
}

/// `z ↦ (1/ω(z)) T_q(p D_q f)(z)`.
pub fn m_apply<'a, F>(prob: &'a QslProblem, f: F) -> impl Fn(Complex64) -> Result<Complex64> + 'a
where
    F: Fn(Complex64) -> Complex64 + 'a,
{
    let df = dq_apply(f, prob.q);
    let flux = tq_apply(move |z| prob.p(z) * df(z), prob.q);
    move |z| {
        let w = prob.omega(z);
        if !(w.norm() >= WEIGHT_FLOOR) {
            return Err(Error::WeightUnderflow { z, magnitude: w.norm() });
        }
        Ok(flux(z) / w)
    }
}

/// `max |M y - λ y| / max(1, max |λ y|)` over the grid.
pub fn eigen_residual<F>(prob: &QslProblem, y: F, lambda: Complex64, grid: &CircleGrid) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64 + Copy,
{
    let my = sampled(prob, y, grid)?;
    let rhs: Vec<Complex64> = grid.nodes().iter().map(|&z| lambda * y(z)).collect();
    let scale = rhs.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let worst = my.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, |acc: f64, v| {
        if acc.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            acc.max(v)
        }
    });
    Ok(worst / scale)
}

/// `(M y, y)_ω / (y, y)_ω`.
pub fn rayleigh_quotient<F>(prob: &QslProblem, y: F, grid: &CircleGrid) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64 + Copy,
{
    let my = sampled(prob, y, grid)?;
    let ys = values(y, grid);
    Ok(weighted_mean(prob, grid, &my, &ys) / weighted_mean(prob, grid, &ys, &ys))
}

/// `M H_n = λ_n H_n` for the Szegő instantiation (or whichever problem is
/// passed), with `λ_n = (1 - q^n)/(1 - q)²`.
pub fn szego_anchor_check(prob: &QslProblem, n: usize, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    let q = prob.q;
    let h = szego_poly(n, q);
    let lambda = eigenvalue(n, q);
    let residual = eigen_residual(prob, |z| h.eval(z), Complex64::new(lambda, 0.0), grid)?;
    Ok(IdentityReport::new(format!("qsl.szego_eigen[n={n}]"), residual, tol, grid.len())
        .with_params(json!({ "n": n, "q": q.value(), "lambda": lambda })))
}

/// `|(f, Mg)_ω - conj((g, Mf)_ω)|`. When `f == g` the residual also covers the
/// gap between `(f, Mf)_ω` and `(1/2πi) ∮ p |D_q f|² dz/z`. Divided by
/// `max(1, |(f, Mg)_ω|)`.
pub fn symmetry_check(
    prob: &QslProblem,
    f: &LaurentPoly,
    g: &LaurentPoly,
    grid: &CircleGrid,
    tol: f64,
) -> Result<IdentityReport> {
    let fe = |z| f.eval(z);
    let ge = |z| g.eval(z);
    let (fv, gv) = (values(fe, grid), values(ge, grid));
    let mg = sampled(prob, ge, grid)?;
    let mf = sampled(prob, fe, grid)?;
    let fmg = weighted_mean(prob, grid, &fv, &mg);
    let gmf = weighted_mean(prob, grid, &gv, &mf);
    let scale = fmg.norm().max(1.0);
    let mut residual = (fmg - gmf.conj()).norm() / scale;
    let mut report_note = format!("(f, Mg) = {fmg:.6e}");
    if f == g {
        let form = prob.form(fe, grid);
        residual = residual.max((fmg - form).norm() / scale);
        report_note = format!("(f, Mf) = {fmg:.6e}; form = {form:.6e}");
    }
    Ok(IdentityReport::new("qsl.symmetry", residual, tol, grid.len())
        .with_params(json!({ "q": prob.q.value() }))
        .with_note(report_note))
}

/// `(f, Mf)_ω` against the nonnegative form; passes only when the two agree to
/// `tol` relative to `max(1, |form|)` and the value is `>= -tol`.
pub fn form_positivity_check(
    prob: &QslProblem,
    f: &LaurentPoly,
    grid: &CircleGrid,
    tol: f64,
) -> Result<IdentityReport> {
    let fe = |z| f.eval(z);
    let mf = sampled(prob, fe, grid)?;
    let value = weighted_mean(prob, grid, &mf, &values(fe, grid));
    let form = prob.form(fe, grid);
    let mut report =
        IdentityReport::new("qsl.form_positivity", (value - form).norm() / form.norm().max(1.0), tol, grid.len())
            .with_params(json!({ "q": prob.q.value() }))
            .with_note(format!("(Mf, f) = {value:.6e}; form = {form:.6e}"));
    if !(value.re >= -tol) || value.im.abs() >= tol * value.norm().max(1.0) {
        report.passed = false;
        report = report.with_note("negative or non-real quadratic form");
    }
    Ok(report)
}

fn sampled<F: Fn(Complex64) -> Complex64>(prob: &QslProblem, f: F, grid: &CircleGrid) -> Result<Vec<Complex64>> {
    let mf = m_apply(prob, f);
    grid.nodes().iter().map(|&z| mf(z)).collect()
}

fn values<F: Fn(Complex64) -> Complex64>(f: F, grid: &CircleGrid) -> Vec<Complex64> {
    grid.nodes().iter().map(|&z| f(z)).collect()
}

/// Mean over the nodes of `a conj(b) ω`.
fn weighted_mean(prob: &QslProblem, grid: &CircleGrid, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let terms = grid.nodes().iter().zip(a.iter().zip(b)).map(|(&z, (&x, &y))| x * y.conj() * prob.omega(z));
    compensated_sum(terms) / grid.len() as f64
}

/// Reports of [`eigen_orthogonality_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenOrthogonality {
    /// `|(1/2πi) ∮ y1 y2 dz/z|`, no weight and no conjugate, over the
    /// unweighted norms of `y1` and `y2`. Informational.
    pub unweighted: IdentityReport,
    /// `|(y1, y2)_ω| / (‖y1‖_ω ‖y2‖_ω)`.
    pub weighted: IdentityReport,
}

impl EigenOrthogonality {
    pub fn into_reports(self) -> [IdentityReport; 2] {
        [self.weighted, self.unweighted]
    }
}

/// Certifies both eigenpairs to [`EIGEN_CERTIFICATION_TOL`] and real
/// eigenvalues, then measures orthogonality with and without the weight.
pub fn eigen_orthogonality_check<F1, F2>(
    prob: &QslProblem,
    y1: F1,
    lambda1: Complex64,
    y2: F2,
    lambda2: Complex64,
    grid: &CircleGrid,
    tol: f64,
) -> Result<EigenOrthogonality>
where
    F1: Fn(Complex64) -> Complex64 + Copy,
    F2: Fn(Complex64) -> Complex64 + Copy,
{
    if (lambda1 - lambda2).norm() <= EIGEN_SEPARATION {
        return Err(Error::Precondition(format!(
            "eigenvalues {lambda1} and {lambda2} are not separated by more than {EIGEN_SEPARATION:e}"
        )));
    }
    for (label, lambda) in [("first", lambda1), ("second", lambda2)] {
        if lambda.im.abs() >= 1e-10 {
            return Err(Error::EigenpairInvalid(format!("{label} eigenvalue {lambda} is not real")));
        }
    }
    let r1 = eigen_residual(prob, y1, lambda1, grid)?;
    let r2 = eigen_residual(prob, y2, lambda2, grid)?;
    for (label, r) in [("first", r1), ("second", r2)] {
        if !(r < EIGEN_CERTIFICATION_TOL) {
            return Err(Error::EigenpairInvalid(format!(
                "{label} pair has residual {r:.3e} >= {EIGEN_CERTIFICATION_TOL:e}"
            )));
        }
    }
    let params = json!({ "q": prob.q.value(), "lambda1": lambda1.re, "lambda2": lambda2.re });
    let plain = contour_mean(|z| y1(z) * y2(z), grid);
    let plain_norm = (contour_mean(|z| Complex64::new(y1(z).norm_sqr(), 0.0), grid).re
        * contour_mean(|z| Complex64::new(y2(z).norm_sqr(), 0.0), grid).re)
        .sqrt();
    let weighted = prob.inner(y1, y2, grid);
    let weighted_norm = (prob.inner(y1, y1, grid).re * prob.inner(y2, y2, grid).re).sqrt();
    Ok(EigenOrthogonality {
        unweighted: IdentityReport::new(
            "qsl.eigen_orthogonality[unweighted]",
            plain.norm() / plain_norm,
            tol,
            grid.len(),
        )
        .with_params(params.clone())
        .with_note(format!("value {plain:.6e}"))
        .informational(),
        weighted: IdentityReport::new(
            "qsl.eigen_orthogonality[weighted]",
            weighted.norm() / weighted_norm,
            tol,
            grid.len(),
        )
        .with_params(params)
        .with_note(format!("value {weighted:.6e}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        let g = CircleGrid::new(32).unwrap();
        let prob = QslProblem::szego(q(0.5), &g).unwrap();
        let m = m_apply(&prob, |_| Complex64::new(1.0, 0.0));
        for &z in g.nodes() {
            assert_eq!(m(z).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn flat_problem_on_monomials() {
        // p = ω = 1: M z = z and M z² = (1 + q)² z²
        let g = CircleGrid::new(16).unwrap();
        let qq = q(0.3);
        let prob = QslProblem::flat(qq, &g).unwrap();
        let m1 = m_apply(&prob, |z| z);
        let m2 = m_apply(&prob, |z| z * z);
        for &z in g.nodes() {
            assert!((m1(z).unwrap() - z).norm() < 1e-15);
            assert!((m2(z).unwrap() - 1.3f64.powi(2) * z * z).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_weights() {
        let g = CircleGrid::new(16).unwrap();
        let neg: CircleFunction = Box::new(|_| Complex64::new(-1.0, 0.0));
        let one: CircleFunction = Box::new(|_| Complex64::new(1.0, 0.0));
        assert!(QslProblem::new(one, neg, q(0.5), &g).is_err());
        let cplx: CircleFunction = Box::new(|z| z);
        let one: CircleFunction = Box::new(|_| Complex64::new(1.0, 0.0));
        assert!(QslProblem::new(cplx, one, q(0.5), &g).is_err());
    }

    #[test]
    fn szego_anchor() {
        let g = CircleGrid::new(256).unwrap();
        for qv in [0.3, 0.5, 0.7] {
            let prob = QslProblem::szego(q(qv), &g).unwrap();
            for n in 0..=8 {
                let r = szego_anchor_check(&prob, n, &g, 1e-9).unwrap();
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn symmetry_examples() {
        let g = CircleGrid::new(256).unwrap();
        let prob = QslProblem::szego(q(0.5), &g).unwrap();
        let one = LaurentPoly::constant(Complex64::new(1.0, 0.0));
        let r = symmetry_check(&prob, &one, &one, &g, 1e-12).unwrap();
        assert!(r.passed && r.residual == 0.0);
        let f = LaurentPoly::new(1, vec![Complex64::new(1.0, 0.0); 2]);
        let r = symmetry_check(&prob, &f, &f, &g, 1e-11).unwrap();
        assert!(r.passed, "{r:?}");
        let pos = form_positivity_check(&prob, &f, &g, 1e-11).unwrap();
        assert!(pos.passed);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = LaurentPoly::random(&mut rng, -3, 3);
            let h = LaurentPoly::random(&mut rng, -2, 4);
            assert!(symmetry_check(&prob, &f, &h, &g, 1e-10).unwrap().passed);
        }
    }

    #[test]
    fn eigen_orthogonality_examples() {
        let g = CircleGrid::new(256).unwrap();
        let qq = q(0.5);
        let prob = QslProblem::szego(qq, &g).unwrap();
        let (h1, h2, h0, h3) = (szego_poly(1, qq), szego_poly(2, qq), szego_poly(0, qq), szego_poly(3, qq));
        let lam = |n| Complex64::new(eigenvalue(n, qq), 0.0);
        let out = eigen_orthogonality_check(&prob, |z| h1.eval(z), lam(1), |z| h2.eval(z), lam(2), &g, 1e-10).unwrap();
        assert!(out.weighted.passed);
        assert!(!out.unweighted.passed && out.unweighted.informational);
        let out = eigen_orthogonality_check(&prob, |z| h0.eval(z), lam(0), |z| h3.eval(z), lam(3), &g, 1e-10).unwrap();
        assert!(out.weighted.passed);
        let same = eigen_orthogonality_check(&prob, |z| h1.eval(z), lam(1), |z| h1.eval(z), lam(1), &g, 1e-10);
        assert!(matches!(same, Err(Error::Precondition(_))));
        let wrong = eigen_orthogonality_check(&prob, |z| h1.eval(z), lam(2), |z| h2.eval(z), lam(3), &g, 1e-10);
        assert!(matches!(wrong, Err(Error::EigenpairInvalid(_))));
    }

    #[test]
    fn rayleigh_quotient_is_real_eigenvalue() {
        let g = CircleGrid::new(128).unwrap();
        let qq = q(0.5);
        let prob = QslProblem::szego(qq, &g).unwrap();
        let h = szego_poly(4, qq);
        let rq = rayleigh_quotient(&prob, |z| h.eval(z), &g).unwrap();
        assert!(rq.im.abs() < 1e-10);
        assert!((rq.re - eigenvalue(4, qq)).abs() < 1e-10);
    }
}
