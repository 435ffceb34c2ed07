//! Szegő polynomials `H_n(z|q)` and their weight `w_c(z|q) = (q^{1/2}z, q^{1/2}/z; q)_∞`.
//!
//! Pointwise checks report [`CircleGrid::scaled_residual`]; Gram checks report
//! their worst entry error divided by `max(1, largest expected diagonal)`.

use num_complex::Complex64;
use serde_json::json;

use crate::circle::{compensated_sum, dq_apply, tq_apply, tq_iterate, CircleGrid, LaurentPoly};
use crate::error::{Error, Result};
use crate::qcore::{
    q_binomial, qpochhammer, qpochhammer_inf, theta_sum, triple_product, triple_product_base_q, QParam, INF_PRODUCT_TOL,
};
use crate::report::{GramTable, IdentityReport};

/// Weights below this magnitude are never divided by.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// `H_n(z|q) = Σ_k [n k]_q (q^{-1/2} z)^k`.
pub fn szego_poly(n: usize, q: QParam) -> LaurentPoly {
    let scale = 1.0 / q.sqrt();
    let coefficients = (0..=n).map(|k| Complex64::new(q_binomial(n, k, q) * scale.powi(k as i32), 0.0)).collect();
    LaurentPoly::new(0, coefficients)
}

/// `w_c(z|q)` from its product form.
pub fn szego_weight(z: Complex64, q: QParam, tol: f64) -> Complex64 {
    let h = q.sqrt();
    qpochhammer_inf(z * h, q, tol) * qpochhammer_inf(z.inv() * h, q, tol)
}

/// `w_c(z|q)` through the triple product in base `q^{1/2}`:
/// `(q^{1/2}z, q^{1/2}/z; q)_∞ = Σ_n q^{n²/2} (-z)^n / (q; q)_∞`.
pub fn szego_weight_theta(z: Complex64, q: QParam, tol: f64) -> Result<Complex64> {
    let half = QParam::new(q.sqrt())?;
    Ok(theta_sum(-z, half, tol)? / qpochhammer_inf(Complex64::new(q.value(), 0.0), q, tol))
}

/// `1 / (q; q)_∞`, the total mass of `w_c`.
pub fn total_mass(q: QParam) -> f64 {
    1.0 / qpochhammer_inf(Complex64::new(q.value(), 0.0), q, INF_PRODUCT_TOL).re
}

/// `q^{-n} (q;q)_n / (q;q)_∞`.
pub fn norm_closed(n: usize, q: QParam) -> f64 {
    let qq = Complex64::new(q.value(), 0.0);
    q.powi(-(n as i32)) * qpochhammer(qq, q, n).re * total_mass(q)
}

/// Sturm–Liouville eigenvalue `(1 - q^n) / (1 - q)²`.
pub fn eigenvalue(n: usize, q: QParam) -> f64 {
    let qv = q.value();
    (1.0 - qv.powi(n as i32)) / ((1.0 - qv) * (1.0 - qv))
}

fn weight(q: QParam) -> impl Fn(Complex64) -> Complex64 {
    move |z| szego_weight(z, q, INF_PRODUCT_TOL)
}

fn guard_weight(q: QParam, grid: &CircleGrid) -> Result<()> {
    for &z in grid.nodes() {
        let w = szego_weight(z, q, INF_PRODUCT_TOL);
        if !(w.norm() >= WEIGHT_FLOOR) {
            return Err(Error::WeightUnderflow { z, magnitude: w.norm() });
        }
    }
    Ok(())
}

fn params(n: usize, q: QParam) -> serde_json::Value {
    json!({ "n": n, "q": q.value() })
}

/// `D_q H_n = q^{-1/2} (1 - q^n)/(1 - q) H_{n-1}`, max residual over the grid.
pub fn lowering_check(n: usize, q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    if n == 0 {
        return Err(Error::Precondition("lowering_check needs n >= 1".into()));
    }
    let hn = szego_poly(n, q);
    let hm = szego_poly(n - 1, q);
    let lhs = dq_apply(|z| hn.eval(z), q);
    let coeff = (1.0 - q.powi(n as i32)) / ((1.0 - q.value()) * q.sqrt());
    let residual = grid.scaled_residual(|z| (lhs(z), coeff * hm.eval(z)));
    Ok(IdentityReport::new(format!("szego.lowering[n={n}]"), residual, tol, grid.len()).with_params(params(n, q)))
}

/// `(1/w_c) T_q (w_c H_n) = (√q / (1 - q)) H_{n+1}`, max residual over the grid.
pub fn raising_check(n: usize, q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    guard_weight(q, grid)?;
    let hn = szego_poly(n, q);
    let hp = szego_poly(n + 1, q);
    let w = weight(q);
    let lifted = tq_apply(|z| w(z) * hn.eval(z), q);
    let coeff = q.sqrt() / (1.0 - q.value());
    let residual = grid.scaled_residual(|z| (lifted(z) / w(z), coeff * hp.eval(z)));
    Ok(IdentityReport::new(format!("szego.raising[n={n}]"), residual, tol, grid.len()).with_params(params(n, q)))
}

/// `H_n = (q^{-1/2} - q^{1/2})^n (1/w_c) T_q^n (w_c)`, max residual over the grid.
pub fn rodrigues(n: usize, q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    guard_weight(q, grid)?;
    let hn = szego_poly(n, q);
    let w = weight(q);
    let tn = tq_iterate(&w, q, n);
    let prefactor = (1.0 / q.sqrt() - q.sqrt()).powi(n as i32);
    let residual = grid.scaled_residual(|z| (prefactor * tn(z) / w(z), hn.eval(z)));
    Ok(IdentityReport::new(format!("szego.rodrigues[n={n}]"), residual, tol, grid.len()).with_params(params(n, q)))
}

/// Right-hand side of the Rodrigues formula as a circle function.
pub fn rodrigues_rhs(n: usize, q: QParam) -> impl Fn(Complex64) -> Complex64 {
    let w = weight(q);
    let prefactor = (1.0 / q.sqrt() - q.sqrt()).powi(n as i32);
    move |z| prefactor * tq_iterate(&w, q, n)(z) / w(z)
}

/// `(1/w_c) T_q (w_c D_q H_n) = λ_n H_n`, max residual over the grid.
pub fn sturm_liouville_check(n: usize, q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    guard_weight(q, grid)?;
    let hn = szego_poly(n, q);
    let w = weight(q);
    let dh = dq_apply(|z| hn.eval(z), q);
    let lhs = tq_apply(|z| w(z) * dh(z), q);
    let lambda = eigenvalue(n, q);
    let residual = grid.scaled_residual(|z| (lhs(z) / w(z), lambda * hn.eval(z)));
    Ok(IdentityReport::new(format!("szego.sturm_liouville[n={n}]"), residual, tol, grid.len())
        .with_params(json!({ "n": n, "q": q.value(), "lambda": lambda })))
}

/// `D_q` applied to `(1/w_c) T_q (w_c H_n)` against
/// `q^{-1/2}(1 - q^{n+1})/(1 - q) · √q/(1 - q) · H_n`.
pub fn ladder_consistency_check(n: usize, q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    guard_weight(q, grid)?;
    let hn = szego_poly(n, q);
    let w = weight(q);
    let lifted = tq_apply(|z| w(z) * hn.eval(z), q);
    let raised = |z: Complex64| lifted(z) / w(z);
    let lowered = dq_apply(raised, q);
    let qv = q.value();
    let coeff = (1.0 - qv.powi(n as i32 + 1)) / ((1.0 - qv) * q.sqrt()) * q.sqrt() / (1.0 - qv);
    let residual = grid.scaled_residual(|z| (lowered(z), coeff * hn.eval(z)));
    Ok(IdentityReport::new(format!("szego.ladder_consistency[n={n}]"), residual, tol, grid.len())
        .with_params(params(n, q)))
}

/// `G[m][n] = (1/2πi) ∮ conj(H_m) H_n w_c dz/z` for `0 <= m, n <= max_n`,
/// judged against `q^{-n}(q;q)_n/(q;q)_∞ δ_{mn}`.
///
/// The report residual is the larger of the worst off-diagonal magnitude and
/// the worst absolute diagonal error.
pub fn szego_gram(max_n: usize, q: QParam, grid: &CircleGrid, tol: f64) -> (GramTable, IdentityReport) {
    let polys: Vec<LaurentPoly> = (0..=max_n).map(|n| szego_poly(n, q)).collect();
    let weights: Vec<Complex64> = grid.nodes().iter().map(|&z| szego_weight(z, q, INF_PRODUCT_TOL)).collect();
    let values: Vec<Vec<Complex64>> = polys.iter().map(|p| grid.nodes().iter().map(|&z| p.eval(z)).collect()).collect();
    let size = max_n + 1;
    let mut entries = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    let mut expected = entries.clone();
    for m in 0..size {
        for n in 0..size {
            let sum = compensated_sum((0..grid.len()).map(|j| values[m][j].conj() * values[n][j] * weights[j]));
            entries[m][n] = sum / grid.len() as f64;
        }
        expected[m][m] = Complex64::new(norm_closed(m, q), 0.0);
    }
    let table = GramTable { entries, expected };
    let off = table.max_off_diagonal();
    let diag = table.max_diagonal_abs_error();
    let scale = table.expected_scale();
    let report = IdentityReport::new(format!("szego.gram[max_n={max_n}]"), off.max(diag) / scale, tol, grid.len())
        .with_params(json!({ "max_n": max_n, "q": q.value() }))
        .with_note(format!(
            "max off-diagonal {off:.3e}; max diagonal error {diag:.3e} (relative {:.3e})",
            table.max_diagonal_rel_error()
        ));
    (table, report)
}

/// Jacobi triple product `Σ q^{n²} z^n = (q², -qz, -q/z; q²)_∞` on the grid.
///
/// The notes record how far the base-`q` product `(q², -qz, -q/z; q)_∞` lies
/// from the sum on the same nodes.
pub fn jacobi_triple_check(q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    let mut residual: f64 = 0.0;
    let mut base_q_gap: f64 = 0.0;
    for &z in grid.nodes() {
        let sum = theta_sum(z, q, 1e-17)?;
        residual = residual.max((sum - triple_product(z, q, INF_PRODUCT_TOL)).norm());
        base_q_gap = base_q_gap.max((sum - triple_product_base_q(z, q, INF_PRODUCT_TOL)).norm());
    }
    Ok(IdentityReport::new("szego.jacobi_triple_product", residual, tol, grid.len())
        .with_params(json!({ "q": q.value() }))
        .with_note(format!("product with base q in every factor misses the sum by {base_q_gap:.3e}")))
}

/// Same comparison with the product taken in base `q` throughout.
pub fn jacobi_triple_base_q_check(q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    let mut residual: f64 = 0.0;
    for &z in grid.nodes() {
        let sum = theta_sum(z, q, 1e-17)?;
        residual = residual.max((sum - triple_product_base_q(z, q, INF_PRODUCT_TOL)).norm());
    }
    Ok(IdentityReport::new("szego.jacobi_triple_product[base q]", residual, tol, grid.len())
        .with_params(json!({ "q": q.value() }))
        .informational())
}

/// Product form of `w_c` against the theta-series form, relative to `max |w_c|`.
pub fn weight_routes_check(q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    let mut gap: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &z in grid.nodes() {
        let theta = szego_weight_theta(z, q, 1e-17)?;
        let product = szego_weight(z, q, INF_PRODUCT_TOL);
        gap = gap.max((theta - product).norm());
        scale = scale.max(product.norm());
    }
    Ok(IdentityReport::new("szego.weight_product_vs_theta", gap / scale, tol, grid.len())
        .with_params(json!({ "q": q.value() }))
        .with_note(format!("max |w| = {scale:.3e}; relative residual")))
}

/// `w_c` is real and positive on the circle: residual is `max |Im w_c| / max |w_c|`,
/// and a nonpositive real part anywhere fails the report outright.
pub fn weight_positivity_check(q: QParam, grid: &CircleGrid, tol: f64) -> IdentityReport {
    let mut min_re = f64::INFINITY;
    let mut max_im: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &z in grid.nodes() {
        let w = szego_weight(z, q, INF_PRODUCT_TOL);
        min_re = min_re.min(w.re);
        max_im = max_im.max(w.im.abs());
        scale = scale.max(w.norm());
    }
    let residual = if min_re > 0.0 { max_im / scale } else { f64::INFINITY };
    IdentityReport::new("szego.weight_real_positive", residual, tol, grid.len())
        .with_params(json!({ "q": q.value() }))
        .with_note(format!("min Re w = {min_re:.3e}; max |w| = {scale:.3e}"))
}

/// Largest negative-mode Laurent coefficient of the Rodrigues right-hand side.
pub fn rodrigues_polynomiality_check(n: usize, q: QParam, grid: &CircleGrid, tol: f64) -> IdentityReport {
    let rhs = rodrigues_rhs(n, q);
    let values: Vec<Complex64> = grid.nodes().iter().map(|&z| rhs(z)).collect();
    let half = grid.len() as i32 / 2;
    let mut worst: f64 = 0.0;
    for k in 1..half {
        let mode = compensated_sum(grid.nodes().iter().zip(&values).map(|(&z, &v)| v * z.powi(k))) / grid.len() as f64;
        worst = worst.max(mode.norm());
    }
    IdentityReport::new(format!("szego.rodrigues_polynomial[n={n}]"), worst, tol, grid.len()).with_params(params(n, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::contour_mean;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    #[test]
    fn low_degree_polynomials() {
        let qq = q(0.5);
        let h0 = szego_poly(0, qq);
        assert_eq!(h0.coefficients(), &[Complex64::new(1.0, 0.0)]);
        let h1 = szego_poly(1, qq);
        assert!((h1.coefficient(1).re - 0.5f64.powf(-0.5)).abs() < 1e-15);
        let h2 = szego_poly(2, qq);
        assert!((h2.coefficient(0).re - 1.0).abs() < 1e-15);
        assert!((h2.coefficient(1).re - 0.5f64.powf(-0.5) * 1.5).abs() < 1e-15);
        assert!((h2.coefficient(2).re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn degree_and_leading_coefficient() {
        for qv in [0.2, 0.5, 0.9] {
            for n in 0..=12 {
                let h = szego_poly(n, q(qv));
                assert_eq!(h.max_degree(), n as i32);
                assert_eq!(h.min_degree(), 0);
                let lead = qv.powf(-(n as f64) / 2.0);
                assert!((h.coefficient(n as i32).re - lead).abs() < 1e-13 * lead);
            }
        }
    }

    #[test]
    fn weight_properties_on_circle() {
        let qq = q(0.5);
        let g = CircleGrid::new(64).unwrap();
        for &z in g.nodes() {
            let w = szego_weight(z, qq, 1e-16);
            assert!(w.re > 0.0 && w.im.abs() < 1e-13);
            assert!((szego_weight(z.inv(), qq, 1e-16) - w).norm() < 1e-13);
        }
        let mass = contour_mean(weight(qq), &CircleGrid::new(256).unwrap());
        assert!((mass.re - total_mass(qq)).abs() < 1e-13);
    }

    #[test]
    fn weight_positivity_up_to_q_09() {
        for qv in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = weight_positivity_check(q(qv), &CircleGrid::new(256).unwrap(), 1e-13);
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn lowering_examples() {
        let g = CircleGrid::new(256).unwrap();
        assert!(lowering_check(0, q(0.5), &g, 1e-12).is_err());
        assert!(lowering_check(1, q(0.5), &g, 1e-13).unwrap().passed);
        assert!(lowering_check(5, q(0.5), &g, 1e-11).unwrap().passed);
        let qq = q(0.25);
        let coeff = (1.0 - qq.value()) / ((1.0 - qq.value()) * qq.sqrt());
        assert!((coeff - 2.0).abs() < 1e-15);
    }

    #[test]
    fn raising_base_case_and_generic() {
        let g = CircleGrid::new(256).unwrap();
        assert!(raising_check(0, q(0.5), &g, 1e-12).unwrap().passed);
        assert!(raising_check(4, q(0.5), &g, 1e-10).unwrap().passed);
    }

    #[test]
    fn rodrigues_examples() {
        let g = CircleGrid::new(256).unwrap();
        let r0 = rodrigues(0, q(0.5), &g, 1e-15).unwrap();
        assert!(r0.passed, "{r0:?}");
        assert!(rodrigues(1, q(0.5), &g, 1e-12).unwrap().passed);
        assert!(rodrigues(6, q(0.5), &g, 1e-9).unwrap().passed);
    }

    #[test]
    fn rodrigues_one_step_is_scaled_raising() {
        let qq = q(0.3);
        let z = Complex64::from_polar(1.0, 0.4);
        let w = weight(qq);
        let raised = tq_apply(&w, qq)(z) / w(z);
        let via_rodrigues = rodrigues_rhs(1, qq)(z) / (1.0 / qq.sqrt() - qq.sqrt());
        assert!((raised - via_rodrigues).norm() < 1e-14);
    }

    #[test]
    fn sturm_liouville_eigenvalues() {
        let qq = q(0.5);
        assert_eq!(eigenvalue(0, qq), 0.0);
        assert!((eigenvalue(1, qq) - 2.0).abs() < 1e-15);
        for n in 0..20 {
            assert!(eigenvalue(n + 1, qq) > eigenvalue(n, qq));
        }
        let g = CircleGrid::new(256).unwrap();
        for n in 0..=8 {
            let r = sturm_liouville_check(n, qq, &g, 1e-9).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn ladder_consistency() {
        let g = CircleGrid::new(256).unwrap();
        for n in 0..=8 {
            let r = ladder_consistency_check(n, q(0.5), &g, 1e-10).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn gram_examples() {
        let qq = q(0.5);
        let g = CircleGrid::new(256).unwrap();
        let (table, report) = szego_gram(5, qq, &g, 1e-10);
        assert!(report.passed, "{report:?}");
        assert!((table.entries[0][0].re - total_mass(qq)).abs() < 1e-12);
        for n in 1..=5 {
            let ratio = table.entries[n][n].re / table.entries[n - 1][n - 1].re;
            assert!((ratio - (1.0 - 0.5f64.powi(n as i32)) / 0.5).abs() < 1e-11);
        }
        assert!(table.entries[2][5].norm() < 1e-10);
    }

    #[test]
    fn triple_product_examples() {
        let g = CircleGrid::new(32).unwrap();
        for qv in [0.3, 0.5, 0.8] {
            let r = jacobi_triple_check(q(qv), &g, 1e-10).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(!jacobi_triple_base_q_check(q(qv), &g, 1e-10).unwrap().passed);
        }
    }

    #[test]
    fn weight_routes_agree() {
        let g = CircleGrid::new(64).unwrap();
        for qv in [0.2, 0.5, 0.8] {
            let r = weight_routes_check(q(qv), &g, 1e-12).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn rodrigues_rhs_is_polynomial() {
        let g = CircleGrid::new(256).unwrap();
        for n in 0..=6 {
            assert!(rodrigues_polynomiality_check(n, q(0.5), &g, 1e-10).passed);
        }
    }
}
