//! The biorthogonal rational functions `r_n(z; a, α, b, β | q)` and `s_n`, their
//! weight and total mass, ladder operators, the Sears transformation and the
//! `I_{m,n}` recursion.
//!
//! `r_n` is the terminating balanced series
//! `4φ3(q^{-n}, abαβq^{n-1}, bq^{1/2}, bz; bα, bβ, abq^{1/2}z; q, q)` and
//! `s_n(z; a, α, b, β) = r_n(z; conj α, conj a, conj β, conj b)`.
//! In every inner product `conj(s_m(z))` is the conjugate of the value at a node.
//!
//! Pointwise ladder checks report `max |lhs - rhs| / max(1, max |rhs|)` over the
//! grid, so the residual is absolute for moderate values and relative once the
//! functions grow (large `n`, `q` near 1).

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circle::{compensated_sum, contour_mean, dq_apply, tq_apply, CircleGrid};
use crate::error::{Error, Result};
use crate::qcore::{
    dd_div, dd_real, dd_recip, from_dd, phi43_extended, phi43_terminating_conditioned, phi_extended, qmultipochhammer,
    qpochhammer, qpochhammer_extended, qpochhammer_inf, to_dd, ComplexDd, ExtendedSpec, Order, QParam,
    EXTENDED_EPSILON, INF_PRODUCT_TOL,
};
use crate::report::{GramTable, IdentityReport};
use twofloat::TwoFloat;

/// Nodes closer than this to a denominator zero are left out of residuals.
pub const POLE_EXCLUSION: f64 = 1e-6;

/// Minimum distance from 1 required of `bα, bβ, aα, aβ, abαβ` times `q^k`.
const DEGENERACY_EPS: f64 = 1e-12;

#[inline]
fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The parameters `(a, α, b, β)` and base `q` of the rational family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiorthoParams {
    pub a: Complex64,
    pub alpha: Complex64,
    pub b: Complex64,
    pub beta: Complex64,
    pub q: QParam,
}

impl fmt::Display for BiorthoParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a={}, alpha={}, b={}, beta={}, q={}", self.a, self.alpha, self.b, self.beta, self.q.value())
    }
}

impl BiorthoParams {
    /// Validates `|a|, |α|, |b|, |β| < 1` and that none of `bα, bβ, aα, aβ, abαβ`
    /// times a power of `q` equals 1.
    pub fn new(a: Complex64, alpha: Complex64, b: Complex64, beta: Complex64, q: QParam) -> Result<Self> {
        for (name, v) in [("a", a), ("alpha", alpha), ("b", b), ("beta", beta)] {
            if !(v.norm() < 1.0) {
                return Err(Error::InvalidParameters(format!("|{name}| = {} must be < 1", v.norm())));
            }
        }
        let products = [
            ("b*alpha", b * alpha),
            ("b*beta", b * beta),
            ("a*alpha", a * alpha),
            ("a*beta", a * beta),
            ("a*b*alpha*beta", a * b * alpha * beta),
        ];
        for (name, x) in products {
            let mut t = x;
            for k in 0..64 {
                if (1.0 - t).norm() < DEGENERACY_EPS {
                    return Err(Error::InvalidParameters(format!("{name} * q^{k} = 1")));
                }
                t *= q.value();
            }
        }
        Ok(Self { a, alpha, b, beta, q })
    }

    pub fn real(a: f64, alpha: f64, b: f64, beta: f64, q: f64) -> Result<Self> {
        Self::new(c(a), c(alpha), c(b), c(beta), QParam::new(q)?)
    }

    /// `(ka·a, kα·α, kb·b, kβ·β)`, revalidated.
    pub fn scaled(&self, ka: f64, kalpha: f64, kb: f64, kbeta: f64) -> Result<Self> {
        Self::new(self.a * ka, self.alpha * kalpha, self.b * kb, self.beta * kbeta, self.q)
    }

    /// `(a, qα, b, qβ)`.
    pub fn raise_alpha_beta(&self) -> Self {
        let q = self.q.value();
        self.scaled(1.0, q, 1.0, q).expect("shrinking parameters stays valid")
    }

    /// `(qa, α, qb, β)`.
    pub fn raise_a_b(&self) -> Self {
        let q = self.q.value();
        self.scaled(q, 1.0, q, 1.0).expect("shrinking parameters stays valid")
    }

    /// `(conj α, conj a, conj β, conj b)`: the parameters that turn `r_n` into `s_n`.
    pub fn dual(&self) -> Self {
        Self { a: self.alpha.conj(), alpha: self.a.conj(), b: self.beta.conj(), beta: self.b.conj(), q: self.q }
    }

    /// `(α, a, β, b)`: `w(1/z; a, α, b, β) = w(z; α, a, β, b)`.
    pub fn swapped(&self) -> Self {
        Self { a: self.alpha, alpha: self.a, b: self.beta, beta: self.b, q: self.q }
    }

    fn abab(&self) -> Complex64 {
        self.a * self.b * self.alpha * self.beta
    }

    /// `r_n(z)`.
    pub fn r(&self, n: usize, z: Complex64) -> Result<Complex64> {
        self.r_terms(n, z).map(|(value, _)| value)
    }

    /// `r_n(z)` together with `Σ |term_k|` of its defining series.
    pub fn r_terms(&self, n: usize, z: Complex64) -> Result<(Complex64, f64)> {
        let [a, alpha, b, beta, z] = [self.a, self.alpha, self.b, self.beta, z].map(to_dd);
        let qd = TwoFloat::from(self.q.value());
        let h = qd.sqrt();
        let mut top = a * b * alpha * beta;
        if n == 0 {
            top = top.scale(dd_recip(qd));
        }
        for _ in 1..n {
            top = top.scale(qd);
        }
        phi43_extended(n, [top, b.scale(h), b * z], [b * alpha, b * beta, (a * b * z).scale(h)], self.q)
    }

    /// `s_n(z)`.
    pub fn s(&self, n: usize, z: Complex64) -> Result<Complex64> {
        self.dual().r(n, z)
    }

    /// `w_c(z; a, α, b, β | q)`.
    pub fn weight(&self, z: Complex64, tol: f64) -> Complex64 {
        let q = self.q;
        let h = q.sqrt();
        let zi = z.inv();
        let num = qpochhammer_inf(z * h, q, tol)
            * qpochhammer_inf(zi * h, q, tol)
            * qpochhammer_inf(self.a * self.b * h * z, q, tol)
            * qpochhammer_inf(self.alpha * self.beta * h * zi, q, tol);
        let den = qpochhammer_inf(self.a * z, q, tol)
            * qpochhammer_inf(self.alpha * zi, q, tol)
            * qpochhammer_inf(self.b * z, q, tol)
            * qpochhammer_inf(self.beta * zi, q, tol);
        num / den
    }

    /// Closed-form total mass
    /// `(aq^{1/2}, αq^{1/2}, bq^{1/2}, βq^{1/2}, abαβ; q)_∞ / (q, aα, bα, aβ, bβ; q)_∞`.
    pub fn kappa(&self, tol: f64) -> Result<Complex64> {
        let q = self.q;
        let h = q.sqrt();
        let num = [self.a * h, self.alpha * h, self.b * h, self.beta * h, self.abab()]
            .iter()
            .map(|&x| qpochhammer_inf(x, q, tol))
            .product::<Complex64>();
        let den = [c(q.value()), self.a * self.alpha, self.b * self.alpha, self.a * self.beta, self.b * self.beta]
            .iter()
            .map(|&x| qpochhammer_inf(x, q, tol))
            .product::<Complex64>();
        if den.norm() < 1e-300 {
            return Err(Error::DegenerateParameters(format!("denominator of the total mass vanishes for {self}")));
        }
        Ok(num / den)
    }

    /// Diagonal of the biorthogonality relation:
    /// `κ (q, aα, abαβq^{n-1}; q)_n (bβ)^n / ((bβ; q)_n (abαβ; q)_{2n})`.
    pub fn norm_closed(&self, n: usize) -> Result<Complex64> {
        let q = self.q;
        let abab = self.abab();
        let num =
            qmultipochhammer(&[c(q.value()), self.a * self.alpha, abab * q.powi(n as i32 - 1)], q, Order::Finite(n));
        let den = qpochhammer(self.b * self.beta, q, n) * qpochhammer(abab, q, 2 * n);
        Ok(self.kappa(INF_PRODUCT_TOL)? * num * (self.b * self.beta).powi(n as i32) / den)
    }

    /// Distance from 1 of the nearest denominator factor of `w`, `r_n` or `s_n` at `z`.
    pub fn clearance(&self, n: usize, z: Complex64) -> f64 {
        let q = self.q.value();
        let h = self.q.sqrt();
        let zi = z.inv();
        let mut worst = f64::INFINITY;
        for x in [self.a * z, self.alpha * zi, self.b * z, self.beta * zi] {
            let mut t = x;
            while t.norm() >= 0.5 {
                worst = worst.min((1.0 - t).norm());
                t *= q;
            }
            worst = worst.min((1.0 - t).norm());
        }
        let dual = self.dual();
        for x in [self.a * self.b * h * z, dual.a * dual.b * h * z] {
            let mut t = x;
            for _ in 0..n {
                worst = worst.min((1.0 - t).norm());
                t *= q;
            }
        }
        worst
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pair = |v: Complex64| json!([v.re, v.im]);
        json!({
            "a": pair(self.a),
            "alpha": pair(self.alpha),
            "b": pair(self.b),
            "beta": pair(self.beta),
            "q": self.q.value(),
        })
    }

    /// Random parameters with magnitudes uniform in `[0.05, 0.6]` and uniform phases.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, q: QParam) -> Self {
        loop {
            let mut draw = || {
                let r: f64 = rng.gen_range(0.05..=0.6);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(r, t)
            };
            let (a, alpha, b, beta) = (draw(), draw(), draw(), draw());
            if let Ok(p) = Self::new(a, alpha, b, beta, q) {
                return p;
            }
        }
    }

    /// Random parameters with `α = conj(a)`, `β = conj(b)`.
    pub fn random_conjugate<R: Rng + ?Sized>(rng: &mut R, q: QParam) -> Self {
        let p = Self::random(rng, q);
        Self::new(p.a, p.a.conj(), p.b, p.b.conj(), q).expect("conjugate pairing keeps validity")
    }
}

/// `r_n(z; p)`.
pub fn r_fn(n: usize, z: Complex64, p: &BiorthoParams) -> Result<Complex64> {
    p.r(n, z)
}

/// `s_n(z; p)`.
pub fn s_fn(n: usize, z: Complex64, p: &BiorthoParams) -> Result<Complex64> {
    p.s(n, z)
}

/// `w_c(z; p)`.
pub fn biortho_weight(z: Complex64, p: &BiorthoParams, tol: f64) -> Complex64 {
    p.weight(z, tol)
}

/// Closed-form total mass `κ(a, α, b, β)`.
pub fn kappa_closed(p: &BiorthoParams, tol: f64) -> Result<Complex64> {
    p.kappa(tol)
}

/// `(1/2πi) ∮ w_c(z; p) dz/z` by quadrature.
pub fn kappa_quadrature(p: &BiorthoParams, grid: &CircleGrid) -> Complex64 {
    contour_mean(|z| p.weight(z, INF_PRODUCT_TOL), grid)
}

fn nan() -> Complex64 {
    Complex64::new(f64::NAN, f64::NAN)
}

/// `max |lhs - rhs| / max(1, max |rhs|)` over nodes not excluded, where
/// `sides` returns `(lhs, rhs)`; also returns the number of excluded nodes.
fn residual_excluding(
    grid: &CircleGrid,
    excluded: impl Fn(Complex64) -> bool,
    sides: impl Fn(Complex64) -> (Complex64, Complex64),
) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    let mut skipped = 0;
    for &z in grid.nodes() {
        if excluded(z) {
            skipped += 1;
            continue;
        }
        let (lhs, rhs) = sides(z);
        let v = (lhs - rhs).norm();
        if v.is_nan() {
            return (f64::NAN, skipped);
        }
        worst = worst.max(v);
        scale = scale.max(rhs.norm());
    }
    (worst / scale, skipped)
}

fn near_pole(sets: &[(&BiorthoParams, usize)], z: Complex64) -> bool {
    let q = sets[0].0.q.value();
    sets.iter().any(|(p, n)| p.clearance(*n, z).min(p.clearance(*n, z * q)) < POLE_EXCLUSION)
}

fn finish(
    report: IdentityReport,
    skipped: usize,
    (n, p, grid): (usize, &BiorthoParams, &CircleGrid),
) -> IdentityReport {
    let report = if skipped > 0 {
        report.with_note(format!("{skipped} node(s) within {POLE_EXCLUSION:e} of a pole excluded"))
    } else {
        report
    };
    flag_cancellation(report, n, p, grid)
}

/// Estimated rounding error of `r_k` and `s_k`, `k <= n`, on the grid, on the
/// same scale as the ladder residuals: `ε Σ |term| / max(1, max |value|)` with `ε` the
/// double-double unit roundoff [`EXTENDED_EPSILON`].
pub fn rounding_estimate(n: usize, p: &BiorthoParams, grid: &CircleGrid) -> f64 {
    let dual = p.dual();
    let mut worst: f64 = 0.0;
    for k in 0..=n {
        for set in [p, &dual] {
            let mut magnitude: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for &z in grid.nodes() {
                match set.r_terms(k, z) {
                    Ok((value, m)) => {
                        magnitude = magnitude.max(m);
                        scale = scale.max(value.norm());
                    }
                    Err(_) => return f64::INFINITY,
                }
            }
            worst = worst.max(magnitude / scale);
        }
    }
    worst * EXTENDED_EPSILON
}

/// Adds a note when series cancellation alone could account for a residual
/// of `tol / 10` or more.
fn flag_cancellation(report: IdentityReport, n: usize, p: &BiorthoParams, grid: &CircleGrid) -> IdentityReport {
    let estimate = rounding_estimate(n, p, grid);
    if estimate * 10.0 >= report.tolerance {
        report.with_note(format!("series cancellation: estimated rounding error {estimate:.1e} in r_n, s_n"))
    } else {
        report
    }
}

/// Grid values of `w`, `r_n` and `s_n` reused across Gram entries.
struct Sampled {
    weight: Vec<Complex64>,
    r: Vec<Vec<Complex64>>,
    s_conj: Vec<Vec<Complex64>>,
}

impl Sampled {
    fn new(p: &BiorthoParams, max_n: usize, grid: &CircleGrid) -> Self {
        let nodes = grid.nodes();
        let weight = nodes.iter().map(|&z| p.weight(z, INF_PRODUCT_TOL)).collect();
        let r = (0..=max_n).map(|n| nodes.iter().map(|&z| p.r(n, z).unwrap_or_else(|_| nan())).collect()).collect();
        let s_conj =
            (0..=max_n).map(|n| nodes.iter().map(|&z| p.s(n, z).unwrap_or_else(|_| nan()).conj()).collect()).collect();
        Self { weight, r, s_conj }
    }

    /// `I_{m,n}`: mean of `w r_n conj(s_m)`.
    fn pairing(&self, m: usize, n: usize) -> Complex64 {
        let len = self.weight.len();
        compensated_sum((0..len).map(|j| self.weight[j] * self.r[n][j] * self.s_conj[m][j])) / len as f64
    }
}

/// `G[m][n] = (1/2πi) ∮ w r_n conj(s_m) dz/z`, judged against the closed-form
/// diagonal; the residual is the larger of the worst off-diagonal magnitude and
/// the worst absolute diagonal error.
pub fn biortho_gram(
    max_n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
) -> Result<(GramTable, IdentityReport)> {
    let sampled = Sampled::new(p, max_n, grid);
    let size = max_n + 1;
    let mut entries = vec![vec![c(0.0); size]; size];
    let mut expected = entries.clone();
    for (m, row) in entries.iter_mut().enumerate() {
        for (n, slot) in row.iter_mut().enumerate() {
            *slot = sampled.pairing(m, n);
        }
        expected[m][m] = p.norm_closed(m)?;
    }
    let table = GramTable { entries, expected };
    let off = table.max_off_diagonal();
    let diag = table.max_diagonal_abs_error();
    let scale = table.expected_scale();
    let report = IdentityReport::new(format!("biortho.gram[max_n={max_n}]"), off.max(diag) / scale, tol, grid.len())
        .with_params(p.to_json())
        .with_note(format!(
            "max off-diagonal {off:.3e}; max diagonal error {diag:.3e} (relative {:.3e})",
            table.max_diagonal_rel_error()
        ));
    Ok((table, flag_cancellation(report, max_n, p, grid)))
}

/// `|κ_closed - κ_quadrature| / |κ_closed|`.
pub fn kappa_check(p: &BiorthoParams, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    let closed = p.kappa(INF_PRODUCT_TOL)?;
    let quad = kappa_quadrature(p, grid);
    let residual = (closed - quad).norm() / closed.norm();
    Ok(IdentityReport::new("biortho.total_mass", residual, tol, grid.len())
        .with_params(p.to_json())
        .with_note(format!("closed {closed:.15e}, quadrature {quad:.15e} (relative residual)")))
}

/// Coefficient of the lowering identity:
/// `b q^{1-n} (1 - aq^{1/2})(1 - bq^{1/2})(1 - q^n)(1 - abαβq^{n-1}) / ((1 - q)(1 - bα)(1 - bβ))`.
pub fn lowering_coefficient(n: usize, p: &BiorthoParams) -> Complex64 {
    let q = p.q.value();
    let h = p.q.sqrt();
    let ni = n as i32;
    p.b * q.powi(1 - ni) * (1.0 - p.a * h) * (1.0 - p.b * h) * (1.0 - q.powi(ni)) * (1.0 - p.abab() * q.powi(ni - 1))
        / ((1.0 - q) * (1.0 - p.b * p.alpha) * (1.0 - p.b * p.beta))
}

/// Which coefficient the raising identity is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RaisingCoefficient {
    /// `(1 - bα)(1 - bβ/q) / ((1 - q) b)`.
    AsPrinted,
    /// `(1 - bα)(1 - bβ) / ((1 - q) b)`, the factor used in the `I_{m,n}` recursion.
    Recursion,
}

impl RaisingCoefficient {
    pub fn value(self, p: &BiorthoParams) -> Complex64 {
        let q = p.q.value();
        let second = match self {
            Self::AsPrinted => 1.0 - p.b * p.beta / q,
            Self::Recursion => 1.0 - p.b * p.beta,
        };
        (1.0 - p.b * p.alpha) * second / ((1.0 - q) * p.b)
    }

    fn label(self) -> &'static str {
        match self {
            Self::AsPrinted => "(1-b*alpha)(1-b*beta/q)",
            Self::Recursion => "(1-b*alpha)(1-b*beta)",
        }
    }
}

/// `(x; q)_2` at `x`.
fn poch2(x: Complex64, q: f64) -> Complex64 {
    (1.0 - x) * (1.0 - x * q)
}

/// `(abq^{1/2}z; q)_2 D_q r_n(z; a, α, b, β) = C_n r_{n-1}(z; qa, α, qb, β)`.
pub fn lowering_biortho_check(n: usize, p: &BiorthoParams, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    lowering_with_prefactor(n, p, grid, tol, p.a * p.b, "biortho.lowering")
}

fn lowering_with_prefactor(
    n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
    prefactor_param: Complex64,
    name: &str,
) -> Result<IdentityReport> {
    if n == 0 {
        return Err(Error::Precondition("lowering needs n >= 1".into()));
    }
    let q = p.q.value();
    let h = p.q.sqrt();
    let lowered = p.raise_a_b();
    let coeff = lowering_coefficient(n, p);
    let dr = dq_apply(|z| p.r(n, z).unwrap_or_else(|_| nan()), p.q);
    let (residual, skipped) = residual_excluding(
        grid,
        |z| near_pole(&[(p, n), (&lowered, n)], z),
        |z| {
            let lhs = poch2(prefactor_param * h * z, q) * dr(z);
            let rhs = coeff * lowered.r(n - 1, z).unwrap_or_else(|_| nan());
            (lhs, rhs)
        },
    );
    Ok(finish(
        IdentityReport::new(format!("{name}[n={n}]"), residual, tol, grid.len()).with_params(p.to_json()),
        skipped,
        (n, p, grid),
    ))
}

/// Left-hand side of the raising identity as a circle function:
/// `T_q[(αβq^{1/2}/z; q)_2 w(z; a, qα, b, qβ) r_{n-1}(z; a, qα, b, qβ)]`.
fn raised(n: usize, p: &BiorthoParams) -> impl Fn(Complex64) -> Complex64 + '_ {
    let shifted = p.raise_alpha_beta();
    let q = p.q.value();
    let h = p.q.sqrt();
    let inner = move |u: Complex64| {
        poch2(p.alpha * p.beta * h / u, q)
            * shifted.weight(u, INF_PRODUCT_TOL)
            * shifted.r(n - 1, u).unwrap_or_else(|_| nan())
    };
    tq_apply(inner, p.q)
}

/// `T_q[(αβq^{1/2}/z;q)_2 w(z; a,qα,b,qβ) r_{n-1}(z; a,qα,b,qβ)] = K w(z; a,α,b,β) r_n(z; a,α,b,β)`
/// with `K` chosen by `coefficient`.
pub fn raising_biortho_check_with(
    n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
    coefficient: RaisingCoefficient,
) -> Result<IdentityReport> {
    if n == 0 {
        return Err(Error::Precondition("raising needs n >= 1".into()));
    }
    let shifted = p.raise_alpha_beta();
    let k = coefficient.value(p);
    let lhs = raised(n, p);
    let (residual, skipped) = residual_excluding(
        grid,
        |z| near_pole(&[(p, n), (&shifted, n)], z),
        |z| {
            let rhs = k * p.weight(z, INF_PRODUCT_TOL) * p.r(n, z).unwrap_or_else(|_| nan());
            (lhs(z), rhs)
        },
    );
    let name = match coefficient {
        RaisingCoefficient::AsPrinted => format!("biortho.raising[n={n}]"),
        RaisingCoefficient::Recursion => format!("biortho.raising[n={n}, recursion coefficient]"),
    };
    Ok(finish(
        IdentityReport::new(name, residual, tol, grid.len())
            .with_params(p.to_json())
            .with_note(format!("coefficient {} / ((1-q) b)", coefficient.label())),
        skipped,
        (n, p, grid),
    ))
}

/// The raising identity with the coefficient `(1 - bα)(1 - bβ/q) / ((1 - q) b)`.
pub fn raising_biortho_check(n: usize, p: &BiorthoParams, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    raising_biortho_check_with(n, p, grid, tol, RaisingCoefficient::AsPrinted)
}

/// Raise `r_{n-1}(a, qα, b, qβ)` to `r_n(a, α, b, β)` and lower it to
/// `r_{n-1}(qa, α, qb, β)`, against the product of the two coefficients.
pub fn ladder_closure_check(
    n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
    coefficient: RaisingCoefficient,
) -> Result<IdentityReport> {
    if n == 0 {
        return Err(Error::Precondition("ladder closure needs n >= 1".into()));
    }
    let q = p.q.value();
    let h = p.q.sqrt();
    let shifted = p.raise_alpha_beta();
    let lowered = p.raise_a_b();
    let lhs = raised(n, p);
    let up = |z: Complex64| lhs(z) / p.weight(z, INF_PRODUCT_TOL);
    let down = dq_apply(up, p.q);
    let scalar = coefficient.value(p) * lowering_coefficient(n, p);
    let (residual, skipped) = residual_excluding(
        grid,
        |z| near_pole(&[(p, n), (&shifted, n), (&lowered, n)], z),
        |z| {
            let composed = poch2(p.a * p.b * h * z, q) * down(z);
            (composed, scalar * lowered.r(n - 1, z).unwrap_or_else(|_| nan()))
        },
    );
    Ok(finish(
        IdentityReport::new(format!("biortho.ladder_closure[n={n}]"), residual, tol, grid.len())
            .with_params(p.to_json())
            .with_note(format!("raising coefficient {}", coefficient.label())),
        skipped,
        (n, p, grid),
    ))
}

/// One row of the ladder-variant discrepancy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub label: String,
    pub description: String,
    pub residual: f64,
    pub consistent: bool,
    pub note: String,
}

/// Measures alternative printed forms of the ladder operators against the
/// grid. Nothing here is asserted; every row is informational.
///
/// Rows:
/// - `lowering/ab`: prefactor `(abq^{1/2}z; q)_2` (reference)
/// - `lowering/alpha-beta`: prefactor `(αβq^{1/2}z; q)_2`, same coefficient
/// - `raising/printed`: coefficient `(1-bα)(1-bβ/q)/((1-q)b)`
/// - `raising/recursion`: coefficient `(1-bα)(1-bβ)/((1-q)b)`
/// - `L+/printed`: `(1/w(α,β)) T_q[(αβq^{-3/2}/z;q)_2 w(α,β) r_{n-1}(α,β)]`
///   against `(1-bα/q)(1-bβ/q)/((1-q)b) r_n(a, α/q, b, β/q)`
/// - `L+/renormalised`: same with `1/w(α/q, β/q)` in front
/// - `raising/printed relabelled`: coefficient `(1-bα/q)(1-bβ/q²)/((1-q)b)`
///   for the `L+/renormalised` operator, i.e. the printed raising coefficient
///   after `α → α/q`, `β → β/q`
pub fn variant_reconciliation(n: usize, p: &BiorthoParams, grid: &CircleGrid, tol: f64) -> Result<Vec<VariantRow>> {
    if n == 0 {
        return Err(Error::Precondition("variant reconciliation needs n >= 1".into()));
    }
    let mut rows = Vec::new();
    let row = |label: &str, description: &str, residual: f64, note: String| VariantRow {
        label: label.into(),
        description: description.into(),
        residual,
        consistent: residual < tol,
        note,
    };

    let lo_ab = lowering_with_prefactor(n, p, grid, tol, p.a * p.b, "lowering")?;
    rows.push(row("lowering/ab", "(ab q^1/2 z;q)_2 D_q r_n", lo_ab.residual, lo_ab.notes));
    let lo_ab2 = lowering_with_prefactor(n, p, grid, tol, p.alpha * p.beta, "lowering")?;
    rows.push(row("lowering/alpha-beta", "(alpha beta q^1/2 z;q)_2 D_q r_n", lo_ab2.residual, lo_ab2.notes));

    for (label, coeff) in
        [("raising/printed", RaisingCoefficient::AsPrinted), ("raising/recursion", RaisingCoefficient::Recursion)]
    {
        let r = raising_biortho_check_with(n, p, grid, tol, coeff)?;
        rows.push(row(label, "T_q[(alpha beta q^1/2/z;q)_2 w(a,q alpha,b,q beta) r_{n-1}]", r.residual, r.notes));
    }

    let q = p.q.value();
    match p.scaled(1.0, 1.0 / q, 1.0, 1.0 / q) {
        Ok(down) => {
            let h = p.q.sqrt();
            let inner = |u: Complex64| {
                poch2(p.alpha * p.beta * h / (q * q * u), q)
                    * p.weight(u, INF_PRODUCT_TOL)
                    * p.r(n - 1, u).unwrap_or_else(|_| nan())
            };
            let t = tq_apply(inner, p.q);
            let k48 = (1.0 - p.b * p.alpha / q) * (1.0 - p.b * p.beta / q) / ((1.0 - q) * p.b);
            let k_relabelled = (1.0 - p.b * p.alpha / q) * (1.0 - p.b * p.beta / (q * q)) / ((1.0 - q) * p.b);
            let excluded = |z: Complex64| near_pole(&[(p, n), (&down, n)], z);
            let (printed, skipped) = residual_excluding(grid, excluded, |z| {
                let lhs = t(z) / p.weight(z, INF_PRODUCT_TOL);
                (lhs, k48 * down.r(n, z).unwrap_or_else(|_| nan()))
            });
            let note = if skipped > 0 { format!("{skipped} node(s) excluded") } else { String::new() };
            rows.push(row("L+/printed", "(1/w(a,alpha,b,beta)) T_q[(alpha beta q^-3/2/z;q)_2 w r_{n-1}] vs (1-b alpha/q)(1-b beta/q)/((1-q)b) r_n(a,alpha/q,b,beta/q)", printed, note.clone()));
            let (renorm, _) = residual_excluding(grid, excluded, |z| {
                let lhs = t(z) / down.weight(z, INF_PRODUCT_TOL);
                (lhs, k48 * down.r(n, z).unwrap_or_else(|_| nan()))
            });
            rows.push(row(
                "L+/renormalised",
                "(1/w(a,alpha/q,b,beta/q)) T_q[...] vs (1-b alpha/q)(1-b beta/q)/((1-q)b) r_n(a,alpha/q,b,beta/q)",
                renorm,
                note.clone(),
            ));
            let (relabelled, _) = residual_excluding(grid, excluded, |z| {
                let lhs = t(z) / down.weight(z, INF_PRODUCT_TOL);
                (lhs, k_relabelled * down.r(n, z).unwrap_or_else(|_| nan()))
            });
            rows.push(row(
                "raising/printed relabelled",
                "(1/w(a,alpha/q,b,beta/q)) T_q[...] vs (1-b alpha/q)(1-b beta/q^2)/((1-q)b) r_n(a,alpha/q,b,beta/q)",
                relabelled,
                note,
            ));
        }
        Err(e) => {
            for label in ["L+/printed", "L+/renormalised", "raising/printed relabelled"] {
                rows.push(row(label, "needs alpha/q and beta/q inside the unit disk", f64::NAN, e.to_string()));
            }
        }
    }
    Ok(rows)
}

/// Rows of [`variant_reconciliation`] as informational reports.
pub fn variant_reports(n: usize, rows: &[VariantRow], tol: f64, grid_size: usize) -> Vec<IdentityReport> {
    rows.iter()
        .map(|r| {
            IdentityReport::new(format!("biortho.variant[{}; n={n}]", r.label), r.residual, tol, grid_size)
                .with_note(&r.description)
                .with_note(&r.note)
                .informational()
        })
        .collect()
}

/// Parameters of a terminating balanced `4φ3(q^{-n}, A, B, C; D, E, F; q, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearsParams {
    pub n: usize,
    pub upper: [Complex64; 3],
    pub lower: [Complex64; 3],
    pub q: QParam,
}

impl SearsParams {
    /// Checks `ABC q^{1-n} = DEF` to `1e-12` relative.
    pub fn new(n: usize, upper: [Complex64; 3], lower: [Complex64; 3], q: QParam) -> Result<Self> {
        let lhs = upper[0] * upper[1] * upper[2] * q.powi(1 - n as i32);
        let rhs = lower[0] * lower[1] * lower[2];
        if (lhs - rhs).norm() > 1e-12 * lhs.norm().max(rhs.norm()) {
            return Err(Error::UnbalancedParameters { lhs, rhs });
        }
        Ok(Self { n, upper, lower, q })
    }

    /// Parameters of the transformed series, and the prefactor
    /// `(E/A, F/A; q)_n A^n / (E, F; q)_n` that multiplies it.
    pub fn transformed(&self) -> (Self, Complex64) {
        let (next, prefactor) = self.extended().transformed();
        (next.rounded(), prefactor)
    }

    fn extended(&self) -> ExtendedSears {
        ExtendedSears { n: self.n, upper: self.upper.map(to_dd), lower: self.lower.map(to_dd), q: self.q }
    }

    /// `Σ |term_k| · ε / max(1, |sum|)` with `ε` = [`EXTENDED_EPSILON`], comparable with
    /// the Sears residual.
    pub fn rounding_estimate(&self) -> f64 {
        match phi43_terminating_conditioned(self.n, self.upper, self.lower, self.q) {
            Ok((sum, magnitude)) => magnitude / sum.norm().max(1.0) * EXTENDED_EPSILON,
            Err(_) => f64::INFINITY,
        }
    }

    /// The series summed through the generic `phi` routine.
    pub fn sum(&self) -> Result<Complex64> {
        self.extended().sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pair = |v: Complex64| json!([v.re, v.im]);
        json!({
            "n": self.n,
            "upper": self.upper.iter().map(|&v| pair(v)).collect::<Vec<_>>(),
            "lower": self.lower.iter().map(|&v| pair(v)).collect::<Vec<_>>(),
            "q": self.q.value(),
        })
    }

    /// A random balanced draw. `A, B, C, D` have magnitudes uniform in
    /// `[0.2, 0.9]` and uniform phases; `E` and `F` split the balance
    /// condition `EF = ABC q^{1-n} / D` around its geometric mean (the ratio
    /// `|E| / |F|` is uniform in `[1/4, 4]`). Draws that bring any denominator
    /// factor within 0.05 of zero are redrawn.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, q: QParam) -> Self {
        let qv = q.value();
        loop {
            let mut draw = |lo: f64, hi: f64| {
                let r: f64 = rng.gen_range(lo..=hi);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(r, t)
            };
            let (a, b, cc, d) = (draw(0.2, 0.9), draw(0.2, 0.9), draw(0.2, 0.9), draw(0.2, 0.9));
            let product = a * b * cc * qv.powi(1 - n as i32) / d;
            let split = draw(0.5, 2.0);
            let e = product.sqrt() * split;
            let f = product / e;
            let shift = a * qv.powi(1 - n as i32);
            let denominators = [d, e, f, shift / e, shift / f];
            let clear = denominators.iter().all(|&x| {
                let mut t = x;
                (0..n).all(|_| {
                    let ok = (1.0 - t).norm() > 0.05;
                    t *= qv;
                    ok
                })
            });
            if clear {
                if let Ok(p) = Self::new(n, [a, b, cc], [d, e, f], q) {
                    return p;
                }
            }
        }
    }
}

/// Sears parameters kept in double-double precision, so that chained
/// transformations do not round their arguments.
struct ExtendedSears {
    n: usize,
    upper: [ComplexDd; 3],
    lower: [ComplexDd; 3],
    q: QParam,
}

impl ExtendedSears {
    fn transformed(&self) -> (Self, Complex64) {
        let [a, b, cc] = self.upper;
        let [d, e, f] = self.lower;
        let (n, q) = (self.n, self.q);
        let shift = a.scale(dd_recip(TwoFloat::from(q.value()).powi(n as i32 - 1)));
        let mut an = dd_real(1.0);
        for _ in 0..n {
            an *= a;
        }
        let prefactor = dd_div(
            qpochhammer_extended(dd_div(e, a), q, n) * qpochhammer_extended(dd_div(f, a), q, n) * an,
            qpochhammer_extended(e, q, n) * qpochhammer_extended(f, q, n),
        );
        let next =
            Self { n, upper: [a, dd_div(d, b), dd_div(d, cc)], lower: [d, dd_div(shift, e), dd_div(shift, f)], q };
        (next, from_dd(prefactor))
    }

    fn sum(&self) -> Result<Complex64> {
        let q = self.q;
        let mut numerator = vec![dd_real(1.0).scale(dd_recip(TwoFloat::from(q.value()).powi(self.n as i32)))];
        numerator.extend_from_slice(&self.upper);
        let spec = ExtendedSpec { numerator, denominator: self.lower.to_vec(), q, argument: dd_real(q.value()) };
        phi_extended(&spec, self.n + 1, 0.0)
    }

    fn rounded(&self) -> SearsParams {
        SearsParams { n: self.n, upper: self.upper.map(from_dd), lower: self.lower.map(from_dd), q: self.q }
    }
}

/// Both sides of the Sears transformation summed independently.
///
/// Residual: `|L - R| / max(1, |L|)`.
pub fn sears_check(params: &SearsParams, tol: f64) -> Result<IdentityReport> {
    let lhs = params.sum()?;
    let (t, prefactor) = params.extended().transformed();
    let rhs = prefactor * t.sum()?;
    let t = t.rounded();
    let residual = (lhs - rhs).norm() / lhs.norm().max(1.0);
    let report = IdentityReport::new(format!("sears[n={}]", params.n), residual, tol, 0)
        .with_params(params.to_json())
        .with_note(format!("lhs {lhs:.12e}, rhs {rhs:.12e}"));
    let estimate = params.rounding_estimate().max(t.rounding_estimate());
    Ok(if estimate * 10.0 >= tol {
        report.with_note(format!("series cancellation: estimated rounding error {estimate:.1e}"))
    } else {
        report
    })
}

/// Applying the transformation twice returns the original series.
pub fn sears_self_inverse_check(params: &SearsParams, tol: f64) -> Result<IdentityReport> {
    let lhs = params.sum()?;
    let (once, p1) = params.extended().transformed();
    let (twice, p2) = once.transformed();
    let rhs = p1 * p2 * twice.sum()?;
    let twice = twice.rounded();
    let drift = twice
        .upper
        .iter()
        .chain(&twice.lower)
        .zip(params.upper.iter().chain(&params.lower))
        .map(|(x, y)| (x - y).norm() / y.norm())
        .fold(0.0, f64::max);
    let residual = ((lhs - rhs).norm() / lhs.norm().max(1.0)).max(drift);
    Ok(IdentityReport::new(format!("sears.self_inverse[n={}]", params.n), residual, tol, 0)
        .with_params(params.to_json()))
}

/// `I_{m,n} = (1/2πi) ∮ w r_n conj(s_m) dz/z` by quadrature.
pub fn imn_quadrature(m: usize, n: usize, p: &BiorthoParams, grid: &CircleGrid) -> Complex64 {
    contour_mean(
        |z| {
            p.weight(z, INF_PRODUCT_TOL)
                * p.r(n, z).unwrap_or_else(|_| nan())
                * p.s(m, z).unwrap_or_else(|_| nan()).conj()
        },
        grid,
    )
}

/// One-step recursion coefficient relating `I_{m,n}(a,α,b,β)` to
/// `I_{m-1,n-1}(a, qα, b, qβ)`.
pub fn recursion_coefficient(m: usize, p: &BiorthoParams) -> Complex64 {
    let q = p.q.value();
    let h = p.q.sqrt();
    let mi = m as i32;
    let bb = p.b * p.beta;
    -bb * q * (1.0 - h * p.alpha) * (1.0 - h * p.beta) * (1.0 - q.powi(-mi)) * (1.0 - p.abab() * q.powi(mi - 1))
        / ((1.0 - p.alpha * p.b) * (1.0 - p.a * p.beta) * (1.0 - bb) * (1.0 - bb))
}

/// `|I_{m,n} - coeff · I_{m-1,n-1}(a, qα, b, qβ)|`.
pub fn imn_recursion_check(
    m: usize,
    n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
) -> Result<IdentityReport> {
    if m == 0 || n == 0 {
        return Err(Error::Precondition("recursion needs m, n >= 1".into()));
    }
    let lhs = imn_quadrature(m, n, p, grid);
    let rhs = recursion_coefficient(m, p) * imn_quadrature(m - 1, n - 1, &p.raise_alpha_beta(), grid);
    Ok(IdentityReport::new(format!("biortho.imn_recursion[m={m},n={n}]"), (lhs - rhs).norm(), tol, grid.len())
        .with_params(p.to_json())
        .with_note(format!("|I_mn| = {:.3e}", lhs.norm())))
}

/// Closed-form factor of the `n`-fold iterated recursion (`m >= n`):
/// `(-bβ)^n q^{n(n+1)/2} (q^{1/2}α, q^{1/2}β, q^{-m}, aαbβq^{m-1}; q)_n / (αb, aβ, bβ, bβ; q)_n`.
pub fn iterated_coefficient(m: usize, n: usize, p: &BiorthoParams) -> Complex64 {
    let q = p.q;
    let h = q.sqrt();
    let bb = p.b * p.beta;
    let num = qmultipochhammer(
        &[h * p.alpha, h * p.beta, c(q.powi(-(m as i32))), p.abab() * q.powi(m as i32 - 1)],
        q,
        Order::Finite(n),
    );
    let den = qmultipochhammer(&[p.alpha * p.b, p.a * p.beta, bb, bb], q, Order::Finite(n));
    (-bb).powi(n as i32) * q.powf((n * (n + 1)) as f64 / 2.0) * num / den
}

/// Iterated recursion against a direct `I_{m,n}` (relative residual), `m >= n`.
pub fn imn_iterated_check(
    m: usize,
    n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
) -> Result<IdentityReport> {
    if m < n {
        return Err(Error::Precondition("iterated recursion needs m >= n".into()));
    }
    let qn = p.q.powi(n as i32);
    let shifted = p.scaled(1.0, qn, 1.0, qn)?;
    let direct = imn_quadrature(m, n, p, grid);
    let chained = iterated_coefficient(m, n, p) * imn_quadrature(m - n, 0, &shifted, grid);
    let scale = direct.norm().max(chained.norm());
    let residual = if m == n { (direct - chained).norm() / scale } else { (direct - chained).norm() };
    Ok(IdentityReport::new(format!("biortho.imn_iterated[m={m},n={n}]"), residual, tol, grid.len())
        .with_params(p.to_json())
        .with_note(if m == n { "relative residual" } else { "absolute residual" }))
}

/// Which total-mass arguments to use in the closed form of
/// `I_{0,0}(a, q^nα, b, q^nβ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaReading {
    /// `κ(a, α, b, β)`.
    Full,
    /// `κ(a, α, b, α)`.
    RepeatedAlpha,
}

/// `κ(·) (aα, bα, aβ, bβ; q)_n / ((q^{1/2}α, q^{1/2}β; q)_n (abαβ; q)_{2n})`.
pub fn i00_closed(n: usize, p: &BiorthoParams, reading: KappaReading) -> Result<Complex64> {
    let q = p.q;
    let h = q.sqrt();
    let kappa = match reading {
        KappaReading::Full => p.kappa(INF_PRODUCT_TOL)?,
        KappaReading::RepeatedAlpha => BiorthoParams::new(p.a, p.alpha, p.b, p.alpha, q)?.kappa(INF_PRODUCT_TOL)?,
    };
    let num = qmultipochhammer(&[p.a * p.alpha, p.b * p.alpha, p.a * p.beta, p.b * p.beta], q, Order::Finite(n));
    let den = qmultipochhammer(&[h * p.alpha, h * p.beta], q, Order::Finite(n)) * qpochhammer(p.abab(), q, 2 * n);
    Ok(kappa * num / den)
}

/// Total mass at `(a, q^nα, b, q^nβ)` by quadrature against the closed form
/// under `reading` (relative residual).
pub fn i00_closed_check_with(
    n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
    reading: KappaReading,
) -> Result<IdentityReport> {
    let qn = p.q.powi(n as i32);
    let shifted = p.scaled(1.0, qn, 1.0, qn)?;
    let quad = kappa_quadrature(&shifted, grid);
    let closed = i00_closed(n, p, reading)?;
    let residual = (quad - closed).norm() / quad.norm();
    let label = match reading {
        KappaReading::Full => "kappa(a,alpha,b,beta)",
        KappaReading::RepeatedAlpha => "kappa(a,alpha,b,alpha)",
    };
    let report = IdentityReport::new(format!("biortho.i00_closed[n={n}; {label}]"), residual, tol, grid.len())
        .with_params(p.to_json());
    Ok(match reading {
        KappaReading::Full => report,
        KappaReading::RepeatedAlpha => report.informational(),
    })
}

/// Both readings of the closed form; the first report (full κ) gates, the
/// second is informational. The gating report's notes say which reading matched.
pub fn i00_closed_check(
    n: usize,
    p: &BiorthoParams,
    grid: &CircleGrid,
    tol: f64,
) -> Result<(IdentityReport, IdentityReport)> {
    let full = i00_closed_check_with(n, p, grid, tol, KappaReading::Full)?;
    let repeated = i00_closed_check_with(n, p, grid, tol, KappaReading::RepeatedAlpha)?;
    let verdict = match (full.passed, repeated.passed) {
        (true, true) => "both readings verify",
        (true, false) => "kappa(a,alpha,b,beta) verifies; kappa(a,alpha,b,alpha) does not",
        (false, true) => "only kappa(a,alpha,b,alpha) verifies",
        (false, false) => "neither reading verifies",
    };
    Ok((full.with_note(verdict), repeated))
}

/// Largest Laurent mode of `r_n` outside degrees `0..=n`; zero exactly when
/// `r_n` is a polynomial of degree at most `n`.
pub fn polynomiality_check(n: usize, p: &BiorthoParams, grid: &CircleGrid, tol: f64) -> IdentityReport {
    let values: Vec<Complex64> = grid.nodes().iter().map(|&z| p.r(n, z).unwrap_or_else(|_| nan())).collect();
    let half = grid.len() as i32 / 2;
    let mode =
        |k: i32| compensated_sum(grid.nodes().iter().zip(&values).map(|(&z, &v)| v * z.powi(-k))) / grid.len() as f64;
    let negative = (1..half).map(|k| mode(-k).norm()).fold(0.0, f64::max);
    let above = (n as i32 + 1..half).map(|k| mode(k).norm()).fold(0.0, f64::max);
    IdentityReport::new(format!("biortho.polynomiality[n={n}]"), negative.max(above), tol, grid.len())
        .with_params(p.to_json())
        .with_note(format!("negative modes {negative:.3e}; modes above degree {n} {above:.3e}"))
}

/// `w(1/z; a, α, b, β) = w(z; α, a, β, b)` on the grid (scaled residual). The notes record the
/// unswapped gap `max |w(1/z) - w(z)|`, which vanishes only when `a = α`, `b = β`.
pub fn weight_symmetry_check(p: &BiorthoParams, grid: &CircleGrid, tol: f64) -> IdentityReport {
    let swapped = p.swapped();
    let residual = grid.scaled_residual(|z| (p.weight(z.inv(), INF_PRODUCT_TOL), swapped.weight(z, INF_PRODUCT_TOL)));
    let literal = grid.max_over(|z| (p.weight(z.inv(), INF_PRODUCT_TOL) - p.weight(z, INF_PRODUCT_TOL)).norm());
    IdentityReport::new("biortho.weight_symmetry", residual, tol, grid.len())
        .with_params(p.to_json())
        .with_note(format!("max |w(1/z) - w(z)| without swapping parameters: {literal:.3e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(v: f64) -> QParam {
        QParam::new(v).unwrap()
    }

    fn base() -> BiorthoParams {
        BiorthoParams::real(0.3, 0.2, 0.4, 0.1, 0.5).unwrap()
    }

    fn grid() -> CircleGrid {
        CircleGrid::new(256).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(BiorthoParams::real(1.0, 0.2, 0.4, 0.1, 0.5).is_err());
        assert!(BiorthoParams::real(0.3, 0.2, 0.4, -1.2, 0.5).is_err());
        let err = BiorthoParams::real(0.3, 0.2, 0.4, 0.1, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidQ(_)));
        assert!(BiorthoParams::real(0.3, 0.2, 0.999, 0.1, 0.5).is_ok());
    }

    #[test]
    fn r_zero_is_one() {
        let p = base();
        let z = Complex64::from_polar(1.0, 0.3);
        assert_eq!(p.r(0, z).unwrap(), c(1.0));
        assert_eq!(p.s(0, z).unwrap(), c(1.0));
    }

    #[test]
    fn r_one_two_term_expansion() {
        let p = BiorthoParams::new(
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.25),
            Complex64::new(0.1, -0.4),
            Complex64::new(0.35, 0.05),
            q(0.6),
        )
        .unwrap();
        let z = Complex64::from_polar(1.0, 1.9);
        let qv: f64 = 0.6;
        let h = qv.sqrt();
        let abab = p.a * p.b * p.alpha * p.beta;
        let term = (1.0 - 1.0 / qv) * (1.0 - abab) * (1.0 - p.b * h) * (1.0 - p.b * z) * qv
            / ((1.0 - qv) * (1.0 - p.b * p.alpha) * (1.0 - p.b * p.beta) * (1.0 - p.a * p.b * h * z));
        assert!((p.r(1, z).unwrap() - (1.0 + term)).norm() < 1e-14);
    }

    #[test]
    fn s_is_r_with_mapped_parameters() {
        let p = base();
        let z = Complex64::from_polar(1.0, -0.8);
        let mapped = BiorthoParams::real(0.2, 0.3, 0.1, 0.4, 0.5).unwrap();
        for n in 0..5 {
            assert_eq!(p.s(n, z).unwrap(), mapped.r(n, z).unwrap());
        }
        let cp = BiorthoParams::random(&mut ChaCha8Rng::seed_from_u64(2), q(0.4));
        assert_eq!(cp.dual().dual(), cp);
    }

    #[test]
    fn zero_parameters_reduce_to_szego() {
        let p = BiorthoParams::real(0.0, 0.0, 0.0, 0.0, 0.5).unwrap();
        let g = CircleGrid::new(64).unwrap();
        for &z in g.nodes() {
            let w = crate::szego::szego_weight(z, q(0.5), INF_PRODUCT_TOL);
            assert!((p.weight(z, INF_PRODUCT_TOL) - w).norm() < 1e-14);
        }
        let k = p.kappa(INF_PRODUCT_TOL).unwrap();
        assert!((k.re - crate::szego::total_mass(q(0.5))).abs() < 1e-14);
    }

    #[test]
    fn kappa_matches_quadrature() {
        let g = grid();
        assert!(kappa_check(&base(), &g, 1e-10).unwrap().passed);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let cp = BiorthoParams::random_conjugate(&mut rng, q(0.5));
        let k = cp.kappa(INF_PRODUCT_TOL).unwrap();
        assert!(k.im.abs() < 1e-14 * k.norm());
        assert!(kappa_check(&cp, &g, 1e-10).unwrap().passed);
    }

    #[test]
    fn gram_small_cases() {
        let p = base();
        let (table, report) = biortho_gram(3, &p, &CircleGrid::new(512).unwrap(), 1e-10).unwrap();
        assert!(report.passed, "{report:?}");
        assert!((table.entries[0][0] - p.kappa(INF_PRODUCT_TOL).unwrap()).norm() < 1e-12);
        assert!(table.entries[1][2].norm() < 1e-10 && table.entries[2][1].norm() < 1e-10);
        assert!((table.entries[2][2] - p.norm_closed(2).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn lowering_cases() {
        let g = grid();
        assert!(lowering_biortho_check(0, &base(), &g, 1e-12).is_err());
        assert!(lowering_biortho_check(1, &base(), &g, 1e-12).unwrap().passed);
        let cp = BiorthoParams::random(&mut ChaCha8Rng::seed_from_u64(4), q(0.5));
        assert!(lowering_biortho_check(4, &cp, &g, 1e-10).unwrap().passed);
        let pastro = BiorthoParams::real(0.0, 0.0, 0.4, 0.1, 0.5).unwrap();
        assert!(lowering_biortho_check(3, &pastro, &g, 1e-11).unwrap().passed);
    }

    #[test]
    fn raising_coefficient_readings() {
        let g = grid();
        let p = base();
        for n in 1..=3 {
            let rec = raising_biortho_check_with(n, &p, &g, 1e-9, RaisingCoefficient::Recursion).unwrap();
            assert!(rec.passed, "{rec:?}");
            let printed = raising_biortho_check(n, &p, &g, 1e-9).unwrap();
            assert!(!printed.passed);
        }
    }

    #[test]
    fn raising_integrates_to_zero_on_the_left() {
        // T_q g integrates to -... : both sides must have equal contour means
        let g = grid();
        let p = base();
        let n = 2;
        let lhs = contour_mean(raised(n, &p), &g);
        let k = RaisingCoefficient::Recursion.value(&p);
        let rhs = contour_mean(|z| k * p.weight(z, INF_PRODUCT_TOL) * p.r(n, z).unwrap(), &g);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn closure_with_recursion_coefficient() {
        let g = grid();
        let p = base();
        for n in 1..=5 {
            let r = ladder_closure_check(n, &p, &g, 1e-8, RaisingCoefficient::Recursion).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn variants_table() {
        let g = grid();
        let rows = variant_reconciliation(2, &base(), &g, 1e-9).unwrap();
        let get = |l: &str| rows.iter().find(|r| r.label == l).unwrap();
        assert!(get("lowering/ab").consistent);
        assert!(!get("lowering/alpha-beta").consistent);
        assert!(!get("raising/printed").consistent);
        assert!(get("raising/recursion").consistent);
        assert!(get("L+/renormalised").consistent);
        assert!(!get("L+/printed").consistent);
        assert!(!get("raising/printed relabelled").consistent);
    }

    #[test]
    fn variants_coincide_when_ab_equals_alpha_beta() {
        let g = grid();
        let p = BiorthoParams::real(0.2, 0.4, 0.3, 0.15, 0.5).unwrap();
        let rows = variant_reconciliation(1, &p, &g, 1e-12).unwrap();
        let a = rows.iter().find(|r| r.label == "lowering/ab").unwrap();
        let b = rows.iter().find(|r| r.label == "lowering/alpha-beta").unwrap();
        assert!(a.consistent && b.consistent);
    }

    #[test]
    fn variants_report_out_of_disk_shift() {
        let g = CircleGrid::new(64).unwrap();
        let p = BiorthoParams::real(0.3, 0.7, 0.4, 0.1, 0.5).unwrap();
        let rows = variant_reconciliation(1, &p, &g, 1e-9).unwrap();
        assert!(rows.iter().find(|r| r.label == "L+/printed").unwrap().residual.is_nan());
    }

    #[test]
    fn sears_examples() {
        let qq = q(0.5);
        let trivial = SearsParams::new(0, [c(0.3), c(0.2), c(0.5)], [c(0.3), c(0.1), c(0.5)], qq).unwrap();
        let r = sears_check(&trivial, 1e-14).unwrap();
        assert!(r.passed, "{r:?}");
        let p = SearsParams::random(&mut ChaCha8Rng::seed_from_u64(1), 1, qq);
        let [a, b, cc] = p.upper;
        let [d, e, f] = p.lower;
        let two_term =
            1.0 + (1.0 - 2.0) * (1.0 - a) * (1.0 - b) * (1.0 - cc) * 0.5 / (0.5 * (1.0 - d) * (1.0 - e) * (1.0 - f));
        assert!((p.sum().unwrap() - two_term).norm() < 1e-14);
        assert!(sears_check(&p, 1e-13).unwrap().passed);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p5 = SearsParams::random(&mut rng, 5, qq);
        assert!(sears_check(&p5, 1e-10).unwrap().passed);
        assert!(sears_self_inverse_check(&p5, 1e-11).unwrap().passed);
    }

    #[test]
    fn sears_rejects_unbalanced() {
        let e = SearsParams::new(2, [c(0.3), c(0.2), c(0.5)], [c(0.3), c(0.1), c(0.5)], q(0.5));
        assert!(matches!(e, Err(Error::UnbalancedParameters { .. })));
    }

    #[test]
    fn imn_examples() {
        let g = CircleGrid::new(512).unwrap();
        let p = base();
        assert!((imn_quadrature(0, 0, &p, &g) - p.kappa(INF_PRODUCT_TOL).unwrap()).norm() < 1e-12);
        assert!(imn_quadrature(1, 2, &p, &g).norm() < 1e-10);
        assert!(imn_recursion_check(1, 1, &p, &g, 1e-10).unwrap().passed);
        let r21 = imn_recursion_check(2, 1, &p, &g, 1e-10).unwrap();
        assert!(r21.passed);
        assert!(imn_iterated_check(3, 3, &p, &g, 1e-9).unwrap().passed);
    }

    #[test]
    fn i00_readings() {
        let g = CircleGrid::new(512).unwrap();
        let p = base();
        let (full, repeated) = i00_closed_check(0, &p, &g, 1e-10).unwrap();
        assert!(full.passed && !repeated.passed);
        let (full, repeated) = i00_closed_check(1, &p, &g, 1e-10).unwrap();
        assert!(full.passed && !repeated.passed);
        let qv = 0.5;
        let shifted = p.scaled(1.0, qv, 1.0, qv).unwrap();
        let a = i00_closed(1, &p, KappaReading::Full).unwrap();
        let b = shifted.kappa(INF_PRODUCT_TOL).unwrap();
        assert!((a - b).norm() < 1e-13 * b.norm());
    }

    #[test]
    fn pastro_case_is_polynomial() {
        let g = grid();
        let p = BiorthoParams::real(0.0, 0.0, 0.4, 0.1, 0.5).unwrap();
        for n in 0..=5 {
            assert!(polynomiality_check(n, &p, &g, 1e-10).passed);
        }
        assert!(!polynomiality_check(2, &base(), &g, 1e-10).passed);
    }

    #[test]
    fn weight_symmetry() {
        let g = grid();
        let p = BiorthoParams::random(&mut ChaCha8Rng::seed_from_u64(8), q(0.5));
        assert!(weight_symmetry_check(&p, &g, 1e-12).passed);
        let sym = BiorthoParams::real(0.3, 0.3, 0.2, 0.2, 0.5).unwrap();
        let r = weight_symmetry_check(&sym, &g, 1e-12);
        assert!(r.passed);
        assert!(g.max_over(|z| (sym.weight(z.inv(), 1e-16) - sym.weight(z, 1e-16)).norm()) < 1e-12);
    }
}
