//! q-shifted factorials, basic hypergeometric series and the Jacobi theta sum.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Default truncation tolerance for infinite products.
pub const INF_PRODUCT_TOL: f64 = 1e-16;

/// Relative window inside which a numerator parameter is read as `q^{-n}`.
pub const TERMINATION_WINDOW: f64 = 1e-9;

/// Denominator factors below this magnitude are treated as exact zeros.
const POLE_EPS: f64 = 1e-14;

/// The base `q`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QParam(f64);

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q < 1.0 {
            Ok(Self(q))
        } else {
            Err(Error::InvalidQ(q))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }

    #[inline]
    pub fn powi(self, n: i32) -> f64 {
        self.0.powi(n)
    }

    #[inline]
    pub fn powf(self, x: f64) -> f64 {
        self.0.powf(x)
    }

    /// `q^2` as a base in its own right.
    pub fn squared(self) -> Self {
        Self(self.0 * self.0)
    }
}

impl TryFrom<f64> for QParam {
    type Error = Error;
    fn try_from(q: f64) -> Result<Self> {
        Self::new(q)
    }
}

impl From<QParam> for f64 {
    fn from(q: QParam) -> f64 {
        q.0
    }
}

/// Length of a q-shifted factorial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Finite(usize),
    Infinite,
}

/// `(a; q)_n = (1 - a)(1 - aq)...(1 - aq^{n-1})`, with `(a; q)_0 = 1`.
pub fn qpochhammer(a: Complex64, q: QParam, n: usize) -> Complex64 {
    let mut prod = Complex64::new(1.0, 0.0);
    let mut term = a;
    for _ in 0..n {
        prod *= 1.0 - term;
        term *= q.value();
    }
    prod
}

/// `(a; q)_∞` truncated at the first `K` with `|a| q^K < 1/2` and
/// `2 |a| q^K / (1 - q) < tol / 2`.
///
/// For `|x| <= 1/2`, `|log(1 - x)| <= 2|x|`, so the neglected tail satisfies
/// `|log ∏_{k>=K} (1 - a q^k)| <= 2 |a| q^K / (1 - q)` and the relative error of
/// the returned value is below `tol`.
pub fn qpochhammer_inf(a: Complex64, q: QParam, tol: f64) -> Complex64 {
    let qv = q.value();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut term = a;
    loop {
        let mag = term.norm();
        if !mag.is_finite() {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        if mag < 0.5 && 2.0 * mag / (1.0 - qv) < 0.5 * tol {
            return prod;
        }
        prod *= 1.0 - term;
        term *= qv;
    }
}

/// `(a_1, ..., a_k; q)_n`; the empty list gives 1.
pub fn qmultipochhammer(params: &[Complex64], q: QParam, order: Order) -> Complex64 {
    params
        .iter()
        .map(|&a| match order {
            Order::Finite(n) => qpochhammer(a, q, n),
            Order::Infinite => qpochhammer_inf(a, q, INF_PRODUCT_TOL),
        })
        .product()
}

/// Gaussian binomial `(q;q)_n / ((q;q)_k (q;q)_{n-k})`, zero for `k > n`.
pub fn q_binomial(n: usize, k: usize, q: QParam) -> f64 {
    if k > n {
        return 0.0;
    }
    // Multiplicative form keeps every factor in (0, 1].
    let k = k.min(n - k);
    let qv = q.value();
    let mut value = 1.0;
    for j in 0..k {
        value *= (1.0 - qv.powi((n - j) as i32)) / (1.0 - qv.powi((j + 1) as i32));
    }
    value
}

/// Parameters of an `_rφ_s(a_1..a_r; b_1..b_s; q, z)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<Complex64>,
    pub q: QParam,
    pub argument: Complex64,
}

impl PhiSpec {
    pub fn new(numerator: Vec<Complex64>, denominator: Vec<Complex64>, q: QParam, argument: Complex64) -> Self {
        Self { numerator, denominator, q, argument }
    }

    /// Smallest `n <= max_terms` such that some numerator parameter equals
    /// `q^{-n}` within the relative window [`TERMINATION_WINDOW`].
    pub fn terminating_index(&self, max_terms: usize) -> Option<usize> {
        let ln_q = self.q.value().ln();
        self.numerator
            .iter()
            .filter_map(|&x| {
                let mag = x.norm();
                if mag == 0.0 {
                    return None;
                }
                let n = (-mag.ln() / ln_q).round();
                if n < 0.0 || n > max_terms as f64 {
                    return None;
                }
                let target = self.q.powi(-(n as i32));
                ((x - target).norm() < TERMINATION_WINDOW * target).then_some(n as usize)
            })
            .min()
    }

    /// Exponent `s + 1 - r` of the sign/power factor.
    fn excess(&self) -> i32 {
        self.denominator.len() as i32 + 1 - self.numerator.len() as i32
    }

    fn extended(&self) -> ExtendedSpec {
        ExtendedSpec {
            numerator: self.numerator.iter().map(|&a| to_dd(a)).collect(),
            denominator: self.denominator.iter().map(|&b| to_dd(b)).collect(),
            q: self.q,
            argument: to_dd(self.argument),
        }
    }

    /// The `n`-th term computed from scratch out of q-shifted factorials,
    /// independent of the recurrence used by [`phi`].
    pub fn term_direct(&self, n: usize) -> Complex64 {
        let q = self.q;
        let num = qmultipochhammer(&self.numerator, q, Order::Finite(n));
        let mut den = qpochhammer(Complex64::new(q.value(), 0.0), q, n);
        den *= qmultipochhammer(&self.denominator, q, Order::Finite(n));
        let e = self.excess();
        let sign = if (n as i32 * e).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        let power = q.powf((n * n.saturating_sub(1)) as f64 / 2.0 * e as f64);
        num / den * self.argument.powi(n as i32) * sign * power
    }
}

/// `_rφ_s` parameters held in double-double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSpec {
    pub numerator: Vec<ComplexDd>,
    pub denominator: Vec<ComplexDd>,
    pub q: QParam,
    pub argument: ComplexDd,
}

impl ExtendedSpec {
    fn rounded(&self) -> PhiSpec {
        PhiSpec::new(
            self.numerator.iter().map(|&a| from_dd(a)).collect(),
            self.denominator.iter().map(|&b| from_dd(b)).collect(),
            self.q,
            from_dd(self.argument),
        )
    }

    /// Ratio `t_{n+1} / t_n`, given `qn = q^n`.
    fn term_ratio(&self, n: usize, qn: TwoFloat) -> Result<ComplexDd> {
        let one = dd_real(1.0);
        let mut num = self.argument;
        for &a in &self.numerator {
            num *= one - a.scale(qn);
        }
        let mut den = dd_real(1.0) - dd_real(self.q.value()).scale(qn);
        for &b in &self.denominator {
            let factor = one - b.scale(qn);
            if from_dd(factor).norm() < POLE_EPS {
                return Err(Error::PoleInDenominator { param: from_dd(b), index: n });
            }
            den *= factor;
        }
        let excess = self.denominator.len() as i32 + 1 - self.numerator.len() as i32;
        let mut sign = dd_real(1.0);
        for _ in 0..excess.max(0) {
            sign = sign.scale(-qn);
        }
        for _ in 0..(-excess).max(0) {
            sign = sign.scale(dd_recip(-qn));
        }
        Ok(dd_div(num, den) * sign)
    }
}

/// Double-double complex numbers. Terminating series are accumulated in this
/// type because their terms can exceed their sum by many orders of magnitude.
pub type ComplexDd = Complex<TwoFloat>;

pub fn to_dd(z: Complex64) -> ComplexDd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

pub fn from_dd(z: ComplexDd) -> Complex64 {
    Complex64::new(f64::from(z.re), f64::from(z.im))
}

pub fn dd_real(x: f64) -> ComplexDd {
    Complex::new(TwoFloat::from(x), TwoFloat::from(0.0))
}

/// `1 / x` in double-double precision: one Newton step from the `f64`
/// reciprocal. (`TwoFloat`'s own division is only accurate to `f64` rounding.)
pub fn dd_recip(x: TwoFloat) -> TwoFloat {
    let r0 = TwoFloat::from(1.0 / x.hi());
    r0 + r0 * (TwoFloat::from(1.0) - x * r0)
}

/// `z / w` in double-double precision.
pub fn dd_div(z: ComplexDd, w: ComplexDd) -> ComplexDd {
    (z * w.conj()).scale(dd_recip(w.norm_sqr()))
}

/// `(a; q)_n` in double-double precision.
pub fn qpochhammer_extended(a: ComplexDd, q: QParam, n: usize) -> ComplexDd {
    let qd = TwoFloat::from(q.value());
    let mut qk = TwoFloat::from(1.0);
    let mut out = dd_real(1.0);
    for _ in 0..n {
        out *= dd_real(1.0) - a.scale(qk);
        qk *= qd;
    }
    out
}

/// Unit roundoff of the double-double accumulation, `2^-104`.
pub const EXTENDED_EPSILON: f64 = f64::EPSILON * f64::EPSILON;

/// Sum of `_rφ_s` with terms
/// `(a;q)_n / (q, b; q)_n z^n [(-1)^n q^{n(n-1)/2}]^{s+1-r}`.
///
/// Terminating series are summed exactly up to the terminating index.
/// Otherwise summation stops once two consecutive terms are below
/// `tol * |partial sum|`.
pub fn phi(spec: &PhiSpec, max_terms: usize, tol: f64) -> Result<Complex64> {
    phi_extended(&spec.extended(), max_terms, tol)
}

/// [`phi`] for parameters already in double-double precision.
pub fn phi_extended(spec: &ExtendedSpec, max_terms: usize, tol: f64) -> Result<Complex64> {
    let stop = spec.rounded().terminating_index(max_terms);
    let q = TwoFloat::from(spec.q.value());
    let mut qn = TwoFloat::from(1.0);
    let mut term = dd_real(1.0);
    let mut sum = term;
    let mut small_run = 0;
    let mut n = 0;
    loop {
        if Some(n) == stop {
            return Ok(from_dd(sum));
        }
        if stop.is_none() {
            let (t, s) = (from_dd(term).norm(), from_dd(sum).norm());
            if t <= tol * s {
                small_run += 1;
                if small_run >= 2 {
                    return Ok(from_dd(sum));
                }
            } else {
                small_run = 0;
            }
            if n >= max_terms {
                return Err(Error::NonConvergent { terms: max_terms, last_term: t });
            }
        }
        term *= spec.term_ratio(n, qn)?;
        sum += term;
        qn *= q;
        n += 1;
    }
}

/// Terminating balanced `_4φ_3(q^{-n}, A, B, C; D, E, F; q, q)`.
pub fn phi43_terminating(n: usize, upper: [Complex64; 3], lower: [Complex64; 3], q: QParam) -> Result<Complex64> {
    phi43_terminating_conditioned(n, upper, lower, q).map(|(sum, _)| sum)
}

/// As [`phi43_terminating`], also returning `Σ |term_k|`, the scale of the
/// cancellation the sum went through.
pub fn phi43_terminating_conditioned(
    n: usize,
    upper: [Complex64; 3],
    lower: [Complex64; 3],
    q: QParam,
) -> Result<(Complex64, f64)> {
    phi43_extended(n, upper.map(to_dd), lower.map(to_dd), q)
}

/// [`phi43_terminating_conditioned`] for double-double parameters.
pub fn phi43_extended(n: usize, upper: [ComplexDd; 3], lower: [ComplexDd; 3], q: QParam) -> Result<(Complex64, f64)> {
    let qd = TwoFloat::from(q.value());
    let qn = dd_real(1.0).scale(dd_recip(qd.powi(n as i32)));
    let spec = ExtendedSpec {
        numerator: vec![qn, upper[0], upper[1], upper[2]],
        denominator: lower.to_vec(),
        q,
        argument: dd_real(q.value()),
    };
    // The q^{-n} parameter is exact here, so termination is forced at n even
    // if another numerator parameter happens to be q^{-k}, k > n.
    let mut term = dd_real(1.0);
    let mut sum = term;
    let mut magnitude = 1.0;
    let mut qk = TwoFloat::from(1.0);
    for k in 0..n {
        term *= spec.term_ratio(k, qk)?;
        sum += term;
        magnitude += from_dd(term).norm();
        qk *= qd;
    }
    Ok((from_dd(sum), magnitude))
}

/// `Σ_{n ∈ Z} q^{n²} z^n`, summed symmetrically in `±n`.
///
/// Summation stops at the first `n` with `q^{2n+1} max(|z|, 1/|z|) <= 1/2` and
/// `q^{n²}(|z|^n + |z|^{-n}) <= tol |S|`; beyond that point the pair magnitudes
/// decay at least geometrically with ratio 1/2, so the tail is below `tol |S|`.
pub fn theta_sum(z: Complex64, q: QParam, tol: f64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Precondition("theta_sum needs z != 0".into()));
    }
    let qv = q.value();
    let zinv = z.inv();
    let rho = z.norm().max(zinv.norm());
    let mut sum = Complex64::new(1.0, 0.0);
    let mut qpow = 1.0; // q^{n²}
    let mut zn = Complex64::new(1.0, 0.0);
    let mut zmn = Complex64::new(1.0, 0.0);
    let mut n: i32 = 0;
    loop {
        qpow *= qv.powi(2 * n + 1);
        n += 1;
        zn *= z;
        zmn *= zinv;
        let pair = (zn + zmn) * qpow;
        sum += pair;
        let bound = qpow * (zn.norm() + zmn.norm());
        let decaying = qv.powi(2 * n + 1) * rho <= 0.5;
        if decaying && bound <= tol * sum.norm().max(f64::MIN_POSITIVE) {
            return Ok(sum);
        }
        if qpow == 0.0 {
            return Ok(sum);
        }
    }
}

/// Product side of the Jacobi triple product, `(q², -qz, -q/z; q²)_∞`.
pub fn triple_product(z: Complex64, q: QParam, tol: f64) -> Complex64 {
    let q2 = q.squared();
    let qv = q.value();
    qpochhammer_inf(Complex64::new(q2.value(), 0.0), q2, tol)
        * qpochhammer_inf(-z * qv, q2, tol)
        * qpochhammer_inf(-z.inv() * qv, q2, tol)
}

/// The product `(q², -qz, -q/z; q)_∞` with base `q` in every factor.
///
/// This is not equal to [`theta_sum`]; it is kept so reports can show how far
/// the base-`q` reading of the triple product is from the sum.
pub fn triple_product_base_q(z: Complex64, q: QParam, tol: f64) -> Complex64 {
    let qv = q.value();
    qpochhammer_inf(Complex64::new(qv * qv, 0.0), q, tol)
        * qpochhammer_inf(-z * qv, q, tol)
        * qpochhammer_inf(-z.inv() * qv, q, tol)
}
