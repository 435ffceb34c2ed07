//! Brute-force reference values built only from elementary arithmetic.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;
use twofloat::TwoFloat;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(a; q)_n` by a plain loop.
pub fn poch(a: Complex64, q: f64, n: usize) -> Complex64 {
    let mut out = c(1.0);
    let mut qk = 1.0;
    for _ in 0..n {
        out *= 1.0 - a * qk;
        qk *= q;
    }
    out
}

/// `(a; q)_∞` truncated once `q^k` is below rounding.
pub fn poch_inf(a: Complex64, q: f64) -> Complex64 {
    let mut out = c(1.0);
    let mut qk = 1.0;
    while qk * a.norm() > 1e-18 {
        out *= 1.0 - a * qk;
        qk *= q;
    }
    out
}

/// `(q; q)_∞` from Euler's pentagonal number series.
pub fn euler(q: f64) -> f64 {
    let mut sum = 1.0;
    for k in 1..200i64 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let a = q.powf((k * (3 * k - 1)) as f64 / 2.0);
        let b = q.powf((k * (3 * k + 1)) as f64 / 2.0);
        if a == 0.0 {
            break;
        }
        sum += sign * (a + b);
    }
    sum
}

/// Gaussian binomials `[n k]_q` for all `k` from the Pascal rule
/// `[n k] = [n-1 k-1] + q^k [n-1 k]`.
pub fn gauss_row(n: usize, q: f64) -> Vec<f64> {
    let mut row = vec![1.0];
    for m in 1..=n {
        let mut next = vec![1.0; m + 1];
        for k in 1..m {
            next[k] = row[k - 1] + q.powi(k as i32) * row[k];
        }
        row = next;
    }
    row
}

/// Coefficients of `H_n(z|q)` in powers of `z`.
pub fn szego_coeffs(n: usize, q: f64) -> Vec<f64> {
    gauss_row(n, q).into_iter().enumerate().map(|(k, g)| g * q.powf(-(k as f64) / 2.0)).collect()
}

pub fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(c(0.0), |acc, &a| acc * z + a)
}

/// Szegő weight as a product of two truncated infinite products.
pub fn szego_weight(z: Complex64, q: f64) -> Complex64 {
    let h = q.sqrt();
    poch_inf(z * h, q) * poch_inf(h / z, q)
}

/// Four-parameter weight
/// `(q^{1/2}z, q^{1/2}/z, abq^{1/2}z, αβq^{1/2}/z; q)_∞ / (az, α/z, bz, β/z; q)_∞`.
pub fn biortho_weight(z: Complex64, p: [Complex64; 4], q: f64) -> Complex64 {
    let [a, alpha, b, beta] = p;
    let h = q.sqrt();
    let zi = z.inv();
    let num =
        poch_inf(h * z, q) * poch_inf(h * zi, q) * poch_inf(a * b * h * z, q) * poch_inf(alpha * beta * h * zi, q);
    let den = poch_inf(a * z, q) * poch_inf(alpha * zi, q) * poch_inf(b * z, q) * poch_inf(beta * zi, q);
    num / den
}

/// Total mass `(aq^{1/2}, αq^{1/2}, bq^{1/2}, βq^{1/2}, abαβ; q)_∞ / (q, aα, bα, aβ, bβ; q)_∞`.
pub fn kappa(p: [Complex64; 4], q: f64) -> Complex64 {
    let [a, alpha, b, beta] = p;
    let h = q.sqrt();
    let num: Complex64 =
        [a * h, alpha * h, b * h, beta * h, a * alpha * b * beta].iter().map(|&x| poch_inf(x, q)).product();
    let den: Complex64 = [c(q), a * alpha, b * alpha, a * beta, b * beta].iter().map(|&x| poch_inf(x, q)).product();
    num / den
}

/// Biorthogonality diagonal `κ (q, aα, abαβq^{n-1}; q)_n (bβ)^n / ((bβ; q)_n (abαβ; q)_{2n})`.
pub fn biortho_norm(n: usize, p: [Complex64; 4], q: f64) -> Complex64 {
    let [a, alpha, b, beta] = p;
    let abab = a * alpha * b * beta;
    let ni = n as i32;
    kappa(p, q) * poch(c(q), q, n) * poch(a * alpha, q, n) * poch(abab * q.powi(ni - 1), q, n) * (b * beta).powi(ni)
        / (poch(b * beta, q, n) * poch(abab, q, 2 * n))
}

pub fn nodes(n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect()
}

/// Plain trapezoidal mean over `n` equispaced nodes.
pub fn trapezoid(n: usize, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    nodes(n).into_iter().map(f).sum::<Complex64>() / n as f64
}

/// `Σ_{|n| <= 60} q^{n²} z^n`.
pub fn theta(z: Complex64, q: f64) -> Complex64 {
    (-60i32..=60).map(|n| q.powi(n * n) * z.powi(n)).sum()
}

/// Double-double complex numbers for the series oracles.
pub type Dd = num_complex::Complex<TwoFloat>;

pub fn dd(z: Complex64) -> Dd {
    Dd::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

pub fn undd(z: Dd) -> Complex64 {
    Complex64::new(f64::from(z.re), f64::from(z.im))
}

/// `z / w`, with the reciprocal of `|w|²` refined by one Newton step.
pub fn dd_div(z: Dd, w: Dd) -> Dd {
    let n = w.norm_sqr();
    let r0 = TwoFloat::from(1.0 / n.hi());
    let r = r0 + r0 * (TwoFloat::from(1.0) - n * r0);
    (z * w.conj()).scale(r)
}

fn dd_poch(a: Dd, q: TwoFloat, n: usize) -> Dd {
    let one = dd(c(1.0));
    let mut out = one;
    let mut qk = TwoFloat::from(1.0);
    for _ in 0..n {
        out *= one - a.scale(qk);
        qk *= q;
    }
    out
}

/// Terminating `4φ3(q^{-n}, A, B, C; D, E, F; q, q)`, each term built from
/// its own q-shifted factorials in double-double precision.
pub fn phi43_dd(n: usize, upper: [Dd; 3], lower: [Dd; 3], q: f64) -> Complex64 {
    let qd = TwoFloat::from(q);
    let mut qn = TwoFloat::from(1.0);
    for _ in 0..n {
        qn *= qd;
    }
    let top = dd_div(dd(c(1.0)), Dd::new(qn, TwoFloat::from(0.0)));
    let mut sum = dd(c(0.0));
    let mut qk = TwoFloat::from(1.0);
    for k in 0..=n {
        let num = dd_poch(top, qd, k) * dd_poch(upper[0], qd, k) * dd_poch(upper[1], qd, k) * dd_poch(upper[2], qd, k);
        let den =
            dd_poch(dd(c(q)), qd, k) * dd_poch(lower[0], qd, k) * dd_poch(lower[1], qd, k) * dd_poch(lower[2], qd, k);
        sum += dd_div(num, den).scale(qk);
        qk *= qd;
    }
    undd(sum)
}

pub fn phi43(n: usize, upper: [Complex64; 3], lower: [Complex64; 3], q: f64) -> Complex64 {
    phi43_dd(n, upper.map(dd), lower.map(dd), q)
}

/// `r_n(z) = 4φ3(q^{-n}, abαβq^{n-1}, bq^{1/2}, bz; bα, bβ, abq^{1/2}z; q, q)`.
pub fn r(n: usize, z: Complex64, p: [Complex64; 4], q: f64) -> Complex64 {
    let [a, alpha, b, beta, z] = [p[0], p[1], p[2], p[3], z].map(dd);
    let qd = TwoFloat::from(q);
    let h = qd.sqrt();
    let mut top = a * alpha * b * beta;
    if n == 0 {
        top = dd_div(top, Dd::new(qd, TwoFloat::from(0.0)));
    }
    for _ in 1..n {
        top = top.scale(qd);
    }
    phi43_dd(n, [top, b.scale(h), b * z], [b * alpha, b * beta, (a * b * z).scale(h)], q)
}

/// `s_n` is `r_n` at `(conj α, conj a, conj β, conj b)`.
pub fn s(n: usize, z: Complex64, p: [Complex64; 4], q: f64) -> Complex64 {
    let [a, alpha, b, beta] = p;
    r(n, z, [alpha.conj(), a.conj(), beta.conj(), b.conj()], q)
}
