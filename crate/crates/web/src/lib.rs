//! Browser bindings for the qcircle demo page. Every export returns a JSON
//! string that `www/index.js` draws onto a canvas; the same functions are
//! plain Rust underneath so they can be tested natively.

use num_complex::Complex64;
use qcircle::biortho::{self, BiorthoParams};
use qcircle::qcore::INF_PRODUCT_TOL;
use qcircle::{szego, CircleGrid, QParam, QUADRATURE_TOL};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: usize = 4096;
const MAX_GRAM_ORDER: usize = 12;

fn angles(samples: usize) -> Result<Vec<f64>, String> {
    if !(8..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must lie in 8..={MAX_SAMPLES}, got {samples}"));
    }
    Ok((0..=samples).map(|j| std::f64::consts::TAU * j as f64 / samples as f64).collect())
}

fn params(q: f64, a: f64, alpha: f64, b: f64, beta: f64) -> Result<BiorthoParams, String> {
    BiorthoParams::real(a, alpha, b, beta, q).map_err(|e| e.to_string())
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// `|H_n(e^{iθ})|²`, the Szegő weight, and their product over `[0, 2π]`.
pub fn szego_profile(n: usize, q: f64, samples: usize) -> Result<String, String> {
    let qq = QParam::new(q).map_err(|e| e.to_string())?;
    let theta = angles(samples)?;
    let h = szego::szego_poly(n, qq);
    let mut modulus = Vec::with_capacity(theta.len());
    let mut weight = Vec::with_capacity(theta.len());
    for &t in &theta {
        let z = Complex64::from_polar(1.0, t);
        modulus.push(h.eval(z).norm_sqr());
        weight.push(szego::szego_weight(z, qq, INF_PRODUCT_TOL).re);
    }
    let weighted: Vec<f64> = modulus.iter().zip(&weight).map(|(m, w)| m * w).collect();
    let coefficients: Vec<f64> = (0..=n as i32).map(|k| h.coefficient(k).re).collect();
    Ok(json!({
        "n": n,
        "q": q,
        "theta": theta,
        "modulus": modulus,
        "weight": weight,
        "weighted": weighted,
        "coefficients": coefficients,
        "total_mass": szego::total_mass(qq),
    })
    .to_string())
}

/// Four-parameter weight and `|r_n|` around the circle, with the total mass
/// by closed form and by quadrature on `grid` nodes.
#[allow(clippy::too_many_arguments)]
pub fn biortho_profile(
    n: usize,
    q: f64,
    a: f64,
    alpha: f64,
    b: f64,
    beta: f64,
    samples: usize,
    grid: usize,
) -> Result<String, String> {
    let p = params(q, a, alpha, b, beta)?;
    let theta = angles(samples)?;
    let nodes = CircleGrid::new(grid).map_err(|e| e.to_string())?;
    let mut weight_re = Vec::with_capacity(theta.len());
    let mut weight_im = Vec::with_capacity(theta.len());
    let mut r_abs = Vec::with_capacity(theta.len());
    for &t in &theta {
        let z = Complex64::from_polar(1.0, t);
        let w = p.weight(z, INF_PRODUCT_TOL);
        weight_re.push(w.re);
        weight_im.push(w.im);
        r_abs.push(p.r(n, z).map_err(|e| e.to_string())?.norm());
    }
    let closed = p.kappa(INF_PRODUCT_TOL).map_err(|e| e.to_string())?;
    let quadrature = biortho::kappa_quadrature(&p, &nodes);
    Ok(json!({
        "params": p.to_json(),
        "n": n,
        "theta": theta,
        "weight_re": weight_re,
        "weight_im": weight_im,
        "r_abs": r_abs,
        "kappa": { "closed": pair(closed), "quadrature": pair(quadrature), "gap": (closed - quadrature).norm() },
    })
    .to_string())
}

/// Gram table of the Szegő family (`biortho = false`) or of the pairs
/// `(r_m, s_n)`, with its residual report.
#[allow(clippy::too_many_arguments)]
pub fn gram(
    biortho: bool,
    max_n: usize,
    q: f64,
    a: f64,
    alpha: f64,
    b: f64,
    beta: f64,
    grid: usize,
) -> Result<String, String> {
    if max_n > MAX_GRAM_ORDER {
        return Err(format!("max_n is capped at {MAX_GRAM_ORDER} here"));
    }
    let qq = QParam::new(q).map_err(|e| e.to_string())?;
    let nodes = CircleGrid::new(grid).map_err(|e| e.to_string())?;
    if nodes.len() <= 2 * max_n + 2 {
        return Err(format!("{} nodes cannot resolve degree {max_n}", nodes.len()));
    }
    let (table, report) = if biortho {
        biortho::biortho_gram(max_n, &params(q, a, alpha, b, beta)?, &nodes, QUADRATURE_TOL)
            .map_err(|e| e.to_string())?
    } else {
        szego::szego_gram(max_n, qq, &nodes, QUADRATURE_TOL)
    };
    let grid_of = |m: &Vec<Vec<Complex64>>| -> Vec<Vec<Value>> {
        m.iter().map(|row| row.iter().map(|&v| pair(v)).collect()).collect()
    };
    Ok(json!({
        "subject": if biortho { "biortho" } else { "szego" },
        "entries": grid_of(&table.entries),
        "expected": grid_of(&table.expected),
        "residuals": table.residuals(),
        "report": report,
    })
    .to_string())
}

#[wasm_bindgen(js_name = szegoProfile)]
pub fn szego_profile_js(n: usize, q: f64, samples: usize) -> Result<String, JsValue> {
    szego_profile(n, q, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = biorthoProfile)]
#[allow(clippy::too_many_arguments)]
pub fn biortho_profile_js(
    n: usize,
    q: f64,
    a: f64,
    alpha: f64,
    b: f64,
    beta: f64,
    samples: usize,
    grid: usize,
) -> Result<String, JsValue> {
    biortho_profile(n, q, a, alpha, b, beta, samples, grid).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = gramTable)]
#[allow(clippy::too_many_arguments)]
pub fn gram_js(
    biortho: bool,
    max_n: usize,
    q: f64,
    a: f64,
    alpha: f64,
    b: f64,
    beta: f64,
    grid: usize,
) -> Result<String, JsValue> {
    gram(biortho, max_n, q, a, alpha, b, beta, grid).map_err(|e| JsValue::from_str(&e))
}
