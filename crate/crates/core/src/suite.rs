//! Verification suites: named bundles of identity checks run under one
//! configuration, with a serializable summary.
//!
//! Reports keep a fixed order for a given configuration, so two runs with the
//! same seed serialize to identical bytes.

use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::biortho::{self, BiorthoParams, RaisingCoefficient, SearsParams};
use crate::circle::{adjoint_residual_scaled, CircleGrid, LaurentPoly};
use crate::error::{Error, Result};
use crate::qcore::QParam;
use crate::qsl::{self, QslProblem};
use crate::report::IdentityReport;
use crate::szego;
use crate::{ALGEBRAIC_TOL, DEFAULT_GRID, QUADRATURE_TOL};

/// Largest `q` accepted by the suites.
pub const MAX_SUITE_Q: f64 = 0.95;

/// Largest degree accepted by the suites.
pub const MAX_SUITE_N: usize = 30;

/// Relative tolerance for the iterated recursion against a direct `I_{n,n}`;
/// the diagonal values shrink like `(bβ)^n` so rounding in `r_n`, `s_n` is
/// magnified in relative terms.
const ITERATED_TOL: f64 = 1e-8;

/// A grid residual this many times larger than its value on the doubled
/// grid is flagged as under-resolved.
const RESOLUTION_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Szego,
    Biortho,
    Sears,
    Qsl,
    All,
}

impl SuiteName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Szego => "szego",
            Self::Biortho => "biortho",
            Self::Sears => "sears",
            Self::Qsl => "qsl",
            Self::All => "all",
        }
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "szego" => Ok(Self::Szego),
            "biortho" => Ok(Self::Biortho),
            "sears" => Ok(Self::Sears),
            "qsl" => Ok(Self::Qsl),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidParameters(format!(
                "unknown suite '{other}' (expected szego, biortho, sears, qsl or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            other => Err(Error::InvalidParameters(format!("unknown format '{other}' (expected json, csv or text)"))),
        }
    }
}

/// Configuration shared by every suite.
///
/// `tolerance` overrides both default tolerances (quadrature-backed and
/// algebraic). `n` is the Sears order; it defaults to `max_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub q: f64,
    pub max_n: usize,
    pub grid_size: usize,
    pub tolerance: Option<f64>,
    pub params: Option<BiorthoParams>,
    pub seed: u64,
    pub n: Option<usize>,
    pub output_format: OutputFormat,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            q: 0.5,
            max_n: 5,
            grid_size: DEFAULT_GRID,
            tolerance: None,
            params: None,
            seed: 0,
            n: None,
            output_format: OutputFormat::Json,
        }
    }
}

impl SuiteConfig {
    /// Checks every invariant, naming the violated one.
    pub fn validate(&self) -> Result<()> {
        let q = QParam::new(self.q)?;
        if q.value() > MAX_SUITE_Q {
            return Err(Error::InvalidParameters(format!("q = {} exceeds the suite cap {MAX_SUITE_Q}", self.q)));
        }
        if self.max_n > MAX_SUITE_N {
            return Err(Error::InvalidParameters(format!("max_n = {} exceeds {MAX_SUITE_N}", self.max_n)));
        }
        if let Some(n) = self.n {
            if n > MAX_SUITE_N {
                return Err(Error::InvalidParameters(format!("n = {n} exceeds {MAX_SUITE_N}")));
            }
        }
        CircleGrid::new(self.grid_size)?;
        if self.grid_size <= 2 * self.max_n + 2 {
            return Err(Error::GridTooSmall(self.grid_size));
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParameters(format!("tolerance {t} must be positive and finite")));
            }
        }
        if let Some(p) = &self.params {
            if p.q.value() != self.q {
                return Err(Error::InvalidParameters(format!(
                    "parameter set carries q = {} but the suite runs at q = {}",
                    p.q.value(),
                    self.q
                )));
            }
            BiorthoParams::new(p.a, p.alpha, p.b, p.beta, p.q)?;
        }
        Ok(())
    }

    fn qparam(&self) -> QParam {
        QParam::new(self.q).expect("validated")
    }

    fn quad_tol(&self) -> f64 {
        self.tolerance.unwrap_or(QUADRATURE_TOL)
    }

    fn alg_tol(&self) -> f64 {
        self.tolerance.unwrap_or(ALGEBRAIC_TOL)
    }

    fn grid(&self) -> CircleGrid {
        CircleGrid::new(self.grid_size).expect("validated")
    }

    /// The configured parameters, or `(0.3, 0.2, 0.4, 0.1)`.
    pub fn biortho_params(&self) -> Result<BiorthoParams> {
        match self.params {
            Some(p) => Ok(p),
            None => BiorthoParams::real(0.3, 0.2, 0.4, 0.1, self.q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub informational: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: SuiteConfig,
    pub reports: Vec<IdentityReport>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn new(suite: SuiteName, config: SuiteConfig, reports: Vec<IdentityReport>) -> Self {
        let gating = reports.iter().filter(|r| !r.informational);
        let passed = gating.clone().filter(|r| r.passed).count();
        let failed = gating.count() - passed;
        let informational = reports.iter().filter(|r| r.informational).count();
        Self { suite: suite.as_str().to_string(), config, reports, summary: Summary { passed, failed, informational } }
    }

    /// True when no gating report failed.
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs `f` over `items` keeping input order in the output.
fn ordered<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

fn collect(parts: Vec<Result<Vec<IdentityReport>>>) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Re-runs a grid check on the doubled grid and annotates the coarse report.
fn with_resolution<F>(grid: &CircleGrid, check: F) -> Result<IdentityReport>
where
    F: Fn(&CircleGrid) -> Result<IdentityReport>,
{
    let coarse = check(grid)?;
    let fine = check(&grid.refined())?;
    let note = if coarse.residual > RESOLUTION_FACTOR * fine.residual.max(1e-13) {
        format!(
            "under-resolved: residual {:.3e} at N={} vs {:.3e} at N={}",
            coarse.residual,
            grid.len(),
            fine.residual,
            2 * grid.len()
        )
    } else {
        format!("resolution stable (N={}: {:.3e})", 2 * grid.len(), fine.residual)
    };
    Ok(coarse.with_note(note))
}

/// Runs the named suite.
pub fn run_suite(name: SuiteName, config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let reports = match name {
        SuiteName::Szego => szego_suite(config)?,
        SuiteName::Biortho => biortho_suite(config)?,
        SuiteName::Sears => sears_suite(config)?,
        SuiteName::Qsl => qsl_suite(config)?,
        SuiteName::All => {
            let mut all = szego_suite(config)?;
            all.extend(biortho_suite(config)?);
            all.extend(sears_suite(config)?);
            all.extend(qsl_suite(config)?);
            all
        }
    };
    Ok(SuiteReport::new(name, config.clone(), reports))
}

fn szego_suite(config: &SuiteConfig) -> Result<Vec<IdentityReport>> {
    let q = config.qparam();
    let grid = config.grid();
    let (qt, at) = (config.quad_tol(), config.alg_tol());
    let max_n = config.max_n;

    let mut reports = vec![with_resolution(&grid, |g| Ok(szego::szego_gram(max_n, q, g, qt).1))?];
    let per_n = ordered((0..=max_n).collect(), |n| -> Result<Vec<IdentityReport>> {
        let mut out = Vec::new();
        if n >= 1 {
            out.push(szego::lowering_check(n, q, &grid, at)?);
        }
        out.push(szego::raising_check(n, q, &grid, qt)?);
        out.push(szego::rodrigues(n, q, &grid, qt)?);
        out.push(szego::rodrigues_polynomiality_check(n, q, &grid, qt));
        out.push(szego::sturm_liouville_check(n, q, &grid, qt)?);
        out.push(szego::ladder_consistency_check(n, q, &grid, qt)?);
        Ok(out)
    });
    reports.extend(collect(per_n)?);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let small = CircleGrid::new(64)?;
    let mut worst: f64 = 0.0;
    let pairs = 100;
    for _ in 0..pairs {
        let lo = rand::Rng::gen_range(&mut rng, -5..=0);
        let f = LaurentPoly::random(&mut rng, lo, lo + 10);
        let lo = rand::Rng::gen_range(&mut rng, -5..=0);
        let g = LaurentPoly::random(&mut rng, lo, lo + 10);
        worst = worst.max(adjoint_residual_scaled(&f, &g, q, &small));
    }
    reports.push(
        IdentityReport::new("szego.adjointness", worst, 1e-11_f64.max(config.tolerance.unwrap_or(0.0)), small.len())
            .with_note(format!(
                "{pairs} random Laurent pairs, seed {}; relative to the Cauchy-Schwarz bound",
                config.seed
            )),
    );

    let triple_grid = CircleGrid::new(32)?;
    reports.push(szego::jacobi_triple_check(q, &triple_grid, qt)?);
    reports.push(szego::jacobi_triple_base_q_check(q, &triple_grid, qt)?);
    reports.push(szego::weight_routes_check(q, &grid, qt)?);
    reports.push(szego::weight_positivity_check(q, &grid, at));
    Ok(reports)
}

fn biortho_suite(config: &SuiteConfig) -> Result<Vec<IdentityReport>> {
    let p = config.biortho_params()?;
    let grid = config.grid();
    let (qt, at) = (config.quad_tol(), config.alg_tol());
    let max_n = config.max_n;
    let mut reports = vec![biortho::kappa_check(&p, &grid, qt)?];
    reports.push(with_resolution(&grid, |g| Ok(biortho::biortho_gram(max_n, &p, g, qt)?.1))?);

    let per_n = ordered((1..=max_n).collect(), |n| -> Result<Vec<IdentityReport>> {
        Ok(vec![
            biortho::lowering_biortho_check(n, &p, &grid, qt)?,
            biortho::raising_biortho_check_with(n, &p, &grid, qt, RaisingCoefficient::Recursion)?,
            biortho::raising_biortho_check(n, &p, &grid, qt)?
                .informational()
                .with_note("printed coefficient; see the recursion-coefficient report"),
            biortho::ladder_closure_check(n, &p, &grid, qt, RaisingCoefficient::Recursion)?,
        ])
    });
    reports.extend(collect(per_n)?);

    if max_n >= 1 {
        let n = max_n.min(3);
        let rows = biortho::variant_reconciliation(n, &p, &grid, qt)?;
        reports.extend(biortho::variant_reports(n, &rows, qt, grid.len()));
    }

    let rec_n = max_n.min(4);
    let pairs: Vec<(usize, usize)> = (1..=rec_n).flat_map(|m| (1..=rec_n).map(move |n| (m, n))).collect();
    let rec = ordered(pairs, |(m, n)| biortho::imn_recursion_check(m, n, &p, &grid, qt).map(|r| vec![r]));
    reports.extend(collect(rec)?);
    let iterated_tol = config.tolerance.unwrap_or(ITERATED_TOL);
    for n in 1..=rec_n {
        reports.push(biortho::imn_iterated_check(n, n, &p, &grid, iterated_tol)?);
    }
    for n in 0..=rec_n {
        let (full, repeated) = biortho::i00_closed_check(n, &p, &grid, qt)?;
        reports.push(full);
        reports.push(repeated);
    }

    reports.push(biortho::weight_symmetry_check(&p, &grid, at));

    let pastro = BiorthoParams::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), p.b, p.beta, p.q)?;
    for n in 0..=max_n {
        reports.push(biortho::polynomiality_check(n, &pastro, &grid, qt).with_note("parameters a = alpha = 0"));
    }
    let (_, pastro_gram) = biortho::biortho_gram(max_n, &pastro, &grid, qt)?;
    reports.push(pastro_gram.with_note("parameters a = alpha = 0"));

    reports.push(zero_parameter_check(config.qparam(), &grid, qt)?);
    Ok(reports)
}

/// With every parameter zero the weight, total mass and `G[0][0]` reduce to
/// the Szegő values.
pub fn zero_parameter_check(q: QParam, grid: &CircleGrid, tol: f64) -> Result<IdentityReport> {
    let zero = BiorthoParams::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        q,
    )?;
    let weight_gap = grid.max_over(|z| {
        (zero.weight(z, crate::qcore::INF_PRODUCT_TOL) - szego::szego_weight(z, q, crate::qcore::INF_PRODUCT_TOL))
            .norm()
    });
    let mass = szego::total_mass(q);
    let kappa_gap = (zero.kappa(crate::qcore::INF_PRODUCT_TOL)? - mass).norm();
    let (bt, _) = biortho::biortho_gram(0, &zero, grid, tol)?;
    let (st, _) = szego::szego_gram(0, q, grid, tol);
    let gram_gap = (bt.entries[0][0] - st.entries[0][0]).norm();
    Ok(IdentityReport::new("biortho.zero_parameters", weight_gap.max(kappa_gap).max(gram_gap), tol, grid.len())
        .with_note(format!("weight {weight_gap:.3e}; total mass {kappa_gap:.3e}; G[0][0] {gram_gap:.3e}")))
}

fn sears_suite(config: &SuiteConfig) -> Result<Vec<IdentityReport>> {
    let q = config.qparam();
    let order = config.n.unwrap_or(config.max_n).max(1);
    let tol = config.quad_tol();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draws: Vec<SearsParams> = (0..50).map(|i| SearsParams::random(&mut rng, 1 + i % order, q)).collect();
    let parts = ordered(draws, |s| -> Result<Vec<IdentityReport>> {
        Ok(vec![biortho::sears_check(&s, tol)?, biortho::sears_self_inverse_check(&s, tol)?])
    });
    collect(parts)
}

fn qsl_suite(config: &SuiteConfig) -> Result<Vec<IdentityReport>> {
    let q = config.qparam();
    let grid = config.grid();
    let tol = config.quad_tol();
    let prob = QslProblem::szego(q, &grid)?;
    let mut reports = Vec::new();
    for n in 0..=config.max_n {
        reports.push(qsl::szego_anchor_check(&prob, n, &grid, tol)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..10 {
        let f = LaurentPoly::random(&mut rng, -3, 3);
        let g = LaurentPoly::random(&mut rng, -3, 3);
        reports.push(qsl::symmetry_check(&prob, &f, &g, &grid, tol)?);
    }
    let mut worst_form: Option<IdentityReport> = None;
    for _ in 0..50 {
        let f = LaurentPoly::random(&mut rng, -3, 3);
        let r = qsl::form_positivity_check(&prob, &f, &grid, tol)?;
        let replace = match &worst_form {
            None => true,
            Some(w) => (!r.passed && w.passed) || (r.passed == w.passed && r.residual > w.residual),
        };
        if replace {
            worst_form = Some(r);
        }
    }
    if let Some(w) = worst_form {
        reports.push(w.with_note("worst of 50 random Laurent functions"));
    }
    for (i, j) in [(1, 2), (0, 3)] {
        if j > config.max_n.max(3) {
            continue;
        }
        let hi = szego::szego_poly(i, q);
        let hj = szego::szego_poly(j, q);
        let li = Complex64::new(szego::eigenvalue(i, q), 0.0);
        let lj = Complex64::new(szego::eigenvalue(j, q), 0.0);
        let out = qsl::eigen_orthogonality_check(&prob, |z| hi.eval(z), li, |z| hj.eval(z), lj, &grid, tol)?;
        for r in out.into_reports() {
            let name = format!("{}[H_{i}, H_{j}]", r.name);
            reports.push(IdentityReport { name, ..r });
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = SuiteConfig::default();
        assert!(c.validate().is_ok());
        c.q = 0.97;
        assert!(c.validate().is_err());
        c.q = 0.5;
        c.grid_size = 8;
        assert!(matches!(c.validate(), Err(Error::GridTooSmall(8))));
        c.grid_size = 256;
        c.tolerance = Some(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn summary_counts() {
        let reports = vec![
            IdentityReport::new("a", 0.0, 1.0, 0),
            IdentityReport::new("b", 2.0, 1.0, 0),
            IdentityReport::new("c", 2.0, 1.0, 0).informational(),
        ];
        let s = SuiteReport::new(SuiteName::Szego, SuiteConfig::default(), reports);
        assert_eq!(s.summary, Summary { passed: 1, failed: 1, informational: 1 });
        assert!(!s.all_passed());
    }

    #[test]
    fn names_parse() {
        assert_eq!("sears".parse::<SuiteName>().unwrap(), SuiteName::Sears);
        assert!("nope".parse::<SuiteName>().is_err());
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
    }
}
