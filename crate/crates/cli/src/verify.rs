//! Check suites behind `stepcat verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stepcat::analysis::{self, rho};
use stepcat::gd::{tightness_gradient, tightness_objective, EQUALITY_TOL};
use stepcat::schedule::{
    certificate_dominant_with_residuals, phi, phi_residual, psi, psi_residual, CERTIFICATE_TOL,
};
use stepcat::{dp, Execution, Kind, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Tightness,
    Identities,
    Bounds,
    Appendix,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `achieved <= expected + tolerance`
    AtMost,
    /// `|achieved - expected| <= tolerance`
    Equal,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub achieved: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(
        suite: &'static str,
        name: impl Into<String>,
        achieved: f64,
        expected: f64,
        tolerance: f64,
        relation: Relation,
    ) -> Self {
        let passed = match relation {
            Relation::AtMost => achieved <= expected + tolerance,
            Relation::Equal => (achieved - expected).abs() <= tolerance,
        };
        Check {
            suite,
            name: name.into(),
            achieved,
            expected,
            tolerance,
            relation,
            passed,
            detail: None,
        }
    }

    fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn failed(suite: &'static str, name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check::new(suite, name, f64::NAN, 0.0, 0.0, Relation::Equal).with_detail(detail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(checks: Vec<Check>) -> Self {
        Report {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

/// Dominant certificates are built for `n` up to this many steps.
const CERTIFICATE_N: usize = 256;
/// Family tightness sweeps stop here. Past n ~ 500 the gradient variant ends
/// on the Huber kink after a cancelling sum and loses the 1e-10 tolerance.
const TIGHTNESS_N: usize = 256;
const SAMPLES: usize = 10_000;
const SEED: u64 = 7;

pub fn run(suite: Suite, n_max: usize, exec: Execution) -> Report {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Tightness {
        checks.extend(tightness(n_max.min(TIGHTNESS_N), exec));
    }
    if all || suite == Suite::Identities {
        checks.extend(identities(n_max.min(CERTIFICATE_N)));
    }
    if all || suite == Suite::Bounds {
        checks.extend(bounds(n_max, exec));
    }
    if all || suite == Suite::Appendix {
        checks.extend(appendix());
    }
    Report::new(checks)
}

/// Tightness of one loaded schedule, plus its certificate when it has one.
pub fn schedule_checks(h: &Schedule) -> Report {
    let mut checks = Vec::new();
    let name = format!("{} n={}", h.kind().as_str(), h.len());
    let t = if h.admits(Kind::Dominant) {
        Some(tightness_objective(h))
    } else if h.admits(Kind::GBounded) {
        Some(tightness_gradient(h))
    } else {
        None
    };
    match t {
        Some(Ok(t)) => checks.push(Check::new(
            "tightness",
            name,
            t.rel_gap,
            0.0,
            EQUALITY_TOL,
            Relation::AtMost,
        )),
        Some(Err(e)) => checks.push(Check::failed("tightness", name, e.to_string())),
        None => checks.push(Check::failed(
            "tightness",
            name,
            "schedule has no bound to check",
        )),
    }
    if h.kind() == Kind::Dominant {
        if let Some(tree) = h.provenance() {
            checks.push(match certificate_dominant_with_residuals(tree) {
                Ok((_, r)) => Check::new(
                    "identities",
                    "dominant certificate residual",
                    r.lambda.max(r.beta).max(r.normalization),
                    0.0,
                    CERTIFICATE_TOL,
                    Relation::AtMost,
                ),
                Err(e) => Check::failed("identities", "dominant certificate", e.to_string()),
            });
        }
    }
    Report::new(checks)
}

fn tightness(n_max: usize, exec: Execution) -> Vec<Check> {
    let circ = dp::pri_dp_with(n_max, exec);
    let dom = dp::dom_pp_with(n_max, exec);
    let tri = match dp::tri_family_with(n_max, exec) {
        Ok(t) => t,
        Err(e) => return vec![Check::failed("tightness", "gbounded family", e.to_string())],
    };
    let mut out = Vec::new();
    for (fam, gradient) in [(&circ, false), (&dom, false), (&tri, true)] {
        let mut worst: f64 = 0.0;
        let mut err = None;
        for n in 0..=n_max {
            let h = fam.schedule(n).expect("within table");
            let r = if gradient {
                tightness_gradient(&h)
            } else {
                tightness_objective(&h)
            };
            match r {
                Ok(t) => worst = worst.max(t.rel_gap),
                Err(e) => {
                    err = Some(format!("n={n}: {e}"));
                    break;
                }
            }
        }
        let name = format!(
            "{} family n <= {n_max}, max relative gap",
            fam.family().as_str()
        );
        out.push(match err {
            None => Check::new(
                "tightness",
                name,
                worst,
                0.0,
                EQUALITY_TOL,
                Relation::AtMost,
            ),
            Some(e) => Check::failed("tightness", name, e),
        });
    }
    out
}

fn identities(cert_n: usize) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut range_bad = 0usize;
    let mut resid: f64 = 0.0;
    for _ in 0..SAMPLES {
        let x = rng.random_range(0.0..=1e6);
        let y = rng.random_range(0.0..=1e6);
        let (a, b) = (phi(x, y).unwrap(), psi(x, y).unwrap());
        if !(1.0 < a && a < y + 2.0 && 1.0 < b && b < x + 2.0) {
            range_bad += 1;
        }
        resid = resid.max(phi_residual(x, y)).max(psi_residual(x, y));
    }
    let mut out = vec![
        Check::new(
            "identities",
            "joint steps outside (1, other + 2)",
            range_bad as f64,
            0.0,
            0.0,
            Relation::Equal,
        ),
        Check::new(
            "identities",
            "quadratic-root residual",
            resid,
            0.0,
            1e-9,
            Relation::AtMost,
        ),
    ];

    let dom = dp::dom_pp(cert_n);
    let mut worst: f64 = 0.0;
    let mut err = None;
    for n in 0..=cert_n {
        match certificate_dominant_with_residuals(dom.tree(n).expect("within table")) {
            Ok((c, r)) => {
                let target = 2.0 * dom.table().r()[n] + 1.0;
                let norm = (c.total() - target).abs() / target;
                worst = worst
                    .max(r.lambda)
                    .max(r.beta)
                    .max(r.normalization)
                    .max(norm);
            }
            Err(e) => {
                err = Some(format!("n={n}: {e}"));
                break;
            }
        }
    }
    let name = format!("dominant certificate identities n <= {cert_n}");
    out.push(match err {
        None => Check::new(
            "identities",
            name,
            worst,
            0.0,
            CERTIFICATE_TOL,
            Relation::AtMost,
        ),
        Some(e) => Check::failed("identities", name, e),
    });
    out
}

fn bounds(n_max: usize, exec: Execution) -> Vec<Check> {
    let (circ, bullet) = dp::dp_tables(n_max, exec);
    let p = rho();
    let (omega, _) = analysis::omega();
    let mut out = Vec::new();

    let mut silver: f64 = 0.0;
    let mut l = 0;
    while (1usize << l) - 1 <= n_max {
        let n = (1usize << l) - 1;
        let target = ((n + 1) as f64).powf(p);
        silver = silver.max((circ.r()[n] + 1.0 - target).abs() / target);
        l += 1;
    }
    out.push(Check::new(
        "bounds",
        format!("primitive sum + 1 = (n+1)^rho at n = 2^l - 1 <= {n_max}"),
        silver,
        0.0,
        1e-9,
        Relation::AtMost,
    ));

    // equality cases at n = 0 and n = 2^l - 1
    let eq = 1e-12;
    let mut lower = 0usize;
    let mut upper = 0usize;
    let mut dominant = 0usize;
    for n in 0..=n_max {
        let rc = circ.r()[n] + 1.0;
        let hi = ((n + 1) as f64).powf(p);
        if rc < (std::f64::consts::SQRT_2 - 1.0) * ((n + 2) as f64).powf(p) * (1.0 - eq) {
            lower += 1;
        }
        if rc > hi * (1.0 + eq) {
            upper += 1;
        }
        if 2.0 * bullet.r()[n] + 1.0 > omega * hi {
            dominant += 1;
        }
    }
    for (name, count) in [
        ("primitive lower sandwich violations", lower),
        ("primitive upper sandwich violations", upper),
        ("dominant upper bound violations", dominant),
    ] {
        out.push(Check::new(
            "bounds",
            name,
            count as f64,
            0.0,
            0.0,
            Relation::Equal,
        ));
    }
    let mono =
        circ.r().windows(2).all(|w| w[0] < w[1]) && bullet.r().windows(2).all(|w| w[0] < w[1]);
    out.push(Check::new(
        "bounds",
        "sums strictly increasing",
        if mono { 0.0 } else { 1.0 },
        0.0,
        0.0,
        Relation::Equal,
    ));
    out
}

fn appendix() -> Vec<Check> {
    let rep = analysis::appendix_property_suite(SAMPLES, SEED);
    vec![
        Check::new(
            "appendix",
            "product bound violations",
            rep.product_violations as f64,
            0.0,
            0.0,
            Relation::Equal,
        )
        .with_detail(format!(
            "{} samples, max value {:.9}",
            rep.product_checks, rep.product_max
        )),
        Check::new(
            "appendix",
            "omega inequality violations",
            rep.iff_violations as f64,
            0.0,
            0.0,
            Relation::Equal,
        )
        .with_detail(format!(
            "{} samples, {} skipped",
            rep.iff_checks, rep.iff_skipped
        )),
    ]
}
