//! Trace-level checks: worst-case tightness, certificate slack, and the
//! bound sweep over the built-in oracles.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{
    huber_any_width, FunctionOracle, HuberSpec, HuberVariant, LogSumExp, Logistic, Quadratic,
};
use super::trace::{q_report, run_gd, GDTrace};
use crate::analysis::{gradient_bound, objective_bound};
use crate::error::{Error, Result};
use crate::par::{map_collect, Execution};
use crate::schedule::{
    certificate_dominant, certificate_primitive, Certificate, CertificateForm, Kind, Schedule,
};

/// Relative tolerance for claims of exact equality.
pub const EQUALITY_TOL: f64 = 1e-10;

/// Scaled tolerance for claims of the form `a <= b`.
pub const INEQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tightness {
    pub achieved: f64,
    pub bound: f64,
    pub rel_gap: f64,
    /// Final iterate norm and its closed-form value.
    pub x_final: f64,
    pub x_expected: f64,
}

fn unit_start() -> DVector<f64> {
    DVector::from_element(1, 1.0)
}

fn finish(
    achieved: f64,
    bound: f64,
    x_final: &DVector<f64>,
    x_expected: &DVector<f64>,
) -> Result<Tightness> {
    let rel_gap = (achieved - bound).abs() / bound;
    if !(rel_gap <= EQUALITY_TOL) {
        return Err(Error::Tightness {
            achieved,
            bound,
            rel_gap,
        });
    }
    let x_gap = (x_final - x_expected).norm() / x_expected.norm();
    if !(x_gap <= EQUALITY_TOL) {
        return Err(Error::Tightness {
            achieved: x_final.norm(),
            bound: x_expected.norm(),
            rel_gap: x_gap,
        });
    }
    Ok(Tightness {
        achieved,
        bound,
        rel_gap,
        x_final: x_final.norm(),
        x_expected: x_expected.norm(),
    })
}

/// Runs `h` on the Huber function with `w = 2 sum(h) + 1`, `L = 1`,
/// `x0 = 1` and checks `f_n - f* = (1/2) / (2 sum(h) + 1)` and
/// `x_n = (w + 1) / (2w)`.
pub fn tightness_objective(h: &Schedule) -> Result<Tightness> {
    tightness_objective_from(h, &unit_start())
}

/// [`tightness_objective`] from any unit-norm start.
pub fn tightness_objective_from(h: &Schedule, x0: &DVector<f64>) -> Result<Tightness> {
    let c = objective_bound(h)?;
    let spec = HuberSpec::for_sum(h.sum(), 1.0, HuberVariant::Objective);
    let oracle = huber_any_width(spec, x0.len())?;
    let t = run_gd(&oracle, x0, h.steps())?;
    let achieved = t.fs[h.len()];
    let bound = c * 0.5 * x0.norm_squared();
    let w = spec.w;
    finish(
        achieved,
        bound,
        &t.xs[h.len()],
        &(x0 * ((w + 1.0) / (2.0 * w))),
    )
}

/// Runs `h` on the Huber function with `w = sum(h) + 1`, `L = 1`, `x0 = 1`
/// and checks `||g_n||^2 / 2 = (f_0 - f*) / (2 sum(h) + 1)` and `x_n = 1/w`.
pub fn tightness_gradient(h: &Schedule) -> Result<Tightness> {
    tightness_gradient_from(h, &unit_start())
}

pub fn tightness_gradient_from(h: &Schedule, x0: &DVector<f64>) -> Result<Tightness> {
    let c = gradient_bound(h)?;
    let spec = HuberSpec::for_sum(h.sum(), 1.0, HuberVariant::Gradient);
    let oracle = huber_any_width(spec, x0.len())?;
    let t = run_gd(&oracle, x0, h.steps())?;
    let n = h.len();
    let achieved = t.gs[n].norm_squared() / 2.0;
    let bound = c * t.fs[0];
    finish(achieved, bound, &t.xs[n], &(x0 / spec.w))
}

/// `1 + (L/2)||x0 - x*||^2 + |f_0 - f*|`, the magnitude used to scale
/// inequality tolerances.
pub fn trace_scale(trace: &GDTrace) -> Result<f64> {
    let (x_star, f_star) = trace.optimum()?;
    Ok(1.0 + 0.5 * trace.l * (&trace.xs[0] - x_star).norm_squared() + (trace.fs[0] - f_star).abs())
}

/// `(L/2)||x0 - x*||^2 + <u, v> - (1'u)(f_n - f*) - M`.
///
/// For a dominant certificate `M = (L/2)||x0 - x* - G u / L||^2`; for a
/// primitive one `M = (L/2)||x_n - x*||^2 + s(s+1)/(2L) ||g_n||^2` with
/// `s = sum(h)`. Nonnegative whenever the certificate is valid.
pub fn dominance_check(trace: &GDTrace, h: &Schedule, cert: &Certificate) -> Result<f64> {
    let n = h.len();
    if cert.u().len() != n + 1 {
        return Err(Error::Shape {
            expected: n + 1,
            found: cert.u().len(),
        });
    }
    if trace.steps() != n {
        return Err(Error::Shape {
            expected: n,
            found: trace.steps(),
        });
    }
    let (x_star, f_star) = trace.optimum()?;
    let q = q_report(trace)?;
    let l = trace.l;
    let u = cert.u();
    let e0 = &trace.xs[0] - x_star;
    let uv: f64 = u.iter().zip(&q.v).map(|(a, b)| a * b).sum();
    let base = 0.5 * l * e0.norm_squared() + uv - cert.total() * (trace.fs[n] - f_star);
    let m = match cert.form() {
        CertificateForm::Dominant => {
            let gu = trace.gradient_matrix() * DVector::from_column_slice(u);
            0.5 * l * (e0 - gu / l).norm_squared()
        }
        CertificateForm::Primitive => {
            let s = h.sum();
            0.5 * l * (&trace.xs[n] - x_star).norm_squared()
                + s * (s + 1.0) / (2.0 * l) * trace.gs[n].norm_squared()
        }
    };
    Ok(base - m)
}

/// Slack of the multi-step sufficient decrease inequality for a trace of
/// `[h_a, alpha, h_b]` with `len(h_a) = n_a`, `sum(h_b) = sum_b` and
/// `1 <= alpha < sum_b + 2`:
///
/// `f_n - f_m - (s + 3a - 2a^2)/(s + 2 - a) ||g_n||^2/(2L)
///  - (2s^2 + 3s + a)/(s + 2 - a) ||g_m||^2/(2L)`.
pub fn sufficient_decrease_slack(
    trace: &GDTrace,
    n_a: usize,
    alpha: f64,
    sum_b: f64,
) -> Result<f64> {
    if !(alpha >= 1.0 && alpha < sum_b + 2.0) {
        return Err(Error::Domain {
            what: "joint step alpha (needs 1 <= alpha < sum_b + 2)",
            value: alpha,
        });
    }
    let m = trace.steps();
    if n_a >= m {
        return Err(Error::Shape {
            expected: m.saturating_sub(1),
            found: n_a,
        });
    }
    let (s, a, l) = (sum_b, alpha, trace.l);
    let den = s + 2.0 - a;
    let gn = trace.gs[n_a].norm_squared() / (2.0 * l);
    let gm = trace.gs[m].norm_squared() / (2.0 * l);
    Ok(trace.fs[n_a]
        - trace.fs[m]
        - (s + 3.0 * a - 2.0 * a * a) / den * gn
        - (2.0 * s * s + 3.0 * s + a) / den * gm)
}

/// A test function with a starting point.
pub struct Instance {
    pub oracle: Box<dyn FunctionOracle>,
    pub x0: DVector<f64>,
}

/// Quadratics (full rank and rank-deficient), log-sum-exp, logistic
/// regression and a Huber function, all in dimension `d`, with random
/// starting points.
pub fn standard_instances(d: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = |rng: &mut ChaCha8Rng| DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
    let mut out: Vec<Instance> = Vec::new();
    let q = Quadratic::random(d, d, &mut rng);
    out.push(Instance {
        x0: start(&mut rng),
        oracle: Box::new(q),
    });
    let q = Quadratic::random(d, (d / 2).max(1), &mut rng);
    out.push(Instance {
        x0: start(&mut rng),
        oracle: Box::new(q),
    });
    let f = LogSumExp::random(d, 2 * d, &mut rng);
    out.push(Instance {
        x0: start(&mut rng),
        oracle: Box::new(f),
    });
    let f = Logistic::random(d, 3 * d, &mut rng);
    out.push(Instance {
        x0: start(&mut rng),
        oracle: Box::new(f),
    });
    let spec = HuberSpec {
        w: 5.0,
        l: 1.5,
        variant: HuberVariant::Objective,
    };
    let f = huber_any_width(spec, d).expect("w > 1 and d >= 1");
    out.push(Instance {
        x0: start(&mut rng),
        oracle: Box::new(f),
    });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub label: String,
    pub oracle: String,
    pub n: usize,
    /// Bound minus achieved quantity; negative means violated.
    pub bound_slack: f64,
    pub dominance_slack: Option<f64>,
    pub q_max: f64,
    pub scale: f64,
}

impl SweepCase {
    pub fn passed(&self) -> bool {
        let floor = -INEQUALITY_TOL * self.scale;
        self.bound_slack >= floor
            && self.dominance_slack.is_none_or(|s| s >= floor)
            && self.q_max <= INEQUALITY_TOL * self.scale
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub cases: Vec<SweepCase>,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &SweepCase> {
        self.cases.iter().filter(|c| !c.passed())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn min_bound_slack(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.bound_slack / c.scale)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_dominance_slack(&self) -> f64 {
        self.cases
            .iter()
            .filter_map(|c| c.dominance_slack.map(|s| s / c.scale))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_q(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.q_max / c.scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn certificate_for(h: &Schedule) -> Option<Certificate> {
    match h.kind() {
        Kind::Primitive => certificate_primitive(h).ok(),
        Kind::Dominant => h.provenance().and_then(|t| certificate_dominant(t).ok()),
        _ => None,
    }
}

fn sweep_case(
    label: &str,
    h: &Schedule,
    cert: Option<&Certificate>,
    inst: &Instance,
) -> Result<SweepCase> {
    let t = run_gd(inst.oracle.as_ref(), &inst.x0, h.steps())?;
    let (x_star, f_star) = t.optimum()?;
    let n = h.len();
    let scale = trace_scale(&t)?;
    let bound_slack = if h.admits(Kind::Dominant) {
        objective_bound(h)? * 0.5 * t.l * (&t.xs[0] - x_star).norm_squared() - (t.fs[n] - f_star)
    } else {
        gradient_bound(h)? * (t.fs[0] - f_star) - t.gs[n].norm_squared() / (2.0 * t.l)
    };
    let dominance_slack = cert.map(|c| dominance_check(&t, h, c)).transpose()?;
    let q = q_report(&t)?;
    Ok(SweepCase {
        label: label.to_string(),
        oracle: inst.oracle.name().to_string(),
        n,
        bound_slack,
        dominance_slack,
        q_max: q.max_entry,
        scale,
    })
}

/// Runs every schedule on every instance and records bound slack,
/// certificate slack (when a certificate is constructible) and the largest
/// interpolation quantity.
pub fn safety_sweep(
    schedules: &[(String, Schedule)],
    instances: &[Instance],
    exec: Execution,
) -> Result<SweepReport> {
    let certs: Vec<Option<Certificate>> = map_collect(schedules, exec, |(_, h)| certificate_for(h));
    let pairs: Vec<(usize, usize)> = (0..schedules.len())
        .flat_map(|i| (0..instances.len()).map(move |j| (i, j)))
        .collect();
    let cases = map_collect(&pairs, exec, |&(i, j)| {
        let (label, h) = &schedules[i];
        sweep_case(label, h, certs[i].as_ref(), &instances[j])
    });
    Ok(SweepReport {
        cases: cases.into_iter().collect::<Result<_>>()?,
    })
}
