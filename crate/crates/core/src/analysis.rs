//! Bound constants and asymptotic diagnostics for the schedule families.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dp::{self, Family, SumTable, TableOrigin};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::schedule::{Kind, Schedule};

/// Bound constants of one schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub sum: f64,
    pub kind: Kind,
    /// `1 / (2 sum + 1)` times `(L/2)||x0 - x*||^2` bounds `f_n - f*`.
    /// `None` for schedules without an objective guarantee.
    pub objective_constant: Option<f64>,
    /// `1 / (2 sum + 1)` times `f_0 - f*` bounds `||g_n||^2 / (2L)`.
    pub gradient_constant: Option<f64>,
}

fn constant(sum: f64) -> f64 {
    1.0 / (2.0 * sum + 1.0)
}

pub fn bound_report(h: &Schedule) -> BoundReport {
    let sum = h.sum();
    BoundReport {
        n: h.len(),
        sum,
        kind: h.kind(),
        objective_constant: h.admits(Kind::Dominant).then(|| constant(sum)),
        gradient_constant: h.admits(Kind::GBounded).then(|| constant(sum)),
    }
}

/// Objective constant of a dominant or primitive schedule.
pub fn objective_bound(h: &Schedule) -> Result<f64> {
    if !h.admits(Kind::Dominant) {
        return Err(Error::Classification {
            op: "objective_bound",
            expected: "dominant",
            found: h.kind(),
        });
    }
    Ok(constant(h.sum()))
}

/// Gradient-norm constant of a g-bounded schedule.
pub fn gradient_bound(h: &Schedule) -> Result<f64> {
    if !h.admits(Kind::GBounded) {
        return Err(Error::Classification {
            op: "gradient_bound",
            expected: "gbounded",
            found: h.kind(),
        });
    }
    Ok(constant(h.sum()))
}

/// Silver exponent `log2(1 + sqrt 2)`.
pub fn rho() -> f64 {
    (1.0 + std::f64::consts::SQRT_2).log2()
}

/// `g(mu) = 2 (1 - mu)^rho / (1 - mu^(rho/2))` on the open unit interval.
pub fn omega_objective(mu: f64) -> f64 {
    let r = rho();
    2.0 * (1.0 - mu).powf(r) / (1.0 - mu.powf(r / 2.0))
}

const OMEGA_GRID: usize = 10_000;
const OMEGA_WIDTH: f64 = 1e-12;

/// `max g(mu)` over `(0, 1)`, returned as `(value, argmax)`.
///
/// A uniform grid locates the peak; golden-section search then narrows the
/// bracketing cell to width `1e-12`.
pub fn omega() -> (f64, f64) {
    let grid: Vec<f64> = (1..OMEGA_GRID)
        .map(|i| i as f64 / OMEGA_GRID as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&m| omega_objective(m)).collect();

    let sign_changes = vals
        .windows(3)
        .filter(|w| (w[1] - w[0] > 0.0) != (w[2] - w[1] > 0.0))
        .count();
    if sign_changes != 1 {
        warn!("omega grid shows {sign_changes} slope changes; peak may not be unique");
    }

    let i = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let lo = if i == 0 { grid[0] / 2.0 } else { grid[i - 1] };
    let hi = if i + 1 == grid.len() {
        (grid[i] + 1.0) / 2.0
    } else {
        grid[i + 1]
    };
    let mu = golden_max(omega_objective, lo, hi, OMEGA_WIDTH);
    (omega_objective(mu), mu)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let m = (a + b) / 2.0;
    [a, c, m, d, b]
        .into_iter()
        .max_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(m)
}

/// `nu_l = min over 2^l - 1 <= n <= 2^(l+1) - 2 of (r[n] + 1) / (n + 2)^rho`
/// for `l = 0..=l_max`, from a primitive-family table.
///
/// Fails if the table is too short, or if the sequence is not
/// non-decreasing or does not start at `sqrt 2 - 1`.
pub fn nu_table(table: &SumTable, l_max: u32) -> Result<Vec<f64>> {
    if table.family() != Family::Circ {
        return Err(Error::InternalConsistency {
            n: 0,
            detail: format!("nu needs the primitive family, got {:?}", table.family()),
        });
    }
    let needed = (1usize << (l_max + 1)) - 2;
    if table.max_n() < needed {
        return Err(Error::Range {
            needed,
            available: table.max_n(),
        });
    }
    let r = table.r();
    let p = rho();
    let nu: Vec<f64> = (0..=l_max)
        .map(|l| {
            let lo = (1usize << l) - 1;
            let hi = (1usize << (l + 1)) - 2;
            (lo..=hi)
                .map(|n| (r[n] + 1.0) / ((n + 2) as f64).powf(p))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let nu0 = std::f64::consts::SQRT_2 - 1.0;
    if (nu[0] - nu0).abs() > 1e-12 {
        return Err(Error::InternalConsistency {
            n: 0,
            detail: format!("nu_0 = {} differs from sqrt(2) - 1", nu[0]),
        });
    }
    if let Some(l) = (1..nu.len()).find(|&l| nu[l] < nu[l - 1]) {
        return Err(Error::InternalConsistency {
            n: (1usize << l) - 1,
            detail: format!("nu_{l} = {} < nu_{} = {}", nu[l], l - 1, nu[l - 1]),
        });
    }
    Ok(nu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioScan {
    pub family: Family,
    pub n_lo: usize,
    pub n_hi: usize,
    pub min: f64,
    pub argmin: usize,
    pub max: f64,
    pub argmax: usize,
    /// `(n, r[n] / (n + 1)^rho)`.
    pub series: Vec<(usize, f64)>,
}

/// `r[n] / (n + 1)^rho` over `n_lo..=n_hi`.
pub fn ratio_scan(table: &SumTable, n_lo: usize, n_hi: usize) -> Result<RatioScan> {
    if n_lo == 0 || n_lo > n_hi {
        return Err(Error::Range {
            needed: n_lo.max(1),
            available: n_hi,
        });
    }
    if table.max_n() < n_hi {
        return Err(Error::Range {
            needed: n_hi,
            available: table.max_n(),
        });
    }
    let p = rho();
    let series: Vec<(usize, f64)> = (n_lo..=n_hi)
        .map(|n| (n, table.r()[n] / ((n + 1) as f64).powf(p)))
        .collect();
    let (argmin, min) = series
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("range is non-empty");
    let (argmax, max) = series
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("range is non-empty");
    Ok(RatioScan {
        family: table.family(),
        n_lo,
        n_hi,
        min,
        argmin,
        max,
        argmax,
        series,
    })
}

/// `(1 + x/w)(1 + y/w)` with `w = (x^(1/rho) + y^(1/rho))^rho`; 1 at the origin.
pub fn product_bound_value(x: f64, y: f64) -> f64 {
    let p = rho();
    let w = (x.powf(1.0 / p) + y.powf(1.0 / p)).powf(p);
    if w == 0.0 {
        1.0
    } else {
        (1.0 + x / w) * (1.0 + y / w)
    }
}

/// Left side of the omega inequality:
/// `2(1-mu)^rho + w mu^rho / 2 + sqrt(2 w mu^rho (1-mu)^rho + w^2 mu^(2 rho) / 4)`.
pub fn omega_inequality_lhs(mu: f64, w: f64) -> f64 {
    let p = rho();
    let a = (1.0 - mu).powf(p);
    let b = mu.powf(p);
    2.0 * a + 0.5 * w * b + (2.0 * w * b * a + 0.25 * w * w * b * b).sqrt()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AppendixReport {
    pub product_checks: usize,
    pub product_violations: usize,
    pub product_max: f64,
    pub iff_checks: usize,
    /// Samples within the comparison margin of the threshold, not judged.
    pub iff_skipped: usize,
    pub iff_violations: usize,
    pub counterexamples: Vec<String>,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.product_violations == 0 && self.iff_violations == 0
    }
}

const APPENDIX_MARGIN: f64 = 1e-9;

/// Random checks of the product bound on `[0, 1000]^2` and of both
/// directions of the omega iff-lemma.
pub fn appendix_property_suite(samples: usize, seed: u64) -> AppendixReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = AppendixReport::default();

    let fixed = [(0.0, 0.0), (1.0, 1.0), (0.0, 1000.0), (1000.0, 1000.0)];
    let random = (0..samples).map(|_| {
        (
            rng.random_range(0.0..=1000.0),
            rng.random_range(0.0..=1000.0),
        )
    });
    for (x, y) in fixed.into_iter().chain(random.collect::<Vec<_>>()) {
        let v = product_bound_value(x, y);
        rep.product_checks += 1;
        rep.product_max = rep.product_max.max(v);
        if v > 2.0 + APPENDIX_MARGIN {
            rep.product_violations += 1;
            rep.counterexamples
                .push(format!("product bound: x={x} y={y} value={v}"));
        }
    }

    for _ in 0..samples {
        let mu: f64 = rng.random_range(1e-6..1.0 - 1e-6);
        let threshold = omega_objective(mu);
        let w: f64 = rng.random_range(0.0..2.0 * threshold);
        if (w - threshold).abs() <= APPENDIX_MARGIN * threshold {
            rep.iff_skipped += 1;
            continue;
        }
        rep.iff_checks += 1;
        let holds = omega_inequality_lhs(mu, w) <= w;
        if holds != (w >= threshold) {
            rep.iff_violations += 1;
            rep.counterexamples.push(format!(
                "omega lemma: mu={mu} w={w} threshold={threshold} inequality_holds={holds}"
            ));
        }
    }
    rep
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub rho: f64,
    pub omega: f64,
    pub omega_argmax: f64,
    pub nu: Vec<f64>,
    /// Which table the `nu` values came from.
    pub nu_origin: TableOrigin,
    /// Outcome of the midpoint/full-DP agreement check, when the midpoint
    /// table was needed.
    pub midpoint_gate: Option<bool>,
    pub circ: RatioScan,
    pub bullet: RatioScan,
}

/// Scan lower end used for the ratio extrema.
pub const RATIO_SCAN_START: usize = 16;

/// ϱ, ω, `nu_0..=nu_l_max` and ratio extrema over `[16, n_max]`.
///
/// When `2^(l_max+1) - 2 > n_max` the `nu` values come from the midpoint
/// table, gated against the full DP.
pub fn asymptotics(l_max: u32, n_max: usize, exec: Execution) -> Result<AsymptoticsReport> {
    let (circ, bullet) = dp::dp_tables(n_max, exec);
    let needed = (1usize << (l_max + 1)) - 2;
    let (nu, nu_origin, midpoint_gate) = if needed <= n_max {
        (nu_table(&circ, l_max)?, TableOrigin::FullDp, None)
    } else {
        let gate_table;
        let gate = if n_max >= dp::MIDPOINT_GATE {
            &circ
        } else {
            gate_table = dp::sum_recursion_with(Family::Circ, dp::MIDPOINT_GATE, exec);
            &gate_table
        };
        let mid = dp::midpoint_recursion_gated(needed, gate)?;
        (
            nu_table(&mid, l_max)?,
            TableOrigin::ConjectureAccelerated,
            Some(true),
        )
    };
    let lo = RATIO_SCAN_START.min(n_max.max(1));
    let hi = n_max.max(1);
    let (circ, bullet) = if n_max == 0 {
        let (c, b) = dp::dp_tables(1, exec);
        (ratio_scan(&c, 1, 1)?, ratio_scan(&b, 1, 1)?)
    } else {
        (ratio_scan(&circ, lo, hi)?, ratio_scan(&bullet, lo, hi)?)
    };
    let (omega, omega_argmax) = omega();
    Ok(AsymptoticsReport {
        rho: rho(),
        omega,
        omega_argmax,
        nu,
        nu_origin,
        midpoint_gate,
        circ,
        bullet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::sum_recursion;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn rho_examples() {
        assert!((rho() - 1.27155).abs() < 1e-5);
        assert!((2f64.powf(rho()) - (1.0 + SQRT2)).abs() < 1e-14);
        assert!((4f64.powf(rho()) - (1.0 + SQRT2).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn omega_value_and_local_maximality() {
        let (w, mu) = omega();
        assert!((w - 2.376373).abs() < 1e-6);
        assert!(w >= 2.376373);
        assert!(mu > 0.0 && mu < 1.0);
        assert!(omega_objective(mu - 1e-4) <= w);
        assert!(omega_objective(mu + 1e-4) <= w);
    }

    #[test]
    fn golden_section_on_parabola() {
        let m = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((m - 0.3).abs() < 1e-6);
    }

    #[test]
    fn bound_constants() {
        let d = Schedule::new(vec![1.5], Kind::Dominant).unwrap();
        assert_eq!(objective_bound(&d).unwrap(), 0.25);
        assert!(gradient_bound(&d).is_err());
        assert_eq!(objective_bound(&Schedule::empty()).unwrap(), 1.0);
        assert_eq!(gradient_bound(&Schedule::empty()).unwrap(), 1.0);
        let g = Schedule::new(vec![1.5], Kind::GBounded).unwrap();
        assert!(objective_bound(&g).is_err());
        let rep = bound_report(&g);
        assert_eq!(
            (rep.objective_constant, rep.gradient_constant),
            (None, Some(0.25))
        );
    }

    #[test]
    fn nu_small() {
        let t = sum_recursion(Family::Circ, 1022);
        let nu = nu_table(&t, 9).unwrap();
        assert!((nu[0] - (SQRT2 - 1.0)).abs() < 1e-12);
        assert!(nu.windows(2).all(|w| w[0] <= w[1]));
        assert!(matches!(nu_table(&t, 10), Err(Error::Range { .. })));
    }

    #[test]
    fn ratio_scan_circ_bounded_by_one() {
        let t = sum_recursion(Family::Circ, 600);
        let s = ratio_scan(&t, 1, 600).unwrap();
        assert!(s.max <= 1.0 + 1e-9);
        assert_eq!(s.series.len(), 600);
        assert!(ratio_scan(&t, 0, 10).is_err());
        assert!(ratio_scan(&t, 1, 601).is_err());
    }

    #[test]
    fn appendix_fixed_points() {
        assert_eq!(product_bound_value(0.0, 0.0), 1.0);
        let v = product_bound_value(1.0, 1.0);
        assert!((v - (1.0 + 2f64.powf(-rho())).powi(2)).abs() < 1e-12);
        // 1 + 2^-rho = sqrt 2, so the bound is attained on the diagonal
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn appendix_suite_small() {
        let rep = appendix_property_suite(2000, 7);
        assert!(rep.passed(), "{:?}", rep.counterexamples);
        assert!(rep.iff_checks > 1900);
    }

    #[test]
    fn just_below_threshold_fails_inequality() {
        for mu in [0.1, 0.318, 0.7, 0.95] {
            let t = omega_objective(mu);
            assert!(omega_inequality_lhs(mu, t * (1.0 - 1e-6)) > t * (1.0 - 1e-6));
            assert!(omega_inequality_lhs(mu, t * (1.0 + 1e-6)) <= t * (1.0 + 1e-6));
        }
    }
}
