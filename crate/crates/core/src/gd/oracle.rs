//! Convex, L-smooth test functions with known minimizers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

pub trait FunctionOracle: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Smoothness constant `L`.
    fn smoothness(&self) -> f64;

    /// `(f(x), grad f(x))`.
    fn evaluate(&self, x: &DVector<f64>) -> (f64, DVector<f64>);

    fn minimizer(&self) -> Option<&DVector<f64>> {
        None
    }

    fn min_value(&self) -> Option<f64> {
        None
    }
}

/// `f(x) = (1/2)(x - c)' A (x - c)` with `A` positive semidefinite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DMatrix<f64>,
    center: DVector<f64>,
    l: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != center.len() {
            return Err(Error::Shape {
                expected: center.len(),
                found: a.nrows(),
            });
        }
        let a = (&a + a.transpose()) * 0.5;
        let eig = a.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        let l = eig.eigenvalues.max();
        if min < -1e-12 * l.abs().max(1.0) {
            return Err(Error::Domain {
                what: "quadratic curvature eigenvalue",
                value: min,
            });
        }
        if !(l > 0.0) {
            return Err(Error::Domain {
                what: "quadratic smoothness",
                value: l,
            });
        }
        Ok(Quadratic { a, center, l })
    }

    /// `(L/2) x^2` in one dimension.
    pub fn scalar(l: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, l), DVector::zeros(1))
    }

    /// `A = B'B / d` with `B` of size `rank x d`, so `A` is singular when
    /// `rank < d`.
    pub fn random<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Self {
        let b = DMatrix::from_fn(rank.max(1), d, |_, _| rng.random_range(-1.0..1.0));
        let a = b.transpose() * &b / d as f64;
        let center = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        Self::new(a, center).expect("B'B is positive semidefinite and nonzero")
    }
}

impl FunctionOracle for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn evaluate(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let e = x - &self.center;
        let g = &self.a * &e;
        (0.5 * e.dot(&g), g)
    }

    fn minimizer(&self) -> Option<&DVector<f64>> {
        Some(&self.center)
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `f(x) = log sum_i exp(a_i'(x - c))` with rows summing to zero, so the
/// minimum `log m` is attained at `c`.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    rows: DMatrix<f64>,
    center: DVector<f64>,
    l: f64,
    f_star: f64,
}

impl LogSumExp {
    /// Rows are shifted to have zero mean. `L = max_i ||a_i||^2`.
    pub fn new(rows: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if rows.ncols() != center.len() {
            return Err(Error::Shape {
                expected: center.len(),
                found: rows.ncols(),
            });
        }
        let m = rows.nrows();
        let mean = rows.row_mean();
        let rows = DMatrix::from_fn(m, rows.ncols(), |i, j| rows[(i, j)] - mean[j]);
        let l = rows
            .row_iter()
            .map(|r| r.norm_squared())
            .fold(0.0, f64::max);
        if !(l > 0.0) {
            return Err(Error::Domain {
                what: "log-sum-exp smoothness",
                value: l,
            });
        }
        Ok(LogSumExp {
            rows,
            center,
            l,
            f_star: (m as f64).ln(),
        })
    }

    pub fn random<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Self {
        let rows = DMatrix::from_fn(m.max(2), d, |_, _| rng.random_range(-1.0..1.0));
        let center = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        Self::new(rows, center).expect("random rows are not all equal")
    }
}

impl FunctionOracle for LogSumExp {
    fn name(&self) -> &str {
        "log-sum-exp"
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn evaluate(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let z = &self.rows * (x - &self.center);
        let zmax = z.max();
        let e = z.map(|v| (v - zmax).exp());
        let total = e.sum();
        let p = e / total;
        (zmax + total.ln(), self.rows.tr_mul(&p))
    }

    fn minimizer(&self) -> Option<&DVector<f64>> {
        Some(&self.center)
    }

    fn min_value(&self) -> Option<f64> {
        Some(self.f_star)
    }
}

/// `f(x) = (1/m) sum_i log(1 + exp(-y_i a_i'x)) + (lambda/2)||x||^2`.
///
/// The minimizer is found by Newton's method at construction.
/// `L = ||A||_F^2 / (4m) + lambda`.
#[derive(Debug, Clone)]
pub struct Logistic {
    a: DMatrix<f64>,
    y: DVector<f64>,
    lambda: f64,
    l: f64,
    x_star: DVector<f64>,
    f_star: f64,
}

fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, lambda: f64) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(Error::Shape {
                expected: a.nrows(),
                found: y.len(),
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain {
                what: "logistic regularization",
                value: lambda,
            });
        }
        let m = a.nrows() as f64;
        let l = a.norm_squared() / (4.0 * m) + lambda;
        let mut oracle = Logistic {
            a,
            y,
            lambda,
            l,
            x_star: DVector::zeros(0),
            f_star: 0.0,
        };
        let x_star = oracle.newton()?;
        oracle.f_star = oracle.eval(&x_star).0;
        oracle.x_star = x_star;
        Ok(oracle)
    }

    pub fn random<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Self {
        let a = DMatrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(m, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        Self::new(a, y, 0.1).expect("regularized problem has a unique minimizer")
    }

    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let m = self.a.nrows() as f64;
        let margins = (&self.a * x).component_mul(&self.y);
        let f = margins.iter().map(|&t| log1p_exp(-t)).sum::<f64>() / m
            + 0.5 * self.lambda * x.norm_squared();
        let coef = DVector::from_fn(margins.len(), |i, _| -self.y[i] * sigmoid(-margins[i]) / m);
        let g = self.a.tr_mul(&coef) + x * self.lambda;
        (f, g)
    }

    fn newton(&self) -> Result<DVector<f64>> {
        let d = self.a.ncols();
        let m = self.a.nrows() as f64;
        let mut x = DVector::zeros(d);
        for _ in 0..100 {
            let (_, g) = self.eval(&x);
            if g.norm() < 1e-15 {
                break;
            }
            let margins = (&self.a * &x).component_mul(&self.y);
            let w = DVector::from_fn(margins.len(), |i, _| {
                let s = sigmoid(margins[i]);
                s * (1.0 - s) / m
            });
            let aw = DMatrix::from_fn(self.a.nrows(), d, |i, j| self.a[(i, j)] * w[i]);
            let hess = self.a.tr_mul(&aw) + DMatrix::identity(d, d) * self.lambda;
            let step = hess
                .cholesky()
                .ok_or(Error::Domain {
                    what: "logistic Hessian",
                    value: f64::NAN,
                })?
                .solve(&g);
            x -= step;
        }
        Ok(x)
    }
}

impl FunctionOracle for Logistic {
    fn name(&self) -> &str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn evaluate(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        self.eval(x)
    }

    fn minimizer(&self) -> Option<&DVector<f64>> {
        Some(&self.x_star)
    }

    fn min_value(&self) -> Option<f64> {
        Some(self.f_star)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HuberVariant {
    /// `w = 2 sum(h) + 1`; attains the objective bound.
    Objective,
    /// `w = sum(h) + 1`; attains the gradient-norm bound.
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberSpec {
    pub w: f64,
    pub l: f64,
    pub variant: HuberVariant,
}

impl HuberSpec {
    /// The worst-case function for a schedule with step sum `sum`.
    pub fn for_sum(sum: f64, l: f64, variant: HuberVariant) -> Self {
        let w = match variant {
            HuberVariant::Objective => 2.0 * sum + 1.0,
            HuberVariant::Gradient => sum + 1.0,
        };
        HuberSpec { w, l, variant }
    }
}

/// `f(x) = (L/w)||x|| - L/(2w^2)` for `||x|| >= 1/w`, else `(L/2)||x||^2`.
#[derive(Debug, Clone)]
pub struct Huber {
    w: f64,
    l: f64,
    origin: DVector<f64>,
}

impl Huber {
    pub fn w(&self) -> f64 {
        self.w
    }
}

pub fn huber_oracle(spec: HuberSpec, d: usize) -> Result<Huber> {
    if !(spec.w > 1.0 && spec.w.is_finite()) {
        return Err(Error::Domain {
            what: "Huber width w (must exceed 1)",
            value: spec.w,
        });
    }
    huber_any_width(spec, d)
}

/// Also admits `w = 1`, the worst case of the empty schedule, where the kink
/// sits on the unit sphere.
pub(crate) fn huber_any_width(spec: HuberSpec, d: usize) -> Result<Huber> {
    if !(spec.w >= 1.0 && spec.w.is_finite()) {
        return Err(Error::Domain {
            what: "Huber width w",
            value: spec.w,
        });
    }
    if !(spec.l > 0.0 && spec.l.is_finite()) {
        return Err(Error::Domain {
            what: "Huber smoothness L",
            value: spec.l,
        });
    }
    if d == 0 {
        return Err(Error::Shape {
            expected: 1,
            found: 0,
        });
    }
    Ok(Huber {
        w: spec.w,
        l: spec.l,
        origin: DVector::zeros(d),
    })
}

impl FunctionOracle for Huber {
    fn name(&self) -> &str {
        "huber"
    }

    fn dim(&self) -> usize {
        self.origin.len()
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn evaluate(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let r = x.norm();
        let (w, l) = (self.w, self.l);
        if r >= 1.0 / w {
            (l / w * r - l / (2.0 * w * w), x * (l / (w * r)))
        } else {
            (0.5 * l * r * r, x * l)
        }
    }

    fn minimizer(&self) -> Option<&DVector<f64>> {
        Some(&self.origin)
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn huber_values() {
        let h = huber_oracle(
            HuberSpec {
                w: 4.0,
                l: 1.0,
                variant: HuberVariant::Objective,
            },
            1,
        )
        .unwrap();
        assert_eq!(h.evaluate(&v(&[1.0])).0, 0.21875);
        let (f0, g0) = h.evaluate(&v(&[0.0]));
        assert_eq!((f0, g0[0]), (0.0, 0.0));
        assert_eq!(h.evaluate(&v(&[-3.0])).1[0], -0.25);
    }

    #[test]
    fn huber_pieces_meet_at_kink() {
        let w = 7.3;
        let h = huber_oracle(
            HuberSpec {
                w,
                l: 2.0,
                variant: HuberVariant::Gradient,
            },
            3,
        )
        .unwrap();
        let dir = v(&[1.0, 2.0, -2.0]) / 3.0;
        let at = &dir / w;
        let (fa, ga) = h.evaluate(&at);
        let quad_f = 0.5 * 2.0 * at.norm_squared();
        let quad_g = &at * 2.0;
        assert!((fa - quad_f).abs() < 1e-12);
        assert!((ga - quad_g).norm() < 1e-12);
    }

    #[test]
    fn huber_rejects_narrow_width() {
        let spec = HuberSpec {
            w: 1.0,
            l: 1.0,
            variant: HuberVariant::Objective,
        };
        assert!(matches!(huber_oracle(spec, 1), Err(Error::Domain { .. })));
        assert!(huber_any_width(spec, 1).is_ok());
    }

    #[test]
    fn minimizers_are_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let oracles: Vec<Box<dyn FunctionOracle>> = vec![
            Box::new(Quadratic::random(5, 3, &mut rng)),
            Box::new(LogSumExp::random(5, 8, &mut rng)),
            Box::new(Logistic::random(5, 12, &mut rng)),
        ];
        for o in &oracles {
            let xs = o.minimizer().unwrap();
            let (f, g) = o.evaluate(xs);
            assert!(g.norm() < 1e-12, "{} gradient {}", o.name(), g.norm());
            assert!((f - o.min_value().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let oracles: Vec<Box<dyn FunctionOracle>> = vec![
            Box::new(Quadratic::random(4, 4, &mut rng)),
            Box::new(LogSumExp::random(4, 6, &mut rng)),
            Box::new(Logistic::random(4, 10, &mut rng)),
        ];
        for o in &oracles {
            let x = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
            let (_, g) = o.evaluate(&x);
            for j in 0..4 {
                let mut e = DVector::zeros(4);
                e[j] = 1e-6;
                let fd = (o.evaluate(&(&x + &e)).0 - o.evaluate(&(&x - &e)).0) / 2e-6;
                assert!((fd - g[j]).abs() < 1e-6, "{} coord {j}", o.name());
            }
        }
    }

    #[test]
    fn quadratic_smoothness_is_top_eigenvalue() {
        let q = Quadratic::new(
            DMatrix::from_diagonal(&v(&[0.5, 3.0, 0.0])),
            DVector::zeros(3),
        )
        .unwrap();
        assert!((q.smoothness() - 3.0).abs() < 1e-12);
        assert!(
            Quadratic::new(DMatrix::from_diagonal(&v(&[1.0, -1.0])), DVector::zeros(2)).is_err()
        );
    }
}
