use nalgebra::{DMatrix, DVector};

use super::oracle::FunctionOracle;
use crate::error::{Error, Result};

/// One gradient-descent run: `x_0..x_n`, `g_0..g_n`, `f_0..f_n`.
#[derive(Debug, Clone)]
pub struct GDTrace {
    pub xs: Vec<DVector<f64>>,
    pub gs: Vec<DVector<f64>>,
    pub fs: Vec<f64>,
    pub l: f64,
    pub x_star: Option<DVector<f64>>,
    pub f_star: Option<f64>,
    pub oracle: String,
}

impl GDTrace {
    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.xs.len() - 1
    }

    /// `G = [g_0, ..., g_n]` as a `d x (n+1)` matrix.
    pub fn gradient_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.gs)
    }

    pub(crate) fn optimum(&self) -> Result<(&DVector<f64>, f64)> {
        match (&self.x_star, self.f_star) {
            (Some(x), Some(f)) => Ok((x, f)),
            _ => Err(Error::Capability("minimizer and minimum value")),
        }
    }
}

/// `x_{i+1} = x_i - (h_i / L) g_i`.
pub fn run_gd(oracle: &dyn FunctionOracle, x0: &DVector<f64>, steps: &[f64]) -> Result<GDTrace> {
    if x0.len() != oracle.dim() {
        return Err(Error::Shape {
            expected: oracle.dim(),
            found: x0.len(),
        });
    }
    let l = oracle.smoothness();
    let n = steps.len();
    let mut xs = Vec::with_capacity(n + 1);
    let mut gs = Vec::with_capacity(n + 1);
    let mut fs = Vec::with_capacity(n + 1);
    let mut x = x0.clone();
    for i in 0..=n {
        let (f, g) = oracle.evaluate(&x);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { index: i });
        }
        let next = (i < n).then(|| &x - &g * (steps[i] / l));
        xs.push(x);
        gs.push(g);
        fs.push(f);
        if let Some(nx) = next {
            x = nx;
        } else {
            break;
        }
    }
    Ok(GDTrace {
        xs,
        gs,
        fs,
        l,
        x_star: oracle.minimizer().cloned(),
        f_star: oracle.min_value(),
        oracle: oracle.name().to_string(),
    })
}

/// Interpolation quantities of a trace; all are `<= 0` for smooth convex `f`.
#[derive(Debug, Clone)]
pub struct QReport {
    /// `Q_{i,j} = f_i - f_j + <g_i, x_j - x_i> + ||g_i - g_j||^2 / (2L)`.
    pub q: DMatrix<f64>,
    /// `Q_{i,*} = f_i - f* + <g_i, x* - x_i> + ||g_i||^2 / (2L)`.
    pub v: Vec<f64>,
    /// `Q_{*,i} = f* - f_i + ||g_i||^2 / (2L)`.
    pub q_star: Vec<f64>,
    pub max_entry: f64,
    /// `|f_0| + 1`; entries above `tol * scale` are flagged.
    pub scale: f64,
}

impl QReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_entry <= tol * self.scale
    }
}

pub fn q_report(trace: &GDTrace) -> Result<QReport> {
    let (x_star, f_star) = trace.optimum()?;
    let n = trace.xs.len();
    let inv2l = 1.0 / (2.0 * trace.l);
    let (xs, gs, fs) = (&trace.xs, &trace.gs, &trace.fs);
    let q = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            fs[i] - fs[j] + gs[i].dot(&(&xs[j] - &xs[i])) + (&gs[i] - &gs[j]).norm_squared() * inv2l
        }
    });
    let v: Vec<f64> = (0..n)
        .map(|i| fs[i] - f_star + gs[i].dot(&(x_star - &xs[i])) + gs[i].norm_squared() * inv2l)
        .collect();
    let q_star: Vec<f64> = (0..n)
        .map(|i| f_star - fs[i] + gs[i].norm_squared() * inv2l)
        .collect();
    let max_entry = q
        .iter()
        .chain(&v)
        .chain(&q_star)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(QReport {
        q,
        v,
        q_star,
        max_entry,
        scale: fs[0].abs() + 1.0,
    })
}
