//! Stepsize schedules, the joint-step formulas, and the three concatenation
//! operators.
//!
//! A schedule `h = [h_0, ..., h_{n-1}]` drives gradient descent through
//! `x_{i+1} = x_i - (h_i / L) grad f(x_i)`. Schedules carry a classification
//! tag that records which worst-case guarantee their construction proves:
//!
//! * [`Kind::Primitive`]: closed under [`con_pp`]; every primitive schedule is
//!   also dominant.
//! * [`Kind::Dominant`]: `f_n - f* <= (L/2)||x_0 - x*||^2 / (2 sum(h) + 1)`.
//! * [`Kind::GBounded`]: `||g_n||^2 / (2L) <= (f_0 - f*) / (2 sum(h) + 1)`.
//!
//! Tags are carried data. Operations trust them and refuse inputs whose tag
//! does not fit the operator.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance for the certificate identities.
pub const CERTIFICATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Primitive,
    Dominant,
    GBounded,
    Unclassified,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Primitive => "primitive",
            Kind::Dominant => "dominant",
            Kind::GBounded => "gbounded",
            Kind::Unclassified => "unclassified",
        }
    }

    /// Tag of the reversed schedule.
    pub fn reversed(self) -> Kind {
        match self {
            Kind::Dominant => Kind::GBounded,
            Kind::GBounded => Kind::Dominant,
            k => k,
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "primitive" => Ok(Kind::Primitive),
            "dominant" => Ok(Kind::Dominant),
            "gbounded" => Ok(Kind::GBounded),
            "unclassified" => Ok(Kind::Unclassified),
            other => Err(format!("unknown schedule kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConcatOp {
    ConPP,
    ConPD,
    ConGP,
}

impl ConcatOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ConcatOp::ConPP => "con_pp",
            ConcatOp::ConPD => "con_pd",
            ConcatOp::ConGP => "con_gp",
        }
    }

    pub fn reversed(self) -> ConcatOp {
        match self {
            ConcatOp::ConPP => ConcatOp::ConPP,
            ConcatOp::ConPD => ConcatOp::ConGP,
            ConcatOp::ConGP => ConcatOp::ConPD,
        }
    }
}

/// Record of how a schedule was assembled. In-order traversal
/// (left steps, joint step, right steps) reproduces the step vector.
///
/// Subtrees are shared through `Arc`, so a whole DP family costs O(1) nodes
/// per member.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstructionTree {
    Leaf,
    Concat {
        op: ConcatOp,
        left: Arc<ConstructionTree>,
        joint: f64,
        right: Arc<ConstructionTree>,
        len: usize,
        sum: f64,
    },
}

impl ConstructionTree {
    pub fn leaf() -> Arc<Self> {
        Arc::new(ConstructionTree::Leaf)
    }

    pub fn concat(
        op: ConcatOp,
        left: Arc<ConstructionTree>,
        joint: f64,
        right: Arc<ConstructionTree>,
    ) -> Arc<Self> {
        let len = left.len() + 1 + right.len();
        let sum = (left.sum() + right.sum()) + joint;
        Arc::new(ConstructionTree::Concat {
            op,
            left,
            joint,
            right,
            len,
            sum,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            ConstructionTree::Leaf => 0,
            ConstructionTree::Concat { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sum(&self) -> f64 {
        match self {
            ConstructionTree::Leaf => 0.0,
            ConstructionTree::Concat { sum, .. } => *sum,
        }
    }

    pub fn op(&self) -> Option<ConcatOp> {
        match self {
            ConstructionTree::Leaf => None,
            ConstructionTree::Concat { op, .. } => Some(*op),
        }
    }

    /// In-order step vector.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        // Explicit stack: dynamic-sequence trees can be thousands deep.
        let mut stack: Vec<Frame<'_>> = vec![Frame::Visit(self)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Emit(x) => out.push(x),
                Frame::Visit(ConstructionTree::Leaf) => {}
                Frame::Visit(ConstructionTree::Concat {
                    left, joint, right, ..
                }) => {
                    stack.push(Frame::Visit(right));
                    stack.push(Frame::Emit(*joint));
                    stack.push(Frame::Visit(left));
                }
            }
        }
        out
    }

    /// Mirror image: swaps children and exchanges ConPD with ConGP.
    pub fn reversed(&self) -> Arc<ConstructionTree> {
        match self {
            ConstructionTree::Leaf => ConstructionTree::leaf(),
            ConstructionTree::Concat {
                op,
                left,
                joint,
                right,
                ..
            } => ConstructionTree::concat(op.reversed(), right.reversed(), *joint, left.reversed()),
        }
    }
}

enum Frame<'a> {
    Visit(&'a ConstructionTree),
    Emit(f64),
}

/// Ordered positive step multipliers (already scaled by `1/L`) with a
/// classification tag and optional construction record.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    steps: Vec<f64>,
    kind: Kind,
    provenance: Option<Arc<ConstructionTree>>,
}

impl Schedule {
    /// The zero-iteration schedule; primitive, hence also dominant.
    pub fn empty() -> Self {
        Schedule {
            steps: Vec::new(),
            kind: Kind::Primitive,
            provenance: Some(ConstructionTree::leaf()),
        }
    }

    /// Wrap caller-supplied steps. The tag is trusted, the steps are checked.
    pub fn new(steps: Vec<f64>, kind: Kind) -> Result<Self> {
        validate_steps(&steps)?;
        let provenance = steps.is_empty().then(ConstructionTree::leaf);
        Ok(Schedule {
            steps,
            kind,
            provenance,
        })
    }

    pub fn from_tree(tree: Arc<ConstructionTree>, kind: Kind) -> Self {
        Schedule {
            steps: tree.flatten(),
            kind,
            provenance: Some(tree),
        }
    }

    pub(crate) fn from_parts(
        steps: Vec<f64>,
        kind: Kind,
        provenance: Option<Arc<ConstructionTree>>,
    ) -> Self {
        Schedule {
            steps,
            kind,
            provenance,
        }
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn into_steps(self) -> Vec<f64> {
        self.steps
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn provenance(&self) -> Option<&Arc<ConstructionTree>> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.steps.iter().sum()
    }

    /// Same steps under a different tag, e.g. a primitive promoted to dominant.
    pub fn with_kind(mut self, kind: Kind) -> Self {
        self.kind = kind;
        self
    }

    /// Whether this schedule may stand in for a schedule of class `role`.
    /// Primitive implies dominant, and the empty schedule belongs to every class.
    pub fn admits(&self, role: Kind) -> bool {
        if self.is_empty() && role != Kind::Unclassified {
            return true;
        }
        match role {
            Kind::Primitive => self.kind == Kind::Primitive,
            Kind::Dominant => matches!(self.kind, Kind::Primitive | Kind::Dominant),
            Kind::GBounded => self.kind == Kind::GBounded,
            Kind::Unclassified => true,
        }
    }

    fn require(&self, op: &'static str, role: Kind) -> Result<()> {
        if self.admits(role) {
            Ok(())
        } else {
            Err(Error::Classification {
                op,
                expected: role.as_str(),
                found: self.kind,
            })
        }
    }
}

fn validate_steps(steps: &[f64]) -> Result<()> {
    match steps
        .iter()
        .enumerate()
        .find(|(_, h)| !(h.is_finite() && **h > 0.0))
    {
        Some((index, &value)) => Err(Error::InvalidStep { index, value }),
        None => Ok(()),
    }
}

fn check_arg(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

/// Joint step of [`con_pp`]: the positive root of
/// `a^2 + (x + y) a - (xy + 2x + 2y + 2) = 0`, i.e.
/// `(-x - y + sqrt((x+y+2)^2 + 4(x+1)(y+1))) / 2`.
pub fn phi(x: f64, y: f64) -> Result<f64> {
    check_arg("phi: x", x)?;
    check_arg("phi: y", y)?;
    Ok(phi_unchecked(x, y))
}

/// [`phi`] without argument checks, for the DP inner loops.
///
/// Evaluated through the conjugate `2(xy + 2x + 2y + 2) / (sqrt(D) + x + y)`,
/// which has no cancellation when `x + y` is large. Symmetric in its
/// arguments bit-for-bit.
#[inline]
pub fn phi_unchecked(x: f64, y: f64) -> f64 {
    let s = x + y;
    let p = x * y;
    let disc = (s + 2.0) * (s + 2.0) + 4.0 * ((p + s) + 1.0);
    2.0 * ((p + 2.0 * s) + 2.0) / (disc.sqrt() + s)
}

/// Joint step of [`con_pd`] / [`con_gp`]: the positive root of
/// `2b^2 - (3 - 2y) b - (2xy + x + 4y) = 0`, i.e.
/// `(3 - 2y + sqrt((2y+1)(2y+8x+9))) / 4`.
pub fn psi(x: f64, y: f64) -> Result<f64> {
    check_arg("psi: x", x)?;
    check_arg("psi: y", y)?;
    Ok(psi_unchecked(x, y))
}

/// [`psi`] without argument checks. For `y > 3/2` the `3 - 2y` term would
/// cancel against the root, so the conjugate form is used there.
#[inline]
pub fn psi_unchecked(x: f64, y: f64) -> f64 {
    let disc = (2.0 * y + 1.0) * (2.0 * y + 8.0 * x + 9.0);
    if y <= 1.5 {
        (3.0 - 2.0 * y + disc.sqrt()) / 4.0
    } else {
        2.0 * (2.0 * x * y + x + 4.0 * y) / (disc.sqrt() + 2.0 * y - 3.0)
    }
}

/// `|a^2 + (x+y)a - (xy+2x+2y+2)| / (1+x+y)^2` for `a = phi(x, y)`.
pub fn phi_residual(x: f64, y: f64) -> f64 {
    let a = phi_unchecked(x, y);
    let r = a * a + (x + y) * a - (x * y + 2.0 * x + 2.0 * y + 2.0);
    r.abs() / ((1.0 + x + y) * (1.0 + x + y))
}

/// `|2b^2 - (3-2y)b - (2xy+x+4y)| / (1+x+y)^2` for `b = psi(x, y)`.
pub fn psi_residual(x: f64, y: f64) -> f64 {
    let b = psi_unchecked(x, y);
    let r = 2.0 * b * b - (3.0 - 2.0 * y) * b - (2.0 * x * y + x + 4.0 * y);
    r.abs() / ((1.0 + x + y) * (1.0 + x + y))
}

fn join(op: ConcatOp, left: &Schedule, joint: f64, right: &Schedule, kind: Kind) -> Schedule {
    let mut steps = Vec::with_capacity(left.len() + 1 + right.len());
    steps.extend_from_slice(&left.steps);
    steps.push(joint);
    steps.extend_from_slice(&right.steps);
    let provenance = match (&left.provenance, &right.provenance) {
        (Some(l), Some(r)) => Some(ConstructionTree::concat(op, l.clone(), joint, r.clone())),
        _ => None,
    };
    Schedule {
        steps,
        kind,
        provenance,
    }
}

/// `[h_a, phi(sum h_a, sum h_b), h_b]`: two primitive schedules give a
/// primitive one.
pub fn con_pp(h_a: &Schedule, h_b: &Schedule) -> Result<Schedule> {
    h_a.require("con_pp", Kind::Primitive)?;
    h_b.require("con_pp", Kind::Primitive)?;
    let alpha = phi_unchecked(h_a.sum(), h_b.sum());
    Ok(join(ConcatOp::ConPP, h_a, alpha, h_b, Kind::Primitive))
}

/// `[h_a, psi(sum h_a, sum h_d), h_d]`: primitive followed by dominant gives
/// a dominant schedule.
pub fn con_pd(h_a: &Schedule, h_d: &Schedule) -> Result<Schedule> {
    h_a.require("con_pd", Kind::Primitive)?;
    h_d.require("con_pd", Kind::Dominant)?;
    let beta = psi_unchecked(h_a.sum(), h_d.sum());
    Ok(join(ConcatOp::ConPD, h_a, beta, h_d, Kind::Dominant))
}

/// `[h_d, psi(sum h_b, sum h_d), h_b]`: g-bounded followed by primitive gives
/// a g-bounded schedule. Note the argument order of `psi`.
pub fn con_gp(h_d: &Schedule, h_b: &Schedule) -> Result<Schedule> {
    h_d.require("con_gp", Kind::GBounded)?;
    h_b.require("con_gp", Kind::Primitive)?;
    let beta = psi_unchecked(h_b.sum(), h_d.sum());
    Ok(join(ConcatOp::ConGP, h_d, beta, h_b, Kind::GBounded))
}

/// Steps in reverse order. Dominant and g-bounded tags swap; the
/// construction tree is mirrored.
pub fn reverse(h: &Schedule) -> Schedule {
    let mut steps = h.steps.clone();
    steps.reverse();
    Schedule {
        steps,
        kind: h.kind.reversed(),
        provenance: h.provenance.as_ref().map(|t| t.reversed()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateForm {
    /// `u = [h; 0]`.
    Primitive,
    /// `1'u = 2 sum(h) + 1`.
    Dominant,
}

/// Nonnegative multiplier vector of length `n + 1` witnessing a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    u: Vec<f64>,
    form: CertificateForm,
}

impl Certificate {
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn form(&self) -> CertificateForm {
        self.form
    }

    pub fn total(&self) -> f64 {
        self.u.iter().sum()
    }
}

pub fn certificate_primitive(h: &Schedule) -> Result<Certificate> {
    h.require("certificate_primitive", Kind::Primitive)?;
    let mut u = h.steps.clone();
    u.push(0.0);
    Ok(Certificate {
        u,
        form: CertificateForm::Primitive,
    })
}

/// Worst residuals of the three concatenation identities seen while building
/// a dominant certificate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityResiduals {
    pub lambda: f64,
    pub beta: f64,
    pub normalization: f64,
    pub levels: usize,
}

/// Builds the dominance certificate of a ConPD tree.
///
/// Per level `u_e = [h_a, gamma, (l1 - l2) u_d]` with `gamma = sum h_a + 2`,
/// `l2 = (2 sum h_a + 2) / sum u_d`, `l1 = l2 + 1/2 + sqrt(l2 + 1/4)`.
/// Primitive subtrees (including the empty leaf) enter as `[h; sum h + 1]`.
pub fn certificate_dominant(tree: &ConstructionTree) -> Result<Certificate> {
    certificate_dominant_with_residuals(tree).map(|(c, _)| c)
}

pub fn certificate_dominant_with_residuals(
    tree: &ConstructionTree,
) -> Result<(Certificate, IdentityResiduals)> {
    let mut res = IdentityResiduals::default();
    let (u, _) = dominant_parts(tree, &mut res)?;
    Ok((
        Certificate {
            u,
            form: CertificateForm::Dominant,
        },
        res,
    ))
}

fn dominant_parts(tree: &ConstructionTree, res: &mut IdentityResiduals) -> Result<(Vec<f64>, f64)> {
    match tree {
        ConstructionTree::Leaf => Ok((vec![1.0], 0.0)),
        ConstructionTree::Concat {
            op: ConcatOp::ConPP,
            ..
        } => {
            let mut u = tree.flatten();
            let s: f64 = u.iter().sum();
            u.push(s + 1.0);
            Ok((u, s))
        }
        ConstructionTree::Concat {
            op: ConcatOp::ConGP,
            ..
        } => Err(Error::Classification {
            op: "certificate_dominant",
            expected: "dominant",
            found: Kind::GBounded,
        }),
        ConstructionTree::Concat {
            op: ConcatOp::ConPD,
            left,
            joint,
            right,
            ..
        } => {
            let h_a = left.flatten();
            let (u_d, sum_d) = dominant_parts(right, res)?;
            let x: f64 = h_a.iter().sum();
            let u_d_total: f64 = u_d.iter().sum();
            let gamma = x + 2.0;
            let l2 = (2.0 * x + 2.0) / u_d_total;
            let l1 = l2 + 0.5 + (l2 + 0.25).sqrt();
            let scale = l1 - l2;

            let r_lambda = (l1 - scale * scale).abs() / l1;
            let r_beta = (joint - (gamma * scale + l2) / l1).abs() / joint.abs();

            let mut u = Vec::with_capacity(h_a.len() + 1 + u_d.len());
            u.extend_from_slice(&h_a);
            u.push(gamma);
            u.extend(u_d.iter().map(|v| scale * v));
            let sum_e = (x + sum_d) + joint;
            let total: f64 = u.iter().sum();
            let target = 2.0 * sum_e + 1.0;
            let r_norm = (total - target).abs() / target;

            res.lambda = res.lambda.max(r_lambda);
            res.beta = res.beta.max(r_beta);
            res.normalization = res.normalization.max(r_norm);
            res.levels += 1;

            for (identity, r) in [
                ("l1 = (l1 - l2)^2", r_lambda),
                ("beta = (gamma (l1 - l2) + l2) / l1", r_beta),
                ("1'u = 2 1'h + 1", r_norm),
            ] {
                if !(r <= CERTIFICATE_TOL) {
                    return Err(Error::CertificateConstruction {
                        identity,
                        residual: r,
                    });
                }
            }
            Ok((u, sum_e))
        }
    }
}
