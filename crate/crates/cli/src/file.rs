//! JSON persistence for schedules.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use stepcat::analysis::bound_report;
use stepcat::{ConcatOp, ConstructionTree, Kind, Schedule};

use crate::UsageError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub format_version: u32,
    pub n: usize,
    pub kind: String,
    pub steps: Vec<f64>,
    pub sum: f64,
    pub objective_constant: Option<f64>,
    pub gradient_constant: Option<f64>,
    pub construction: Option<Node>,
}

/// One node of the construction tree. Leaves have `op = "leaf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub op: String,
    pub joint_step: Option<f64>,
    pub children: Vec<Node>,
}

impl Node {
    fn from_tree(t: &ConstructionTree) -> Node {
        match t {
            ConstructionTree::Leaf => Node {
                op: "leaf".into(),
                joint_step: None,
                children: Vec::new(),
            },
            ConstructionTree::Concat {
                op,
                left,
                joint,
                right,
                ..
            } => Node {
                op: op.as_str().into(),
                joint_step: Some(*joint),
                children: vec![Node::from_tree(left), Node::from_tree(right)],
            },
        }
    }

    fn to_tree(&self) -> Result<Arc<ConstructionTree>, UsageError> {
        let bad = |why: &str| UsageError(format!("construction node `{}`: {why}", self.op));
        if self.op == "leaf" {
            if !self.children.is_empty() || self.joint_step.is_some() {
                return Err(bad("leaves carry no joint step or children"));
            }
            return Ok(ConstructionTree::leaf());
        }
        let op = match self.op.as_str() {
            "con_pp" => ConcatOp::ConPP,
            "con_pd" => ConcatOp::ConPD,
            "con_gp" => ConcatOp::ConGP,
            _ => return Err(bad("unknown operation")),
        };
        let joint = self.joint_step.ok_or_else(|| bad("missing joint step"))?;
        let [l, r] = self.children.as_slice() else {
            return Err(bad("expected two children"));
        };
        Ok(ConstructionTree::concat(
            op,
            l.to_tree()?,
            joint,
            r.to_tree()?,
        ))
    }
}

impl ScheduleFile {
    pub fn from_schedule(h: &Schedule) -> Self {
        let rep = bound_report(h);
        ScheduleFile {
            format_version: FORMAT_VERSION,
            n: h.len(),
            kind: h.kind().as_str().into(),
            steps: h.steps().to_vec(),
            sum: rep.sum,
            objective_constant: rep.objective_constant,
            gradient_constant: rep.gradient_constant,
            construction: h.provenance().map(|t| Node::from_tree(t)),
        }
    }

    /// Rebuilds the schedule, checking the stored fields against each other.
    pub fn to_schedule(&self) -> Result<Schedule, UsageError> {
        if self.format_version != FORMAT_VERSION {
            return Err(UsageError(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let kind: Kind = self.kind.parse().map_err(UsageError)?;
        if self.n != self.steps.len() {
            return Err(UsageError(format!(
                "n = {} but {} steps",
                self.n,
                self.steps.len()
            )));
        }
        let h = match &self.construction {
            Some(node) => {
                let h = Schedule::from_tree(node.to_tree()?, kind);
                if h.steps() != self.steps.as_slice() {
                    return Err(UsageError(
                        "construction tree does not reproduce steps".into(),
                    ));
                }
                h
            }
            None => {
                Schedule::new(self.steps.clone(), kind).map_err(|e| UsageError(e.to_string()))?
            }
        };
        if (h.sum() - self.sum).abs() > 1e-12 * h.sum().max(1.0) {
            return Err(UsageError(format!(
                "stored sum {} differs from {}",
                self.sum,
                h.sum()
            )));
        }
        Ok(h)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
