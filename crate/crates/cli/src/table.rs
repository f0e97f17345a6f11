//! Bound-constant comparison tables.

use serde::Serialize;
use stepcat::analysis::{gradient_bound, objective_bound};
use stepcat::{dp, sequences, Execution, Kind, Schedule};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Objective,
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    Ours,
    Teboulle,
    Rotaru,
    Grimmer,
    DasguptaReference,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Teboulle => "teboulle",
            Method::Rotaru => "rotaru",
            Method::Grimmer => "grimmer",
            Method::DasguptaReference => "dasgupta_reference",
        }
    }
}

pub const DEFAULT_ROWS: [usize; 21] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 25, 31, 63, 127, 255, 511,
];

/// Published objective constants of the Das Gupta et al. schedules; these
/// come from a branch-and-bound search and are shipped as reference data.
const DASGUPTA: [(usize, f64); 17] = [
    (1, 0.250000),
    (2, 0.131892),
    (3, 0.085786),
    (4, 0.062340),
    (5, 0.048141),
    (6, 0.040197),
    (7, 0.032662),
    (8, 0.028109),
    (9, 0.024565),
    (10, 0.021245),
    (11, 0.019184),
    (12, 0.017282),
    (13, 0.015969),
    (14, 0.014752),
    (15, 0.013184),
    (25, 0.006952),
    (31, 0.005443),
];

pub const REFERENCE_NOTE: &str = "reference (not computed)";

#[derive(Debug, Clone)]
pub struct TableSpec {
    pub metric: Metric,
    pub rows: Vec<usize>,
    pub columns: Vec<Method>,
}

impl TableSpec {
    pub fn default_columns(metric: Metric) -> Vec<Method> {
        match metric {
            Metric::Objective => vec![
                Method::Ours,
                Method::Teboulle,
                Method::DasguptaReference,
                Method::Grimmer,
            ],
            Metric::Gradient => vec![Method::Ours, Method::Rotaru],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub n: usize,
    /// One entry per column; `None` is an unavailable cell.
    pub values: Vec<Option<f64>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub metric: Metric,
    pub columns: Vec<Method>,
    pub rows: Vec<Row>,
}

/// Computes every requested cell. Rows above `n_max` are a usage error.
pub fn build(spec: &TableSpec, n_max: usize, exec: Execution) -> Result<Table, UsageError> {
    let top = spec.rows.iter().copied().max().unwrap_or(0);
    if top > n_max {
        return Err(UsageError(format!("row n = {top} exceeds --n-max {n_max}")));
    }
    for &m in &spec.columns {
        let ok = match (spec.metric, m) {
            (Metric::Objective, Method::Rotaru) => false,
            (Metric::Gradient, Method::Teboulle | Method::Grimmer | Method::DasguptaReference) => {
                false
            }
            _ => true,
        };
        if !ok {
            return Err(UsageError(format!(
                "column `{}` has no {:?} constants",
                m.as_str(),
                spec.metric
            )));
        }
    }

    let ours = match spec.metric {
        Metric::Objective => dp::dom_pp_with(top, exec),
        Metric::Gradient => {
            dp::tri_family_with(top, exec).map_err(|e| UsageError(e.to_string()))?
        }
    };
    let tv = sequences::teboulle_vaisbourd(top);
    let ro = sequences::rotaru(top);
    let prefix =
        |s: &Schedule, n: usize, kind: Kind| Schedule::new(s.steps()[..n].to_vec(), kind).ok();

    let mut rows = Vec::with_capacity(spec.rows.len());
    for &n in &spec.rows {
        let mut notes = Vec::new();
        let values =
            spec.columns
                .iter()
                .map(|&m| {
                    let v =
                        match m {
                            Method::Ours => {
                                let h = ours.schedule(n).ok()?;
                                match spec.metric {
                                    Metric::Objective => objective_bound(&h).ok(),
                                    Metric::Gradient => gradient_bound(&h).ok(),
                                }
                            }
                            Method::Teboulle => prefix(&tv, n, Kind::Primitive)
                                .and_then(|h| objective_bound(&h).ok()),
                            Method::Rotaru => {
                                prefix(&ro, n, Kind::GBounded).and_then(|h| gradient_bound(&h).ok())
                            }
                            Method::Grimmer => sequences::grimmer_for_length(n)
                                .and_then(|h| objective_bound(&h).ok()),
                            Method::DasguptaReference => {
                                let v = DASGUPTA.iter().find(|(k, _)| *k == n).map(|(_, v)| *v);
                                if v.is_some() {
                                    notes.push(format!("{}: {REFERENCE_NOTE}", m.as_str()));
                                }
                                v
                            }
                        };
                    if v.is_none() {
                        notes.push(format!("{}: unavailable", m.as_str()));
                    }
                    v
                })
                .collect();
        rows.push(Row { n, values, notes });
    }
    Ok(Table {
        metric: spec.metric,
        columns: spec.columns.clone(),
        rows,
    })
}

impl Table {
    /// `n,<columns...>,note` with 6-decimal cells and empty unavailable cells.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["n".to_string()];
        header.extend(self.columns.iter().map(|m| m.as_str().to_string()));
        header.push("note".into());
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.n.to_string()];
            rec.extend(
                r.values
                    .iter()
                    .map(|v| v.map(|x| format!("{x:.6}")).unwrap_or_default()),
            );
            rec.push(r.notes.join("; "));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(t: &Table, n: usize, m: Method) -> Option<f64> {
        let col = t.columns.iter().position(|c| *c == m).unwrap();
        t.rows.iter().find(|r| r.n == n).unwrap().values[col]
    }

    #[test]
    fn objective_examples() {
        let spec = TableSpec {
            metric: Metric::Objective,
            rows: vec![1, 3, 7, 511],
            columns: TableSpec::default_columns(Metric::Objective),
        };
        let t = build(&spec, 8192, Execution::Sequential).unwrap();
        for (n, want) in [(1, 0.250000), (3, 0.085786), (7, 0.032662), (511, 0.000152)] {
            assert!((cell(&t, n, Method::Ours).unwrap() - want).abs() < 1e-6);
        }
        assert_eq!(cell(&t, 511, Method::DasguptaReference), None);
        assert!(cell(&t, 7, Method::Grimmer).is_some());
    }

    #[test]
    fn gradient_example() {
        let spec = TableSpec {
            metric: Metric::Gradient,
            rows: vec![2],
            columns: vec![Method::Rotaru],
        };
        let t = build(&spec, 8192, Execution::Sequential).unwrap();
        assert!((cell(&t, 2, Method::Rotaru).unwrap() - 0.133975).abs() < 1e-6);
    }

    #[test]
    fn grimmer_gap_is_a_marker() {
        let spec = TableSpec {
            metric: Metric::Objective,
            rows: vec![2],
            columns: vec![Method::Grimmer],
        };
        let t = build(&spec, 8192, Execution::Sequential).unwrap();
        assert_eq!(t.rows[0].values, vec![None]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,grimmer,note\n2,,grimmer: unavailable\n"
        );
    }

    #[test]
    fn bad_requests() {
        let spec = TableSpec {
            metric: Metric::Gradient,
            rows: vec![2],
            columns: vec![Method::Teboulle],
        };
        assert!(build(&spec, 10, Execution::Sequential).is_err());
        let spec = TableSpec {
            metric: Metric::Objective,
            rows: vec![20],
            columns: vec![Method::Ours],
        };
        assert!(build(&spec, 10, Execution::Sequential).is_err());
    }
}
