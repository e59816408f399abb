//! TOML system descriptions shared by the command line tool and the
//! reproduction runs.
//!
//! ```toml
//! [meta]
//! name = "sinusoidal2"
//! n = 2
//! interval = [0.0, 6.283185307179586]
//! period = 6.283185307179586
//!
//! [[linear.segments]]
//! start = 0.0
//! end = 6.283185307179586
//! matrix = [[0, "1 + sin(t)"], ["1 + sin(t)", 0]]
//!
//! [experiment]
//! step = 0.001
//! ```
//!
//! Exactly one of `[linear]` and `[nonlinear]` is present. Matrix entries
//! are numbers or expression strings in `t`; nonlinear right-hand sides
//! are expressions in `t`, `x1..xn` and the input `u`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::floquet::{FloquetError, NonlinearSystem};
use crate::system::{Entry, Segment, SystemError, TimeVaryingSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("line {line}, column {column}: {message}")]
    Toml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Expr { path: String, source: ExprError },
    #[error("{0}")]
    Structure(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Nonlinear(#[from] FloquetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub name: String,
    pub n: usize,
    pub interval: (f64, f64),
    pub period: Option<f64>,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(TimeVaryingSystem),
    Nonlinear(NonlinearSystem),
}

/// Defaults for runs driven by the spec; every field is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Initial state for linear runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    /// Initial state for nonlinear runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Additional initial states for entrainment runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<Vec<f64>>>,
    /// Floquet mode coefficients.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_per_segment: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub meta: Meta,
    pub model: Model,
    pub experiment: Experiment,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    meta: RawMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    linear: Option<RawLinear>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nonlinear: Option<RawNonlinear>,
    #[serde(default, skip_serializing_if = "is_default")]
    experiment: Experiment,
}

fn is_default(e: &Experiment) -> bool {
    e == &Experiment::default()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    n: usize,
    interval: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinear {
    segments: Vec<RawSegment>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    start: f64,
    end: f64,
    matrix: Vec<Vec<RawEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Num(f64),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNonlinear {
    rhs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jacobian: Option<Vec<Vec<String>>>,
    domain_box: Vec<[f64; 2]>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_expr(path: String, src: &str) -> Result<Expr, SpecError> {
    Expr::parse(src).map_err(|source| SpecError::Expr { path, source })
}

impl SystemSpec {
    pub fn parse(src: &str) -> Result<SystemSpec, SpecError> {
        let raw: RawSpec = toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(src, s.start));
            SpecError::Toml {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let [a, b] = raw.meta.interval;
        let meta = Meta {
            name: raw.meta.name,
            n: raw.meta.n,
            interval: (a, b),
            period: raw.meta.period,
            description: raw.meta.description,
        };
        let n = meta.n;
        let model = match (raw.linear, raw.nonlinear) {
            (Some(lin), None) => Model::Linear(build_linear(&meta, lin)?),
            (None, Some(nl)) => Model::Nonlinear(build_nonlinear(&meta, nl)?),
            _ => {
                return Err(SpecError::Structure(
                    "exactly one of [linear] and [nonlinear] must be present".into(),
                ))
            }
        };
        let exp = &raw.experiment;
        for (key, v) in [("z0", &exp.z0), ("x0", &exp.x0), ("coeffs", &exp.coeffs)] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(SpecError::Structure(format!(
                        "experiment.{key} has {} entries, n = {n}",
                        v.len()
                    )));
                }
            }
        }
        if let Some(k) = exp.starts.iter().flatten().position(|s| s.len() != n) {
            return Err(SpecError::Structure(format!("experiment.starts[{k}] does not have {n} entries")));
        }
        Ok(SystemSpec {
            meta,
            model,
            experiment: raw.experiment,
        })
    }

    /// Serializes to TOML; [`SystemSpec::parse`] reads it back to an equal
    /// value.
    pub fn to_toml(&self) -> String {
        let (linear, nonlinear) = match &self.model {
            Model::Linear(sys) => (Some(raw_linear(sys)), None),
            Model::Nonlinear(sys) => (None, Some(raw_nonlinear(sys))),
        };
        let raw = RawSpec {
            meta: RawMeta {
                name: self.meta.name.clone(),
                description: self.meta.description.clone(),
                n: self.meta.n,
                interval: [self.meta.interval.0, self.meta.interval.1],
                period: self.meta.period,
            },
            linear,
            nonlinear,
            experiment: self.experiment.clone(),
        };
        toml::to_string(&raw).expect("spec serializes")
    }

    pub fn linear(&self) -> Option<&TimeVaryingSystem> {
        match &self.model {
            Model::Linear(s) => Some(s),
            Model::Nonlinear(_) => None,
        }
    }

    pub fn nonlinear(&self) -> Option<&NonlinearSystem> {
        match &self.model {
            Model::Nonlinear(s) => Some(s),
            Model::Linear(_) => None,
        }
    }
}

fn build_linear(meta: &Meta, lin: RawLinear) -> Result<TimeVaryingSystem, SpecError> {
    let n = meta.n;
    let mut segments = Vec::with_capacity(lin.segments.len());
    for (k, seg) in lin.segments.into_iter().enumerate() {
        if seg.matrix.len() != n || seg.matrix.iter().any(|r| r.len() != n) {
            return Err(SpecError::Structure(format!(
                "linear.segments[{k}].matrix must be {n}x{n}"
            )));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in seg.matrix.into_iter().enumerate() {
            for (j, e) in row.into_iter().enumerate() {
                entries.push(match e {
                    RawEntry::Num(v) => Entry::Const(v),
                    RawEntry::Text(s) => Entry::parse(&s).map_err(|source| SpecError::Expr {
                        path: format!("linear.segments[{k}].matrix[{i}][{j}]"),
                        source,
                    })?,
                });
            }
        }
        segments.push(Segment {
            start: seg.start,
            end: seg.end,
            entries,
        });
    }
    Ok(TimeVaryingSystem::new(n, meta.interval, segments, meta.period)?)
}

fn build_nonlinear(meta: &Meta, nl: RawNonlinear) -> Result<NonlinearSystem, SpecError> {
    let n = meta.n;
    if nl.rhs.len() != n {
        return Err(SpecError::Structure(format!("nonlinear.rhs has {} entries, n = {n}", nl.rhs.len())));
    }
    let rhs = nl
        .rhs
        .iter()
        .enumerate()
        .map(|(i, s)| parse_expr(format!("nonlinear.rhs[{i}]"), s))
        .collect::<Result<Vec<_>, _>>()?;
    let input = nl.input.as_deref().map(|s| parse_expr("nonlinear.input".into(), s)).transpose()?;
    let jacobian = match nl.jacobian {
        None => None,
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(SpecError::Structure(format!("nonlinear.jacobian must be {n}x{n}")));
            }
            let mut out = Vec::with_capacity(n * n);
            for (i, row) in rows.iter().enumerate() {
                for (j, s) in row.iter().enumerate() {
                    out.push(parse_expr(format!("nonlinear.jacobian[{i}][{j}]"), s)?);
                }
            }
            Some(out)
        }
    };
    let domain_box = nl.domain_box.iter().map(|[lo, hi]| (*lo, *hi)).collect();
    Ok(NonlinearSystem::new(rhs, input, jacobian, meta.period, domain_box)?)
}

fn raw_linear(sys: &TimeVaryingSystem) -> RawLinear {
    let n = sys.n();
    RawLinear {
        segments: sys
            .segments()
            .iter()
            .map(|seg| RawSegment {
                start: seg.start,
                end: seg.end,
                matrix: seg
                    .entries
                    .chunks(n)
                    .map(|row| {
                        row.iter()
                            .map(|e| match e {
                                Entry::Const(v) => RawEntry::Num(*v),
                                Entry::Expr(x) => RawEntry::Text(x.to_string()),
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn raw_nonlinear(sys: &NonlinearSystem) -> RawNonlinear {
    RawNonlinear {
        rhs: sys.rhs.iter().map(Expr::to_string).collect(),
        input: sys.input.as_ref().map(Expr::to_string),
        jacobian: sys
            .jacobian
            .as_ref()
            .map(|j| j.chunks(sys.n).map(|r| r.iter().map(Expr::to_string).collect()).collect()),
        domain_box: sys.domain_box.iter().map(|&(lo, hi)| [lo, hi]).collect(),
    }
}

/// Spec files shipped with the crate, by file name.
pub const SHIPPED: [(&str, &str); 6] = [
    ("switched.spec", include_str!("../../../specs/switched.spec")),
    ("schwarz3.spec", include_str!("../../../specs/schwarz3.spec")),
    ("sinusoidal2.spec", include_str!("../../../specs/sinusoidal2.spec")),
    ("takac.spec", include_str!("../../../specs/takac.spec")),
    ("entrain_demo.spec", include_str!("../../../specs/entrain_demo.spec")),
    ("zero_rhs.spec", include_str!("../../../specs/zero_rhs.spec")),
];

/// Looks up a shipped spec; the `.spec` suffix may be omitted.
pub fn shipped(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".spec").unwrap_or(name);
    SHIPPED
        .iter()
        .find(|(n, _)| n.strip_suffix(".spec") == Some(stem))
        .map(|(_, s)| *s)
}
