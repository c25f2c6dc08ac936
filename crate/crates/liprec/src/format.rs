//! JSON problem and report files.
//!
//! Matrices are row-major arrays of arrays. Floats are written in the
//! shortest decimal form that parses back to the same bits; non-finite
//! values are written as `null` and read back as NaN.

use std::path::Path;

use liprec_core::svdrec::{SvdFactors, SvdRecoveryMap};
use liprec_core::{
    LabeledPair, LabeledSet, Matrix, MwetHypothesis, ObservationVector, SignalVector,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<SignalSpec>,
    pub task: Task,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Certify,
    Mwet,
    Theorem1,
    Theorem3,
    Rip,
    Example3,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Certify => "certify",
            Task::Mwet => "mwet",
            Task::Theorem1 => "theorem1",
            Task::Theorem3 => "theorem3",
            Task::Rip => "rip",
            Task::Example3 => "example3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorSpec {
    Matrix {
        rows: usize,
        cols: usize,
        data: Vec<Vec<f64>>,
    },
    PiecewiseExample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSpec {
    /// Explicit signals.
    #[serde(alias = "finite_list")]
    List { data: Vec<Vec<f64>> },
    /// `count` evenly spaced points from `start` to `end` inclusive.
    AffineSegment {
        start: Vec<f64>,
        end: Vec<f64>,
        count: usize,
    },
    /// `count` signals with `sparsity` standard normal entries on uniformly
    /// random supports. The dimension is the operator's signal dimension.
    SparseRandom {
        sparsity: usize,
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Parses a problem file, applying `key=value` overrides to the raw JSON
/// first. Bare keys address `params` (`task` addresses the top level);
/// dotted keys such as `signals.count` address nested fields. Values are
/// parsed as JSON and fall back to plain strings.
pub fn parse_problem(text: &str, overrides: &[String]) -> Result<ProblemFile, CliError> {
    let mut value: Value = serde_json::from_str(text)?;
    for kv in overrides {
        apply_override(&mut value, kv)?;
    }
    serde_path_to_error::deserialize(value).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

pub fn load_problem(path: &Path, overrides: &[String]) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem(&text, overrides)
}

pub fn apply_override(root: &mut Value, kv: &str) -> Result<(), CliError> {
    let (key, raw) = kv
        .split_once('=')
        .ok_or_else(|| CliError::Override(kv.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Override(kv.to_string()));
    }
    let path: Vec<&str> = if key.contains('.') {
        key.split('.').collect()
    } else if matches!(key, "task" | "operator" | "signals" | "params") {
        vec![key]
    } else {
        vec!["params", key]
    };
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = root;
    for (depth, part) in path.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::problem(format!(
                "override `{key}`: `{}` is not an object",
                path[..depth].join(".")
            ))
        })?;
        if depth + 1 == path.len() {
            obj.insert((*part).to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry(*part)
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("override path is nonempty")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: String,
    pub assertions: Vec<Assertion>,
    #[serde(default)]
    pub details: Map<String, Value>,
    pub metadata: Metadata,
}

impl Report {
    pub fn new(task: &str, seed: u64) -> Self {
        Self {
            task: task.to_string(),
            assertions: Vec::new(),
            details: Map::new(),
            metadata: Metadata {
                seed,
                runtime_ms: 0.0,
                version: env!("CARGO_PKG_VERSION").to_string(),
                deviations: Vec::new(),
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn push(&mut self, assertion: Assertion) {
        self.assertions.push(assertion);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("detail values serialize");
        self.details.insert(key.to_string(), value);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    #[serde(with = "nullable")]
    pub observed: f64,
    #[serde(with = "nullable")]
    pub bound: f64,
}

impl Assertion {
    /// Passes when `observed <= bound + slack`.
    pub fn at_most(name: &str, observed: f64, bound: f64, slack: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: observed <= bound + slack,
            observed,
            bound,
        }
    }

    pub fn flag(name: &str, passed: bool, observed: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            passed,
            observed,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    /// Wall-clock time; the only field that varies between identical runs.
    pub runtime_ms: f64,
    pub version: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deviations: Vec<String>,
}

/// Plain notation for moderate magnitudes, scientific otherwise.
pub fn show_float(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    use std::io::Write;
    let err = |source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&Matrix> for MatrixJson {
    fn from(m: &Matrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.to_rows(),
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<Matrix, CliError> {
        check_rows(&self.data, self.rows, self.cols, "matrix")?;
        if self.rows == 0 || self.cols == 0 {
            return Ok(Matrix::zeros(self.rows, self.cols));
        }
        Ok(Matrix::from_rows(&self.data)?)
    }
}

pub(crate) fn check_rows(
    data: &[Vec<f64>],
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<(), CliError> {
    if data.len() != rows {
        return Err(CliError::problem(format!(
            "{what} declares {rows} rows but data has {}",
            data.len()
        )));
    }
    if let Some((i, r)) = data.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(CliError::problem(format!(
            "{what} declares {cols} columns but data row {i} has {}",
            r.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub signal: Vec<f64>,
    pub observation: Vec<f64>,
}

/// An extension hypothesis: its training pairs and coordinate constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisJson {
    pub omega1: f64,
    pub training: Vec<PairJson>,
}

impl From<&MwetHypothesis> for HypothesisJson {
    fn from(h: &MwetHypothesis) -> Self {
        let set = h.training();
        Self {
            omega1: h.omega1(),
            training: (0..set.len())
                .map(|i| PairJson {
                    signal: set.signal(i).to_vec(),
                    observation: set.observation(i).to_vec(),
                })
                .collect(),
        }
    }
}

impl HypothesisJson {
    pub fn to_hypothesis(&self) -> Result<MwetHypothesis, CliError> {
        let pairs = self
            .training
            .iter()
            .map(|p| {
                Ok(LabeledPair::new(
                    SignalVector::new(p.signal.clone())?,
                    ObservationVector::new(p.observation.clone())?,
                ))
            })
            .collect::<Result<Vec<_>, liprec_core::Error>>()?;
        Ok(MwetHypothesis::fit(
            LabeledSet::with_tol_dup(pairs, 0.0)?,
            Some(self.omega1),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorsJson {
    pub operator: MatrixJson,
    pub u: MatrixJson,
    pub sigma: Vec<f64>,
    pub v1: MatrixJson,
    pub v2: MatrixJson,
    pub psi: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<MatrixJson>,
    pub effective_rank: usize,
    pub rank_reduced: bool,
}

impl From<&SvdFactors> for FactorsJson {
    fn from(f: &SvdFactors) -> Self {
        Self {
            operator: f.operator().into(),
            u: f.u().into(),
            sigma: f.sigma().to_vec(),
            v1: f.v1().into(),
            v2: f.v2().into(),
            psi: f.psi().into(),
            projection: f.projection().map(MatrixJson::from),
            effective_rank: f.effective_obs_dim(),
            rank_reduced: f.is_reduced(),
        }
    }
}

impl FactorsJson {
    pub fn to_factors(&self) -> Result<SvdFactors, CliError> {
        let projection = self
            .projection
            .as_ref()
            .map(MatrixJson::to_matrix)
            .transpose()?;
        Ok(SvdFactors::from_parts(
            self.operator.to_matrix()?,
            self.u.to_matrix()?,
            self.sigma.clone(),
            self.v1.to_matrix()?,
            self.v2.to_matrix()?,
            self.psi.to_matrix()?,
            projection,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMapJson {
    pub factors: FactorsJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<HypothesisJson>,
}

impl From<&SvdRecoveryMap> for RecoveryMapJson {
    fn from(m: &SvdRecoveryMap) -> Self {
        Self {
            factors: m.factors().into(),
            hypothesis: m.reduced().map(HypothesisJson::from),
        }
    }
}

impl RecoveryMapJson {
    pub fn to_map(&self) -> Result<SvdRecoveryMap, CliError> {
        let hypothesis = self
            .hypothesis
            .as_ref()
            .map(HypothesisJson::to_hypothesis)
            .transpose()?;
        Ok(SvdRecoveryMap::from_parts(
            self.factors.to_factors()?,
            hypothesis,
        )?)
    }
}
