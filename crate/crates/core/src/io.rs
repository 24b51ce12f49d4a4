//! Versioned JSON files: measures, entropy-transport problems, solutions and
//! reports. Every document carries `"schema": 1`; infinite numbers are written
//! as the string `"inf"`.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::entropy::{EntropyDescriptor, Family};
use crate::entropy_transport::{EtProblem, EtSolution};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::tabulated::Tabulated;

pub const SCHEMA: u32 = 1;

fn check_schema(found: u32) -> Result<()> {
    if found != SCHEMA {
        return Err(Error::Parse(format!("unsupported schema {found}, expected {SCHEMA}")));
    }
    Ok(())
}

/// A real number that may be `+inf`, spelled `"inf"` in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else if self.0 < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Str(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(Real(f64::INFINITY)),
                "-inf" | "-infinity" => Ok(Real(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
            },
        }
    }
}

fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().map(|&x| Real(x)).collect()
}

fn unreal(v: &[Real]) -> Vec<f64> {
    v.iter().map(|x| x.0).collect()
}

/// Entropy as stored in files: either the spec string (`"powerlike:2"`,
/// `"tab:path"`) or `{"family", "params", "reversed"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntropyJson {
    Spec(String),
    Parts {
        family: String,
        #[serde(default)]
        params: Vec<Real>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        reversed: bool,
    },
}

impl EntropyJson {
    pub fn from_descriptor(f: &EntropyDescriptor) -> Self {
        match f.family() {
            Family::Tabulated(_) => EntropyJson::Spec(f.to_string()),
            fam => EntropyJson::Parts {
                family: fam.name().to_string(),
                params: reals(&fam.params()),
                path: None,
                reversed: f.is_reversed(),
            },
        }
    }

    /// Relative tabulated paths are resolved against `base`.
    pub fn to_descriptor(&self, base: Option<&Path>) -> Result<EntropyDescriptor> {
        let resolve = |p: &str| match base {
            Some(b) if Path::new(p).is_relative() => b.join(p),
            _ => Path::new(p).to_path_buf(),
        };
        match self {
            EntropyJson::Spec(s) => match s.split_once(':') {
                Some((name, path)) if name.trim().eq_ignore_ascii_case("tab") => {
                    Ok(EntropyDescriptor::tabulated(Tabulated::load(resolve(path.trim()))?))
                }
                _ => s.parse(),
            },
            EntropyJson::Parts { family, params, path, reversed } => {
                let f = if family.eq_ignore_ascii_case("tab") {
                    let p = path.as_deref().ok_or_else(|| Error::Parse("tabulated entropy needs \"path\"".into()))?;
                    EntropyDescriptor::tabulated(Tabulated::load(resolve(p))?)
                } else {
                    EntropyDescriptor::new(Family::from_parts(family, &unreal(params))?)?
                };
                Ok(if *reversed { f.reverse() } else { f })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub schema: u32,
    #[serde(default = "default_space")]
    pub space: String,
    /// Dense masses, atom `i` at index `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    /// Sparse `[index, mass]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(usize, f64)>>,
}

fn default_space() -> String {
    "X".into()
}

impl MeasureFile {
    pub fn from_measure(mu: &DiscreteMeasure) -> Self {
        MeasureFile { schema: SCHEMA, space: mu.space_id.clone(), masses: None, atoms: Some(mu.atoms().to_vec()) }
    }

    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        check_schema(self.schema)?;
        match (&self.masses, &self.atoms) {
            (Some(m), None) => DiscreteMeasure::from_masses(self.space.clone(), m),
            (None, Some(a)) => DiscreteMeasure::new(self.space.clone(), a.clone()),
            _ => Err(Error::Parse("a measure needs exactly one of \"masses\" or \"atoms\"".into())),
        }
    }
}

pub fn read_measure(path: impl AsRef<Path>) -> Result<DiscreteMeasure> {
    let file: MeasureFile = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
    file.to_measure()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema: u32,
    pub entropy: EntropyJson,
    pub cost: Vec<Vec<Real>>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
}

impl ProblemFile {
    pub fn from_problem(pb: &EtProblem) -> Self {
        ProblemFile {
            schema: SCHEMA,
            entropy: EntropyJson::from_descriptor(pb.entropy()),
            cost: pb.cost().iter().map(|r| reals(r)).collect(),
            mu1: pb.mu1().to_vec(),
            mu2: pb.mu2().to_vec(),
        }
    }

    pub fn to_problem(&self, base: Option<&Path>) -> Result<EtProblem> {
        check_schema(self.schema)?;
        let f = self.entropy.to_descriptor(base)?;
        let cost = self.cost.iter().map(|r| unreal(r)).collect();
        EtProblem::new(f, cost, self.mu1.clone(), self.mu2.clone())
    }
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<EtProblem> {
    let path = path.as_ref();
    let file: ProblemFile = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
    file.to_problem(path.parent())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub schema: u32,
    pub value: Real,
    pub plan: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl SolutionFile {
    pub fn from_solution(sol: &EtSolution) -> Self {
        SolutionFile {
            schema: SCHEMA,
            value: Real(sol.value),
            plan: sol.plan.entries().to_vec(),
            iterations: sol.report.iterations,
            converged: sol.report.converged,
        }
    }
}

/// Any report body tagged with the schema version and its kind.
#[derive(Debug, Clone, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema: u32,
    pub kind: &'a str,
    #[serde(flatten)]
    pub body: T,
}

pub fn report<T: Serialize>(kind: &str, body: T) -> Report<'_, T> {
    Report { schema: SCHEMA, kind, body }
}
