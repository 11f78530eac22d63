use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::poly::{parse_poly, Polynomial};
use crate::strata::{Germ, Stratum};
use crate::verify::Subject;

use super::{CliError, Command};

/// A germ file: strata, functions, optional scale and sampling overrides,
/// and expected values checked against the reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermDocument {
    pub name: String,
    pub dimension: usize,
    pub variables: Vec<String>,
    pub f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default)]
    pub origin_stratum: bool,
    pub strata: Vec<StratumDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<ScaleOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumDocument {
    #[serde(default)]
    pub equalities: Vec<String>,
    #[serde(default)]
    pub inequalities: Vec<String>,
    pub dimension: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// `field` is `lhs`, `rhs` or `term.<name>` of the named command's report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub command: String,
    pub field: String,
    pub expected: i64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl GermDocument {
    pub fn from_toml(text: &str, origin: &str) -> Result<GermDocument, CliError> {
        let de = toml::Deserializer::new(text);
        let doc: GermDocument = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            file: origin.into(),
            field: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
        doc.validate(origin)?;
        Ok(doc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("germ documents always serialize")
    }

    fn vars(&self) -> Vec<&str> {
        self.variables.iter().map(String::as_str).collect()
    }

    fn parse(&self, field: &str, text: &str, origin: &str) -> Result<Polynomial, CliError> {
        parse_poly(text, &self.vars()).map_err(|source| CliError::Poly {
            file: origin.into(),
            field: field.into(),
            source,
        })
    }

    fn validate(&self, origin: &str) -> Result<(), CliError> {
        let schema = |field: &str, message: String| CliError::Schema {
            file: origin.into(),
            field: field.into(),
            message,
        };
        if self.variables.len() != self.dimension {
            return Err(schema(
                "variables",
                format!("{} names for dimension {}", self.variables.len(), self.dimension),
            ));
        }
        for (i, a) in self.assertions.iter().enumerate() {
            if Command::parse(&a.command).is_none() || a.command == "all" {
                return Err(schema(&format!("assertions[{i}].command"), format!("unknown command {:?}", a.command)));
            }
            if !(a.field == "lhs" || a.field == "rhs" || a.field.starts_with("term.")) {
                return Err(schema(
                    &format!("assertions[{i}].field"),
                    format!("expected lhs, rhs or term.<name>, got {:?}", a.field),
                ));
            }
        }
        self.subject(origin)?;
        Ok(())
    }

    /// The validated germ with its function f.
    pub fn subject(&self, origin: &str) -> Result<Subject, CliError> {
        let mut strata = Vec::new();
        for (i, s) in self.strata.iter().enumerate() {
            let eqs = s
                .equalities
                .iter()
                .enumerate()
                .map(|(j, e)| self.parse(&format!("strata[{i}].equalities[{j}]"), e, origin))
                .collect::<Result<Vec<_>, _>>()?;
            let ineqs = s
                .inequalities
                .iter()
                .enumerate()
                .map(|(j, e)| self.parse(&format!("strata[{i}].inequalities[{j}]"), e, origin))
                .collect::<Result<Vec<_>, _>>()?;
            strata.push(Stratum {
                equalities: eqs,
                inequalities: ineqs,
                dim: s.dimension,
            });
        }
        let germ = Germ::new(self.dimension, strata, self.origin_stratum).map_err(|e| CliError::Germ {
            file: origin.into(),
            source: e,
        })?;
        let f = self.parse("f", &self.f, origin)?;
        if !f.vanishes_at_origin() {
            return Err(CliError::Schema {
                file: origin.into(),
                field: "f".into(),
                message: "f(0) must be 0".into(),
            });
        }
        Ok(Subject {
            name: self.name.clone(),
            germ,
            f,
        })
    }

    pub fn g(&self, origin: &str) -> Result<Option<Polynomial>, CliError> {
        self.g.as_ref().map(|g| self.parse("g", g, origin)).transpose()
    }
}

pub fn load_germ(path: &Path) -> Result<GermDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    GermDocument::from_toml(&text, &path.display().to_string())
}
