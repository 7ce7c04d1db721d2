//! Experiment specs: TOML files with a name, a kind, a truncation ladder, an
//! output directory and a kind-specific `[parameters]` table.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    HelsonSzegoLadder,
    ExampleNoest,
    ModelSpacePair,
    WeightedShiftSuite,
    BlockGram,
    DiracExample,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::HelsonSzegoLadder,
        Kind::ExampleNoest,
        Kind::ModelSpacePair,
        Kind::WeightedShiftSuite,
        Kind::BlockGram,
        Kind::DiracExample,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::HelsonSzegoLadder => "helson-szego-ladder",
            Kind::ExampleNoest => "example-noest",
            Kind::ModelSpacePair => "model-space-pair",
            Kind::WeightedShiftSuite => "weighted-shift-suite",
            Kind::BlockGram => "block-gram",
            Kind::DiracExample => "dirac-example",
        }
    }

    /// Accepted parameters with their types.
    pub fn schema(&self) -> &'static [(&'static str, ParamType)] {
        use ParamType::*;
        match self {
            Kind::HelsonSzegoLadder => &[("alpha", Float)],
            Kind::ExampleNoest => &[("c", FloatList), ("power_n", Int)],
            Kind::ModelSpacePair => &[
                ("atoms", Int),
                ("seed", Int),
                ("angles", FloatList),
                ("masses_u", FloatList),
                ("masses_v", FloatList),
            ],
            Kind::WeightedShiftSuite => &[
                ("beta", Float),
                ("alpha", Float),
                ("grid_spacing", Float),
                ("grid_radius", Float),
                ("classifier_ladder", IntList),
            ],
            Kind::BlockGram => &[("beta", Float), ("alpha", Float), ("c", Float), ("probes", IntList)],
            Kind::DiracExample => &[("divergence_terms", Int)],
        }
    }

    /// Parameters that must be present.
    pub fn required(&self) -> &'static [&'static str] {
        match self {
            Kind::HelsonSzegoLadder => &["alpha"],
            _ => &[],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Kind::ALL.iter().map(Kind::as_str).collect();
                format!("unknown kind `{s}`, expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Float,
    Int,
    FloatList,
    IntList,
}

impl ParamType {
    fn describe(&self) -> &'static str {
        match self {
            ParamType::Float => "a number",
            ParamType::Int => "an integer",
            ParamType::FloatList => "a list of numbers",
            ParamType::IntList => "a list of integers",
        }
    }

    fn accepts(&self, v: &Value) -> bool {
        let number = |v: &Value| matches!(v, Value::Float(_) | Value::Integer(_));
        match self {
            ParamType::Float => number(v),
            ParamType::Int => matches!(v, Value::Integer(_)),
            ParamType::FloatList => v.as_array().is_some_and(|a| a.iter().all(number)),
            ParamType::IntList => v
                .as_array()
                .is_some_and(|a| a.iter().all(|x| matches!(x, Value::Integer(_)))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub truncation_ladder: Vec<usize>,
    pub output_dir: Option<PathBuf>,
    pub parameters: Table,
}

const TOP_LEVEL: [&str; 6] = ["name", "kind", "description", "truncation_ladder", "output_dir", "parameters"];

impl ExperimentSpec {
    pub fn parse(text: &str) -> CliResult<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::schema(syntax_field(&e), e.message().to_string()))?;
        for key in table.keys() {
            if !TOP_LEVEL.contains(&key.as_str()) {
                return Err(CliError::schema(key, "unknown field"));
            }
        }
        let name = match table.get("name") {
            Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
            Some(_) => return Err(CliError::schema("name", "must be a nonempty string")),
            None => return Err(CliError::schema("name", "missing")),
        };
        let kind = match table.get("kind") {
            Some(Value::String(s)) => s.parse().map_err(|m| CliError::schema("kind", m))?,
            Some(_) => return Err(CliError::schema("kind", "must be a string")),
            None => return Err(CliError::schema("kind", "missing")),
        };
        let description = match table.get("description") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(CliError::schema("description", "must be a string")),
            None => None,
        };
        let truncation_ladder = parse_ladder(table.get("truncation_ladder"))?;
        let output_dir = match table.get("output_dir") {
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::schema("output_dir", "must be a string path")),
            None => None,
        };
        let parameters = match table.get("parameters") {
            Some(Value::Table(t)) => t.clone(),
            Some(_) => return Err(CliError::schema("parameters", "must be a table")),
            None => Table::new(),
        };
        let spec = Self {
            name,
            kind,
            description,
            truncation_ladder,
            output_dir,
            parameters,
        };
        spec.check_parameters()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn check_parameters(&self) -> CliResult<()> {
        let schema = self.kind.schema();
        for (key, value) in &self.parameters {
            let field = format!("parameters.{key}");
            match schema.iter().find(|(name, _)| name == key) {
                None => {
                    return Err(CliError::schema(
                        field,
                        format!("not a parameter of kind {}", self.kind),
                    ))
                }
                Some((_, ty)) if !ty.accepts(value) => {
                    return Err(CliError::schema(field, format!("must be {}", ty.describe())))
                }
                _ => {}
            }
        }
        for key in self.kind.required() {
            if !self.parameters.contains_key(*key) {
                return Err(CliError::schema(format!("parameters.{key}"), "missing"));
            }
        }
        if self.kind == Kind::ExampleNoest {
            if let Some(m) = self.truncation_ladder.iter().find(|m| *m % 2 == 1) {
                return Err(CliError::schema(
                    "truncation_ladder",
                    format!("block-pair truncations must be even, got {m}"),
                ));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Params<'_> {
        Params(&self.parameters)
    }
}

fn syntax_field(e: &toml::de::Error) -> String {
    e.span().map_or_else(|| "<document>".into(), |s| format!("<document> bytes {}..{}", s.start, s.end))
}

fn parse_ladder(v: Option<&Value>) -> CliResult<Vec<usize>> {
    let field = "truncation_ladder";
    let arr = match v {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(CliError::schema(field, "must be a list of integers")),
        None => return Err(CliError::schema(field, "missing")),
    };
    if arr.is_empty() {
        return Err(CliError::schema(field, "must be nonempty"));
    }
    let mut out = Vec::with_capacity(arr.len());
    for x in arr {
        match x {
            Value::Integer(n) if *n > 0 => out.push(*n as usize),
            _ => return Err(CliError::schema(field, "entries must be positive integers")),
        }
    }
    if out.windows(2).any(|p| p[0] >= p[1]) {
        return Err(CliError::schema(field, "must be strictly increasing"));
    }
    Ok(out)
}

/// Typed view of a validated parameter table.
#[derive(Debug, Clone, Copy)]
pub struct Params<'a>(&'a Table);

impl Params<'_> {
    pub fn float(&self, key: &str, default: f64) -> f64 {
        self.0.get(key).map_or(default, as_f64)
    }

    pub fn int(&self, key: &str, default: i64) -> i64 {
        self.0.get(key).and_then(Value::as_integer).unwrap_or(default)
    }

    pub fn floats(&self, key: &str) -> Option<Vec<f64>> {
        self.0
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().map(as_f64).collect())
    }

    pub fn ints(&self, key: &str) -> Option<Vec<i64>> {
        self.0
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_integer).collect())
    }
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Float(x) => *x,
        Value::Integer(n) => *n as f64,
        _ => f64::NAN,
    }
}

/// A spec shipped with the binary.
#[derive(Debug, Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub source: &'static str,
}

pub const BUILTINS: [Builtin; 7] = [
    Builtin {
        name: "hs-lower-holds",
        source: include_str!("../specs/hs-lower-holds.toml"),
    },
    Builtin {
        name: "hs-lower-decays",
        source: include_str!("../specs/hs-lower-decays.toml"),
    },
    Builtin {
        name: "block-pairs",
        source: include_str!("../specs/block-pairs.toml"),
    },
    Builtin {
        name: "model-space-pair",
        source: include_str!("../specs/model-space-pair.toml"),
    },
    Builtin {
        name: "weighted-shift-suite",
        source: include_str!("../specs/weighted-shift-suite.toml"),
    },
    Builtin {
        name: "block-gram",
        source: include_str!("../specs/block-gram.toml"),
    },
    Builtin {
        name: "dirac-example",
        source: include_str!("../specs/dirac-example.toml"),
    },
];

/// Resolves `builtin:<name>` or a file path to a spec and its source text.
pub fn resolve(arg: &str) -> CliResult<(ExperimentSpec, String)> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let b = BUILTINS
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| CliError::schema("spec", format!("no built-in spec named `{name}`")))?;
        return Ok((ExperimentSpec::parse(b.source)?, b.source.to_string()));
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok((ExperimentSpec::parse(&text)?, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(text: &str) -> String {
        match ExperimentSpec::parse(text) {
            Err(CliError::Schema { field, .. }) => field,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    const BASE: &str = r#"
name = "t"
kind = "helson-szego-ladder"
truncation_ladder = [16, 32]
output_dir = "out"
[parameters]
alpha = -0.25
"#;

    #[test]
    fn parses_a_valid_spec() {
        let s = ExperimentSpec::parse(BASE).unwrap();
        assert_eq!(s.kind, Kind::HelsonSzegoLadder);
        assert_eq!(s.truncation_ladder, vec![16, 32]);
        assert_eq!(s.params().float("alpha", 0.0), -0.25);
    }

    #[test]
    fn schema_errors_name_the_field() {
        assert_eq!(field_of(&BASE.replace("[16, 32]", "[]")), "truncation_ladder");
        assert_eq!(field_of(&BASE.replace("[16, 32]", "[32, 16]")), "truncation_ladder");
        assert_eq!(field_of(&BASE.replace("helson-szego-ladder", "nope")), "kind");
        assert_eq!(field_of(&BASE.replace("alpha = -0.25", "alpha = \"x\"")), "parameters.alpha");
        assert_eq!(field_of(&BASE.replace("alpha = -0.25", "beta = 1.0")), "parameters.beta");
        assert_eq!(field_of(&BASE.replace("alpha = -0.25", "")), "parameters.alpha");
        assert_eq!(field_of(&format!("{BASE}\nextra = 1")), "parameters.extra");
        assert_eq!(field_of(&BASE.replace("name = \"t\"", "")), "name");
    }

    #[test]
    fn builtins_parse() {
        for b in BUILTINS {
            let s = ExperimentSpec::parse(b.source).unwrap();
            assert_eq!(s.name, b.name);
            assert!(s.description.is_some());
        }
    }
}
