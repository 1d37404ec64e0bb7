//! Scenario JSON parsing and serialization, trace records, and the built-in
//! Example 1 fixture.
//!
//! All money values are exact strings (`"-80"`, `"41/2"`); bare JSON integers
//! are accepted on input, floats are rejected.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::Trace;
use crate::lattice::{AwarenessLattice, Level};
use crate::outcomes::{MarginalMode, Outcome, OutcomeError, OutcomeSpaces, ValueTable};
use crate::scalar::Scalar;
use crate::scenario::{DrawSpec, Scenario, ValidationError};
use crate::transfers::{GrovesFamily, TransferResult, TransferScheme, YTable};
use crate::types::{
    AgentId, AgentTypesSpec, NatureDraw, PayoffType, ProjectionSpec, TypeError, TypeSystem,
};

pub const EXAMPLE1_JSON: &str = include_str!("../data/example1.json");

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}` (line {line}, column {column}): {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario at `{path}`: {source}")]
    Validation {
        path: String,
        source: ValidationError,
    },
}

impl ParseError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::Schema {
            path: path.into(),
            line: 0,
            column: 0,
            message: message.into(),
        }
    }

    fn invalid(path: impl Into<String>, source: impl Into<ValidationError>) -> Self {
        ParseError::Validation {
            path: path.into(),
            source: source.into(),
        }
    }
}

/// An exact money value as it appears in files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exact(pub String);

impl Serialize for Exact {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exact;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an exact rational such as \"-80\" or \"41/2\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exact, E> {
                Ok(Exact(v.to_string()))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exact, E> {
                Ok(Exact(v.to_string()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exact, E> {
                Ok(Exact(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LatticeFile {
    Powerset {
        items: Vec<String>,
    },
    Explicit {
        elements: Vec<String>,
        order: Vec<(String, String)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionFile {
    pub agent: String,
    pub from_level: String,
    pub to_level: String,
    pub map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomesFile {
    /// Outcomes feasible at every level.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub all_levels: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub levels: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub requires_agents: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawFile {
    pub true_types: BTreeMap<String, String>,
    pub awareness: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DrawsFile {
    Keyword(String),
    List(Vec<DrawFile>),
}

impl Default for DrawsFile {
    fn default() -> Self {
        DrawsFile::Keyword("all".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YEntryFile {
    pub agent: String,
    pub level: String,
    pub opponents: BTreeMap<String, String>,
    pub value: Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum YFile {
    Named(String),
    Constant {
        constant: Exact,
    },
    Table {
        table: Vec<YEntryFile>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<Exact>,
    },
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<YFile>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub awareness_bonus: bool,
}

impl Default for SchemeFile {
    fn default() -> Self {
        SchemeFile {
            scheme: "clarke".into(),
            marginal_mode: None,
            y: None,
            awareness_bonus: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub agents: Vec<String>,
    pub lattice: LatticeFile,
    /// agent → level → type ids
    pub types: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    pub projections: Vec<ProjectionFile>,
    pub outcomes: OutcomesFile,
    /// agent → type → outcome → value
    pub values: BTreeMap<String, BTreeMap<String, BTreeMap<String, Exact>>>,
    #[serde(default)]
    pub draws: DrawsFile,
    #[serde(default)]
    pub scheme: SchemeFile,
}

fn decode(text: &str) -> Result<ScenarioFile, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => ParseError::Schema {
                path,
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner.to_string()),
            },
            _ => ParseError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner.to_string()),
            },
        }
    })?;
    de.end().map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    Ok(file)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn parse_scenario<S: Scalar>(text: &str) -> Result<Scenario<S>, ParseError> {
    from_file(decode(text)?)
}

/// The built-in Example 1 scenario.
pub fn example1<S: Scalar>() -> Scenario<S> {
    parse_scenario(EXAMPLE1_JSON).expect("built-in fixture parses")
}

fn level_at(lat: &AwarenessLattice, label: &str, path: &str) -> Result<Level, ParseError> {
    lat.level(label).map_err(|e| ParseError::invalid(path, e))
}

fn agent_at(ts: &TypeSystem, name: &str, path: &str) -> Result<AgentId, ParseError> {
    ts.agent_by_name(name)
        .ok_or_else(|| ParseError::schema(path, format!("unknown agent `{name}`")))
}

fn type_at(
    ts: &TypeSystem,
    agent: AgentId,
    id: &str,
    path: &str,
) -> Result<PayoffType, ParseError> {
    ts.type_by_label(agent, id)
        .map_err(|e| ParseError::invalid(path, e))
}

fn money<S: Scalar>(v: &Exact, path: &str) -> Result<S, ParseError> {
    S::parse_exact(&v.0).ok_or_else(|| {
        ParseError::schema(
            path,
            format!(
                "`{}` is not an exact rational such as \"-80\" or \"41/2\"",
                v.0
            ),
        )
    })
}

pub fn from_file<S: Scalar>(file: ScenarioFile) -> Result<Scenario<S>, ParseError> {
    if file.agents.is_empty() {
        return Err(ParseError::schema(
            "agents",
            "at least one agent is required",
        ));
    }
    let (lattice, powerset_items) = match &file.lattice {
        LatticeFile::Powerset { items } => (AwarenessLattice::powerset(items), Some(items.clone())),
        LatticeFile::Explicit { elements, order } => {
            (AwarenessLattice::build(elements, order), None)
        }
    };
    let lattice = Arc::new(lattice.map_err(|e| ParseError::invalid("lattice", e))?);

    // Types
    let mut specs = Vec::with_capacity(file.agents.len());
    for name in &file.agents {
        if specs.iter().any(|s: &AgentTypesSpec| &s.name == name) {
            return Err(ParseError::schema(
                "agents",
                format!("duplicate agent `{name}`"),
            ));
        }
        let per_level = file
            .types
            .get(name)
            .ok_or_else(|| ParseError::schema(format!("types.{name}"), "missing type spaces"))?;
        let mut types = Vec::new();
        for (level, ids) in per_level {
            let l = level_at(&lattice, level, &format!("types.{name}.{level}"))?;
            types.extend(ids.iter().map(|id| (l, id.clone())));
        }
        specs.push(AgentTypesSpec {
            name: name.clone(),
            types,
        });
    }
    if let Some(extra) = file.types.keys().find(|k| !file.agents.contains(k)) {
        return Err(ParseError::schema(
            format!("types.{extra}"),
            format!("unknown agent `{extra}`"),
        ));
    }
    let mut projections = Vec::with_capacity(file.projections.len());
    for (k, p) in file.projections.iter().enumerate() {
        let path = format!("projections[{k}]");
        let agent = file
            .agents
            .iter()
            .position(|a| a == &p.agent)
            .ok_or_else(|| {
                ParseError::schema(
                    format!("{path}.agent"),
                    format!("unknown agent `{}`", p.agent),
                )
            })?;
        projections.push(ProjectionSpec {
            agent: AgentId(agent as u16),
            from: level_at(&lattice, &p.from_level, &format!("{path}.from_level"))?,
            to: level_at(&lattice, &p.to_level, &format!("{path}.to_level"))?,
            map: p.map.iter().map(|(a, b)| (a.clone(), b.clone())).collect(),
        });
    }
    let ts = TypeSystem::new(lattice.clone(), specs, &projections).map_err(|e| {
        let path = match &e {
            TypeError::UnknownType { .. }
            | TypeError::WrongLevel { .. }
            | TypeError::NotComparable { .. } => "projections",
            _ => "types",
        };
        ParseError::invalid(path, e)
    })?;

    // Outcomes
    let mut labels: Vec<String> = Vec::new();
    let mut per_level = vec![Vec::new(); lattice.len()];
    let intern =
        |label: &str, labels: &mut Vec<String>| match labels.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                labels.push(label.to_string());
                labels.len() - 1
            }
        };
    for x in &file.outcomes.all_levels {
        let i = intern(x, &mut labels);
        for slot in per_level.iter_mut() {
            slot.push(i);
        }
    }
    for (level, xs) in &file.outcomes.levels {
        let l = level_at(&lattice, level, &format!("outcomes.levels.{level}"))?;
        for x in xs {
            let i = intern(x, &mut labels);
            per_level[l.index()].push(i);
        }
    }
    let mut outcomes: Vec<Outcome> = labels
        .into_iter()
        .map(|label| Outcome {
            label,
            requires_agents: Vec::new(),
        })
        .collect();
    for (x, agents) in &file.outcomes.requires_agents {
        let path = format!("outcomes.requires_agents.{x}");
        let o = outcomes
            .iter_mut()
            .find(|o| &o.label == x)
            .ok_or_else(|| ParseError::invalid(&path, OutcomeError::UnknownOutcome(x.clone())))?;
        for a in agents {
            o.requires_agents.push(agent_at(&ts, a, &path)?);
        }
    }
    let spaces = OutcomeSpaces::new(&lattice, outcomes, per_level, ts.n_agents())
        .map_err(|e| ParseError::invalid("outcomes", e))?;

    // Values
    let mut values = ValueTable::empty(&ts, spaces.len());
    for (agent, by_type) in &file.values {
        let a = agent_at(&ts, agent, &format!("values.{agent}"))?;
        for (ty, by_outcome) in by_type {
            let path = format!("values.{agent}.{ty}");
            let t = type_at(&ts, a, ty, &path)?;
            for (x, v) in by_outcome {
                let path = format!("{path}.{x}");
                let o = spaces
                    .by_label(x)
                    .map_err(|e| ParseError::invalid(&path, e))?;
                if !spaces.is_feasible(o, ts.level(t)) {
                    return Err(ParseError::schema(
                        &path,
                        format!("outcome `{x}` is not feasible at the type's level"),
                    ));
                }
                values.set(t, o, money(v, &path)?);
            }
        }
    }

    // Draws
    let draws = match &file.draws {
        DrawsFile::Keyword(k) if k == "all" => DrawSpec::All,
        DrawsFile::Keyword(k) => {
            return Err(ParseError::schema(
                "draws",
                format!("expected \"all\" or a list, got `{k}`"),
            ))
        }
        DrawsFile::List(list) => {
            let mut out = Vec::with_capacity(list.len());
            for (k, d) in list.iter().enumerate() {
                let path = format!("draws[{k}]");
                let mut true_types = Vec::with_capacity(ts.n_agents());
                let mut awareness = Vec::with_capacity(ts.n_agents());
                for a in ts.agent_ids() {
                    let name = ts.agent_name(a);
                    let ty = d.true_types.get(name).ok_or_else(|| {
                        ParseError::schema(
                            format!("{path}.true_types"),
                            format!("missing agent `{name}`"),
                        )
                    })?;
                    true_types.push(type_at(&ts, a, ty, &format!("{path}.true_types.{name}"))?);
                    let l = d.awareness.get(name).ok_or_else(|| {
                        ParseError::schema(
                            format!("{path}.awareness"),
                            format!("missing agent `{name}`"),
                        )
                    })?;
                    awareness.push(level_at(&lattice, l, &format!("{path}.awareness.{name}"))?);
                }
                out.push(NatureDraw {
                    true_types,
                    awareness,
                });
            }
            DrawSpec::Explicit(out)
        }
    };

    let scheme = scheme_from_file(&file.scheme, &ts)?;
    let mut scenario =
        Scenario::new(file.name, ts, spaces, values, draws, scheme).map_err(|e| {
            let path = match &e {
                ValidationError::Projection(_) => "projections",
                ValidationError::Outcome(_) => "values",
                ValidationError::Draw { .. } => "draws",
                _ => "",
            };
            ParseError::invalid(path, e)
        })?;
    scenario.powerset_items = powerset_items;
    Ok(scenario)
}

pub fn scheme_from_file<S: Scalar>(
    f: &SchemeFile,
    ts: &TypeSystem,
) -> Result<TransferScheme<S>, ParseError> {
    let mode = match &f.marginal_mode {
        None => MarginalMode::default(),
        Some(m) => MarginalMode::parse(m).ok_or_else(|| {
            ParseError::schema(
                "scheme.marginal_mode",
                format!("unknown mode `{m}`; expected \"literal\" or \"exclude-participation\""),
            )
        })?,
    };
    let groves = match (f.scheme.as_str(), &f.y) {
        ("clarke", None) => GrovesFamily::Clarke(mode),
        ("clarke", Some(_)) => {
            return Err(ParseError::schema("scheme.y", "the clarke scheme fixes y"))
        }
        ("vcg", None) => GrovesFamily::Zero,
        ("vcg", Some(YFile::Named(n))) => match n.as_str() {
            "zero" => GrovesFamily::Zero,
            "clarke" => GrovesFamily::Clarke(mode),
            other => {
                return Err(ParseError::schema(
                    "scheme.y",
                    format!("unknown y family `{other}`"),
                ))
            }
        },
        ("vcg", Some(YFile::Constant { constant })) => {
            GrovesFamily::Constant(money(constant, "scheme.y.constant")?)
        }
        ("vcg", Some(YFile::Table { table, default })) => {
            let lat = ts.lattice();
            let mut entries = HashMap::new();
            for (k, e) in table.iter().enumerate() {
                let path = format!("scheme.y.table[{k}]");
                let agent = agent_at(ts, &e.agent, &format!("{path}.agent"))?;
                let level = level_at(lat, &e.level, &format!("{path}.level"))?;
                let mut opp = Vec::new();
                for b in ts.agent_ids().filter(|&b| b != agent) {
                    let name = ts.agent_name(b);
                    let id = e.opponents.get(name).ok_or_else(|| {
                        ParseError::schema(
                            format!("{path}.opponents"),
                            format!("missing agent `{name}`"),
                        )
                    })?;
                    opp.push(type_at(ts, b, id, &format!("{path}.opponents.{name}"))?);
                }
                entries.insert(
                    (agent, level, opp),
                    money(&e.value, &format!("{path}.value"))?,
                );
            }
            let default = match default {
                Some(d) => money(d, "scheme.y.default")?,
                None => S::zero(),
            };
            GrovesFamily::Table(YTable { entries, default })
        }
        (other, _) => {
            return Err(ParseError::schema(
                "scheme.scheme",
                format!("unknown scheme `{other}`; expected \"clarke\" or \"vcg\""),
            ))
        }
    };
    Ok(TransferScheme {
        groves,
        awareness_bonus: f.awareness_bonus,
    })
}

pub fn scheme_to_file<S: Scalar>(scheme: &TransferScheme<S>, ts: &TypeSystem) -> SchemeFile {
    let (name, mode, y) = match &scheme.groves {
        GrovesFamily::Clarke(m) => ("clarke", Some(m.as_str().to_string()), None),
        GrovesFamily::Zero => ("vcg", None, Some(YFile::Named("zero".into()))),
        GrovesFamily::Constant(c) => (
            "vcg",
            None,
            Some(YFile::Constant {
                constant: Exact(c.to_exact_string()),
            }),
        ),
        GrovesFamily::Table(t) => {
            let mut table: Vec<YEntryFile> = t
                .entries
                .iter()
                .map(|((a, l, opp), v)| YEntryFile {
                    agent: ts.agent_name(*a).to_string(),
                    level: ts.lattice().label(*l).to_string(),
                    opponents: opp
                        .iter()
                        .map(|&o| (ts.agent_name(o.agent).to_string(), ts.label(o).to_string()))
                        .collect(),
                    value: Exact(v.to_exact_string()),
                })
                .collect();
            table.sort_by(|a, b| {
                (&a.agent, &a.level, &a.opponents).cmp(&(&b.agent, &b.level, &b.opponents))
            });
            (
                "vcg",
                None,
                Some(YFile::Table {
                    table,
                    default: Some(Exact(t.default.to_exact_string())),
                }),
            )
        }
    };
    SchemeFile {
        scheme: name.into(),
        marginal_mode: mode,
        y,
        awareness_bonus: scheme.awareness_bonus,
    }
}

pub fn to_file<S: Scalar>(s: &Scenario<S>) -> ScenarioFile {
    let ts = &s.types;
    let lat = ts.lattice();
    let lattice = match &s.powerset_items {
        Some(items) => LatticeFile::Powerset {
            items: items.clone(),
        },
        None => LatticeFile::Explicit {
            elements: lat.levels().map(|l| lat.label(l).to_string()).collect(),
            order: lat
                .covering_pairs()
                .into_iter()
                .map(|(a, b)| (lat.label(a).to_string(), lat.label(b).to_string()))
                .collect(),
        },
    };
    let types = ts
        .agent_ids()
        .map(|a| {
            let per_level = lat
                .levels()
                .map(|l| {
                    let ids = ts.space(a, l).map(|t| ts.label(t).to_string()).collect();
                    (lat.label(l).to_string(), ids)
                })
                .collect();
            (ts.agent_name(a).to_string(), per_level)
        })
        .collect();
    let projections = ts
        .covering_projections()
        .into_iter()
        .map(|p| ProjectionFile {
            agent: ts.agent_name(p.agent).to_string(),
            from_level: lat.label(p.from).to_string(),
            to_level: lat.label(p.to).to_string(),
            map: p.map.into_iter().collect(),
        })
        .collect();
    let outcomes = OutcomesFile {
        all_levels: Vec::new(),
        levels: lat
            .levels()
            .map(|l| {
                let xs = s
                    .outcomes
                    .at(l)
                    .iter()
                    .map(|&x| s.outcomes.label(x).to_string())
                    .collect();
                (lat.label(l).to_string(), xs)
            })
            .collect(),
        requires_agents: s
            .outcomes
            .ids()
            .filter(|&x| !s.outcomes.outcome(x).requires_agents.is_empty())
            .map(|x| {
                let agents = s
                    .outcomes
                    .outcome(x)
                    .requires_agents
                    .iter()
                    .map(|&a| ts.agent_name(a).to_string())
                    .collect();
                (s.outcomes.label(x).to_string(), agents)
            })
            .collect(),
    };
    let values = ts
        .agent_ids()
        .map(|a| {
            let by_type = ts
                .all_types(a)
                .map(|t| {
                    let by_outcome = s
                        .outcomes
                        .at(ts.level(t))
                        .iter()
                        .filter_map(|&x| {
                            s.values.get(t, x).map(|v| {
                                (s.outcomes.label(x).to_string(), Exact(v.to_exact_string()))
                            })
                        })
                        .collect();
                    (ts.label(t).to_string(), by_outcome)
                })
                .collect();
            (ts.agent_name(a).to_string(), by_type)
        })
        .collect();
    let draws = match &s.draws {
        DrawSpec::All => DrawsFile::Keyword("all".into()),
        DrawSpec::Explicit(list) => {
            DrawsFile::List(list.iter().map(|d| draw_to_file(ts, d)).collect())
        }
    };
    ScenarioFile {
        name: s.name.clone(),
        agents: ts
            .agent_ids()
            .map(|a| ts.agent_name(a).to_string())
            .collect(),
        lattice,
        types,
        projections,
        outcomes,
        values,
        draws,
        scheme: scheme_to_file(&s.scheme, ts),
    }
}

pub fn draw_to_file(ts: &TypeSystem, d: &NatureDraw) -> DrawFile {
    DrawFile {
        true_types: ts
            .agent_ids()
            .map(|a| {
                (
                    ts.agent_name(a).to_string(),
                    ts.label(d.true_types[a.index()]).to_string(),
                )
            })
            .collect(),
        awareness: ts
            .agent_ids()
            .map(|a| {
                (
                    ts.agent_name(a).to_string(),
                    ts.lattice().label(d.awareness[a.index()]).to_string(),
                )
            })
            .collect(),
    }
}

pub fn serialize_scenario<S: Scalar>(s: &Scenario<S>) -> String {
    serde_json::to_string_pretty(&to_file(s)).expect("scenario files always serialize")
}

fn profile_json(ts: &TypeSystem, profile: &[PayoffType]) -> Value {
    Value::Object(
        profile
            .iter()
            .map(|&t| {
                (
                    ts.agent_name(t.agent).to_string(),
                    Value::String(ts.label(t).to_string()),
                )
            })
            .collect(),
    )
}

/// One JSON record per stage, then a terminal record when `result` is given.
pub fn trace_records<S: Scalar>(
    scenario: &Scenario<S>,
    trace: &Trace,
    result: Option<&TransferResult<S>>,
) -> Vec<Value> {
    let ts = &scenario.types;
    let lat = ts.lattice();
    let mut out: Vec<Value> = trace
        .stages
        .iter()
        .zip(&trace.announcements)
        .enumerate()
        .map(|(k, (p, &ann))| {
            json!({
                "stage": k + 1,
                "reports": profile_json(ts, p),
                "announcement": lat.label(ann),
            })
        })
        .collect();
    if let (Some(r), Some(p)) = (result, trace.final_profile()) {
        let agent_map = |f: &dyn Fn(usize) -> String| -> Value {
            Value::Object(
                ts.agent_ids()
                    .map(|a| (ts.agent_name(a).to_string(), Value::String(f(a.index()))))
                    .collect(),
            )
        };
        out.push(json!({
            "final_profile": profile_json(ts, p),
            "outcome": scenario.outcomes.label(r.outcome),
            "transfers": agent_map(&|i| r.transfers[i].to_exact_string()),
            "breakdown": {
                "welfare": agent_map(&|i| r.breakdown[i].welfare.to_exact_string()),
                "y": agent_map(&|i| r.breakdown[i].y.to_exact_string()),
                "bonus": agent_map(&|i| r.breakdown[i].bonus.to_exact_string()),
            },
            "revealer": r.revealer.map(|a| ts.agent_name(a).to_string()),
            "surplus": r.surplus().to_exact_string(),
        }));
    }
    out
}

/// JSON-lines rendering of [`trace_records`].
pub fn trace_jsonl<S: Scalar>(
    scenario: &Scenario<S>,
    trace: &Trace,
    result: Option<&TransferResult<S>>,
) -> String {
    let mut s = String::new();
    for r in trace_records(scenario, trace, result) {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Money;
    use serde_json::Value;

    fn edited(f: impl FnOnce(&mut Value)) -> String {
        let mut v: Value = serde_json::from_str(EXAMPLE1_JSON).unwrap();
        f(&mut v);
        serde_json::to_string_pretty(&v).unwrap()
    }

    #[test]
    fn round_trip_is_stable() {
        let s: Scenario<Money> = example1();
        let once = serialize_scenario(&s);
        let again: Scenario<Money> = parse_scenario(&once).unwrap();
        assert_eq!(serialize_scenario(&again), once);
    }

    #[test]
    fn floats_are_rejected() {
        let text = edited(|v| v["values"]["3"]["t3"]["agent1_produces"] = serde_json::json!(100.5));
        let err = parse_scenario::<Money>(&text).unwrap_err();
        match err {
            ParseError::Schema { path, .. } => assert!(path.contains("values"), "{path}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn integers_and_fractions_are_accepted() {
        let text = edited(|v| {
            v["values"]["3"]["t3"]["agent1_produces"] = serde_json::json!(100);
            v["values"]["3"]["t3"]["agent2_produces"] = serde_json::json!("200/2");
        });
        parse_scenario::<Money>(&text).unwrap();
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let text = edited(|v| v["outcomes"]["colour"] = serde_json::json!("red"));
        match parse_scenario::<Money>(&text).unwrap_err() {
            ParseError::Schema { path, message, .. } => {
                assert!(path.starts_with("outcomes"), "{path}");
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let err = parse_scenario::<Money>("{\n  \"name\": ,\n}").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_values_are_validation_errors() {
        let text = edited(|v| {
            v["values"]["3"]["t3"]
                .as_object_mut()
                .unwrap()
                .remove("none");
        });
        assert!(matches!(
            parse_scenario::<Money>(&text).unwrap_err(),
            ParseError::Validation { .. }
        ));
    }

    #[test]
    fn broken_projection_is_rejected() {
        let text = edited(|v| {
            let ps = v["projections"].as_array_mut().unwrap();
            let p = ps.iter_mut().find(|p| {
                p["agent"] == "1" && p["from_level"] == "{a,b,c}" && p["to_level"] == "{a,b}"
            });
            let p = p.expect("covering projection present");
            p["map"]["t1''"] = serde_json::json!("t1[]");
        });
        assert!(parse_scenario::<Money>(&text).is_err());
    }

    #[test]
    fn trace_jsonl_ends_with_a_terminal_record() {
        let s: Scenario<Money> = example1();
        let tables = s.tables(1000).unwrap();
        let (trace, result) = s.run_truthful(&s.draws()[0], &tables).unwrap();
        let text = trace_jsonl(&s, &trace, Some(&result));
        let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
        assert_eq!(last["surplus"], "80");
        assert_eq!(last["transfers"]["3"], "-80");
        assert_eq!(text.lines().count(), trace.len() + 1);
    }
}
