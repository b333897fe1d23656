//! Per-action model structure: which variables each action reads, how they are binned,
//! whether the action is scored by a factor graph or a memo table, and the factor scopes.
//!
//! The file format is TOML. Each `[[model]]` block covers a set of actions:
//!
//! ```toml
//! [[model]]
//! actions = "seat"                 # "seat", "move_to_table", or a list of indices
//! kind = "graph"                   # "graph" or "memo"
//! variables = [
//!   { name = "stage", source = "table_stage[{t}]" },
//!   { name = "happy", source = "group_happiness[{g}]", bins = [0.0, 2.5, 5.0] },
//!   { name = "size", source = "group_size[{g}]", categories = 7 },
//! ]
//! factors = [["stage"], ["happy", "size"]]   # graph only
//! ```
//!
//! `{t}` expands to the action's table and `{g}` to its queue slot. Every action must be
//! covered by exactly one block.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use super::selector::{parse_source, Binning, SubstateSelector, Variable};
use crate::error::{Error, Result};
use crate::sim::{Action, EnvConfig, NUM_ACTIONS};

pub const DEFAULT_STRUCTURES: &str = include_str!("../../data/structures.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Graph,
    Memo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionStructure {
    pub action: usize,
    pub kind: ModelKind,
    pub selector: SubstateSelector,
    /// Factor scopes as selector variable indices. Empty for memo actions.
    pub scopes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structures {
    /// One entry per action, in index order.
    pub actions: Vec<ActionStructure>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRepr {
    #[serde(default)]
    model: Vec<BlockRepr>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ActionsRepr {
    Family(String),
    Indices(Vec<usize>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableRepr {
    name: String,
    source: String,
    bins: Option<Vec<f64>>,
    categories: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockRepr {
    actions: ActionsRepr,
    kind: ModelKind,
    variables: Vec<VariableRepr>,
    #[serde(default)]
    factors: Vec<Vec<String>>,
}

fn parse_err(reason: String) -> Error {
    Error::Parse { what: "structure config".into(), reason }
}

fn expand(template: &str, action: Action) -> Result<String> {
    let (t, g) = match action {
        Action::MoveToTable(t) => (Some(t), None),
        Action::Seat { group, table } => (Some(table), Some(group)),
        _ => (None, None),
    };
    let mut out = template.to_string();
    for (key, value) in [("{t}", t), ("{g}", g)] {
        if out.contains(key) {
            let v = value.ok_or_else(|| parse_err(format!("placeholder {key} in {template:?} has no value for action {action}")))?;
            out = out.replace(key, &v.to_string());
        }
    }
    Ok(out)
}

fn block_actions(repr: &ActionsRepr) -> Result<Vec<usize>> {
    match repr {
        ActionsRepr::Family(name) => {
            let pick: fn(&Action) -> bool = match name.as_str() {
                "seat" => |a| matches!(a, Action::Seat { .. }),
                "move_to_table" => |a| matches!(a, Action::MoveToTable(_)),
                _ => return Err(parse_err(format!("unknown action family {name:?}"))),
            };
            Ok(Action::all().filter(pick).map(|a| a.index()).collect())
        }
        ActionsRepr::Indices(v) => {
            if let Some(bad) = v.iter().find(|&&a| a >= NUM_ACTIONS) {
                return Err(parse_err(format!("action index {bad} out of range")));
            }
            Ok(v.clone())
        }
    }
}

impl Structures {
    pub fn parse(text: &str, config: &EnvConfig) -> Result<Structures> {
        let file: FileRepr = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        let mut found: BTreeMap<usize, ActionStructure> = BTreeMap::new();
        for block in &file.model {
            for a in block_actions(&block.actions)? {
                let action = Action::from_index(a)?;
                let mut variables = Vec::with_capacity(block.variables.len());
                for v in &block.variables {
                    let source_name = expand(&v.source, action)?;
                    let (source, default_binning) = parse_source(&source_name, config)?;
                    let binning = match (&v.bins, v.categories) {
                        (Some(_), Some(_)) => {
                            return Err(parse_err(format!("variable {}: give bins or categories, not both", v.name)))
                        }
                        (Some(edges), None) => Binning::Edges(edges.clone()),
                        (None, Some(n)) => Binning::Categorical(n),
                        (None, None) => default_binning,
                    };
                    variables.push(Variable { name: v.name.clone(), source, binning });
                }
                let selector = SubstateSelector { action: a, variables };
                let scopes = block
                    .factors
                    .iter()
                    .map(|names| {
                        names
                            .iter()
                            .map(|n| {
                                selector
                                    .variable_index(n)
                                    .ok_or_else(|| parse_err(format!("action {a}: factor names unknown variable {n:?}")))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let entry = ActionStructure { action: a, kind: block.kind, selector, scopes };
                if found.insert(a, entry).is_some() {
                    return Err(parse_err(format!("action {a} is covered by more than one model block")));
                }
            }
        }
        let structures = Structures { actions: found.into_values().collect() };
        structures.validate()?;
        Ok(structures)
    }

    pub fn load(path: &Path, config: &EnvConfig) -> Result<Structures> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Structures::parse(&text, config)
    }

    /// The bundled structures.
    pub fn default_for(config: &EnvConfig) -> Structures {
        Structures::parse(DEFAULT_STRUCTURES, config).expect("bundled structure file is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.actions.len() != NUM_ACTIONS {
            let covered: Vec<usize> = self.actions.iter().map(|a| a.action).collect();
            let missing: Vec<usize> = (0..NUM_ACTIONS).filter(|a| !covered.contains(a)).collect();
            return Err(parse_err(format!("actions not covered: {missing:?}")));
        }
        for (i, s) in self.actions.iter().enumerate() {
            if s.action != i || s.selector.action != i {
                return Err(parse_err(format!("entry {i} describes action {}", s.action)));
            }
            s.selector.validate()?;
            let mut names: Vec<&str> = s.selector.variables.iter().map(|v| v.name.as_str()).collect();
            names.sort_unstable();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(parse_err(format!("action {i}: duplicate variable names")));
            }
            match s.kind {
                ModelKind::Graph => {
                    if s.selector.variables.is_empty() {
                        return Err(parse_err(format!("action {i}: graph model without variables")));
                    }
                    for v in 0..s.selector.variables.len() {
                        if !s.scopes.iter().any(|scope| scope.contains(&v)) {
                            return Err(parse_err(format!(
                                "action {i}: variable {:?} is not in any factor",
                                s.selector.variables[v].name
                            )));
                        }
                    }
                    if s.scopes.iter().any(|scope| scope.is_empty()) {
                        return Err(parse_err(format!("action {i}: empty factor scope")));
                    }
                }
                ModelKind::Memo => {
                    if !s.scopes.is_empty() {
                        return Err(parse_err(format!("action {i}: memo model cannot have factors")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kinds(&self) -> Vec<ModelKind> {
        self.actions.iter().map(|a| a.kind).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpgm::selector::Source;
    use crate::sim::state::layout;

    #[test]
    fn bundled_file_covers_every_action_with_the_usual_split() {
        let s = Structures::default_for(&EnvConfig::default());
        for a in &s.actions {
            let graph = (1..=6).contains(&a.action) || a.action >= 15;
            assert_eq!(a.kind == ModelKind::Graph, graph, "action {}", a.action);
        }
    }

    #[test]
    fn placeholders_expand_per_action() {
        let s = Structures::default_for(&EnvConfig::default());
        let seat = &s.actions[Action::seat(2, 4).index()];
        let stage = seat.selector.variable_index("table_stage").unwrap();
        assert_eq!(seat.selector.variables[stage].source, Source::Index(layout::table_stage(4)));
        let happy = seat.selector.variable_index("group_happiness").unwrap();
        assert_eq!(seat.selector.variables[happy].source, Source::Index(layout::group_happiness(2)));
    }

    fn minimal(extra: &str) -> String {
        format!(
            r#"
[[model]]
actions = "seat"
kind = "graph"
variables = [{{ name = "s", source = "table_stage[{{t}}]" }}]
factors = [["s"]]
[[model]]
actions = "move_to_table"
kind = "graph"
variables = [{{ name = "s", source = "table_stage[{{t}}]" }}]
factors = [["s"]]
[[model]]
actions = [0, 7, 8, 9, 10, 11, 12, 13]
kind = "memo"
variables = [{{ name = "h", source = "hands" }}]
{extra}
"#
        )
    }

    #[test]
    fn missing_and_duplicate_coverage_rejected() {
        let c = EnvConfig::default();
        let err = Structures::parse(&minimal(""), &c).unwrap_err();
        assert!(err.to_string().contains("14"), "{err}");
        let ok = minimal("[[model]]\nactions = [14]\nkind = \"memo\"\nvariables = [{ name = \"p\", source = \"position\" }]");
        Structures::parse(&ok, &c).unwrap();
        let dup = minimal("[[model]]\nactions = [14, 0]\nkind = \"memo\"\nvariables = [{ name = \"p\", source = \"position\" }]");
        assert!(Structures::parse(&dup, &c).is_err());
    }

    #[test]
    fn uncovered_variable_and_bad_placeholder_rejected() {
        let c = EnvConfig::default();
        let text = minimal("[[model]]\nactions = [14]\nkind = \"memo\"\nvariables = [{ name = \"p\", source = \"table_stage[{t}]\" }]");
        assert!(Structures::parse(&text, &c).is_err());
        let text = minimal("[[model]]\nactions = [14]\nkind = \"graph\"\nvariables = [{ name = \"p\", source = \"position\" }, { name = \"q\", source = \"hands\" }]\nfactors = [[\"p\"]]");
        assert!(Structures::parse(&text, &c).is_err());
    }
}
