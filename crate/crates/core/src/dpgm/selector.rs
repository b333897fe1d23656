//! Sub-state selectors: which variables each action's model looks at, and how they are
//! discretized.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::expert::{best_table_for, clean_choice, neediest_table, seat_choice};
use crate::sim::state::{decode, layout};
use crate::sim::{EnvConfig, Hands, Observation, Stage, NUM_TABLES, QUEUE_SLOTS, STATE_DIM};

/// Discretized sub-state.
pub type Tuple = Vec<u16>;

/// Quantities that are not single state-vector entries but follow from the state vector and
/// the environment config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    /// Seats at table `t` (a config constant).
    TableCapacity(usize),
    /// 0 empty, 1 food, 2 dirty dishes.
    HandsKind,
    /// 0 empty, 1 food for table `t`, 2 food for another table, 3 dirty dishes.
    HandsForTable(usize),
    AtTable(usize),
    AtKitchen,
    /// Stage code of the table the waitress stands at, 7 at the kitchen.
    StageAtPosition,
    /// Table `t` has the fewest hearts among tables in its stage (lowest index on ties).
    TablePriority(usize),
    PriorityAtPosition,
    AnyFoodReady,
    AnyStage(Stage),
    /// Some waiting group fits some EMPTY table.
    AnySeatable,
    /// Table `t` is the smallest EMPTY table that fits queue group `g`.
    BestTable { group: usize, table: usize },
    /// Queue group `g` is the lowest-happiness group among those that fit somewhere.
    NeediestGroup(usize),
    /// Table `t` is the DIRTY table that should be cleaned next.
    CleanTarget(usize),
    CleanTargetAtPosition,
}

impl Feature {
    pub fn cardinality(self) -> usize {
        match self {
            Feature::TableCapacity(_) => 7,
            Feature::HandsKind => 3,
            Feature::HandsForTable(_) => 4,
            Feature::StageAtPosition => 8,
            _ => 2,
        }
    }

    fn eval(self, cfg: &EnvConfig, obs: &Observation) -> usize {
        let b = |x: bool| x as usize;
        match self {
            Feature::TableCapacity(t) => cfg.table_sizes[t] as usize,
            Feature::HandsKind => match obs.hands {
                Hands::Empty => 0,
                Hands::Food(_) => 1,
                Hands::DirtyDishes => 2,
            },
            Feature::HandsForTable(t) => match obs.hands {
                Hands::Empty => 0,
                Hands::Food(u) if u == t => 1,
                Hands::Food(_) => 2,
                Hands::DirtyDishes => 3,
            },
            Feature::AtTable(t) => b(obs.position == t + 1),
            Feature::AtKitchen => b(obs.at_kitchen()),
            Feature::StageAtPosition => obs.at_table().map_or(7, |t| obs.tables[t].stage.code()),
            Feature::TablePriority(t) => b(neediest_table(obs, obs.tables[t].stage) == Some(t)),
            Feature::PriorityAtPosition => {
                obs.at_table().map_or(0, |t| b(neediest_table(obs, obs.tables[t].stage) == Some(t)))
            }
            Feature::AnyFoodReady => b(obs.tables.iter().any(|t| t.food_ready)),
            Feature::AnyStage(stage) => b(obs.tables.iter().any(|t| t.stage == stage)),
            Feature::AnySeatable => b(seat_choice(cfg, obs).is_some()),
            Feature::BestTable { group, table } => {
                let g = &obs.queue[group];
                b(g.present && best_table_for(cfg, obs, g.group_size) == Some(table))
            }
            Feature::NeediestGroup(g) => b(seat_choice(cfg, obs).is_some_and(|(best, _)| best == g)),
            Feature::CleanTarget(t) => b(clean_choice(cfg, obs) == Some(t)),
            Feature::CleanTargetAtPosition => b(obs.at_table().is_some() && clean_choice(cfg, obs) == obs.at_table()),
        }
    }

    fn validate(self) -> Result<()> {
        let table_ok = |t: usize| t < NUM_TABLES;
        let ok = match self {
            Feature::TableCapacity(t)
            | Feature::HandsForTable(t)
            | Feature::AtTable(t)
            | Feature::TablePriority(t)
            | Feature::CleanTarget(t) => table_ok(t),
            Feature::BestTable { group, table } => group < QUEUE_SLOTS && table_ok(table),
            Feature::NeediestGroup(g) => g < QUEUE_SLOTS,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("feature {self:?} refers to a table or slot out of range")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Raw entry of the 40-dimensional state vector.
    Index(usize),
    Derived(Feature),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Integer codes `0..n`; values are rounded and clamped into range.
    Categorical(usize),
    /// Bin `i` covers `[edges[i], edges[i+1])`; the last bin also includes its top edge.
    /// Values below the first edge land in bin 0, above the last in the last bin.
    Edges(Vec<f64>),
}

impl Binning {
    pub fn cardinality(&self) -> usize {
        match self {
            Binning::Categorical(n) => *n,
            Binning::Edges(e) => e.len() - 1,
        }
    }

    pub fn bin(&self, x: f64) -> usize {
        match self {
            Binning::Categorical(n) => {
                let r = x.round();
                if r <= 0.0 {
                    0
                } else {
                    (r as usize).min(n - 1)
                }
            }
            Binning::Edges(e) => {
                let last = e.len() - 2;
                // first bin whose upper edge is above x; the top edge itself is inclusive
                (0..last).find(|&i| x < e[i + 1]).unwrap_or(last)
            }
        }
    }

    /// `n` equal-width bins over `[0, max]`.
    pub fn uniform(max: f64, n: usize) -> Binning {
        Binning::Edges((0..=n).map(|i| max * i as f64 / n as f64).collect())
    }

    fn validate(&self) -> Result<()> {
        match self {
            Binning::Categorical(n) if *n >= 1 => Ok(()),
            Binning::Edges(e) if e.len() >= 2 && e.windows(2).all(|w| w[0] < w[1]) => Ok(()),
            _ => Err(Error::InvalidArgument(format!("invalid binning {self:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub source: Source,
    pub binning: Binning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstateSelector {
    pub action: usize,
    pub variables: Vec<Variable>,
}

impl SubstateSelector {
    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.binning.cardinality()).collect()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        for v in &self.variables {
            match &v.source {
                Source::Index(i) if *i >= STATE_DIM => {
                    return Err(Error::InvalidArgument(format!(
                        "action {}: variable {} reads state index {i}, out of range 0..{STATE_DIM}",
                        self.action, v.name
                    )))
                }
                Source::Index(_) => {}
                Source::Derived(f) => f.validate()?,
            }
            v.binning.validate()?;
        }
        Ok(())
    }

    pub fn select(&self, view: &FeatureView<'_>) -> Result<Tuple> {
        self.variables
            .iter()
            .map(|v| {
                let x = match &v.source {
                    Source::Index(i) => *view.raw.get(*i).ok_or_else(|| {
                        Error::InvalidArgument(format!("state index {i} out of range for variable {}", v.name))
                    })?,
                    Source::Derived(f) => f.eval(view.config, &view.obs) as f64,
                };
                Ok(v.binning.bin(x) as u16)
            })
            .collect()
    }
}

/// A state vector decoded once, shared by all selectors applied to it.
pub struct FeatureView<'a> {
    raw: &'a [f64],
    obs: Observation,
    config: &'a EnvConfig,
}

impl<'a> FeatureView<'a> {
    pub fn new(state: &'a [f64], config: &'a EnvConfig) -> Result<Self> {
        Ok(FeatureView { raw: state, obs: decode(state)?, config })
    }
}

pub fn select_substate(state: &[f64], selector: &SubstateSelector, config: &EnvConfig) -> Result<Tuple> {
    selector.select(&FeatureView::new(state, config)?)
}

/// Resolve a source name such as `table_stage[2]`, `group_happiness[0]`, `hands` or
/// `best_table[1][3]` into a source with its default binning.
pub fn parse_source(name: &str, config: &EnvConfig) -> Result<(Source, Binning)> {
    let bad = || Error::Parse { what: "selector source".into(), reason: format!("unknown source {name:?}") };
    let (head, args) = match name.find('[') {
        None => (name, Vec::new()),
        Some(i) => {
            let rest = &name[i..];
            let mut args = Vec::new();
            for part in rest.split(']').filter(|p| !p.is_empty()) {
                let n = part.strip_prefix('[').ok_or_else(bad)?.trim().parse::<usize>().map_err(|_| bad())?;
                args.push(n);
            }
            (&name[..i], args)
        }
    };
    let happiness = Binning::uniform(config.happiness_max, 5);
    let cat = Binning::Categorical;
    let derived = |f: Feature| (Source::Derived(f), cat(f.cardinality()));
    let one = |args: &[usize], max: usize| -> Result<usize> {
        match args {
            [a] if *a < max => Ok(*a),
            _ => Err(bad()),
        }
    };
    let t = |args: &[usize]| one(args, NUM_TABLES);
    let g = |args: &[usize]| one(args, QUEUE_SLOTS);
    let none = |args: &[usize]| if args.is_empty() { Ok(()) } else { Err(bad()) };
    Ok(match head {
        "state" => (Source::Index(one(&args, STATE_DIM)?), cat(8)),
        "table_stage" => (Source::Index(layout::table_stage(t(&args)?)), cat(7)),
        "table_group_size" => (Source::Index(layout::table_group_size(t(&args)?)), cat(7)),
        "table_happiness" => (Source::Index(layout::table_happiness(t(&args)?)), happiness),
        "food_ready" => (Source::Index(layout::food_ready(t(&args)?)), cat(2)),
        "group_size" => (Source::Index(layout::group_size(g(&args)?)), cat(7)),
        "group_happiness" => (Source::Index(layout::group_happiness(g(&args)?)), happiness),
        "position" => {
            none(&args)?;
            (Source::Index(layout::POSITION), cat(NUM_TABLES + 1))
        }
        "hands" => {
            none(&args)?;
            (Source::Index(layout::HANDS), cat(8))
        }
        "table_capacity" => derived(Feature::TableCapacity(t(&args)?)),
        "hands_kind" => none(&args).map(|_| derived(Feature::HandsKind))?,
        "hands_for_table" => derived(Feature::HandsForTable(t(&args)?)),
        "at_table" => derived(Feature::AtTable(t(&args)?)),
        "at_kitchen" => none(&args).map(|_| derived(Feature::AtKitchen))?,
        "stage_at_position" => none(&args).map(|_| derived(Feature::StageAtPosition))?,
        "table_priority" => derived(Feature::TablePriority(t(&args)?)),
        "priority_at_position" => none(&args).map(|_| derived(Feature::PriorityAtPosition))?,
        "any_food_ready" => none(&args).map(|_| derived(Feature::AnyFoodReady))?,
        "any_await_order" => none(&args).map(|_| derived(Feature::AnyStage(Stage::AwaitOrder)))?,
        "any_order_taken" => none(&args).map(|_| derived(Feature::AnyStage(Stage::OrderTaken)))?,
        "any_await_bill" => none(&args).map(|_| derived(Feature::AnyStage(Stage::AwaitBill)))?,
        "any_dirty" => none(&args).map(|_| derived(Feature::AnyStage(Stage::Dirty)))?,
        "any_seatable" => none(&args).map(|_| derived(Feature::AnySeatable))?,
        "best_table" => match args.as_slice() {
            [gi, ti] if *gi < QUEUE_SLOTS && *ti < NUM_TABLES => {
                derived(Feature::BestTable { group: *gi, table: *ti })
            }
            _ => return Err(bad()),
        },
        "neediest_group" => derived(Feature::NeediestGroup(g(&args)?)),
        "clean_target" => derived(Feature::CleanTarget(t(&args)?)),
        "clean_target_at_position" => none(&args).map(|_| derived(Feature::CleanTargetAtPosition))?,
        _ => return Err(bad()),
    })
}

impl fmt::Display for SubstateSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        write!(f, "action {}: ({})", self.action, names.join(", "))
    }
}
