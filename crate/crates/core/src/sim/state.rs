use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::config::{EnvConfig, NUM_TABLES, QUEUE_SLOTS};
use crate::error::{Error, Result};
use crate::rng::{Rng, Stream};

pub const STATE_DIM: usize = 40;
pub type StateVec = [f64; STATE_DIM];

/// Index arithmetic for the 40-dimensional state vector.
pub mod layout {
    pub const TABLE_STRIDE: usize = 4;
    pub const QUEUE_BASE: usize = 24;
    pub const QUEUE_STRIDE: usize = 2;
    pub const POSITION: usize = 38;
    pub const HANDS: usize = 39;

    pub const fn table_stage(t: usize) -> usize {
        TABLE_STRIDE * t
    }
    pub const fn table_group_size(t: usize) -> usize {
        TABLE_STRIDE * t + 1
    }
    pub const fn table_happiness(t: usize) -> usize {
        TABLE_STRIDE * t + 2
    }
    pub const fn food_ready(t: usize) -> usize {
        TABLE_STRIDE * t + 3
    }
    pub const fn group_size(g: usize) -> usize {
        QUEUE_BASE + QUEUE_STRIDE * g
    }
    pub const fn group_happiness(g: usize) -> usize {
        QUEUE_BASE + QUEUE_STRIDE * g + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Empty = 0,
    AwaitOrder = 1,
    OrderTaken = 2,
    Cooking = 3,
    Eating = 4,
    AwaitBill = 5,
    Dirty = 6,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Empty,
        Stage::AwaitOrder,
        Stage::OrderTaken,
        Stage::Cooking,
        Stage::Eating,
        Stage::AwaitBill,
        Stage::Dirty,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Stage> {
        Stage::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Empty => "EMPTY",
            Stage::AwaitOrder => "AWAIT_ORDER",
            Stage::OrderTaken => "ORDER_TAKEN",
            Stage::Cooking => "COOKING",
            Stage::Eating => "EATING",
            Stage::AwaitBill => "AWAIT_BILL",
            Stage::Dirty => "DIRTY",
        }
    }

    /// A customer group sits at the table.
    pub fn occupied(self) -> bool {
        !matches!(self, Stage::Empty | Stage::Dirty)
    }
}

/// What the waitress carries. Table indices are 0-based; the encoded code is `t + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hands {
    Empty,
    Food(usize),
    DirtyDishes,
}

impl Hands {
    pub fn code(self) -> usize {
        match self {
            Hands::Empty => 0,
            Hands::Food(t) => t + 1,
            Hands::DirtyDishes => 7,
        }
    }

    pub fn from_code(code: usize) -> Option<Hands> {
        match code {
            0 => Some(Hands::Empty),
            1..=6 => Some(Hands::Food(code - 1)),
            7 => Some(Hands::DirtyDishes),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableState {
    pub stage: Stage,
    pub group_size: u32,
    pub happiness: f64,
    pub food_ready: bool,
    pub stage_timer: u32,
}

impl TableState {
    pub fn empty() -> Self {
        TableState { stage: Stage::Empty, group_size: 0, happiness: 0.0, food_ready: false, stage_timer: 0 }
    }

    /// The group is gone; what is left needs cleaning.
    pub(crate) fn vacate_dirty(&mut self) {
        *self = TableState { stage: Stage::Dirty, ..TableState::empty() };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupState {
    pub present: bool,
    pub group_size: u32,
    pub happiness: f64,
}

impl GroupState {
    pub fn vacant() -> Self {
        GroupState { present: false, group_size: 0, happiness: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitressState {
    /// 0 is the kitchen zone (counter and dish station), `t + 1` is table `t`.
    pub position: usize,
    pub hands: Hands,
    pub pending_orders: BTreeSet<usize>,
}

impl WaitressState {
    pub fn at_table(&self) -> Option<usize> {
        self.position.checked_sub(1)
    }

    pub fn at_kitchen(&self) -> bool {
        self.position == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub arrivals: Rng,
    pub group_sizes: Rng,
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        RngState { arrivals: Rng::stream(seed, Stream::Arrivals), group_sizes: Rng::stream(seed, Stream::GroupSizes) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub tables: Vec<TableState>,
    pub queue: Vec<GroupState>,
    pub waitress: WaitressState,
    pub lives: u32,
    pub step_count: u64,
    pub rng_state: RngState,
    pub cumulative_return: f64,
}

impl EnvState {
    pub fn initial(config: &EnvConfig, seed: u64) -> Self {
        EnvState {
            tables: vec![TableState::empty(); NUM_TABLES],
            queue: vec![GroupState::vacant(); QUEUE_SLOTS],
            waitress: WaitressState { position: 0, hands: Hands::Empty, pending_orders: BTreeSet::new() },
            lives: config.max_lives,
            step_count: 0,
            rng_state: RngState::from_seed(seed),
            cumulative_return: 0.0,
        }
    }

    pub fn encode(&self) -> StateVec {
        let mut v = [0.0; STATE_DIM];
        for (t, table) in self.tables.iter().enumerate() {
            v[layout::table_stage(t)] = table.stage.code() as f64;
            v[layout::table_group_size(t)] = table.group_size as f64;
            v[layout::table_happiness(t)] = table.happiness;
            v[layout::food_ready(t)] = if table.food_ready { 1.0 } else { 0.0 };
        }
        for (g, group) in self.queue.iter().enumerate() {
            v[layout::group_size(g)] = group.group_size as f64;
            v[layout::group_happiness(g)] = group.happiness;
        }
        v[layout::POSITION] = self.waitress.position as f64;
        v[layout::HANDS] = self.waitress.hands.code() as f64;
        v
    }

    pub fn observation(&self) -> Observation {
        Observation {
            tables: self
                .tables
                .iter()
                .map(|t| ObservedTable {
                    stage: t.stage,
                    group_size: t.group_size,
                    happiness: t.happiness,
                    food_ready: t.food_ready,
                })
                .collect(),
            queue: self.queue.clone(),
            position: self.waitress.position,
            hands: self.waitress.hands,
            pending_orders: self.waitress.pending_orders.clone(),
        }
    }

    pub fn queue_len(&self) -> usize {
        self.queue.iter().take_while(|g| g.present).count()
    }

    /// Check every structural invariant; returns a description of the first violation.
    pub fn check_invariants(&self, config: &EnvConfig) -> std::result::Result<(), String> {
        if self.tables.len() != NUM_TABLES || self.queue.len() != QUEUE_SLOTS {
            return Err("wrong table/queue count".into());
        }
        for (t, table) in self.tables.iter().enumerate() {
            if !(0.0..=config.happiness_max).contains(&table.happiness) {
                return Err(format!("table {t} happiness {} out of range", table.happiness));
            }
            if table.stage == Stage::Empty && (table.group_size != 0 || table.food_ready) {
                return Err(format!("empty table {t} carries a group or dish"));
            }
            if table.food_ready && !(table.stage == Stage::Cooking && table.stage_timer == 0) {
                return Err(format!("table {t} food_ready outside finished cooking"));
            }
            if table.stage.occupied() && table.group_size > config.table_sizes[t] {
                return Err(format!("table {t} overfull"));
            }
            let pending = self.waitress.pending_orders.contains(&t);
            if pending != (table.stage == Stage::OrderTaken) {
                return Err(format!("table {t} pending order mismatch"));
            }
        }
        let mut seen_vacant = false;
        for (g, group) in self.queue.iter().enumerate() {
            if group.present {
                if seen_vacant {
                    return Err(format!("queue not compacted at slot {g}"));
                }
                if group.group_size < config.group_size_min || group.group_size > config.group_size_max {
                    return Err(format!("queue slot {g} has bad size"));
                }
                if !(0.0..=config.happiness_max).contains(&group.happiness) {
                    return Err(format!("queue slot {g} happiness out of range"));
                }
            } else {
                seen_vacant = true;
                if group.group_size != 0 || group.happiness != 0.0 {
                    return Err(format!("vacant queue slot {g} not zeroed"));
                }
            }
        }
        if self.waitress.position > NUM_TABLES {
            return Err("waitress position out of range".into());
        }
        if let Hands::Food(t) = self.waitress.hands {
            if self.tables[t].stage != Stage::Cooking || self.tables[t].food_ready {
                return Err(format!("carrying food for table {t} that is not waiting for it"));
            }
        }
        if self.lives > config.max_lives {
            return Err("too many lives".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedTable {
    pub stage: Stage,
    pub group_size: u32,
    pub happiness: f64,
    pub food_ready: bool,
}

/// Everything a policy can see: the state minus timers, lives, step count and RNG.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub tables: Vec<ObservedTable>,
    pub queue: Vec<GroupState>,
    pub position: usize,
    pub hands: Hands,
    pub pending_orders: BTreeSet<usize>,
}

impl Observation {
    pub fn at_table(&self) -> Option<usize> {
        self.position.checked_sub(1)
    }

    pub fn at_kitchen(&self) -> bool {
        self.position == 0
    }
}

fn as_code(v: f64, max: usize, what: &str) -> Result<usize> {
    if v.fract() != 0.0 || v < 0.0 || v > max as f64 {
        return Err(Error::InvalidArgument(format!("{what} code {v} not an integer in 0..={max}")));
    }
    Ok(v as usize)
}

/// Inverse of [`EnvState::encode`] on the policy-visible fields.
pub fn decode(v: &[f64]) -> Result<Observation> {
    if v.len() != STATE_DIM {
        return Err(Error::Shape(format!("state vector has {} entries, expected {STATE_DIM}", v.len())));
    }
    let mut tables = Vec::with_capacity(NUM_TABLES);
    let mut pending_orders = BTreeSet::new();
    for t in 0..NUM_TABLES {
        let stage = Stage::from_code(as_code(v[layout::table_stage(t)], 6, "stage")?).expect("checked");
        if stage == Stage::OrderTaken {
            pending_orders.insert(t);
        }
        tables.push(ObservedTable {
            stage,
            group_size: as_code(v[layout::table_group_size(t)], 6, "group size")? as u32,
            happiness: v[layout::table_happiness(t)],
            food_ready: as_code(v[layout::food_ready(t)], 1, "food_ready")? == 1,
        });
    }
    let queue = (0..QUEUE_SLOTS)
        .map(|g| {
            let size = as_code(v[layout::group_size(g)], 6, "group size")? as u32;
            Ok(GroupState { present: size > 0, group_size: size, happiness: v[layout::group_happiness(g)] })
        })
        .collect::<Result<Vec<_>>>()?;
    let position = as_code(v[layout::POSITION], NUM_TABLES, "position")?;
    let hands = Hands::from_code(as_code(v[layout::HANDS], 7, "hands")?).expect("checked");
    Ok(Observation { tables, queue, position, hands, pending_orders })
}

/// Upper bound of each state-vector entry (lower bound is always 0).
pub fn dimension_max(config: &EnvConfig) -> StateVec {
    let mut m = [0.0; STATE_DIM];
    for t in 0..NUM_TABLES {
        m[layout::table_stage(t)] = 6.0;
        m[layout::table_group_size(t)] = config.table_sizes[t] as f64;
        m[layout::table_happiness(t)] = config.happiness_max;
        m[layout::food_ready(t)] = 1.0;
    }
    for g in 0..QUEUE_SLOTS {
        m[layout::group_size(g)] = config.group_size_max as f64;
        m[layout::group_happiness(g)] = config.happiness_max;
    }
    m[layout::POSITION] = NUM_TABLES as f64;
    m[layout::HANDS] = 7.0;
    m
}
