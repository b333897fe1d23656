use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::action::{Action, NUM_ACTIONS};
use super::config::{EnvConfig, NUM_TABLES};
use super::state::{EnvState, GroupState, Hands, Stage, StateVec, TableState};
use crate::error::{Error, Result};

/// Something that happened during one step, reported through [`StepInfo`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Illegal { action: usize },
    Seated { group: usize, table: usize },
    OrderTaken { table: usize },
    OrdersSubmitted { count: usize },
    PickedUp { table: usize },
    Served { table: usize },
    BillCollected { table: usize, amount: f64 },
    Cleaned { table: usize },
    DishesReturned,
    FoodReady { table: usize },
    FinishedEating { table: usize },
    TableLeft { table: usize },
    QueueLeft { slot: usize },
    Arrived { size: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub lives: u32,
    pub illegal: bool,
    pub departures: u32,
    pub step_count: u64,
    /// Reward from the action alone, excluding departure penalties.
    pub action_reward: f64,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// A single Diner Dash restaurant.
///
/// Construction seeds the environment; [`Env::reset`] must be called before the first
/// [`Env::step`]. Every reset restarts the same seeded episode unless a new seed is given
/// with [`Env::reset_with_seed`].
#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    seed: u64,
    state: EnvState,
    started: bool,
    done: bool,
}

impl Env {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Env> {
        config.validate()?;
        let state = EnvState::initial(&config, seed);
        Ok(Env { config, seed, state, started: false, done: false })
    }

    /// Wrap an arbitrary state, e.g. a hand-built scenario. The episode counts as started.
    pub fn from_state(config: EnvConfig, state: EnvState) -> Result<Env> {
        config.validate()?;
        state
            .check_invariants(&config)
            .map_err(|reason| Error::InvalidArgument(format!("inconsistent state: {reason}")))?;
        let done = is_terminal(&config, &state);
        Ok(Env { config, seed: 0, state, started: true, done })
    }

    pub fn reset(&mut self) -> StateVec {
        self.state = EnvState::initial(&self.config, self.seed);
        self.started = true;
        self.done = false;
        self.state.encode()
    }

    pub fn reset_with_seed(&mut self, seed: u64) -> StateVec {
        self.seed = seed;
        self.reset()
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn encode(&self) -> StateVec {
        self.state.encode()
    }

    pub fn is_legal(&self, action: Action) -> bool {
        is_legal(&self.config, &self.state, action)
    }

    pub fn legal_actions(&self) -> [bool; NUM_ACTIONS] {
        let mut mask = [false; NUM_ACTIONS];
        for a in Action::all() {
            mask[a.index()] = self.is_legal(a);
        }
        mask
    }

    pub fn step(&mut self, action_index: usize) -> Result<StepResult> {
        let action = Action::from_index(action_index)?;
        if !self.started {
            return Err(Error::NotReset);
        }
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let cfg = &self.config;
        let s = &mut self.state;
        let mut events = Vec::new();
        let mut progressed = [false; NUM_TABLES];

        // (a) action effect
        let illegal = !is_legal(cfg, s, action);
        let action_reward = if illegal {
            events.push(Event::Illegal { action: action_index });
            cfg.rewards.illegal
        } else {
            apply_action(cfg, s, action, &mut progressed, &mut events)
        };

        // (b) timers
        for (t, table) in s.tables.iter_mut().enumerate() {
            match table.stage {
                Stage::Cooking if table.stage_timer > 0 => {
                    table.stage_timer -= 1;
                    if table.stage_timer == 0 {
                        table.food_ready = true;
                        events.push(Event::FoodReady { table: t });
                    }
                }
                Stage::Eating if table.stage_timer > 0 => {
                    table.stage_timer -= 1;
                    if table.stage_timer == 0 {
                        table.stage = Stage::AwaitBill;
                        progressed[t] = true;
                        events.push(Event::FinishedEating { table: t });
                    }
                }
                _ => {}
            }
        }

        // (c) happiness decay; a group whose stage moved this step is spared
        for (t, table) in s.tables.iter_mut().enumerate() {
            if progressed[t] {
                continue;
            }
            let rate = match table.stage {
                Stage::AwaitOrder | Stage::OrderTaken => cfg.decay_await_order,
                Stage::Cooking => cfg.decay_await_food,
                Stage::AwaitBill => cfg.decay_await_bill,
                Stage::Empty | Stage::Eating | Stage::Dirty => 0.0,
            };
            table.happiness = (table.happiness - rate).max(0.0);
        }
        for group in s.queue.iter_mut().filter(|g| g.present) {
            group.happiness = (group.happiness - cfg.decay_queue).max(0.0);
        }

        // (d) departures
        let mut departures = 0u32;
        for t in 0..NUM_TABLES {
            let table = &mut s.tables[t];
            if table.stage.occupied() && table.happiness <= 0.0 {
                table.vacate_dirty();
                s.waitress.pending_orders.remove(&t);
                if s.waitress.hands == Hands::Food(t) {
                    s.waitress.hands = Hands::Empty;
                }
                departures += 1;
                events.push(Event::TableLeft { table: t });
            }
        }
        for slot in 0..s.queue.len() {
            if s.queue[slot].present && s.queue[slot].happiness <= 0.0 {
                s.queue[slot] = GroupState::vacant();
                departures += 1;
                events.push(Event::QueueLeft { slot });
            }
        }
        compact_queue(&mut s.queue);
        s.lives = s.lives.saturating_sub(departures);

        // (e) arrival
        let arrives = s.rng_state.arrivals.bernoulli(cfg.arrival_prob);
        if arrives {
            if let Some(slot) = s.queue.iter().position(|g| !g.present) {
                let size = s
                    .rng_state
                    .group_sizes
                    .range_inclusive(cfg.group_size_min as u64, cfg.group_size_max as u64)
                    as u32;
                s.queue[slot] = GroupState { present: true, group_size: size, happiness: cfg.happiness_max };
                events.push(Event::Arrived { size });
            }
        }

        // (f) bookkeeping
        s.step_count += 1;
        let reward = action_reward + cfg.rewards.leave * departures as f64;
        s.cumulative_return += reward;
        self.done = is_terminal(cfg, s);

        Ok(StepResult {
            state: s.encode().to_vec(),
            reward,
            done: self.done,
            info: StepInfo {
                lives: s.lives,
                illegal,
                departures,
                step_count: s.step_count,
                action_reward,
                events,
            },
        })
    }

    pub fn render_text(&self) -> String {
        render_text(&self.config, &self.state)
    }
}

fn is_terminal(cfg: &EnvConfig, s: &EnvState) -> bool {
    s.lives == 0 || s.step_count >= cfg.max_steps
}

fn compact_queue(queue: &mut Vec<GroupState>) {
    let n = queue.len();
    queue.retain(|g| g.present);
    queue.resize(n, GroupState::vacant());
}

pub fn is_legal(cfg: &EnvConfig, s: &EnvState, action: Action) -> bool {
    let w = &s.waitress;
    let here = w.at_table().map(|t| &s.tables[t]);
    match action {
        Action::Wait | Action::MoveToTable(_) | Action::MoveToKitchen => true,
        Action::Seat { group, table } => {
            let g = &s.queue[group];
            g.present && s.tables[table].stage == Stage::Empty && g.group_size <= cfg.table_sizes[table]
        }
        Action::TakeOrder => here.is_some_and(|t| t.stage == Stage::AwaitOrder),
        Action::SubmitOrders => w.at_kitchen() && !w.pending_orders.is_empty(),
        Action::PickupFood => w.at_kitchen() && w.hands == Hands::Empty && s.tables.iter().any(|t| t.food_ready),
        Action::ServeFood => w.at_table().is_some_and(|t| w.hands == Hands::Food(t)),
        Action::CollectBill => here.is_some_and(|t| t.stage == Stage::AwaitBill),
        Action::CleanTable => here.is_some_and(|t| t.stage == Stage::Dirty) && w.hands == Hands::Empty,
        Action::ReturnDishes => w.at_kitchen() && w.hands == Hands::DirtyDishes,
    }
}

fn apply_action(
    cfg: &EnvConfig,
    s: &mut EnvState,
    action: Action,
    progressed: &mut [bool; NUM_TABLES],
    events: &mut Vec<Event>,
) -> f64 {
    let r = &cfg.rewards;
    match action {
        Action::Wait => 0.0,
        Action::MoveToTable(t) => {
            s.waitress.position = t + 1;
            0.0
        }
        Action::MoveToKitchen => {
            s.waitress.position = 0;
            0.0
        }
        Action::Seat { group, table } => {
            let g = std::mem::replace(&mut s.queue[group], GroupState::vacant());
            compact_queue(&mut s.queue);
            s.tables[table] = TableState {
                stage: Stage::AwaitOrder,
                group_size: g.group_size,
                happiness: cfg.happiness_max,
                food_ready: false,
                stage_timer: 0,
            };
            progressed[table] = true;
            events.push(Event::Seated { group, table });
            r.seat
        }
        Action::TakeOrder => {
            let t = s.waitress.position - 1;
            s.tables[t].stage = Stage::OrderTaken;
            s.waitress.pending_orders.insert(t);
            progressed[t] = true;
            events.push(Event::OrderTaken { table: t });
            r.take_order
        }
        Action::SubmitOrders => {
            let pending = std::mem::take(&mut s.waitress.pending_orders);
            for &t in &pending {
                let table = &mut s.tables[t];
                table.stage = Stage::Cooking;
                table.stage_timer = cfg.cook_steps;
                table.food_ready = false;
                progressed[t] = true;
            }
            events.push(Event::OrdersSubmitted { count: pending.len() });
            r.submit * pending.len() as f64
        }
        Action::PickupFood => {
            let t = s.tables.iter().position(|t| t.food_ready).expect("legality checked");
            s.tables[t].food_ready = false;
            s.waitress.hands = Hands::Food(t);
            events.push(Event::PickedUp { table: t });
            r.pickup
        }
        Action::ServeFood => {
            let t = s.waitress.position - 1;
            s.waitress.hands = Hands::Empty;
            let table = &mut s.tables[t];
            table.stage = Stage::Eating;
            table.stage_timer = cfg.eat_steps;
            progressed[t] = true;
            events.push(Event::Served { table: t });
            r.serve
        }
        Action::CollectBill => {
            let t = s.waitress.position - 1;
            let amount = r.bill_base + r.bill_per_heart * s.tables[t].happiness.floor();
            s.tables[t].vacate_dirty();
            progressed[t] = true;
            events.push(Event::BillCollected { table: t, amount });
            amount
        }
        Action::CleanTable => {
            let t = s.waitress.position - 1;
            s.tables[t] = TableState::empty();
            s.waitress.hands = Hands::DirtyDishes;
            progressed[t] = true;
            events.push(Event::Cleaned { table: t });
            r.clean
        }
        Action::ReturnDishes => {
            s.waitress.hands = Hands::Empty;
            events.push(Event::DishesReturned);
            r.return_dishes
        }
    }
}

pub fn render_text(cfg: &EnvConfig, s: &EnvState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "step: {}  lives: {}  return: {:.1}", s.step_count, s.lives, s.cumulative_return);
    let position = match s.waitress.at_table() {
        None => "kitchen".to_string(),
        Some(t) => format!("table {}", t + 1),
    };
    let hands = match s.waitress.hands {
        Hands::Empty => "empty".to_string(),
        Hands::Food(t) => format!("food for table {}", t + 1),
        Hands::DirtyDishes => "dirty dishes".to_string(),
    };
    let _ = writeln!(out, "waitress: {position}  hands: {hands}");
    for (t, table) in s.tables.iter().enumerate() {
        let _ = write!(out, "table {} ({} seats): {:<11}", t + 1, cfg.table_sizes[t], table.stage.name());
        if table.stage.occupied() {
            let _ = write!(out, " group {}  {}", table.group_size, hearts(table.happiness, cfg.happiness_max));
            if table.stage_timer > 0 {
                let _ = write!(out, "  timer {}", table.stage_timer);
            }
            if table.food_ready {
                let _ = write!(out, "  food ready");
            }
        }
        out.push('\n');
    }
    let waiting: Vec<String> = s
        .queue
        .iter()
        .filter(|g| g.present)
        .map(|g| format!("[{} {}]", g.group_size, hearts(g.happiness, cfg.happiness_max)))
        .collect();
    let _ = writeln!(out, "queue: {}", if waiting.is_empty() { "-".to_string() } else { waiting.join(" ") });
    out
}

fn hearts(h: f64, max: f64) -> String {
    let full = h.ceil() as usize;
    let slots = max.ceil() as usize;
    format!("{}{} {:.2}", "*".repeat(full.min(slots)), ".".repeat(slots.saturating_sub(full)), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::state::layout;

    fn no_arrival_config() -> EnvConfig {
        EnvConfig { arrival_prob: 0.0, ..EnvConfig::default() }
    }

    fn env_with(state_fn: impl FnOnce(&mut EnvState)) -> Env {
        let cfg = no_arrival_config();
        let mut s = EnvState::initial(&cfg, 0);
        state_fn(&mut s);
        Env::from_state(cfg, s).unwrap()
    }

    #[test]
    fn step_requires_reset_and_range() {
        let mut env = Env::new(EnvConfig::default(), 0).unwrap();
        assert!(matches!(env.step(0), Err(Error::NotReset)));
        env.reset();
        assert!(matches!(env.step(57), Err(Error::ActionOutOfRange(57))));
    }

    #[test]
    fn wait_on_empty_restaurant_only_advances_time() {
        let mut env = Env::new(no_arrival_config(), 0).unwrap();
        let before = env.reset();
        let r = env.step(Action::Wait.index()).unwrap();
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.state, before.to_vec());
        assert_eq!(env.state().step_count, 1);
    }

    #[test]
    fn illegal_serve_is_penalized_noop_but_time_passes() {
        let mut env = env_with(|s| {
            s.queue[0] = GroupState { present: true, group_size: 2, happiness: 5.0 };
        });
        let r = env.step(Action::ServeFood.index()).unwrap();
        assert_eq!(r.reward, -1.0);
        assert!(r.info.illegal);
        assert_eq!(env.state().step_count, 1);
        assert!((env.state().queue[0].happiness - (5.0 - 0.03)).abs() < 1e-12);
    }

    #[test]
    fn seating_fills_table_and_compacts_queue() {
        let mut env = env_with(|s| {
            s.queue[0] = GroupState { present: true, group_size: 2, happiness: 4.0 };
            s.queue[1] = GroupState { present: true, group_size: 3, happiness: 4.5 };
        });
        let r = env.step(15).unwrap();
        assert_eq!(r.reward, 2.0);
        let s = env.state();
        assert_eq!(s.tables[0].stage, Stage::AwaitOrder);
        assert_eq!(s.tables[0].group_size, 2);
        assert_eq!(s.tables[0].happiness, 5.0);
        assert_eq!(s.queue[0].group_size, 3);
        assert!(!s.queue[1].present);
    }

    #[test]
    fn seated_group_encoding() {
        let mut env = env_with(|s| {
            s.queue[0] = GroupState { present: true, group_size: 2, happiness: 5.0 };
            s.queue[1] = GroupState { present: true, group_size: 3, happiness: 5.0 };
        });
        let r = env.step(Action::seat(0, 1).index()).unwrap();
        assert_eq!(&r.state[layout::table_stage(1)..=layout::food_ready(1)], &[1.0, 2.0, 5.0, 0.0]);
        // the size-3 group moved up to slot 0 and needs a 4-seat table
        assert!(env.step(Action::seat(0, 0).index()).unwrap().info.illegal);
        let r = env.step(Action::seat(0, 2).index()).unwrap();
        assert_eq!(&r.state[layout::table_stage(2)..=layout::food_ready(2)], &[1.0, 3.0, 5.0, 0.0]);
    }

    #[test]
    fn departure_costs_a_life_and_leaves_table_dirty() {
        let mut env = env_with(|s| {
            s.tables[2] = TableState {
                stage: Stage::AwaitOrder,
                group_size: 2,
                happiness: 0.01,
                food_ready: false,
                stage_timer: 0,
            };
        });
        let r = env.step(0).unwrap();
        assert_eq!(r.reward, -100.0);
        assert_eq!(r.info.departures, 1);
        assert_eq!(env.state().lives, 4);
        assert_eq!(env.state().tables[2].stage, Stage::Dirty);
    }

    #[test]
    fn departure_drops_carried_food() {
        let mut env = env_with(|s| {
            s.tables[1] = TableState {
                stage: Stage::Cooking,
                group_size: 2,
                happiness: 0.005,
                food_ready: false,
                stage_timer: 0,
            };
            s.waitress.hands = Hands::Food(1);
        });
        env.step(0).unwrap();
        assert_eq!(env.state().waitress.hands, Hands::Empty);
        env.state().check_invariants(env.config()).unwrap();
    }

    #[test]
    fn render_contains_lives_and_tables() {
        let mut env = Env::new(EnvConfig::default(), 0).unwrap();
        env.reset();
        let text = env.render_text();
        assert!(text.contains("lives: 5"));
        assert_eq!(text.matches("EMPTY").count(), 6);
        assert_eq!(text, env.render_text());
    }

    #[test]
    fn fresh_reset_mask() {
        let mut env = Env::new(EnvConfig::default(), 0).unwrap();
        env.reset();
        let mask = env.legal_actions();
        let legal: Vec<usize> = (0..NUM_ACTIONS).filter(|&i| mask[i]).collect();
        assert_eq!(legal, vec![0, 1, 2, 3, 4, 5, 6, 14]);
    }

    #[test]
    fn dirty_dishes_can_be_returned_at_kitchen() {
        let env = env_with(|s| s.waitress.hands = Hands::DirtyDishes);
        assert!(env.legal_actions()[Action::ReturnDishes.index()]);
    }
}
