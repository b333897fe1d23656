//! Scripted demonstrator: a memoryless priority list over task categories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Action, EnvConfig, EnvState, Hands, Observation, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Serve,
    ReturnDishes,
    Pickup,
    CollectBill,
    TakeOrder,
    Submit,
    Seat,
    Clean,
}

impl Task {
    pub const DEFAULT_ORDER: [Task; 8] = [
        Task::Serve,
        Task::ReturnDishes,
        Task::Pickup,
        Task::CollectBill,
        Task::TakeOrder,
        Task::Submit,
        Task::Seat,
        Task::Clean,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertConfig {
    pub priority: Vec<Task>,
    /// Waiting groups with fewer hearts than this are seated before any bill, order or
    /// submit task. Zero disables the promotion.
    pub urgency_threshold: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        ExpertConfig { priority: Task::DEFAULT_ORDER.to_vec(), urgency_threshold: 0.0 }
    }
}

impl ExpertConfig {
    pub fn validate(&self) -> Result<()> {
        let mut sorted = self.priority.clone();
        sorted.sort_by_key(|t| Task::DEFAULT_ORDER.iter().position(|d| d == t));
        sorted.dedup();
        if sorted.len() != Task::DEFAULT_ORDER.len() || self.priority.len() != sorted.len() {
            return Err(Error::InvalidArgument("expert priority must be a permutation of all 8 tasks".into()));
        }
        if self.urgency_threshold.is_nan() || self.urgency_threshold < 0.0 {
            return Err(Error::InvalidArgument("urgency_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

/// Move to table `t` first if needed, then perform `here`.
fn at_table(s: &Observation, t: usize, here: Action) -> Action {
    if s.position == t + 1 {
        here
    } else {
        Action::MoveToTable(t)
    }
}

fn at_kitchen(s: &Observation, here: Action) -> Action {
    if s.at_kitchen() {
        here
    } else {
        Action::MoveToKitchen
    }
}

/// Table in `stage` with the fewest hearts, lowest index on ties.
pub fn neediest_table(s: &Observation, stage: Stage) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (t, table) in s.tables.iter().enumerate() {
        if table.stage != stage {
            continue;
        }
        match best {
            Some(b) if s.tables[b].happiness <= table.happiness => {}
            _ => best = Some(t),
        }
    }
    best
}

/// Smallest EMPTY table that fits `size`, lowest index on ties.
pub fn best_table_for(cfg: &EnvConfig, s: &Observation, size: u32) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (t, table) in s.tables.iter().enumerate() {
        if table.stage != Stage::Empty || cfg.table_sizes[t] < size {
            continue;
        }
        match best {
            Some(b) if cfg.table_sizes[b] <= cfg.table_sizes[t] => {}
            _ => best = Some(t),
        }
    }
    best
}

/// The seating the expert would make: lowest-happiness waiting group that fits somewhere,
/// lowest slot on ties, into its smallest fitting table.
pub fn seat_choice(cfg: &EnvConfig, s: &Observation) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (g, group) in s.queue.iter().enumerate() {
        if !group.present {
            continue;
        }
        let Some(t) = best_table_for(cfg, s, group.group_size) else { continue };
        match best {
            Some((bg, _)) if s.queue[bg].happiness <= group.happiness => {}
            _ => best = Some((g, t)),
        }
    }
    best
}

/// DIRTY table to clean: one a waiting group could use, else any; lowest index first.
pub fn clean_choice(cfg: &EnvConfig, s: &Observation) -> Option<usize> {
    let dirty = || s.tables.iter().enumerate().filter(|(_, t)| t.stage == Stage::Dirty).map(|(i, _)| i);
    let useful = dirty().find(|&t| s.queue.iter().any(|g| g.present && g.group_size <= cfg.table_sizes[t]));
    useful.or_else(|| dirty().next())
}

fn task_action(cfg: &EnvConfig, s: &Observation, task: Task) -> Option<Action> {
    let hands = s.hands;
    match task {
        Task::Serve => match hands {
            Hands::Food(t) => Some(at_table(s, t, Action::ServeFood)),
            _ => None,
        },
        Task::ReturnDishes => (hands == Hands::DirtyDishes).then(|| at_kitchen(s, Action::ReturnDishes)),
        Task::Pickup => (hands == Hands::Empty && s.tables.iter().any(|t| t.food_ready))
            .then(|| at_kitchen(s, Action::PickupFood)),
        Task::CollectBill => neediest_table(s, Stage::AwaitBill).map(|t| at_table(s, t, Action::CollectBill)),
        Task::TakeOrder => neediest_table(s, Stage::AwaitOrder).map(|t| at_table(s, t, Action::TakeOrder)),
        Task::Submit => {
            (!s.pending_orders.is_empty()).then(|| at_kitchen(s, Action::SubmitOrders))
        }
        Task::Seat => seat_choice(cfg, s).map(|(g, t)| Action::seat(g, t)),
        Task::Clean => {
            // cleaning needs free hands; dishes in hand are returned by an earlier task
            if hands != Hands::Empty {
                return None;
            }
            clean_choice(cfg, s).map(|t| at_table(s, t, Action::CleanTable))
        }
    }
}

/// The expert's action for the current state. Always legal.
///
/// Depends only on what the 40-dimensional state vector carries.
pub fn expert_action_with(cfg: &EnvConfig, expert: &ExpertConfig, s: &Observation) -> Action {
    if expert.urgency_threshold > 0.0 {
        if let Some((g, t)) = seat_choice(cfg, s) {
            if s.queue[g].happiness < expert.urgency_threshold {
                let blocked_by_hands = expert
                    .priority
                    .iter()
                    .take_while(|task| !matches!(task, Task::CollectBill | Task::TakeOrder | Task::Submit | Task::Seat))
                    .any(|&task| task_action(cfg, s, task).is_some());
                if !blocked_by_hands {
                    return Action::seat(g, t);
                }
            }
        }
    }
    expert
        .priority
        .iter()
        .find_map(|&task| task_action(cfg, s, task))
        .unwrap_or(Action::Wait)
}

pub fn expert_action(cfg: &EnvConfig, s: &EnvState) -> Action {
    expert_action_with(cfg, &ExpertConfig::default(), &s.observation())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::state::{GroupState, TableState};
    use crate::sim::Env;

    fn cfg() -> EnvConfig {
        EnvConfig { arrival_prob: 0.0, ..EnvConfig::default() }
    }

    #[test]
    fn idle_restaurant_waits() {
        let c = cfg();
        let s = EnvState::initial(&c, 0);
        assert_eq!(expert_action(&c, &s), Action::Wait);
    }

    #[test]
    fn seats_small_group_at_smallest_table() {
        let c = cfg();
        let mut s = EnvState::initial(&c, 0);
        s.queue[0] = GroupState { present: true, group_size: 2, happiness: 5.0 };
        assert_eq!(expert_action(&c, &s).index(), 15);
        s.tables[0].stage = Stage::Dirty;
        // table 1 dirty: next smallest size-2 table is index 1
        assert_eq!(expert_action(&c, &s), Action::seat(0, 1));
    }

    #[test]
    fn ready_dish_sends_waitress_to_kitchen() {
        let c = cfg();
        let mut s = EnvState::initial(&c, 0);
        s.tables[0] =
            TableState { stage: Stage::Cooking, group_size: 2, happiness: 4.0, food_ready: true, stage_timer: 0 };
        s.tables[2] =
            TableState { stage: Stage::AwaitBill, group_size: 3, happiness: 2.0, food_ready: false, stage_timer: 0 };
        s.waitress.position = 3;
        assert_eq!(expert_action(&c, &s), Action::MoveToKitchen);
        s.waitress.position = 0;
        assert_eq!(expert_action(&c, &s), Action::PickupFood);
    }

    #[test]
    fn bill_before_order_and_neediest_first() {
        let c = cfg();
        let mut s = EnvState::initial(&c, 0);
        s.tables[1] =
            TableState { stage: Stage::AwaitOrder, group_size: 2, happiness: 1.0, food_ready: false, stage_timer: 0 };
        s.tables[3] =
            TableState { stage: Stage::AwaitBill, group_size: 2, happiness: 4.0, food_ready: false, stage_timer: 0 };
        s.tables[4] =
            TableState { stage: Stage::AwaitBill, group_size: 2, happiness: 3.0, food_ready: false, stage_timer: 0 };
        assert_eq!(expert_action(&c, &s), Action::MoveToTable(4));
    }

    #[test]
    fn priority_must_be_permutation() {
        let mut e = ExpertConfig::default();
        e.validate().unwrap();
        e.priority[0] = Task::Clean;
        assert!(e.validate().is_err());
    }

    #[test]
    fn full_service_of_one_group_collects_scripted_rewards() {
        let c = cfg();
        let mut s = EnvState::initial(&c, 0);
        s.queue[0] = GroupState { present: true, group_size: 2, happiness: 5.0 };
        let mut env = Env::from_state(c.clone(), s).unwrap();
        let mut total = 0.0;
        let mut bill_hearts = None;
        for _ in 0..200 {
            if env.state().tables[0].stage == Stage::AwaitBill {
                bill_hearts = Some(env.state().tables[0].happiness);
            }
            let a = expert_action(&c, env.state());
            let r = env.step(a.index()).unwrap();
            assert!(!r.info.illegal, "expert played illegal {a}");
            total += r.reward;
            if r.info.events.iter().any(|e| matches!(e, crate::sim::Event::DishesReturned)) {
                break;
            }
        }
        let h = bill_hearts.expect("group reached billing");
        let rw = &c.rewards;
        let expected = rw.seat
            + rw.take_order
            + rw.submit
            + rw.pickup
            + rw.serve
            + (rw.bill_base + rw.bill_per_heart * h.floor())
            + rw.clean
            + rw.return_dishes;
        assert_eq!(total, expected);
    }
}
