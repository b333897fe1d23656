use std::fmt;

use super::config::{NUM_TABLES, QUEUE_SLOTS};
use crate::error::{Error, Result};

pub const NUM_ACTIONS: usize = 57;
pub const SEAT_BASE: usize = 15;

/// The 57 discrete actions. Tables are 0-based here (`MoveToTable(0)` is index 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Wait,
    MoveToTable(usize),
    TakeOrder,
    SubmitOrders,
    PickupFood,
    ServeFood,
    CollectBill,
    CleanTable,
    ReturnDishes,
    MoveToKitchen,
    Seat { group: usize, table: usize },
}

impl Action {
    pub fn from_index(index: usize) -> Result<Action> {
        Ok(match index {
            0 => Action::Wait,
            1..=6 => Action::MoveToTable(index - 1),
            7 => Action::TakeOrder,
            8 => Action::SubmitOrders,
            9 => Action::PickupFood,
            10 => Action::ServeFood,
            11 => Action::CollectBill,
            12 => Action::CleanTable,
            13 => Action::ReturnDishes,
            14 => Action::MoveToKitchen,
            15..=56 => {
                let k = index - SEAT_BASE;
                Action::Seat { group: k / NUM_TABLES, table: k % NUM_TABLES }
            }
            _ => return Err(Error::ActionOutOfRange(index as i64)),
        })
    }

    pub fn index(self) -> usize {
        match self {
            Action::Wait => 0,
            Action::MoveToTable(t) => 1 + t,
            Action::TakeOrder => 7,
            Action::SubmitOrders => 8,
            Action::PickupFood => 9,
            Action::ServeFood => 10,
            Action::CollectBill => 11,
            Action::CleanTable => 12,
            Action::ReturnDishes => 13,
            Action::MoveToKitchen => 14,
            Action::Seat { group, table } => SEAT_BASE + NUM_TABLES * group + table,
        }
    }

    pub fn seat(group: usize, table: usize) -> Action {
        debug_assert!(group < QUEUE_SLOTS && table < NUM_TABLES);
        Action::Seat { group, table }
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..NUM_ACTIONS).map(|i| Action::from_index(i).expect("in range"))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Wait => write!(f, "WAIT"),
            Action::MoveToTable(t) => write!(f, "MOVE_TO_TABLE({})", t + 1),
            Action::TakeOrder => write!(f, "TAKE_ORDER"),
            Action::SubmitOrders => write!(f, "SUBMIT_ORDERS"),
            Action::PickupFood => write!(f, "PICKUP_FOOD"),
            Action::ServeFood => write!(f, "SERVE_FOOD"),
            Action::CollectBill => write!(f, "COLLECT_BILL"),
            Action::CleanTable => write!(f, "CLEAN_TABLE"),
            Action::ReturnDishes => write!(f, "RETURN_DISHES"),
            Action::MoveToKitchen => write!(f, "MOVE_TO_KITCHEN"),
            Action::Seat { group, table } => write!(f, "SEAT(group {}, table {})", group, table + 1),
        }
    }
}
