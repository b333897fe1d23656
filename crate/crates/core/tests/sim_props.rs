mod common;

use dinerdash::sim::{decode, state::dimension_max, Env, EnvConfig, Stage, NUM_ACTIONS, STATE_DIM};
use proptest::prelude::*;

fn configs() -> impl Strategy<Value = EnvConfig> {
    prop_oneof![Just(EnvConfig::hard()), Just(EnvConfig::standard())]
}

fn actions(len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..NUM_ACTIONS, 1..len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn same_seed_same_stream(cfg in configs(), seed in any::<u64>(), action_seed in any::<u64>()) {
        prop_assert!(common::paired_run_identical(&cfg, seed, 300, action_seed));
    }

    #[test]
    fn invariants_hold_along_random_rollouts(cfg in configs(), seed in 0u64..1000, acts in actions(400)) {
        let mut env = Env::new(cfg.clone(), seed).unwrap();
        env.reset();
        let mut lives = cfg.max_lives;
        let mut total = 0.0;
        for &a in &acts {
            let r = env.step(a).unwrap();
            prop_assert!(env.state().check_invariants(&cfg).is_ok(), "{:?}", env.state().check_invariants(&cfg));
            prop_assert_eq!(r.info.lives, lives.saturating_sub(r.info.departures));
            lives = r.info.lives;
            let expected = r.info.action_reward + cfg.rewards.leave * r.info.departures as f64;
            prop_assert_eq!(r.reward.to_bits(), expected.to_bits());
            if r.info.illegal {
                prop_assert_eq!(r.info.action_reward, cfg.rewards.illegal);
            }
            total += r.reward;
            if r.done {
                prop_assert!(lives == 0 || r.info.step_count >= cfg.max_steps);
                prop_assert!(env.step(0).is_err());
                break;
            }
        }
        prop_assert!((env.state().cumulative_return - total).abs() < 1e-9);
    }

    #[test]
    fn encoding_is_in_range_and_decodes(cfg in configs(), seed in 0u64..1000, acts in actions(300)) {
        let mut env = Env::new(cfg.clone(), seed).unwrap();
        env.reset();
        let max = dimension_max(&cfg);
        for &a in &acts {
            let r = env.step(a).unwrap();
            prop_assert_eq!(r.state.len(), STATE_DIM);
            for (i, (&v, &m)) in r.state.iter().zip(max.iter()).enumerate() {
                prop_assert!(v.is_finite() && (0.0..=m).contains(&v), "entry {} = {} outside [0, {}]", i, v, m);
            }
            prop_assert_eq!(decode(&r.state).unwrap(), env.state().observation());
            if r.done {
                break;
            }
        }
    }

    #[test]
    fn legality_mask_matches_probing(seed in 0u64..1000, acts in actions(200)) {
        let mut env = Env::new(EnvConfig::default(), seed).unwrap();
        env.reset();
        for &a in &acts {
            prop_assert_eq!(common::legality_mismatches(&env), 0);
            if env.step(a).unwrap().done {
                break;
            }
        }
    }

    #[test]
    fn queue_stays_compacted(seed in 0u64..1000, acts in actions(300)) {
        let mut env = Env::new(EnvConfig::default(), seed).unwrap();
        env.reset();
        for &a in &acts {
            if env.step(a).unwrap().done {
                break;
            }
            let present: Vec<bool> = env.state().queue.iter().map(|g| g.present).collect();
            let n = present.iter().filter(|&&p| p).count();
            prop_assert!(present[..n].iter().all(|&p| p) && present[n..].iter().all(|&p| !p));
        }
    }
}

#[test]
fn reset_returns_the_initial_state() {
    let mut env = Env::new(EnvConfig::default(), 5).unwrap();
    let first = env.reset();
    for a in [1, 7, 14, 0, 0] {
        env.step(a).unwrap();
    }
    assert_eq!(env.reset(), first);
    assert_eq!(env.state().lives, env.config().max_lives);
    assert!(env.state().tables.iter().all(|t| t.stage == Stage::Empty));
}

#[test]
fn stepping_before_reset_or_out_of_range_fails() {
    let mut env = Env::new(EnvConfig::default(), 0).unwrap();
    assert!(env.step(0).is_err());
    env.reset();
    assert!(env.step(NUM_ACTIONS).is_err());
    assert!(env.step(0).is_ok());
}

#[test]
fn waiting_forever_loses_every_life() {
    let mut env = Env::new(EnvConfig::default(), 1).unwrap();
    env.reset();
    let mut departures = 0;
    loop {
        let r = env.step(0).unwrap();
        departures += r.info.departures;
        if r.done {
            assert_eq!(r.info.lives, 0);
            break;
        }
    }
    assert!(departures >= env.config().max_lives);
}
