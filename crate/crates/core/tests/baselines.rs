use dinerdash::baselines::{bc_act, bc_train, BcHyper, BcPolicy, RandomPolicy};
use dinerdash::harness::evaluate;
use dinerdash::policy::ExpertPolicy;
use dinerdash::sim::EnvConfig;
use dinerdash::trajectory::record;

#[test]
fn memorizes_a_single_pair() {
    let mut ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 1, 0).unwrap();
    ds.transitions.truncate(1);
    ds.transitions[0].action = 42;
    ds.transitions[0].done = true;
    ds.header.n_pairs = 1;
    let hyper = BcHyper { epochs: 200, dropout: 0.0, ..Default::default() };
    let (policy, report) = bc_train(&ds, &hyper).unwrap();
    assert_eq!(bc_act(&policy, &ds.transitions[0].state).unwrap(), 42);
    assert_eq!(report.train_accuracy, 1.0);
    assert!(report.losses.last().unwrap() < report.losses.first().unwrap());
}

#[test]
fn training_is_seeded() {
    let ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 2, 0).unwrap();
    let hyper = BcHyper { epochs: 2, ..Default::default() };
    let (a, _) = bc_train(&ds, &hyper).unwrap();
    let (b, _) = bc_train(&ds, &hyper).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let (c, _) = bc_train(&ds, &BcHyper { seed: 1, ..hyper }).unwrap();
    assert_ne!(a.to_json(), c.to_json());
    let back = BcPolicy::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn learns_more_than_chance() {
    let ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 3, 0).unwrap();
    let (_, report) = bc_train(&ds, &BcHyper { epochs: 5, ..Default::default() }).unwrap();
    assert!(report.train_accuracy > 1.0 / 57.0, "accuracy {}", report.train_accuracy);
}

#[test]
fn random_agent_scores_poorly() {
    let cfg = EnvConfig::default();
    let r = evaluate(&cfg, &RandomPolicy, 10, 10_000).unwrap();
    assert!(r.mean < 0.0);
    let again = evaluate(&cfg, &RandomPolicy, 10, 10_000).unwrap();
    assert_eq!(r.returns, again.returns);
}

#[test]
fn empty_dataset_is_rejected() {
    let mut ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 1, 0).unwrap();
    ds.transitions.clear();
    ds.header.n_pairs = 0;
    ds.header.n_episodes = 0;
    assert!(bc_train(&ds, &BcHyper::default()).is_err());
}
