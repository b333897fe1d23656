use dinerdash::harness::{compare, evaluate, run_episode, EvalReport, EVAL_EPISODES, EVAL_SEED_BASE};
use dinerdash::policy::{ExpertPolicy, RandomPolicy};
use dinerdash::sim::EnvConfig;

#[test]
fn expert_and_random_reference_scores() {
    let cfg = EnvConfig::default();
    let expert = evaluate(&cfg, &ExpertPolicy::default(), EVAL_EPISODES, EVAL_SEED_BASE).unwrap();
    assert!(expert.mean > 0.0, "expert mean {}", expert.mean);
    assert!(expert.mean_length() >= 300.0, "expert mean length {}", expert.mean_length());
    let random = evaluate(&cfg, &RandomPolicy, EVAL_EPISODES, EVAL_SEED_BASE).unwrap();
    assert!(random.mean <= -500.0, "random mean {}", random.mean);
    assert_eq!(compare(&[random.clone(), expert.clone()]).unwrap().ranked[0].policy, "expert");
    assert_eq!(expert.config_hash, cfg.hash());
}

#[test]
fn single_episode_report() {
    let cfg = EnvConfig::default();
    let r = evaluate(&cfg, &ExpertPolicy::default(), 1, 77).unwrap();
    let (ret, len) = run_episode(&cfg, &ExpertPolicy::default(), 77).unwrap();
    assert_eq!((r.mean, r.std, r.min, r.max), (ret, 0.0, ret, ret));
    assert_eq!((r.seeds.clone(), r.lengths.clone()), (vec![77], vec![len]));
}

#[test]
fn evaluation_is_reproducible_and_seed_ordered() {
    let cfg = EnvConfig::default();
    let a = evaluate(&cfg, &RandomPolicy, 8, 500).unwrap();
    let b = evaluate(&cfg, &RandomPolicy, 8, 500).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seeds, (500..508).collect::<Vec<_>>());
    for (k, &seed) in a.seeds.iter().enumerate() {
        assert_eq!(run_episode(&cfg, &RandomPolicy, seed).unwrap().0, a.returns[k]);
    }
}

#[test]
fn report_round_trips_and_rejects_tampering() {
    let cfg = EnvConfig::default();
    let r = evaluate(&cfg, &RandomPolicy, 3, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    r.save(&path).unwrap();
    assert_eq!(EvalReport::load(&path).unwrap(), r);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["mean"] = serde_json::json!(12345.0);
    std::fs::write(&path, v.to_string()).unwrap();
    assert!(EvalReport::load(&path).is_err());
}

#[test]
fn comparison_is_stable_and_warns_on_mixed_configs() {
    let mk = |name: &str, mean: f64, hash: &str| {
        EvalReport::from_episodes(name.into(), hash.into(), vec![0], vec![mean], vec![1]).unwrap()
    };
    let c = compare(&[mk("a", -5.0, "h"), mk("b", 10.0, "h"), mk("c", -5.0, "h")]).unwrap();
    let order: Vec<_> = c.ranked.iter().map(|r| r.policy.as_str()).collect();
    assert_eq!(order, ["b", "a", "c"]);
    assert!(c.warnings.is_empty());
    let mixed = compare(&[mk("a", 1.0, "h"), mk("b", 2.0, "other")]).unwrap();
    assert!(!mixed.warnings.is_empty());
}
