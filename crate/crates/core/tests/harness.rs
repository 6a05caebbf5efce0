//! End-to-end behavior of the training harness on small configurations.

use varl::buffers::ReplayBuffer;
use varl::envs::make_task;
use varl::harness::{
    prefill_expert, query_ledger_report, read_metrics, run_experiment, Algorithm, ExperimentConfig, MetricsRecord, Trainer,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(env: &str, algorithm: Algorithm) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(env).unwrap();
    cfg.algorithm = algorithm;
    cfg.sac.hidden = vec![16, 16];
    cfg.sac.batch_size = 16;
    cfg.warmup_steps = 100;
    cfg.max_steps = 900;
    cfg.eval_every = 300;
    cfg.eval_episodes = 3;
    cfg.shaping.cutoff = 500;
    cfg.shaping.guidance_batch = 16;
    cfg.advisor.k = 50;
    cfg.advisor.trigger_steps = Some(vec![150, 300]);
    cfg
}

fn strip_clock(mut records: Vec<MetricsRecord>) -> Vec<MetricsRecord> {
    records.iter_mut().for_each(|r| r.wall_clock_s = 0.0);
    records
}

#[test]
fn same_seed_same_metrics() {
    for algo in [Algorithm::Varl, Algorithm::Sac] {
        let cfg = small("sparse-grid", algo);
        let a = strip_clock(Trainer::new(&cfg, 4).unwrap().run(|_| Ok(())).unwrap());
        let b = strip_clock(Trainer::new(&cfg, 4).unwrap().run(|_| Ok(())).unwrap());
        assert_eq!(a, b);
        let c = strip_clock(Trainer::new(&cfg, 5).unwrap().run(|_| Ok(())).unwrap());
        assert_ne!(a, c);
    }
}

#[test]
fn continuous_runs_are_reproducible_too() {
    let mut cfg = small("point-reach", Algorithm::Varl);
    cfg.max_steps = 400;
    let a = strip_clock(Trainer::new(&cfg, 1).unwrap().run(|_| Ok(())).unwrap());
    let b = strip_clock(Trainer::new(&cfg, 1).unwrap().run(|_| Ok(())).unwrap());
    assert_eq!(a, b);
    assert!(a.last().unwrap().guidance_pairs > 0);
}

#[test]
fn varl_without_triggers_is_sac() {
    let mut varl = small("sparse-grid", Algorithm::Varl);
    varl.advisor.trigger_steps = Some(vec![]);
    let sac = small("sparse-grid", Algorithm::Sac);
    let mut a = Trainer::new(&varl, 2).unwrap();
    let mut b = Trainer::new(&sac, 2).unwrap();
    for _ in 0..varl.max_steps {
        assert_eq!(a.step().unwrap(), b.step().unwrap());
    }
    assert_eq!(a.agent().actor().flatten(), b.agent().actor().flatten());
    assert_eq!(a.agent().critics().0.flatten(), b.agent().critics().0.flatten());
    assert!(a.guidance().is_empty());
}

#[test]
fn shaping_stops_exactly_after_the_cutoff() {
    let cfg = small("sparse-grid", Algorithm::Varl);
    let cutoff = cfg.shaping.cutoff;
    let mut varl = Trainer::new(&cfg, 3).unwrap();
    let mut shaped_steps = 0;
    while varl.t() < cutoff {
        let r = varl.step().unwrap();
        if r.gate.is_some() {
            shaped_steps += 1;
        }
    }
    assert!(shaped_steps > 0 && !varl.guidance().is_empty());
    let mut sac = varl.fork(Algorithm::Sac);
    while varl.t() < cfg.max_steps {
        let r = varl.step().unwrap();
        let s = sac.step().unwrap();
        assert!(r.gate.is_none());
        assert_eq!(r.actor_loss.unwrap().to_bits(), r.baseline_loss.unwrap().to_bits());
        assert_eq!(r, s);
        assert_eq!(varl.agent().actor().flatten(), sac.agent().actor().flatten());
    }
}

#[test]
fn sac_never_touches_the_advisor() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("sparse-grid", Algorithm::Sac);
    cfg.seeds = vec![0, 1];
    cfg.output_dir = dir.path().join("sac");
    let run = run_experiment(&cfg).unwrap();
    for seed in &run.seeds {
        assert_eq!(seed.guidance_pairs, 0);
        assert!(seed.records.iter().all(|r| r.advisor_requests == 0 && r.guidance_pairs == 0));
    }
    for l in query_ledger_report(&cfg.output_dir).unwrap() {
        assert_eq!((l.report.trigger_batches, l.report.batch_size, l.report.total_samples), (0, None, 0));
        assert!(l.report.to_string().contains('-'));
    }
}

#[test]
fn default_schedule_gives_three_batches_of_five_hundred() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset("sparse-grid").unwrap();
    cfg.sac.hidden = vec![8];
    cfg.seeds = vec![0];
    cfg.max_steps = 3000;
    cfg.eval_every = 1000;
    cfg.eval_episodes = 1;
    cfg.checkpoints = false;
    cfg.output_dir = dir.path().join("varl");
    run_experiment(&cfg).unwrap();
    let report = &query_ledger_report(&cfg.output_dir).unwrap()[0].report;
    assert_eq!((report.trigger_batches, report.batch_size, report.total_samples), (3, Some(500), 1500));
    assert_eq!(report.pairs_added, 1500);
}

#[test]
fn expert_prefill_holds_successful_replayable_episodes() {
    let task = make_task("sparse-grid").unwrap();
    let spec = task.spec().clone();
    let mut replay = ReplayBuffer::new(10_000, spec.state_dim, spec.action_space.clone()).unwrap();
    let added = prefill_expert(&mut replay, &task, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(added, replay.len());
    let mut episodes = 0;
    let mut rewards_this_episode = 0;
    for t in replay.iter_chronological() {
        let outcome = task.transition(&t.state, &t.action);
        assert_eq!(outcome.next_state, t.next_state);
        assert_eq!(outcome.reward, t.reward);
        if t.reward == 1.0 {
            rewards_this_episode += 1;
        }
        if t.terminal || t.truncated {
            assert!(t.terminal, "oracle episodes never time out");
            assert_eq!(rewards_this_episode, 1);
            rewards_this_episode = 0;
            episodes += 1;
        }
    }
    assert_eq!(episodes, 10);
}

#[test]
fn zero_expert_episodes_is_sac() {
    let mut prefill = small("chain", Algorithm::SacExpertPrefill);
    prefill.expert_episodes = 0;
    let sac = small("chain", Algorithm::Sac);
    let a = strip_clock(Trainer::new(&prefill, 6).unwrap().run(|_| Ok(())).unwrap());
    let b = strip_clock(Trainer::new(&sac, 6).unwrap().run(|_| Ok(())).unwrap());
    assert_eq!(a, b);
}

#[test]
fn summary_matches_recomputation_from_metrics_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("sparse-grid", Algorithm::Varl);
    cfg.seeds = (0..5).collect();
    cfg.max_steps = 1500;
    cfg.eval_every = 100;
    cfg.threshold = 0.3;
    cfg.output_dir = dir.path().join("grid");
    let run = run_experiment(&cfg).unwrap();
    let mut reached = Vec::new();
    for seed in &cfg.seeds {
        let records = read_metrics(&cfg.output_dir.join(format!("seed-{seed}/metrics.jsonl"))).unwrap();
        // First full trailing window of 10 eval points.
        let mut first = None;
        for i in cfg.smoothing_window - 1..records.len() {
            let w = &records[i + 1 - cfg.smoothing_window..=i];
            let avg = w.iter().map(|r| r.success).sum::<f64>() / w.len() as f64;
            if avg >= cfg.threshold {
                first = Some(records[i].step);
                break;
            }
        }
        let s = run.summary.seeds.iter().find(|s| s.seed == *seed).unwrap();
        assert_eq!(s.steps_to_threshold, first, "seed {seed}");
        reached.extend(first.map(|v| v as f64));
    }
    if !reached.is_empty() {
        let mean = reached.iter().sum::<f64>() / reached.len() as f64;
        let var = reached.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reached.len() as f64;
        assert_eq!(run.summary.reached, reached.len());
        assert!((run.summary.mean_steps.unwrap() - mean).abs() < 1e-9);
        assert!((run.summary.std_steps.unwrap() - var.sqrt()).abs() < 1e-9);
    }
    assert!(cfg.output_dir.join("summary.json").exists());
    assert!(cfg.output_dir.join("config.toml").exists());
}
