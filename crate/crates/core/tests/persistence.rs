use std::fs;
use std::path::Path;

use sls_core::agents::AgentVariant;
use sls_core::checkpoint::Checkpoint;
use sls_core::curves::emit_curves;
use sls_core::trace::EpisodeTrace;
use sls_core::training::{evaluate, load_policy, read_metrics, resume, train, EvalConfig, TrainConfig, Trainer};

fn small(variant: AgentVariant, episodes: u32, dir: &Path) -> TrainConfig {
    TrainConfig {
        variant,
        episodes,
        seed: 21,
        hidden: 8,
        batch_size: 8,
        sync_every: 2,
        buffer_capacity: 300,
        trace_every: 1,
        out_dir: Some(dir.to_path_buf()),
        ..TrainConfig::default()
    }
}

#[test]
fn identical_seeds_reproduce_runs() {
    for variant in AgentVariant::LEARNED {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        train(small(variant, 5, a.path()), |_| {}).unwrap();
        train(small(variant, 5, b.path()), |_| {}).unwrap();
        for file in ["metrics.jsonl", "final.ckpt", "final.json", "checkpoints/ep_00004.ckpt"] {
            assert_eq!(
                fs::read(a.path().join(file)).unwrap(),
                fs::read(b.path().join(file)).unwrap(),
                "{variant}: {file}"
            );
        }
    }
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    train(small(AgentVariant::Ddqn, 7, full.path()), |_| {}).unwrap();

    // Stop after episode 5; the last snapshot is from episode 4, so episode 5
    // is replayed after the metrics file is cut back.
    let part = tempfile::tempdir().unwrap();
    train(small(AgentVariant::Ddqn, 5, part.path()), |_| {}).unwrap();
    let resumed = resume(part.path(), Some(7), |_| {}).unwrap();
    assert_eq!(resumed.stats.first().unwrap().episode, 5);

    assert_eq!(
        fs::read_to_string(full.path().join("metrics.jsonl")).unwrap(),
        fs::read_to_string(part.path().join("metrics.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read(full.path().join("final.ckpt")).unwrap(),
        fs::read(part.path().join("final.ckpt")).unwrap()
    );
}

#[test]
fn emitted_traces_replay() {
    let dir = tempfile::tempdir().unwrap();
    train(small(AgentVariant::Dueling, 4, dir.path()), |_| {}).unwrap();
    let metrics = read_metrics(&dir.path().join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.len(), 4);
    for m in &metrics {
        let path = dir.path().join(format!("traces/ep_{:05}.jsonl", m.episode));
        let trace = EpisodeTrace::read(&path).unwrap();
        let summary = trace.replay().unwrap();
        assert_eq!(summary.steps as u64, m.steps);
        assert!((summary.total_reward - m.reward).abs() < 1e-9);
        assert_eq!(summary.winner, m.winner);
    }
}

#[test]
fn replay_accepts_traces_from_many_runs() {
    for seed in 0..100 {
        let variant = AgentVariant::LEARNED[seed as usize % 3];
        let mut trainer = Trainer::new(TrainConfig {
            variant,
            seed,
            hidden: 8,
            batch_size: 8,
            ..TrainConfig::default()
        })
        .unwrap();
        for _ in 0..2 {
            let (stats, trace) = trainer.run_episode(true).unwrap();
            let trace = EpisodeTrace::parse(&trace.unwrap().to_jsonl()).unwrap();
            let summary = trace.replay().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert_eq!(summary.steps as u64, stats.steps);
        }
    }
}

#[test]
fn single_episode_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(small(AgentVariant::Dqn, 1, dir.path()), |_| {}).unwrap();
    assert_eq!(out.stats.len(), 1);
    let text = fs::read_to_string(dir.path().join("metrics.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 1);
    let all_seats = out.stats[0].seat_steps.iter().all(|n| *n > 0);
    assert!(
        all_seats,
        "every seat feeds the shared buffer: {:?}",
        out.stats[0].seat_steps
    );
}

#[test]
fn checkpoint_file_round_trip_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(small(AgentVariant::Dueling, 2, dir.path()), |_| {}).unwrap();
    let path = out.final_checkpoint.unwrap();
    let bytes = fs::read(&path).unwrap();
    let ck = Checkpoint::decode(&bytes).unwrap();
    assert_eq!(ck.network, out.network);
    assert_eq!(ck.encode(), bytes);
    let (variant, net) = load_policy(&path).unwrap();
    assert_eq!(variant, AgentVariant::Dueling);
    assert_eq!(net, out.network);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
    for key in ["episode", "epsilon", "rng", "config_hash"] {
        assert!(meta.get(key).is_some(), "sidecar lacks {key}");
    }
}

#[test]
fn evaluation_is_frozen_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(small(AgentVariant::Dqn, 3, dir.path()), |_| {}).unwrap();
    let before = Checkpoint::new(out.network.clone()).encode();
    let cfg = EvalConfig {
        episodes: 1,
        seed: 8,
        ..EvalConfig::default()
    };
    let a = evaluate(AgentVariant::Dqn, Some(&out.network), None, &cfg).unwrap();
    let b = evaluate(AgentVariant::Dqn, Some(&out.network), None, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(Checkpoint::new(out.network).encode(), before);

    let r1 = evaluate(AgentVariant::Random, None, None, &cfg).unwrap();
    assert_eq!(r1, evaluate(AgentVariant::Random, None, None, &cfg).unwrap());
    assert_eq!(r1.reward.stdev, 0.0);
}

#[test]
fn corrupt_checkpoint_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ckpt");
    fs::write(&path, b"SLSQNET\0garbage").unwrap();
    assert!(load_policy(&path).is_err());
}

#[test]
fn curves_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(small(AgentVariant::Dqn, 4, dir.path()), |_| {}).unwrap();
    let files = emit_curves(&out.stats, 2, &dir.path().join("plots")).unwrap();
    assert_eq!(files.len(), 3);
    let csv = fs::read_to_string(&files[0]).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("episode,reward,steps"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 2.0);
    assert!((first[1] - (out.stats[0].reward + out.stats[1].reward) / 2.0).abs() < 1e-9);
    assert!(fs::read_to_string(&files[1]).unwrap().starts_with("<svg"));
}
