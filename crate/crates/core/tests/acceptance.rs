//! Acceptance report: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sls_core::agents::{compute_targets, AgentVariant, Transition};
use sls_core::checkpoint::Checkpoint;
use sls_core::env::{shaped_reward, ActionGroup, ActionId, Env, EnvSpec, RewardParams, ACTION_COUNT};
use sls_core::neural::{Architecture, NetShape, Network};
use sls_core::trace::EpisodeTrace;
use sls_core::training::{evaluate, read_metrics, train, EvalConfig, TrainConfig};

mod common;
use common::{brute_force, gradient_check, one_hot, oracle, random_batch, table_network, transition};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let took = start.elapsed();
    check(
        took < limit,
        format!("{detail}; {:.1}s (limit {}s)", took.as_secs_f64(), limit.as_secs()),
    )
}

fn rules_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let mut env = Env::new(EnvSpec::default()).map_err(|e| e.to_string())?;
    let (mut won, mut truncated, mut steps) = (0u32, 0u32, 0u64);
    for game in 0..10_000u64 {
        env.reset(game);
        loop {
            let group = ActionGroup::for_phase(env.phase());
            let ids = group.ids();
            let action = ActionId::new(rng.gen_range(ids) as usize).unwrap();
            let r = env.step(action).map_err(|e| format!("game {game}: {e}"))?;
            steps += 1;
            let state = env.state();
            state.check_invariants().map_err(|e| format!("game {game}: {e}"))?;
            let piles = state.board().iter().filter(|p| !p.is_empty()).count();
            if piles > 6 {
                return Err(format!("game {game}: {piles} piles"));
            }
            if r.done {
                match (state.winner(), r.info.truncated) {
                    (Some(_), _) => won += 1,
                    (None, true) => truncated += 1,
                    (None, false) => return Err(format!("game {game}: ended without winner or truncation")),
                }
                break;
            }
        }
    }
    within(
        start,
        Duration::from_secs(120),
        format!("10000 games, {steps} steps, {won} won, {truncated} truncated, 0 violations"),
    )
}

fn observation_size() -> Outcome {
    let n = EnvSpec::default().obs_size();
    let mut env = Env::new(EnvSpec::default()).map_err(|e| e.to_string())?;
    let len = env.reset(0).observation.len();
    check(n == 509 && len == 509, format!("obs_size {n}, emitted {len}"))
}

fn reward_formula() -> Outcome {
    let p = RewardParams::default();
    let mut worst: f64 = 0.0;
    let mut expect = |t: u64, legal: bool, want: f64| worst = worst.max((shaped_reward(t, legal, &p) - want).abs());
    for t in [1, 5, 17, 60, 100, 1000] {
        expect(t, false, -5.0);
    }
    for t in 1..=16 {
        expect(t, true, 5.0);
    }
    expect(17, true, 4.901_960_784_313_726);
    expect(100, true, 0.833_333_333_333_333);
    for t in 17..=500 {
        expect(t, true, 5.0 / (0.06 * t as f64));
    }
    check(worst < 1e-6, format!("max abs error {worst:.2e} (tolerance 1e-6)"))
}

fn gradient() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut nets, mut worst, mut k) = ([0u32; 2], 0.0f64, 0u64);
    while nets[0] + nets[1] < 24 {
        k += 1;
        let arch = if (nets[0] + nets[1]) % 2 == 0 {
            Architecture::Standard
        } else {
            Architecture::Dueling
        };
        let shape = NetShape {
            input: rng.gen_range(1..=8),
            hidden: 4,
            actions: ACTION_COUNT,
        };
        let mut net = Network::with_shape(arch, shape, k);
        for layer in net.layers_mut() {
            for b in layer.bias.iter_mut() {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        let batch = random_batch(&mut rng, shape.input, 6);
        if oracle::loss(&net, &oracle::params(&net), &batch).2 < 0.05 {
            continue;
        }
        let (err, skipped) = gradient_check(&net, &batch);
        if skipped > 0 {
            return Err(format!("net {k}: perturbation crossed a ReLU kink"));
        }
        worst = worst.max(err);
        nets[usize::from(arch == Architecture::Dueling)] += 1;
    }
    within(
        start,
        Duration::from_secs(10),
        format!(
            "{} standard + {} dueling nets, max rel error {worst:.2e}",
            nets[0], nets[1]
        ),
    )
    .and_then(|d| check(worst < 1e-4, d))
}

fn target_oracle() -> Outcome {
    let online_t = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 5.0, 0.0, 0.0],
        [3.0, -1.0, 2.5, 0.5, 0.0, 4.0, -2.0, 1.0, 6.0, 0.0],
        [-1.0, 2.0, 2.0, 1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 3.0],
    ];
    let target_t = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0, 2.0, 0.0, 0.0],
        [1.0, 2.0, -3.0, 0.0, 7.0, 0.0, 1.5, 2.5, -1.0, 0.0],
        [0.5, 0.5, 4.0, -2.0, 1.0, 3.0, 0.0, 1.0, 2.0, -1.0],
    ];
    let online = table_network(&online_t);
    let target = table_network(&target_t);
    let gamma = 0.95f32;
    let groups = [ActionGroup::Pile, ActionGroup::Player];
    let mut cases = Vec::new();
    for s in 0..3 {
        for g in groups {
            for done in [false, true] {
                cases.push((s, g.mask(), 1.0 - s as f64, done));
            }
        }
    }
    let ts: Vec<Transition> = cases
        .iter()
        .map(|(s, m, r, d)| transition(one_hot(3, 0), 0, *r, one_hot(3, *s), *m, *d))
        .collect();
    let refs: Vec<&Transition> = ts.iter().collect();
    let mut ys = Vec::new();
    for variant in [AgentVariant::Dqn, AgentVariant::Ddqn] {
        let y = compute_targets(variant, &online, &target, &refs, gamma).map_err(|e| e.to_string())?;
        let want: Vec<f32> = cases
            .iter()
            .map(|(s, m, r, d)| brute_force(variant, &online_t, &target_t, *s, m, *r, *d, gamma))
            .collect();
        if y != want {
            return Err(format!("{variant} targets {y:?} != oracle {want:?}"));
        }
        ys.push(y);
    }
    // Case 2 (state 0, player group) is where the online and target argmaxes disagree.
    if ys[0][2] == ys[1][2] {
        return Err("constructed DDQN != DQN case coincides".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let net = Network::with_shape(Architecture::Dueling, NetShape::new(12), seed);
        let x: Vec<f32> = (0..12).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let pass = oracle::forward(
            &net,
            &oracle::params(&net),
            &x.iter().map(|v| f64::from(*v)).collect::<Vec<_>>(),
        );
        let q = net.forward(&x, 1).map_err(|e| e.to_string())?;
        let mean = q.iter().map(|v| f64::from(*v)).sum::<f64>() / q.len() as f64;
        worst = worst.max((mean - pass.value.unwrap()).abs());
    }
    check(
        worst < 1e-5,
        format!(
            "{} transitions exact for DQN and DDQN, DDQN != DQN case {} vs {}; dueling |mean Q - V| max {worst:.1e}",
            cases.len(),
            ys[1][2],
            ys[0][2]
        ),
    )
}

fn random_baseline() -> Result<(String, f64), String> {
    let start = Instant::now();
    let report = evaluate(AgentVariant::Random, None, None, &EvalConfig::default()).map_err(|e| e.to_string())?;
    let (r, s) = (report.reward.mean, report.steps.mean);
    let ok = (-40.0..=10.0).contains(&r) && (45.0..=95.0).contains(&s);
    let detail = within(
        start,
        Duration::from_secs(60),
        format!("1000 episodes, mean reward {r:.2} in [-40, 10], mean steps {s:.2} in [45, 95]"),
    )
    .and_then(|d| check(ok, d));
    detail.map(|d| (d, r))
}

fn final_window(variant: AgentVariant) -> Result<(f64, f64), String> {
    let config = TrainConfig {
        variant,
        episodes: 2000,
        seed: 0,
        ..TrainConfig::default()
    };
    let out = train(config, |_| {}).map_err(|e| e.to_string())?;
    let tail = &out.stats[out.stats.len() - 200..];
    let reward = tail.iter().map(|s| s.reward).sum::<f64>() / 200.0;
    let steps = tail.iter().map(|s| s.steps as f64).sum::<f64>() / 200.0;
    Ok((reward, steps))
}

fn learning(random_mean: Option<f64>) -> Outcome {
    let start = Instant::now();
    let (dqn_r, dqn_s) = final_window(AgentVariant::Dqn)?;
    let (ddqn_r, ddqn_s) = final_window(AgentVariant::Ddqn)?;
    let random_mean = match random_mean {
        Some(m) => m,
        None => {
            evaluate(AgentVariant::Random, None, None, &EvalConfig::default())
                .map_err(|e| e.to_string())?
                .reward
                .mean
        }
    };
    let ok = dqn_r >= 50.0
        && dqn_r - random_mean >= 40.0
        && (40.0..=90.0).contains(&dqn_s)
        && (ddqn_r - dqn_r).abs() <= 30.0;
    within(
        start,
        Duration::from_secs(1800),
        format!(
            "DQN final-200 reward {dqn_r:.2} (>= 50, random {random_mean:.2} + 40), steps {dqn_s:.2} in [40, 90]; \
             DDQN reward {ddqn_r:.2} (steps {ddqn_s:.2}), |DDQN - DQN| {:.2} <= 30",
            (ddqn_r - dqn_r).abs()
        ),
    )
    .and_then(|d| check(ok, d))
}

fn determinism() -> Outcome {
    let dirs: Vec<_> = (0..2)
        .map(|_| tempfile::tempdir().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for dir in &dirs {
        let config = TrainConfig {
            episodes: 6,
            seed: 99,
            sync_every: 3,
            trace_every: 1,
            out_dir: Some(dir.path().to_path_buf()),
            ..TrainConfig::default()
        };
        train(config, |_| {}).map_err(|e| e.to_string())?;
    }
    let read = |i: usize, f: &str| fs::read(dirs[i].path().join(f)).map_err(|e| e.to_string());
    if read(0, "metrics.jsonl")? != read(1, "metrics.jsonl")? {
        return Err("metrics streams differ for identical seeds".into());
    }
    let bytes = read(0, "final.ckpt")?;
    let ck = Checkpoint::decode(&bytes).map_err(|e| e.to_string())?;
    if ck.encode() != bytes || bytes != read(1, "final.ckpt")? {
        return Err("checkpoint round trip is not bit-exact".into());
    }
    let metrics = read_metrics(&dirs[0].path().join("metrics.jsonl")).map_err(|e| e.to_string())?;
    let mut traces = 0;
    for entry in fs::read_dir(dirs[0].path().join("traces")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let trace = EpisodeTrace::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        trace.replay().map_err(|e| format!("{}: {e}", path.display()))?;
        traces += 1;
    }
    check(
        traces == metrics.len(),
        format!(
            "{} metric lines identical, checkpoint bit-exact, {traces} traces replayed",
            metrics.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| match &outcome {
        Ok(d) => println!("PASS {name}: {d}"),
        Err(d) => {
            failed += 1;
            println!("FAIL {name}: {d}");
        }
    };
    report("rules soundness", rules_soundness());
    report("observation size", observation_size());
    report("reward formula", reward_formula());
    report("gradient check", gradient());
    report("target oracle", target_oracle());
    let baseline = random_baseline();
    let random_mean = baseline.as_ref().ok().map(|(_, m)| *m);
    report("random baseline", baseline.map(|(d, _)| d));
    report("learning", learning(random_mean));
    report("determinism and persistence", determinism());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
