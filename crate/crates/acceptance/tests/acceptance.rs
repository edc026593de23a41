//! Acceptance criteria 1-10. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any criterion fails.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

use kpirl_core::dei::{run_dei, DeiConfig, Exploration, Stepsize};
use kpirl_core::envs::{chain_mdp, chain_reward, CartPole};
use kpirl_core::features::{game_bins, gram_matrix, visitation_from_occupancy, FeatureMap, Kernel, KernelKind};
use kpirl_core::game::{
    encode_state, enumerate_feature_space, ChasePolicy, Game, GameConfig, GameState, NO_TOUCH, ZERO_ACTION,
};
use kpirl_core::gridworld::{
    generate_gridworld, learn_reward, percent_value_lost, run_benchmark, simulate_expert, Algorithm, BenchmarkConfig,
    GridFeatures, Gridworld, GridworldConfig,
};
use kpirl_core::kpirl::{normalized_reward, KpirlConfig};
use kpirl_core::mdp::Environment;
use kpirl_core::mdp::{
    episode_rng, policy_value_mc, rollout, rollout_episode, value_iteration, Horizon, TabularMdp, TabularPolicy,
    UniformPolicy,
};
use kpirl_core::treatment::{RewardTable, Smoother, SMOOTHING_ALPHA};
use kpirl_service::model::{Observation, Phase, TrajectoryUpload};
use kpirl_service::{router, ArmSpec, Service, ServiceConfig};

/// Slack on the value bound and the value identity.
const VALUE_TOLERANCE: f64 = 1e-9;
/// Relative slack when checking that projection distances never grow.
const MONOTONE_SLACK: f64 = 1e-12;
const SMOOTHING_TOLERANCE: f64 = 1e-12;
const AREA_TOLERANCE: f64 = 1e-6;
const RANDOM_MDPS: usize = 100;
const GRID_WORLDS: usize = 20;
const GRID_CONVERGED_REQUIRED: usize = 18;
const LINEAR_WORLDS: u64 = 10;
const LINEAR_LOSS_LIMIT: f64 = 5.0;
const CHAIN_SEEDS: u64 = 50;
const CHAIN_REQUIRED: usize = 45;
const CHAIN_FRACTION: f64 = 0.9;
const CHAIN_BUDGET: usize = 15_000;
const CARTPOLE_SIGMAS: f64 = 3.0;
const SPAWN_GAMES: u64 = 1000;
const EXPECTED_SPAWNS: f64 = 75.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn criterion(id: usize, title: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f));
    let elapsed = started.elapsed();
    let (pass, detail) = match outcome {
        Ok(v) => (v.pass, v.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_time = elapsed <= limit;
    let pass = pass && in_time;
    println!(
        "criterion {id:>2} {} {title}: {detail} [{:.1}s of {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over time" }
    );
    pass
}

// ---------------------------------------------------------------------------
// Random tabular corpus for the value bound and the value identity.

struct Case {
    mdp: TabularMdp,
    state_index: Vec<usize>,
    kernel: Kernel,
    alpha: DVector<f64>,
    policies: [TabularPolicy; 2],
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let support = rng.gen_range(1..=n);
    let mut p = vec![0.0; n];
    for _ in 0..support {
        p[rng.gen_range(0..n)] += rng.gen_range(0.05..1.0);
    }
    let total: f64 = p.iter().sum();
    p.iter().map(|x| x / total).collect()
}

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = rng.gen_range(2..=16);
    let actions = rng.gen_range(2..=4);
    let transitions = (0..states)
        .map(|_| {
            (0..actions)
                .map(|_| {
                    random_distribution(&mut rng, states).into_iter().enumerate().filter(|&(_, p)| p > 0.0).collect()
                })
                .collect()
        })
        .collect();
    let initial = random_distribution(&mut rng, states);
    let horizon = Horizon::Finite(rng.gen_range(1..=40));
    let mdp = TabularMdp::new(transitions, initial, rng.gen_range(0.5..0.99), horizon).unwrap();
    let features = rng.gen_range(1..=states);
    let state_index: Vec<usize> =
        (0..states).map(|s| if s < features { s } else { rng.gen_range(0..features) }).collect();
    let rank = rng.gen_range(1..=features);
    let b = DMatrix::from_fn(features, rank, |_, _| rng.gen_range(-1.0..1.0));
    let kernel = Kernel::from_gram(KernelKind::Dot, &b * b.transpose()).unwrap();
    let raw = DVector::from_fn(features, |_, _| rng.gen_range(-1.0..1.0));
    let alpha = normalized_reward(raw, &kernel).unwrap().alpha().clone();
    let mut policy = || {
        let rows = (0..states)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    let mut row = vec![0.0; actions];
                    row[rng.gen_range(0..actions)] = 1.0;
                    row
                } else {
                    random_distribution(&mut rng, actions)
                }
            })
            .collect();
        TabularPolicy::new(rows).unwrap()
    };
    let policies = [policy(), policy()];
    Case { mdp, state_index, kernel, alpha, policies }
}

fn corpus() -> Vec<Case> {
    (0..RANDOM_MDPS as u64).map(|i| random_case(0xC0FFEE + i)).collect()
}

fn state_rewards(case: &Case) -> Vec<f64> {
    let per_feature = case.kernel.gram() * &case.alpha;
    case.state_index.iter().map(|&i| per_feature[i]).collect()
}

/// Independent finite-horizon evaluation with dense matrices.
fn dense_value(case: &Case, policy: &TabularPolicy, reward: &[f64]) -> f64 {
    let n = case.mdp.num_states();
    let Horizon::Finite(horizon) = case.mdp.horizon_kind() else { unreachable!() };
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for (a, &pa) in policy.rows()[s].iter().enumerate() {
            for &(t, pt) in case.mdp.transitions(s, a) {
                p[(s, t)] += pa * pt;
            }
        }
    }
    let r = DVector::from_column_slice(reward);
    let mut v = r.clone();
    for _ in 1..horizon {
        v = &r + (&p * &v) * case.mdp.discount();
    }
    DVector::from_column_slice(case.mdp.initial()).dot(&v)
}

fn visitation(case: &Case, policy: &TabularPolicy) -> DVector<f64> {
    visitation_from_occupancy(&case.mdp.state_visitation(policy), &case.state_index, case.kernel.size())
}

fn value_bound() -> Verdict {
    let mut held = 0;
    let mut tightest: f64 = 0.0;
    for case in corpus() {
        let r = state_rewards(&case);
        let v: Vec<f64> = case.policies.iter().map(|p| case.mdp.expected_value(&r, p).unwrap()).collect();
        let gap =
            case.kernel.norm(&(visitation(&case, &case.policies[0]) - visitation(&case, &case.policies[1]))).unwrap();
        let lhs = (v[0] - v[1]).abs();
        if lhs <= gap + VALUE_TOLERANCE {
            held += 1;
        }
        if gap > 1e-9 {
            tightest = tightest.max(lhs / gap);
        }
    }
    verdict(
        held == RANDOM_MDPS,
        format!("bound held on {held}/{RANDOM_MDPS} MDPs, largest |ΔV|/‖Δμ‖ = {tightest:.4} (tol {VALUE_TOLERANCE:e})"),
    )
}

fn value_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for case in corpus() {
        let r = state_rewards(&case);
        for p in &case.policies {
            let v = case.mdp.expected_value(&r, p).unwrap();
            let via_mu = case.alpha.dot(&(case.kernel.gram() * visitation(&case, p)));
            worst = worst.max((v - via_mu).abs());
            worst_oracle = worst_oracle.max((v - dense_value(&case, p, &r)).abs());
        }
    }
    verdict(
        worst <= VALUE_TOLERANCE && worst_oracle <= VALUE_TOLERANCE,
        format!(
            "max |V - αᵀKμ| = {worst:.2e}, max |V - dense oracle| = {worst_oracle:.2e} over {} policies (tol {VALUE_TOLERANCE:e})",
            2 * RANDOM_MDPS
        ),
    )
}

// ---------------------------------------------------------------------------
// Gridworlds.

fn kpirl_convergence() -> Verdict {
    let mut monotone = 0;
    let mut converged = 0;
    let mut max_iterations = 0;
    for seed in 0..GRID_WORLDS as u64 {
        let world = generate_gridworld(&GridworldConfig::new(8, seed)).unwrap();
        let experts = simulate_expert(&world, 100, seed + 1000).unwrap();
        let config = KpirlConfig { seed, ..KpirlConfig::default() };
        let out = learn_reward(&world, &experts, KernelKind::Gaussian { bandwidth: 0.6 }, &config).unwrap();
        let d = out.run.distances();
        if d.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK * w[0].max(1.0)) {
            monotone += 1;
        }
        let expert_norm = out.kernel.norm(&out.mu_expert).unwrap();
        let done = out.run.converged && d.len() <= 50 && out.run.final_distance() <= 0.05 * expert_norm * (1.0 + 1e-12);
        if done {
            converged += 1;
        }
        max_iterations = max_iterations.max(d.len());
    }
    verdict(
        monotone == GRID_WORLDS && converged >= GRID_CONVERGED_REQUIRED,
        format!(
            "distances non-increasing in {monotone}/{GRID_WORLDS} worlds, converged in {converged}/{GRID_WORLDS} \
             (need {GRID_CONVERGED_REQUIRED}), at most {max_iterations} iterations"
        ),
    )
}

fn benchmark_direction() -> Verdict {
    let config = BenchmarkConfig {
        sizes: vec![8],
        trajectory_counts: vec![100],
        repetitions: 20,
        seed: 2024,
        ..Default::default()
    };
    let report = run_benchmark(&config).unwrap();
    let pirl = report.row(Algorithm::Pirl, 8, 100).unwrap();
    let kpirl = report.row(Algorithm::Kpirl, 8, 100).unwrap();
    let complete = pirl.failures == 0 && kpirl.failures == 0 && pirl.runs == 20 && kpirl.runs == 20;
    verdict(
        complete && kpirl.mean_percent_value_lost < pirl.mean_percent_value_lost,
        format!(
            "mean percent value lost over {} worlds: kpirl {:.3}% vs pirl {:.3}%",
            kpirl.runs, kpirl.mean_percent_value_lost, pirl.mean_percent_value_lost
        ),
    )
}

fn linear_sanity() -> Verdict {
    let mut losses = Vec::new();
    for seed in 0..LINEAR_WORLDS {
        let config = GridworldConfig::new(8, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
        let map = GridFeatures { n: 8 };
        let rewards = (0..64).map(|s| map.features(&s).iter().zip(&weights).map(|(f, w)| f * w).sum()).collect();
        let world = Gridworld::with_rewards(&config, rewards).unwrap();
        let experts = simulate_expert(&world, 100, seed + 7).unwrap();
        let out =
            learn_reward(&world, &experts, KernelKind::Dot, &KpirlConfig { seed, ..KpirlConfig::default() }).unwrap();
        losses.push(percent_value_lost(&world, &out.learned_state_rewards).unwrap());
    }
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    verdict(
        mean <= LINEAR_LOSS_LIMIT,
        format!("pirl mean loss {mean:.3}% over {LINEAR_WORLDS} linear-reward worlds (limit {LINEAR_LOSS_LIMIT}%)"),
    )
}

// ---------------------------------------------------------------------------
// DEI.

/// Finite-horizon optimum by backward induction, written independently of
/// the library solver.
fn optimal_value(mdp: &TabularMdp, reward: &[f64]) -> f64 {
    let Horizon::Finite(horizon) = mdp.horizon_kind() else { unreachable!() };
    let n = mdp.num_states();
    let mut v = reward.to_vec();
    for _ in 1..horizon {
        v = (0..n)
            .map(|s| {
                let best = (0..2)
                    .map(|a| mdp.transitions(s, a).iter().map(|&(t, p)| p * v[t]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                reward[s] + mdp.discount() * best
            })
            .collect();
    }
    mdp.initial().iter().zip(&v).map(|(d, x)| d * x).sum()
}

fn dei_competence() -> Verdict {
    let mdp = chain_mdp(5, 0.1, 0.9, 20).unwrap();
    let rewards = chain_reward(5);
    let v_star = value_iteration(&mdp, &rewards).unwrap().expected_value(&mdp);
    let oracle = optimal_value(&mdp, &rewards);
    let reward = |s: &usize| rewards[*s];
    let config = DeiConfig {
        iterations: 15,
        episodes: 50,
        horizon: 20,
        window: 10,
        stepsize: Stepsize::default(),
        exploration: Exploration::Uniform,
        budget: CHAIN_BUDGET,
    };
    let mut near = 0;
    let mut within_budget = true;
    for seed in 0..CHAIN_SEEDS {
        let out = run_dei(&mdp, &reward, &config, seed).unwrap();
        within_budget &= out.steps_used <= CHAIN_BUDGET;
        if mdp.expected_value(&rewards, &out.policy).unwrap() >= CHAIN_FRACTION * v_star {
            near += 1;
        }
    }

    let env = CartPole::new(200);
    let baseline = policy_value_mc(&env, &CartPole::reward, &UniformPolicy::new(2), 1000, 77).unwrap();
    let baseline_sd = baseline.std_error * (baseline.episodes as f64).sqrt();
    let config = DeiConfig {
        iterations: 15,
        episodes: 25,
        horizon: 200,
        window: 8,
        stepsize: Stepsize::default(),
        exploration: Exploration::Uniform,
        budget: 15 * 25 * 200,
    };
    let learned: Vec<f64> = (0..10)
        .map(|s| {
            let out = run_dei(&env, &CartPole::reward, &config, s).unwrap();
            policy_value_mc(&env, &CartPole::reward, &out.policy, 100, 5000 + s).unwrap().mean
        })
        .collect();
    let dei_mean = learned.iter().sum::<f64>() / learned.len() as f64;
    let margin = (dei_mean - baseline.mean) / baseline_sd;
    verdict(
        near >= CHAIN_REQUIRED && within_budget && (v_star - oracle).abs() <= 1e-12 && margin >= CARTPOLE_SIGMAS,
        format!(
            "chain: {near}/{CHAIN_SEEDS} seeds within 10% of V* = {v_star:.4} (need {CHAIN_REQUIRED}, budget {CHAIN_BUDGET}); \
             cart-pole: DEI {dei_mean:.2} vs random {:.2}, {margin:.1} per-episode sd (need {CARTPOLE_SIGMAS})",
            baseline.mean
        ),
    )
}

// ---------------------------------------------------------------------------
// Game.

fn feature_enumeration() -> Verdict {
    let a = enumerate_feature_space();
    let b = enumerate_feature_space();
    let deterministic = a.vectors() == b.vectors() && a.hash() == b.hash();
    let mut combos = HashSet::new();
    let mut no_touch = 0;
    let mut valid = true;
    for v in a.vectors() {
        match game_bins(v) {
            Ok(Some(bins)) => valid &= combos.insert(bins),
            Ok(None) => no_touch += usize::from(v.as_slice() == NO_TOUCH),
            Err(_) => valid = false,
        }
    }
    let full_product = 3 * 3 * 8 * 8 * 6;
    verdict(
        deterministic && valid && combos.len() == full_product && no_touch == 1 && a.len() == 3457,
        format!(
            "{} vectors = {} touch bin combinations + {no_touch} no-touch; identical across runs: {deterministic}",
            a.len(),
            combos.len()
        ),
    )
}

fn reward_pipeline() -> Verdict {
    let space = enumerate_feature_space();
    let no_touch = space.index_of(&NO_TOUCH).unwrap();
    let kernel = gram_matrix(KernelKind::Game { bandwidth: 0.6 }, &space).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let alpha = DVector::from_fn(space.len(), |_, _| rng.gen_range(-1.0..1.0));
    let reward = normalized_reward(alpha, &kernel).unwrap();
    let table = RewardTable::from_reward(&reward, &space, no_touch, "game:0.6").unwrap();

    let mut touch: Vec<f64> =
        table.shifted.iter().enumerate().filter(|&(i, _)| i != no_touch).map(|(_, &v)| v).collect();
    touch.sort_by(f64::total_cmp);
    let rank = (0.97 * touch.len() as f64).ceil() as usize;
    let p97 = touch[rank - 1];
    let shift_exact = table.shifted[no_touch] == 0.0;
    let clipped_ok =
        table.clipped.iter().zip(&table.shifted).all(|(&c, &s)| c == s.clamp(0.0, p97) && (0.0..=p97).contains(&c));

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (start, target) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let mut smoother = Smoother::starting_at(start);
        for t in 1..=60 {
            let value = smoother.update(target);
            let closed = (1.0 - SMOOTHING_ALPHA).powi(t) * (start - target).abs();
            worst = worst.max(((value - target).abs() - closed).abs());
        }
    }
    verdict(
        shift_exact && table.ceiling == p97 && clipped_ok && worst <= SMOOTHING_TOLERANCE,
        format!(
            "no-touch shifted to {}; ceiling {:.6} equals nearest-rank p97: {}; clipped within [0, p97]: {clipped_ok}; \
             smoothing max deviation {worst:.2e} (tol {SMOOTHING_TOLERANCE:e})",
            table.shifted[no_touch],
            table.ceiling,
            table.ceiling == p97
        ),
    )
}

fn total_spawns(game: &Game, seed: u64) -> u32 {
    let mut rng = episode_rng(seed, 0);
    let (mut state, events) = game.initial_state(&mut rng);
    let mut total = events.spawned;
    for _ in 1..game.config().horizon() {
        let (next, events) = game.step_with_events(&state, ZERO_ACTION, &mut rng);
        total += events.spawned;
        state = next;
    }
    total
}

fn simulator_statistics() -> Verdict {
    let game = Game::new(GameConfig::default()).unwrap();
    let counts: Vec<f64> = (0..SPAWN_GAMES).map(|s| f64::from(total_spawns(&game, s))).collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let se = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let spawns_ok = (mean - EXPECTED_SPAWNS).abs() <= 3.0 * se;

    let mut area_error: f64 = 0.0;
    for (w, h) in [(1280.0, 720.0), (1920.0, 1080.0), (800.0, 600.0), (390.0, 844.0)] {
        let c = GameConfig { width: w, height: h, ..Default::default() };
        area_error = area_error.max((std::f64::consts::PI * c.radius().powi(2) / (w * h) - 0.0157).abs());
    }

    let policy = UniformPolicy::new(kpirl_core::game::NUM_ACTIONS);
    let encode = |seed| rollout(&game, &policy, seed).unwrap().states().map(encode_state).collect::<Vec<_>>();
    let identical = (0..5).all(|s| encode(s) == encode(s)) && encode(1) != encode(2);
    verdict(
        spawns_ok && area_error <= AREA_TOLERANCE && identical,
        format!(
            "mean spawns {mean:.3} ± {se:.3} over {SPAWN_GAMES} games (|Δ| ≤ 3 SE: {spawns_ok}); \
             area fraction error {area_error:.1e}; replays bit-identical: {identical}"
        ),
    )
}

// ---------------------------------------------------------------------------
// Service.

fn upload(session: &str, phase: Phase, states: &[GameState], period_ms: f64, touches: u32) -> serde_json::Value {
    let observations = states
        .iter()
        .enumerate()
        .map(|(i, s)| Observation { t_ms: 1_000.0 + i as f64 * period_ms, state: encode_state(s) })
        .collect();
    let body = TrajectoryUpload { session_id: session.parse().unwrap(), phase, observations, client_touches: touches };
    serde_json::to_value(body).unwrap()
}

async fn call(app: &axum::Router, path: &str, body: serde_json::Value) -> (StatusCode, serde_json::Value) {
    let request =
        Request::post(path).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn service_round_trip() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let space = enumerate_feature_space();
    let service = Service::new(ServiceConfig::new(vec![ArmSpec::control(&space).unwrap()], 3, dir.path())).unwrap();
    let app = router(Arc::new(service));
    let game = Game::new(GameConfig::default()).unwrap();
    let chase = ChasePolicy::new(game.clone());
    let period = 1000.0 / 30.0;

    let new_session = || async {
        let (_, v) = call(&app, "/api/session", serde_json::json!({})).await;
        v["session_id"].as_str().unwrap().to_string()
    };
    let mut matched = 0;
    let mut total_touches = 0;
    let games = 10;
    for m in 0..games {
        let session = new_session().await;
        let traj = rollout_episode(&game, &chase, 31, m).unwrap();
        let states: Vec<GameState> = traj.states().cloned().collect();
        let touches: u32 = states.iter().skip(1).map(|s| s.touched).sum();
        let (status, v) =
            call(&app, "/api/trajectory", upload(&session, Phase::Pretest, &states, period, touches)).await;
        if status == StatusCode::OK
            && v["status"] == "accepted"
            && v["server_touches"].as_u64() == Some(u64::from(touches))
        {
            matched += 1;
        }
        total_touches += touches;
    }

    let traj = rollout_episode(&game, &chase, 32, 0).unwrap();
    let states: Vec<GameState> = traj.states().cloned().collect();
    let mut checks = Vec::new();
    for (obs, period_ms, expected) in [
        (419, period, Some("min-observations")),
        (420, period, None),
        (450, 1000.0 / 19.9, Some("min-rate")),
        (450, 50.0, None),
    ] {
        let session = new_session().await;
        let (status, v) =
            call(&app, "/api/trajectory", upload(&session, Phase::Posttest, &states[..obs], period_ms, 0)).await;
        let ok = match expected {
            Some(reason) => status == StatusCode::UNPROCESSABLE_ENTITY && v["reason"] == reason,
            None => status == StatusCode::OK && v["status"] == "accepted",
        };
        checks.push(ok);
    }
    let boundaries = checks.iter().all(|&c| c);
    verdict(
        matched == games && total_touches > 0 && boundaries,
        format!(
            "{matched}/{games} simulated uploads replayed to the client's {total_touches} touches; \
             419 obs and 19.9 Hz rejected, 420 obs and 20 Hz accepted: {boundaries}"
        ),
    )
}

fn main() {
    let minute = Duration::from_secs(60);
    let results = [
        criterion(1, "value bound", minute, value_bound),
        criterion(2, "value identity", minute, value_identity),
        criterion(3, "KPIRL monotone convergence", 5 * minute, kpirl_convergence),
        criterion(4, "benchmark direction", 10 * minute, benchmark_direction),
        criterion(5, "linear sanity", 10 * minute, linear_sanity),
        criterion(6, "DEI competence", 10 * minute, dei_competence),
        criterion(7, "feature enumeration", minute, feature_enumeration),
        criterion(8, "reward pipeline", minute, reward_pipeline),
        criterion(9, "simulator statistics", minute, simulator_statistics),
        criterion(10, "service round trip", minute, || {
            tokio::runtime::Runtime::new().unwrap().block_on(service_round_trip())
        }),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
