//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 1-5, 9 and 10 are exact properties and fail the test when they
//! do not hold. Criteria 6-8 are directional training experiments; their
//! outcome is reported as measured.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

use diffcarl::agent::{
    actor_objective, critic_layout, critic_objective, cvar_lower, cvar_upper, Hyperparams,
};
use diffcarl::codec::ActionCodec;
use diffcarl::diffusion::{
    build_schedule, denoise_step, forward_sample, forward_step, posterior_params, predict_noise,
    ChainNoise, NoiseNet, NoiseNetSpec, ReverseMean,
};
use diffcarl::env::{
    default_config_2mg, step, step_microgrid, ActionSetpoints, EnvState, MgState, MgcConfig,
    Setpoint,
};
use diffcarl::harness::{
    relative_improvement, run_cell, run_comparison, AlgorithmSpec, ExperimentConfig,
};
use diffcarl::metrics::PolicyEvaluation;
use diffcarl::nn::Mlp;
use diffcarl::profiles::TimeSeriesProfile;
use diffcarl::rng::seeded;
use diffcarl::scenario::{synthetic_profiles, Dataset, SyntheticSpec};
use diffcarl::schedulers::{mpc, myopic_rollout, offline_dp, plan_hours, DpGrid, ForecastModel};

/// Writes straight to the process stdout so the lines survive libtest's
/// output capture.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, $($arg)*);
        let _ = out.flush();
    }};
}

struct Outcome {
    id: u8,
    pass: bool,
    exact: bool,
}

fn report(id: u8, pass: bool, exact: bool, started: Instant, detail: String) -> Outcome {
    say!(
        "criterion {id:>2}: {} ({:.1}s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    Outcome { id, pass, exact }
}

fn gaussian(rng: &mut diffcarl::rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let s = build_schedule(10, 0.1, 10.0).unwrap();
    let monotone =
        (2..=10).all(|k| s.beta(k) > s.beta(k - 1) && s.alpha_bar(k) < s.alpha_bar(k - 1));

    let mut rng = seeded(1);
    let x0 = [0.7, -1.3, 0.0];
    let k = 6;
    let n = 100_000;
    let (mut sum_it, mut sq_it, mut sum_cf, mut sq_cf) = ([0.0; 3], [0.0; 3], [0.0; 3], [0.0; 3]);
    for _ in 0..n {
        let mut x = x0.to_vec();
        for j in 1..=k {
            x = forward_step(&x, j, &gaussian(&mut rng, 3), &s).unwrap();
        }
        let c = forward_sample(&x0, k, &gaussian(&mut rng, 3), &s).unwrap();
        for d in 0..3 {
            sum_it[d] += x[d];
            sq_it[d] += x[d] * x[d];
            sum_cf[d] += c[d];
            sq_cf[d] += c[d] * c[d];
        }
    }
    let ab = s.alpha_bar(k);
    let mut marginal_ok = true;
    let mut worst = (0.0f64, 0.0f64);
    for d in 0..3 {
        let mean_ref = ab.sqrt() * x0[d];
        let var_ref = 1.0 - ab;
        for (sum, sq) in [(sum_it[d], sq_it[d]), (sum_cf[d], sq_cf[d])] {
            let m = sum / n as f64;
            let v = sq / n as f64 - m * m;
            // Relative mean error measured against the marginal's scale.
            let mean_err = (m - mean_ref).abs() / (mean_ref.abs().max(var_ref.sqrt()));
            let var_err = (v - var_ref).abs() / var_ref;
            worst = (worst.0.max(mean_err), worst.1.max(var_err));
            marginal_ok &= mean_err < 0.01 && var_err < 0.02;
        }
    }

    let spec = NoiseNetSpec {
        action_dim: 5,
        obs_dim: 4,
        time_dim: 4,
        time_hidden: 8,
        hidden: 8,
    };
    let net = NoiseNet::new(spec, &mut rng);
    let mut identity_err = 0.0f64;
    for _ in 0..100 {
        let kk = rng.gen_range(2..=10);
        let xk = gaussian(&mut rng, 5);
        let st = gaussian(&mut rng, 4);
        let eps = predict_noise(&xk, kk, &st, &net).unwrap();
        let ab = s.alpha_bar(kk);
        let x0_hat: Vec<f64> = xk
            .iter()
            .zip(&eps)
            .map(|(x, e)| (x - (1.0 - ab).sqrt() * e.tanh()) / ab.sqrt())
            .collect();
        let (mu, _) = posterior_params(&xk, &x0_hat, kk, &s).unwrap();
        let direct = denoise_step(&xk, kk, &st, &net, &s, &[0.0; 5]).unwrap();
        for (a, b) in mu.iter().zip(&direct) {
            identity_err = identity_err.max((a - b).abs());
        }
    }

    let xk = [0.3, -0.2];
    let x0b = [1.5, -0.5];
    let (mu1, var1) = posterior_params(&xk, &x0b, 1, &s).unwrap();
    let boundary = var1 == 0.0 && mu1.iter().zip(&x0b).all(|(a, b)| (a - b).abs() <= 1e-12);

    report(
        1,
        monotone && marginal_ok && identity_err <= 1e-10 && boundary,
        true,
        t,
        format!(
            "monotone={monotone} mean_err={:.4} var_err={:.4} identity_err={identity_err:.1e} k1_boundary={boundary}",
            worst.0, worst.1
        ),
    )
}

fn brute_tail(values: &[f64], probs: &[f64], alpha: f64, lowest: bool) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if !lowest {
        idx.reverse();
    }
    let tail = 1.0 - alpha;
    let (mut mass, mut acc) = (0.0, 0.0);
    for i in idx {
        let take = probs[i].min(tail - mass);
        if take <= 0.0 {
            break;
        }
        acc += take * values[i];
        mass += take;
    }
    acc / mass
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut rng = seeded(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=64);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64) + 1e-6).collect();
        let s: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / s).collect();
        let alpha = rng.gen_range(0.5..0.99);
        let lo = cvar_lower(&values, &probs, alpha).unwrap();
        let hi = cvar_upper(&values, &probs, alpha).unwrap();
        worst = worst
            .max((lo - brute_tail(&values, &probs, alpha, true)).abs())
            .max((hi - brute_tail(&values, &probs, alpha, false)).abs());
    }
    let uniform: Vec<f64> = (1..=100).map(f64::from).collect();
    let example = cvar_lower(&uniform, &[0.01; 100], 0.95).unwrap();
    report(
        2,
        worst <= 1e-9 && example == 3.0,
        true,
        t,
        format!("max_abs_err={worst:.1e} hundred_atom_example={example}"),
    )
}

fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1e-8);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / n.abs().max(1e-2 * scale))
        .fold(0.0, f64::max)
}

fn central_diff(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-6;
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut rng = seeded(3);
    let spec = NoiseNetSpec {
        action_dim: 3,
        obs_dim: 4,
        time_dim: 4,
        time_hidden: 8,
        hidden: 8,
    };
    let schedule = build_schedule(2, 0.1, 10.0).unwrap();
    let net = NoiseNet::new(spec.clone(), &mut rng);
    let states = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-1.0..1.0));
    let q = Array2::from_shape_fn((5, 3), |_| rng.gen_range(-2.0..2.0));
    let noise = ChainNoise::draw(5, 3, 2, &mut rng);
    let mut actor_err = 0.0f64;
    for mean in [ReverseMean::Direct, ReverseMean::SquashedX0 { bound: 1.0 }] {
        let (_, grad) =
            actor_objective(&net, &schedule, mean, states.view(), &noise, &q, 0.05, 1.0).unwrap();
        let fd = central_diff(&net.params, |p| {
            let n = NoiseNet::from_params(spec.clone(), p.to_vec()).unwrap();
            actor_objective(&n, &schedule, mean, states.view(), &noise, &q, 0.05, 1.0)
                .unwrap()
                .0
        });
        actor_err = actor_err.max(max_rel_err(&grad, &fd));
    }

    let critic = Mlp::new(critic_layout(4, 8, 3), &mut rng);
    let actions = [0, 2, 1, 1, 0];
    let targets = [0.3, -1.0, 0.5, 2.0, -0.1];
    let (_, grad) = critic_objective(&critic, states.view(), &actions, &targets).unwrap();
    let fd = central_diff(&critic.params, |p| {
        let c = Mlp {
            layout: critic.layout.clone(),
            params: p.to_vec(),
        };
        critic_objective(&c, states.view(), &actions, &targets)
            .unwrap()
            .0
    });
    let critic_err = max_rel_err(&grad, &fd);
    report(
        3,
        actor_err < 1e-3 && critic_err < 1e-3,
        true,
        t,
        format!("actor_rel_err={actor_err:.1e} critic_rel_err={critic_err:.1e}"),
    )
}

fn one_day(seed: u64) -> Vec<TimeSeriesProfile> {
    let spec = SyntheticSpec {
        days: 1,
        ..SyntheticSpec::default()
    };
    synthetic_profiles(&spec, 2, seed).unwrap()
}

fn random_steps(
    seed: u64,
    cfg: &MgcConfig,
    profiles: &[TimeSeriesProfile],
) -> (Vec<String>, Vec<String>) {
    let mut rng = seeded(seed);
    let mut fails = Vec::new();
    let mut trace = Vec::new();
    for i in 0..10_000 {
        let hour = rng.gen_range(0..24);
        let microgrids: Vec<MgState> = cfg
            .microgrids
            .iter()
            .map(|mg| MgState {
                soc_kwh: rng.gen_range(mg.ess.e_min_kwh..=mg.ess.e_max_kwh),
                prev_cdg_kw: rng.gen_range(mg.cdg.p_min_kw..=mg.cdg.p_max_kw),
            })
            .collect();
        let state = EnvState { hour, microgrids };
        let action = ActionSetpoints {
            microgrids: (0..cfg.num_microgrids())
                .map(|_| Setpoint {
                    p_ess_kw: rng.gen_range(-400.0..400.0),
                    p_cdg_kw: rng.gen_range(-100.0..500.0),
                    p_ls_kw: rng.gen_range(-100.0..500.0),
                })
                .collect(),
        };
        let r = step(&state, &action, profiles, cfg).unwrap();
        let mut total = 0.0;
        for (m, (mg, out)) in cfg.microgrids.iter().zip(&r.microgrids).enumerate() {
            let inp = mg.inputs(profiles, hour);
            let a = out.applied;
            let imbalance =
                (inp.load_kw - a.p_ls_kw) - (inp.rdg_kw + a.p_cdg_kw + a.p_ess_kw + out.grid_kw);
            let soc = out.next.soc_kwh;
            let ramp = (a.p_cdg_kw - state.microgrids[m].prev_cdg_kw).abs();
            if imbalance.abs() > 1e-9
                || soc < mg.ess.e_min_kwh
                || soc > mg.ess.e_max_kwh
                || ramp > mg.cdg.ramp_max_kw_per_h + 1e-9
                || out.carbon_kg < 0.0
            {
                fails.push(format!("pair {i} mg {m}"));
            }
            total += out.cost;
        }
        if (total - r.cost_total).abs() > 1e-9 || (r.breakdown.total() - r.cost_total).abs() > 1e-9
        {
            fails.push(format!("pair {i} cost sum"));
        }
        trace.push(format!("{:?}", r));
    }
    (fails, trace)
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let cfg = default_config_2mg();
    let profiles = one_day(4);
    let (fails, a) = random_steps(44, &cfg, &profiles);
    let (_, b) = random_steps(44, &cfg, &profiles);
    let deterministic = a == b;
    report(
        4,
        fails.is_empty() && deterministic,
        true,
        t,
        format!(
            "pairs=10000 violations={} bitwise_deterministic={deterministic}",
            fails.len()
        ),
    )
}

/// Cheapest cost over every action sequence for the first `hours` hours.
fn exhaustive_toy(
    profiles: &[TimeSeriesProfile],
    cfg: &MgcConfig,
    codec: &ActionCodec,
    actions: &[usize],
    hours: usize,
) -> f64 {
    let start = EnvState::initial(cfg);
    let mut total = 0.0;
    for m in 0..cfg.num_microgrids() {
        let mut best = f64::INFINITY;
        for mut code in 0..actions.len().pow(hours as u32) {
            let mut schedule = Vec::new();
            for _ in 0..hours {
                schedule.push(actions[code % actions.len()]);
                code /= actions.len();
            }
            best = best.min(replay(
                profiles,
                cfg,
                codec,
                m,
                start.microgrids[m],
                &schedule,
            ));
        }
        total += best;
    }
    total
}

fn replay(
    profiles: &[TimeSeriesProfile],
    cfg: &MgcConfig,
    codec: &ActionCodec,
    m: usize,
    mut st: MgState,
    schedule: &[usize],
) -> f64 {
    let mg = &cfg.microgrids[m];
    let mut cost = 0.0;
    for (h, &a) in schedule.iter().enumerate() {
        let inp = mg.inputs(profiles, h);
        let out = step_microgrid(
            &st,
            codec.decode(a, mg, inp.load_kw).unwrap(),
            &inp,
            mg,
            cfg,
        );
        cost += out.cost;
        st = out.next;
    }
    cost
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let cfg = default_config_2mg();
    let codec = ActionCodec::default();
    let grid = DpGrid::default();
    let profiles = synthetic_profiles(&SyntheticSpec::default(), 2, 5).unwrap();
    let data = Dataset::from_profiles(&profiles).unwrap();
    let perfect = ForecastModel::perfect();
    let mut chain_fails = 0;
    let mut worst_slack = f64::NEG_INFINITY;
    for d in 0..20 {
        let day = data.train.day(d);
        let off = offline_dp(day, &cfg, &codec, &grid).unwrap().1.total_cost;
        let m24 = mpc(day, &cfg, &codec, &perfect, &grid, 24, 0)
            .unwrap()
            .total_cost;
        let m8 = mpc(day, &cfg, &codec, &perfect, &grid, 8, 0)
            .unwrap()
            .total_cost;
        let my = myopic_rollout(day, &cfg, &codec).unwrap().total_cost;
        for (a, b) in [(off, m24), (m24, m8), (m8, my)] {
            let slack = 0.01 * b.abs();
            worst_slack = worst_slack.max((a - b) / b.abs());
            if a > b + slack {
                chain_fails += 1;
            }
        }
    }

    // Toy instances keep every transition on the SoC grid so that the
    // program is exact: idle/charge steps are multiples of the 10 kWh
    // spacing, and CDG or shedding moves leave SoC untouched.
    let mut toy_mismatch = 0.0f64;
    let mut toys = 0;
    let cases = [
        (161, vec![0, 9, 18]),
        (161, vec![18, 19, 21]),
        (3, vec![18, 20]),
        (3, vec![18, 19, 23]),
    ];
    for (soc_levels, actions) in cases {
        for seed in 0..4 {
            for hours in 1..=3 {
                let day = one_day(50 + seed);
                let toy_grid = DpGrid {
                    soc_levels,
                    actions: Some(actions.clone()),
                };
                let plan = plan_hours(&day, &cfg, &codec, &toy_grid, hours).unwrap();
                let start = EnvState::initial(&cfg);
                let planned: f64 = (0..cfg.num_microgrids())
                    .map(|m| {
                        replay(
                            &day,
                            &cfg,
                            &codec,
                            m,
                            start.microgrids[m],
                            &plan.schedule[m],
                        )
                    })
                    .sum();
                let best = exhaustive_toy(&day, &cfg, &codec, &actions, hours);
                toy_mismatch = toy_mismatch
                    .max((planned - best).abs())
                    .max((plan.planned_cost - best).abs());
                toys += 1;
            }
        }
    }
    report(
        5,
        chain_fails == 0 && toy_mismatch <= 1e-9,
        true,
        t,
        format!(
            "days=20 chain_violations={chain_fails} worst_relative_excess={worst_slack:.4} toy_instances={toys} toy_max_gap={toy_mismatch:.1e}"
        ),
    )
}

struct Protocol {
    hp: Hyperparams,
    seeds: [u64; 3],
}

fn dataset(eval_days: usize) -> Dataset {
    let cfg = ExperimentConfig {
        profiles: diffcarl::harness::ProfileSection {
            eval_days,
            ..Default::default()
        },
        ..ExperimentConfig::default()
    };
    cfg.resolve().unwrap().dataset().unwrap()
}

fn train_eval(
    p: &Protocol,
    hp: &Hyperparams,
    cfg: &MgcConfig,
    data: &Dataset,
) -> Vec<PolicyEvaluation> {
    p.seeds
        .iter()
        .map(|&seed| {
            let s = Instant::now();
            let ev = run_cell(&AlgorithmSpec::DiffCarl(hp.clone()), cfg, data, seed).unwrap().evaluation;
            say!(
                "    seed {seed} lambda {} carbon_price {}: cost {:.2} std {:.2} carbon {:.1} ({:.0}s)",
                hp.lambda_risk,
                cfg.carbon_price,
                ev.costs.iter().sum::<f64>(),
                ev.cost.std,
                ev.carbon_kg.iter().sum::<f64>(),
                s.elapsed().as_secs_f64()
            );
            ev
        })
        .collect()
}

fn scheduler_cost(algo: AlgorithmSpec, cfg: &MgcConfig, data: &Dataset) -> f64 {
    run_cell(&algo, cfg, data, 0)
        .unwrap()
        .evaluation
        .costs
        .iter()
        .sum()
}

fn criteria_6_7(p: &Protocol) -> (Outcome, Outcome) {
    let t = Instant::now();
    let cfg = default_config_2mg();
    let data = dataset(7);
    let myopic = scheduler_cost(AlgorithmSpec::Myopic, &cfg, &data);
    let offline = scheduler_cost(AlgorithmSpec::Offline(Default::default()), &cfg, &data);
    let aware = train_eval(p, &p.hp, &cfg, &data);
    let costs: Vec<f64> = aware.iter().map(|e| e.costs.iter().sum()).collect();
    let below = costs.iter().filter(|&&c| c < myopic).count();
    let mean_cost = costs.iter().sum::<f64>() / 3.0;
    let ratio = mean_cost / offline;
    let c6 = report(
        6,
        below >= 2 && ratio <= 1.15,
        false,
        t,
        format!(
            "diffcarl={costs:.2?} myopic={myopic:.2} offline={offline:.2} below_myopic={below}/3 mean/offline={ratio:.3}"
        ),
    );

    let t = Instant::now();
    let unaware_cfg = MgcConfig {
        carbon_price: 0.0,
        ..cfg.clone()
    };
    let unaware = train_eval(p, &p.hp, &unaware_cfg, &data);
    let mean_carbon = |runs: &[PolicyEvaluation]| {
        runs.iter().map(|e| e.carbon.mean).sum::<f64>() / runs.len() as f64
    };
    let (a, u) = (mean_carbon(&aware), mean_carbon(&unaware));
    let c7 = report(
        7,
        a <= 0.95 * u,
        false,
        t,
        format!(
            "aware_mean_daily_kg={a:.1} unaware_mean_daily_kg={u:.1} ratio={:.3}",
            a / u
        ),
    );
    (c6, c7)
}

fn criterion_8(p: &Protocol) -> Outcome {
    let t = Instant::now();
    let cfg = default_config_2mg();
    let data = dataset(20);
    let run = |lambda_risk| {
        let hp = Hyperparams {
            lambda_risk,
            ..p.hp.clone()
        };
        train_eval(p, &hp, &cfg, &data)
    };
    let neutral = run(0.0);
    let averse = run(1.0);
    let stds: Vec<(f64, f64)> = neutral
        .iter()
        .zip(&averse)
        .map(|(n, a)| (n.cost.std, a.cost.std))
        .collect();
    let reduced = stds.iter().filter(|(n, a)| a < n).count();
    report(
        8,
        reduced >= 2,
        false,
        t,
        format!("per-seed (std lambda=0, std lambda=1)={stds:.2?} reduced={reduced}/3"),
    )
}

fn criterion_9() -> Outcome {
    let t = Instant::now();
    let cases = [
        (741.86, 965.30, -30.12),
        (741.86, 724.84, 2.29),
        (2584.46, 3273.77, -26.67),
    ];
    let errs: Vec<f64> = cases
        .iter()
        .map(|&(d, c, want)| (relative_improvement(d, c).unwrap() - want).abs())
        .collect();
    report(
        9,
        errs.iter().all(|e| *e <= 0.01),
        true,
        t,
        format!("abs_errors_pp={errs:.4?}"),
    )
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_10() -> Outcome {
    let t = Instant::now();
    let text = r#"
[profiles]
eval_days = 3
[algorithms.diffcarl]
episodes = 4
steps_per_episode = 48
updates_per_episode = 2
batch_size = 32
eval_interval = 2
greedy_samples = 4
[algorithms.dqn]
[algorithms.myopic]
[algorithms.offline]
[run]
seeds = [0, 1]
"#;
    let tmp = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let mut cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.run.out_dir = tmp.path().join(run);
        let exp = cfg.resolve().unwrap();
        let r = run_comparison(&exp).unwrap();
        assert_eq!(r.failures(), 0);
        files.push(csv_files(&exp.out_dir));
    }
    let identical = files[0] == files[1] && !files[0].is_empty();
    report(
        10,
        identical,
        true,
        t,
        format!("csv_files={} byte_identical={identical}", files[0].len()),
    )
}

#[test]
fn acceptance_criteria() {
    let protocol = Protocol {
        hp: Hyperparams::desk(),
        seeds: [0, 1, 2],
    };
    let mut outcomes = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
    ];
    let (c6, c7) = criteria_6_7(&protocol);
    outcomes.push(c6);
    outcomes.push(c7);
    outcomes.push(criterion_8(&protocol));
    outcomes.push(criterion_9());
    outcomes.push(criterion_10());

    let passed = outcomes.iter().filter(|o| o.pass).count();
    say!("acceptance: {passed}/{} criteria pass", outcomes.len());
    let broken: Vec<u8> = outcomes
        .iter()
        .filter(|o| o.exact && !o.pass)
        .map(|o| o.id)
        .collect();
    assert!(broken.is_empty(), "exact criteria failed: {broken:?}");
}
