//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities once its assertions hold.
//!
//! Criteria 8-10 share one desk-scale training campaign (3 variants x 3
//! seeds x 1000 episodes); that test is `#[ignore]`d because it runs for
//! hours. Run it explicitly with
//! `cargo test --release -p mtcc --test acceptance -- --ignored --nocapture`.

use mtcc::cv2x::{
    cam_rate, dbm_to_mw, observation_delay_raw, sinr_v2i, sinr_v2v, ChannelRealization,
    CommParams, RraAction,
};
use mtcc::ddpg;
use mtcc::ddpg::{Actor, ActorCache, ActorGrads, Critic, CriticCache, CriticGrads, Variant};
use mtcc::dynamics::{step_vehicle, PlatoonParams, VehicleKinematics};
use mtcc::env::{reward, DrivingObservation, EnvConfig, PlatoonEnv, RewardWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

// ---------------------------------------------------------------------------
// Criterion 1: physics exactness against the closed-form solution.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_physics_exactness() {
    let params = PlatoonParams::default();
    let rho = 1.0 - params.t / params.tau_drive;
    let (p0, v0, acc0, c) = (0.0, 10.0, -0.5, 0.8);

    let closed_form = |k: u32| -> VehicleKinematics {
        let kf = k as f64;
        let geo = (1.0 - rho.powi(k as i32)) / (1.0 - rho);
        let acc = c + (acc0 - c) * rho.powi(k as i32);
        let v = v0 + params.t * (kf * c + (acc0 - c) * geo);
        let p = p0
            + params.t * kf * v0
            + params.t
                * params.t
                * (c * kf * (kf - 1.0) / 2.0 + (acc0 - c) / (1.0 - rho) * (kf - geo));
        VehicleKinematics::new(p, v, acc)
    };

    let mut kin = VehicleKinematics::new(p0, v0, acc0);
    let mut max_rel: f64 = 0.0;
    for k in 1..=1000u32 {
        kin = step_vehicle(&kin, c, &params).unwrap();
        let expect = closed_form(k);
        for (got, want) in [(kin.p, expect.p), (kin.v, expect.v), (kin.acc, expect.acc)] {
            let rel = (got - want).abs() / want.abs().max(1e-300);
            max_rel = max_rel.max(rel);
            assert!(rel < 1e-10, "step {k}: {got} vs {want} (rel {rel:e})");
        }
    }
    println!("criterion 1 PASS: 1000-step closed-form match, max rel err {max_rel:.2e}");
}

// ---------------------------------------------------------------------------
// Criterion 2: reward calibration.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_reward_calibration() {
    let w = RewardWeights::default();
    let p = PlatoonParams::default();
    let obs = |e_p: f64, e_v: f64, acc: f64| DrivingObservation {
        e_p,
        e_v,
        acc_self: acc,
        acc_pred: 0.0,
    };

    assert_eq!(reward(&obs(0.0, 0.0, 0.0), 0.0, 0.0, &w, &p), 0.0);
    assert_eq!(reward(&obs(10.0, 0.0, 0.0), 0.0, 0.0, &w, &p), -1.0);
    // alpha1 isolated by a pure velocity error at its nominal maximum.
    assert_eq!(reward(&obs(0.0, 10.0, 0.0), 0.0, 0.0, &w, &p), -0.2);
    // alpha2 isolated: input at its limit, zero jerk because acc == input.
    assert_eq!(reward(&obs(0.0, 0.0, 2.9), 2.9, 2.9, &w, &p), -0.1);
    // alpha3 isolated: jerk (0 - 2.9)/0.1 = -29, normalized by 116 gives 1/4.
    assert_eq!(reward(&obs(0.0, 0.0, 2.9), 0.0, 2.9, &w, &p), -0.1);
    println!("criterion 2 PASS: zero, unit, and weighted reward points exact");
}

// ---------------------------------------------------------------------------
// Criterion 3: delay formula equals the event-logged CAM age everywhere.
// ---------------------------------------------------------------------------

/// Independent ground truth: every CAM tracked as (generation interval,
/// remaining fraction), FIFO service from the recorded per-millisecond
/// rates, arrivals after service at t = 0.
struct CamEventLog {
    fifo: std::collections::VecDeque<(i64, f64)>,
    newest_delivered: i64,
    backlog: f64,
}

impl CamEventLog {
    fn new() -> Self {
        Self {
            fifo: std::collections::VecDeque::new(),
            newest_delivered: -1,
            backlog: 0.0,
        }
    }

    fn serve(&mut self, mut budget: f64) {
        while budget > 0.0 {
            match self.fifo.front_mut() {
                None => break,
                Some((gen, remaining)) => {
                    let used = budget.min(*remaining);
                    *remaining -= used;
                    budget -= used;
                    self.backlog -= used;
                    if *remaining <= 0.0 {
                        self.newest_delivered = *gen;
                        self.fifo.pop_front();
                    }
                }
            }
        }
        self.backlog = self.backlog.max(0.0);
    }

    fn arrive(&mut self, k: i64, n_q: f64) {
        assert!(
            self.backlog <= n_q - 1.0,
            "buffer overflow at interval {k}; this seed was expected to run clean"
        );
        self.fifo.push_back((k, 1.0));
        self.backlog += 1.0;
    }

    /// Age, in control intervals, of the newest fully delivered CAM as seen
    /// at interval `at`. Before any delivery the follower still holds the
    /// pre-episode observation, one interval older than everything sent.
    fn age_at(&self, at: i64) -> i64 {
        at - self.newest_delivered
    }
}

#[test]
fn criterion_3_delay_oracle_equivalence() {
    // The schematic case first: half a CAM pending means the previous CAM is
    // the newest complete one, two intervals old by the time it is used.
    assert_eq!(observation_delay_raw(0.5), 2);

    let intervals = 10_000usize;
    let mut cfg = EnvConfig::default();
    cfg.k_max = intervals;
    let n_links = cfg.platoon.n - 1;
    let n_q = cfg.comm.n_q;
    let t_comm = cfg.comm.intervals_per_control;
    // Seed chosen so the run stays clear of buffer overflow; the assert in
    // `arrive` and the drop counter double-check that premise.
    let mut env = PlatoonEnv::new(cfg, 0).unwrap();
    env.record_comm_trace(true);
    env.reset(&vec![10.0; intervals], 0).unwrap();

    let mut logs: Vec<CamEventLog> = (0..n_links).map(|_| CamEventLog::new()).collect();
    let mut checks = 0usize;
    for k in 0..intervals {
        let out = env.step(&[0.0; 4]).unwrap();
        let trace = env.comm_trace().unwrap();
        let events = &trace[trace.len() - n_links * t_comm..];
        for ev in events {
            assert_eq!(ev.k, k);
            logs[ev.link].serve(1.0e-3 * ev.rate_cam_per_s);
            if ev.t == 0 {
                logs[ev.link].arrive(k as i64, n_q);
            }
        }
        // Follower i reads link i-1; its next-state delay must equal the
        // ground-truth age of the newest delivered CAM at interval k+1.
        for (idx, log) in logs.iter().enumerate() {
            let q = env.queue_backlogs()[idx];
            assert!(
                (q - log.backlog).abs() < 1e-9,
                "interval {k} link {idx}: queue {q} vs event log {}",
                log.backlog
            );
            let formula = observation_delay_raw(q) as i64;
            let truth = log.age_at(k as i64 + 1);
            assert_eq!(
                formula, truth,
                "interval {k} link {idx}: formula {formula} vs event-log age {truth} (q = {q})"
            );
            checks += 1;
        }
        let _ = out;
        env.record_comm_trace(true); // drop the consumed slice
    }
    assert_eq!(env.total_cam_drops, 0, "overflow would invalidate the equivalence");
    println!(
        "criterion 3 PASS: delay formula == event-logged CAM age at {checks} link-intervals, no overflow"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: SINR and rate sanity plus interference monotonicity.
// ---------------------------------------------------------------------------

fn lone_link(g_signal: f64, m: usize) -> ChannelRealization {
    ChannelRealization {
        g_v2i: vec![1.0e-9; m],
        g_v2v: vec![vec![g_signal; m]],
        g_v2v_to_bs: vec![vec![0.0; m]],
        g_v2i_to_v2v: vec![vec![0.0; 1]; m],
        g_v2v_cross: vec![vec![vec![0.0; m]; 1]; 1],
    }
}

#[test]
fn criterion_4_sinr_rate_sanity_and_monotonicity() {
    let params = CommParams::default();

    // Hand case: 23 dBm onto a -90 dB link over -114 dBm noise is 47 dB, and
    // 47 dB over 180 kHz carries about 0.878 CAMs per millisecond.
    let chan = lone_link(1.0e-9, params.m);
    let actions = vec![RraAction { subchannel: Some(0), power_dbm: 23.0 }];
    let sinr = sinr_v2v(0, 0, &chan, &actions, &params);
    let expect_sinr = 10f64.powf(4.7);
    assert!((sinr / expect_sinr - 1.0).abs() < 1e-3, "{sinr} vs {expect_sinr}");
    let rate = cam_rate(0, 0, &chan, &actions, &params);
    assert!((rate / 878.2 - 1.0).abs() < 1e-3, "rate {rate}");

    // Monotonicity over randomized configurations: silencing any interferer
    // or lowering its power never hurts, on both link families.
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let mut cases = 0usize;
    for _ in 0..10_000 {
        let n_links = rng.gen_range(2..=5);
        let m = params.m;
        let g = |rng: &mut ChaCha12Rng| 10f64.powf(rng.gen_range(-12.0..-5.0));
        let chan = ChannelRealization {
            g_v2i: (0..m).map(|_| g(&mut rng)).collect(),
            g_v2v: (0..n_links).map(|_| (0..m).map(|_| g(&mut rng)).collect()).collect(),
            g_v2v_to_bs: (0..n_links).map(|_| (0..m).map(|_| g(&mut rng)).collect()).collect(),
            g_v2i_to_v2v: (0..m).map(|_| (0..n_links).map(|_| g(&mut rng)).collect()).collect(),
            g_v2v_cross: (0..n_links)
                .map(|_| (0..n_links).map(|_| (0..m).map(|_| g(&mut rng)).collect()).collect())
                .collect(),
        };
        let levels = &params.power_levels_dbm;
        let actions: Vec<RraAction> = (0..n_links)
            .map(|_| RraAction {
                subchannel: Some(rng.gen_range(0..m)),
                power_dbm: levels[rng.gen_range(0..levels.len())],
            })
            .collect();
        let victim = rng.gen_range(0..n_links);
        let vm = actions[victim].subchannel.unwrap();
        let before_v2v = sinr_v2v(victim, vm, &chan, &actions, &params);
        let before_v2i = sinr_v2i(vm, &chan, &actions, &params);

        // Pick some other link and weaken it.
        let other = (victim + rng.gen_range(1..n_links)) % n_links;
        let mut weakened = actions.clone();
        if rng.gen_bool(0.5) {
            weakened[other].subchannel = None;
        } else {
            let idx = levels.iter().position(|p| *p == weakened[other].power_dbm).unwrap();
            weakened[other].power_dbm = levels[idx.max(1)..].iter().copied().fold(
                *levels.last().unwrap(),
                |acc, p| acc.min(p),
            );
        }
        let after_v2v = sinr_v2v(victim, vm, &chan, &weakened, &params);
        let after_v2i = sinr_v2i(vm, &chan, &weakened, &params);
        assert!(after_v2v >= before_v2v - 1e-12 * before_v2v.abs());
        assert!(after_v2i >= before_v2i - 1e-12 * before_v2i.abs());

        // Rate is nondecreasing in the signal gain.
        let mut better = chan.clone();
        better.g_v2v[victim][vm] *= 1.0 + rng.gen_range(0.0..10.0);
        let rate_before = cam_rate(victim, vm, &chan, &actions, &params);
        let rate_after = cam_rate(victim, vm, &better, &actions, &params);
        assert!(rate_after >= rate_before);
        assert!(rate_before >= 0.0);
        cases += 1;
    }
    println!(
        "criterion 4 PASS: 47 dB / 0.878 CAM-per-ms hand case within 0.1%, monotonicity on {cases} random configurations"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: analytic gradients against central finite differences.
// ---------------------------------------------------------------------------

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn critic_loss(critic: &Critic, s: &[f64], a: &[f64], y: &[f64], batch: usize) -> f64 {
    let mut cache = CriticCache::default();
    critic.forward(s, a, batch, &mut cache);
    cache.q.iter().zip(y).map(|(q, y)| (q - y) * (q - y)).sum::<f64>() / batch as f64
}

fn actor_objective(actor: &Actor, critic: &Critic, s: &[f64], batch: usize) -> f64 {
    let mut ac = ActorCache::default();
    let mut cc = CriticCache::default();
    actor.forward(s, batch, &mut ac);
    critic.forward(s, &ac.a, batch, &mut cc);
    cc.q.iter().sum::<f64>() / batch as f64
}

#[test]
fn criterion_7_gradient_correctness() {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let eps = 1e-5;
    let mut probes = 0usize;
    let mut worst: f64 = 0.0;

    while probes < 100 {
        let dim = rng.gen_range(3..8);
        let h1 = rng.gen_range(4..10);
        let h2 = rng.gen_range(3..8);
        let batch = rng.gen_range(2..6);
        let actor = Actor::new(dim, h1, h2, -4.3, 2.9, &mut rng);
        let critic = Critic::new(dim, h1, h2, &mut rng);
        let s: Vec<f64> = (0..batch * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..batch).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..batch).map(|_| rng.gen_range(-2.0..0.0)).collect();

        // Critic gradient of the mean squared TD residual.
        let mut cache = CriticCache::default();
        let mut cgrads = CriticGrads::for_net(&critic);
        critic.forward(&s, &a, batch, &mut cache);
        let dq: Vec<f64> =
            cache.q.iter().zip(&y).map(|(q, yv)| 2.0 * (q - yv) / batch as f64).collect();
        critic.backward(&mut cache, &dq, Some(&mut cgrads), None);

        // Actor gradient of the mean critic value.
        let mut ac = ActorCache::default();
        let mut agrads = ActorGrads::for_net(&actor);
        actor.forward(&s, batch, &mut ac);
        let mut cc = CriticCache::default();
        critic.forward(&s, &ac.a, batch, &mut cc);
        let ones = vec![1.0 / batch as f64; batch];
        let mut da = Vec::new();
        critic.backward(&mut cc, &ones, None, Some(&mut da));
        actor.backward(&mut ac, &da, &mut agrads);

        for _ in 0..4 {
            let tensor = rng.gen_range(0..6);
            // Critic probe.
            let len = critic.tensors()[tensor].len();
            let idx = rng.gen_range(0..len);
            let analytic = cgrads.tensors()[tensor][idx];
            let mut pert = critic.clone();
            pert.tensors_mut()[tensor][idx] += eps;
            let up = critic_loss(&pert, &s, &a, &y, batch);
            pert.tensors_mut()[tensor][idx] -= 2.0 * eps;
            let down = critic_loss(&pert, &s, &a, &y, batch);
            let fd = (up - down) / (2.0 * eps);
            let e = rel_err(analytic, fd);
            worst = worst.max(e);
            assert!(e < 1e-4, "critic tensor {tensor} idx {idx}: {analytic} vs {fd}");

            // Actor probe.
            let len = actor.tensors()[tensor].len();
            let idx = rng.gen_range(0..len);
            let analytic = agrads.tensors()[tensor][idx];
            let mut pert = actor.clone();
            pert.tensors_mut()[tensor][idx] += eps;
            let up = actor_objective(&pert, &critic, &s, batch);
            pert.tensors_mut()[tensor][idx] -= 2.0 * eps;
            let down = actor_objective(&pert, &critic, &s, batch);
            let fd = (up - down) / (2.0 * eps);
            let e = rel_err(analytic, fd);
            worst = worst.max(e);
            assert!(e < 1e-4, "actor tensor {tensor} idx {idx}: {analytic} vs {fd}");
            probes += 1;
        }
    }
    println!("criterion 7 PASS: {probes} finite-difference probes, worst rel err {worst:.2e}");
}

// ---------------------------------------------------------------------------
// Criteria 8-10: the desk-scale training campaign.
// ---------------------------------------------------------------------------

mod campaign {
    use super::*;
    use mtcc::ddpg::{evaluate, train, EvalPoint, TrainConfig};
    use mtcc::harness::metrics::{convergence_episode, string_stability_report};
    use mtcc::harness::profiles::{synthetic_profiles, velocity_vectors};
    use mtcc::harness::rng::substream;
    use std::io::Write;
    use std::path::PathBuf;

    const EPISODES: usize = 1000;
    const SEEDS: [u64; 3] = [1, 2, 3];
    const FINAL_EVAL_EPISODES: usize = 100;
    const WORKERS: usize = 2;

    struct RunOutput {
        variant: Variant,
        seed: u64,
        curve: Vec<EvalPoint>,
        final_sum: f64,
        stable_episodes: usize,
        eval_episodes: usize,
    }

    fn campaign_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-campaign")
    }

    fn run_one(variant: Variant, seed: u64) -> RunOutput {
        let params = PlatoonParams::default();
        let mut prof_rng = substream(9, "profile.synthetic", 0);
        let all = synthetic_profiles(900, 120, &params, &mut prof_rng);
        let (train_set, test_set) =
            mtcc::harness::profiles::split_profiles(all, 8.0 / 9.0, 9).unwrap();
        let train_profiles = velocity_vectors(&train_set);
        let test_profiles = velocity_vectors(&test_set);

        let cfg = TrainConfig::new(variant, EPISODES, seed);
        let dir = campaign_dir().join(format!("{variant}-seed{seed}"));
        std::fs::create_dir_all(&dir).unwrap();
        let mut progress =
            std::fs::File::create(dir.join("progress.log")).expect("campaign dir writable");
        let result = train(&cfg, &train_profiles, &test_profiles, |point| {
            let _ = writeln!(progress, "{} {:+.4}", point.episode, point.sum_return);
            let _ = progress.flush();
        })
        .expect("training run failed");

        let mut agents = result.agents;
        let report = evaluate(
            &mut agents,
            variant,
            &cfg.env,
            &test_profiles,
            FINAL_EVAL_EPISODES,
            seed,
            500_000,
            1.0,
            true,
        )
        .expect("final evaluation failed");

        let stable = report
            .logs
            .iter()
            .filter(|log| string_stability_report(log, 4).stable)
            .count();

        // Persist everything before any assertion can fire.
        let mut summary = std::fs::File::create(dir.join("summary.txt")).unwrap();
        let _ = writeln!(
            summary,
            "variant {variant} seed {seed}\nfinal mean sum return {:+.4}\nper follower {:?}\nstring stable {stable}/{FINAL_EVAL_EPISODES}",
            report.sum_return, report.per_follower
        );
        let mut curve_csv = std::fs::File::create(dir.join("curve.csv")).unwrap();
        let _ = writeln!(curve_csv, "episode,sum_return");
        for p in &result.curve {
            let _ = writeln!(curve_csv, "{},{}", p.episode, p.sum_return);
        }

        RunOutput {
            variant,
            seed,
            curve: result.curve,
            final_sum: report.sum_return,
            stable_episodes: stable,
            eval_episodes: FINAL_EVAL_EPISODES,
        }
    }

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    /// Standard error of the across-seed mean of paired differences.
    fn paired_se(diffs: &[f64]) -> f64 {
        let m = mean(diffs);
        let var = diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>()
            / (diffs.len() as f64 - 1.0);
        (var / diffs.len() as f64).sqrt()
    }

    #[test]
    #[ignore = "desk-scale campaign: 9 training runs, hours of compute; run with --ignored"]
    fn criteria_8_9_10_learning_campaign() {
        let jobs: Vec<(Variant, u64)> = Variant::ALL
            .into_iter()
            .flat_map(|v| SEEDS.into_iter().map(move |s| (v, s)))
            .collect();
        let queue = std::sync::Mutex::new(jobs.into_iter());
        let outputs = std::sync::Mutex::new(Vec::<RunOutput>::new());
        std::thread::scope(|scope| {
            for _ in 0..WORKERS {
                scope.spawn(|| loop {
                    let job = queue.lock().unwrap().next();
                    match job {
                        Some((variant, seed)) => {
                            eprintln!("campaign: starting {variant} seed {seed}");
                            let out = run_one(variant, seed);
                            eprintln!(
                                "campaign: finished {variant} seed {seed} -> {:+.4}",
                                out.final_sum
                            );
                            outputs.lock().unwrap().push(out);
                        }
                        None => break,
                    }
                });
            }
        });
        let outputs = outputs.into_inner().unwrap();
        assert_eq!(outputs.len(), 9);
        let by = |v: Variant| -> Vec<&RunOutput> {
            let mut runs: Vec<&RunOutput> =
                outputs.iter().filter(|o| o.variant == v).collect();
            runs.sort_by_key(|o| o.seed);
            runs
        };
        let mtcc = by(Variant::MtccPc);
        let rd = by(Variant::RdPc);
        let wo = by(Variant::PcWoAs);

        // Criterion 8: ordering of mean final returns with paired-seed
        // standard errors.
        let finals = |runs: &[&RunOutput]| -> Vec<f64> {
            runs.iter().map(|o| o.final_sum).collect()
        };
        let (m_mtcc, m_rd, m_wo) =
            (mean(&finals(&mtcc)), mean(&finals(&rd)), mean(&finals(&wo)));
        let diff_rd: Vec<f64> = mtcc
            .iter()
            .zip(&rd)
            .map(|(a, b)| a.final_sum - b.final_sum)
            .collect();
        let diff_wo: Vec<f64> = mtcc
            .iter()
            .zip(&wo)
            .map(|(a, b)| a.final_sum - b.final_sum)
            .collect();
        let (gap_rd, se_rd) = (mean(&diff_rd), paired_se(&diff_rd));
        let (gap_wo, se_wo) = (mean(&diff_wo), paired_se(&diff_wo));
        println!(
            "campaign means: mtcc-pc {m_mtcc:+.4}, rd-pc {m_rd:+.4}, pc-wo-as {m_wo:+.4}"
        );
        println!("gap over rd-pc {gap_rd:+.4} (se {se_rd:.4}), over pc-wo-as {gap_wo:+.4} (se {se_wo:.4})");
        let c8 = gap_rd > se_rd && gap_wo > se_wo;
        println!(
            "criterion 8 {}: ordering with paired-seed standard errors",
            if c8 { "PASS" } else { "FAIL" }
        );

        // Criterion 9: episodes to reach within 10% of the final plateau.
        let conv = |runs: &[&RunOutput]| -> Vec<usize> {
            runs.iter()
                .map(|o| convergence_episode(&o.curve, 5, 0.10).unwrap_or(usize::MAX))
                .collect()
        };
        let (c_mtcc, c_rd, c_wo) = (conv(&mtcc), conv(&rd), conv(&wo));
        let faster = c_mtcc
            .iter()
            .zip(c_rd.iter().zip(&c_wo))
            .filter(|(m, (r, w))| m < r && m < w)
            .count();
        println!("convergence episodes mtcc {c_mtcc:?} rd {c_rd:?} wo {c_wo:?}; mtcc fastest on {faster}/3 seeds");
        let c9 = faster >= 2;
        println!(
            "criterion 9 {}: faster convergence on the majority of seeds",
            if c9 { "PASS" } else { "FAIL" }
        );

        // Criterion 10: string-stability rates pooled over seeds.
        let rate = |runs: &[&RunOutput]| -> f64 {
            let stable: usize = runs.iter().map(|o| o.stable_episodes).sum();
            let total: usize = runs.iter().map(|o| o.eval_episodes).sum();
            stable as f64 / total as f64
        };
        let (r_mtcc, r_rd, r_wo) = (rate(&mtcc), rate(&rd), rate(&wo));
        println!(
            "string-stable rates: mtcc-pc {:.1}%, rd-pc {:.1}%, pc-wo-as {:.1}%",
            100.0 * r_mtcc,
            100.0 * r_rd,
            100.0 * r_wo
        );
        let c10 = r_mtcc >= 0.60 && r_mtcc >= r_rd && r_mtcc >= r_wo;
        println!(
            "criterion 10 {}: stability rate at least 60% and at least both baselines",
            if c10 { "PASS" } else { "FAIL" }
        );

        println!("campaign outputs preserved in {}", campaign_dir().display());
        assert!(c8, "criterion 8 failed: see campaign outputs");
        assert!(c9, "criterion 9 failed: see campaign outputs");
        assert!(c10, "criterion 10 failed: see campaign outputs");
    }
}
