//! Acceptance gate. Every criterion prints one `PASS`/`FAIL` line with the
//! measured values; the process exits nonzero if any criterion fails. The
//! criteria run one after another so the timing check is not skewed.

use std::ops::RangeInclusive;
use std::path::Path;
use std::process::ExitCode;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsn_trust::filter::{resample_indices, run_filter};
use wsn_trust::harness::{alpha_sweep, monte_carlo, scaling_study, ExperimentConfig, FilterResult};
use wsn_trust::ingest::{open_dataset, parse_dataset, synchronize, SyncConfig};
use wsn_trust::model::{component_likelihood, joint_likelihood, voting_metric, VoteTable};
use wsn_trust::sim::{real_data_faults, scenario_from_frames};
use wsn_trust::{ExperimentResult, FilterKind, ModelConfig, ReadingFrame, ScenarioSource, TrustState};

struct Verdict {
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(title: &'static str, pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { title, pass, detail: detail.into() }
}

/// d = 10, M = 100, IPF and BDMPF on one shared scenario.
fn reference() -> &'static ExperimentResult {
    static RESULT: OnceLock<ExperimentResult> = OnceLock::new();
    RESULT.get_or_init(|| monte_carlo(&ExperimentConfig::paper(10)).expect("reference experiment"))
}

struct Window {
    node: usize,
    label: &'static str,
    steps: RangeInclusive<usize>,
    high: bool,
    bound: f64,
}

fn criterion_1_trust_trajectories() -> Verdict {
    let ipf = reference().filter(FilterKind::Ipf).unwrap();
    let windows = [
        Window { node: 0, label: "A", steps: 15..=30, high: true, bound: 0.9 },
        Window { node: 0, label: "A", steps: 45..=65, high: false, bound: 0.1 },
        Window { node: 0, label: "A", steps: 85..=100, high: true, bound: 0.85 },
        Window { node: 1, label: "B", steps: 20..=100, high: false, bound: 0.1 },
        Window { node: 2, label: "C", steps: 20..=45, high: true, bound: 0.9 },
        Window { node: 2, label: "C", steps: 65..=100, high: false, bound: 0.1 },
        Window { node: 3, label: "D", steps: 15..=100, high: true, bound: 0.9 },
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for w in &windows {
        let m = ipf.mean_estimate_over(w.node, w.steps.clone());
        let ok = if w.high { m >= w.bound } else { m <= w.bound };
        pass &= ok;
        let op = if w.high { ">=" } else { "<=" };
        parts.push(format!(
            "{}[{}-{}]={m:.3}{op}{}{}",
            w.label,
            w.steps.start(),
            w.steps.end(),
            w.bound,
            if ok { "" } else { "!" }
        ));
    }
    verdict("trust trajectories", pass, parts.join(" "))
}

fn criterion_2_ipf_beats_bdmpf() -> Verdict {
    let r = reference();
    let rmse_d = |f: &FilterResult| f.rmse.as_ref().unwrap().time_averaged_over(3, 51..=70);
    let ipf = rmse_d(r.filter(FilterKind::Ipf).unwrap());
    let bdmpf_result = r.filter(FilterKind::Bdmpf).unwrap();
    let bdmpf = rmse_d(bdmpf_result);
    let a = bdmpf_result.mean_estimate_over(0, 15..=30);
    let pass = ipf < bdmpf && (0.7..=0.9).contains(&a);
    verdict(
        "IPF vs BDMPF",
        pass,
        format!("D RMSE[51-70] ipf={ipf:.4} < bdmpf={bdmpf:.4}; BDMPF A[15-30]={a:.3} in [0.7, 0.9]"),
    )
}

fn criterion_3_rmse_magnitude() -> Verdict {
    let rmse = |d: usize| {
        let mut cfg = ExperimentConfig::paper(d);
        cfg.filters = vec![FilterKind::Ipf];
        monte_carlo(&cfg).unwrap().results.remove(0).rmse.unwrap()
    };
    let r5 = rmse(5);
    let r20 = rmse(20);
    let cells: Vec<f64> = r5.values.iter().flatten().copied().collect();
    let share = cells.iter().filter(|&&v| v <= 0.15).count() as f64 / cells.len() as f64;
    let mut shrinks = true;
    let mut per_node = Vec::new();
    for j in 0..5 {
        let (a, b) = (r5.time_averaged(j), r20.time_averaged(j));
        shrinks &= b <= a;
        per_node.push(format!("{}:{a:.4}->{b:.4}", j + 1));
    }
    verdict(
        "RMSE magnitude",
        share >= 0.8 && shrinks,
        format!(
            "d=5 cells with RMSE<=0.15: {:.1}% (need >=80%); d=5->d=20 per node {}",
            100.0 * share,
            per_node.join(" ")
        ),
    )
}

fn criterion_4_alpha_sweep() -> Verdict {
    let mut cfg = ExperimentConfig::paper(10);
    cfg.filters = vec![FilterKind::Ipf];
    let sweep = alpha_sweep(&[0.75, 0.85], &cfg).unwrap();
    let c = |i: usize| sweep[i].result.results[0].rmse.as_ref().unwrap().time_averaged(2);
    let (low, default) = (c(0), c(1));
    verdict(
        "alpha sweep",
        default <= low,
        format!("Sensor C time-averaged RMSE alpha=0.85: {default:.4} <= alpha=0.75: {low:.4}"),
    )
}

fn criterion_5_ipf_convergence() -> Verdict {
    let ipf = reference().filter(FilterKind::Ipf).unwrap();
    let share = ipf.iteration_share_within(10);
    verdict(
        "IPF convergence",
        share >= 0.95,
        format!("steps converged within 10 iterations: {:.1}% (need >=95%)", 100.0 * share),
    )
}

fn criterion_6_linear_scaling() -> Verdict {
    let cfg = ExperimentConfig::paper(5);
    let rows = scaling_study(&[5, 10, 20], &cfg).unwrap();
    let (r10, r20) = (rows[1].ratio, rows[2].ratio);
    verdict(
        "linear scaling",
        (1.3..=2.5).contains(&r10) && (2.5..=5.0).contains(&r20),
        format!(
            "t(10)/t(5)={r10:.2} in [1.3, 2.5]; t(20)/t(5)={r20:.2} in [2.5, 5.0] (t(5)={:.4}s)",
            rows[0].mean_seconds
        ),
    )
}

fn criterion_7_real_data_fault_detection() -> Verdict {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/intel_excerpt.txt");
    let (records, _) = parse_dataset(open_dataset(&path).unwrap()).unwrap();
    let sync_cfg = SyncConfig::default();
    let sync = synchronize(&records, &sync_cfg).unwrap();
    let names = sync_cfg.node_ids.iter().map(|m| format!("mote {m}")).collect();
    let faults = real_data_faults();
    let scenario = scenario_from_frames(sync.frames, names, &faults, 0).unwrap();
    let d = scenario.nodes();
    let mut cfg = ExperimentConfig::paper(d);
    cfg.source = ScenarioSource::Fixed(scenario);
    cfg.model = ModelConfig { r: 2.0, ..ModelConfig::with_nodes(d) };
    cfg.filters = vec![FilterKind::Ipf];
    let result = monte_carlo(&cfg).unwrap();
    let ipf = &result.results[0];

    let mut pass = true;
    let mut parts = Vec::new();
    for f in &faults {
        // Fault windows are 0-based grid indices; estimates are 1-based steps.
        let (onset, end) = (f.start + 1, f.end + 1);
        let steps = ipf.rmse.as_ref().unwrap().steps();
        let drop = (onset..=(onset + 20).min(steps)).find(|&k| ipf.mean_estimate(k, f.node) < 0.3);
        let recover = (end + 1..=(end + 30).min(steps)).find(|&k| ipf.mean_estimate(k, f.node) > 0.7);
        pass &= drop.is_some() && recover.is_some();
        let show = |x: Option<usize>, from: usize| x.map_or("never".to_string(), |k| format!("+{}", k - from));
        parts.push(format!(
            "{} node {}: drop {} recover {}",
            f.kind.name(),
            f.node + 1,
            show(drop, onset),
            show(recover, end)
        ));
    }
    verdict("real-data fault detection (synthetic excerpt)", pass, parts.join("; "))
}

fn random_frame(rng: &mut ChaCha8Rng, d: usize, k: usize) -> ReadingFrame {
    let readings =
        (0..d).map(|_| if rng.random::<f64>() < 0.15 { None } else { Some(rng.random_range(18.0..22.0)) }).collect();
    ReadingFrame::new(readings, k)
}

fn criterion_8_property_suites() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, ok: bool| {
        pass &= ok;
        parts.push(format!("{name}={}", if ok { "ok" } else { "FAILED" }));
    };

    // Joint likelihood vs product of component likelihoods, 10^4 states.
    let mut worst = 0u64;
    for _ in 0..10_000 {
        let d = rng.random_range(2..12);
        let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let frame = random_frame(&mut rng, d, 1);
        let cfg = ModelConfig { r: rng.random_range(0.1..3.0), ..ModelConfig::with_nodes(d) };
        let joint = joint_likelihood(&TrustState::new(x.clone(), 1).unwrap(), &frame, &cfg).unwrap();
        let product: f64 = (0..d).map(|j| component_likelihood(x[j], &x, &frame, j, &cfg).unwrap()).product();
        worst = worst.max(joint.to_bits().abs_diff(product.to_bits()));
    }
    check(&format!("factorization(max {worst} ulp)"), worst <= 8);

    // Multinomial counts within 3 sigma of N w over 10^4 repetitions.
    let w = [0.05, 0.4, 0.0, 0.25, 0.3];
    let (n, reps) = (50, 10_000);
    let mut totals = [0u64; 5];
    for _ in 0..reps {
        for i in resample_indices(&w, n, &mut rng).unwrap() {
            totals[i] += 1;
        }
    }
    let unbiased = w.iter().zip(totals).all(|(&wl, t)| {
        let sigma = (n as f64 * wl * (1.0 - wl) / reps as f64).sqrt();
        (t as f64 / reps as f64 - n as f64 * wl).abs() <= 3.0 * sigma
    });
    check("resampling", unbiased);

    // Particles and estimates stay in [0, 1] over 10^4 steps per filter.
    let d = 4;
    let frames: Vec<ReadingFrame> = (1..=10_000).map(|k| random_frame(&mut rng, d, k)).collect();
    let cfg = ModelConfig { n_particles: 20, ..ModelConfig::with_nodes(d) };
    let init = TrustState::uniform(d, 1.0, 0).unwrap();
    let bounded = FilterKind::ALL.iter().all(|&kind| {
        run_filter(kind, &frames, &cfg, &init, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().iter().all(|o| {
            o.estimate.values().iter().all(|v| (0.0..=1.0).contains(v))
                && (0..d).all(|j| o.posterior.component(j).iter().all(|v| (0.0..=1.0).contains(v)))
        })
    });
    check("bounded", bounded);

    // V(c x) = V(x), and unit trusts reduce V to the unweighted metric.
    let mut invariant = true;
    let mut equivalent = true;
    for _ in 0..1_000 {
        let d = rng.random_range(2..12);
        let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let c = rng.random_range(1e-3..1e3);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let frame = random_frame(&mut rng, d, 1);
        let votes = VoteTable::new(&frame.readings, 0.6);
        for j in 0..d {
            let a = voting_metric(&x, &frame.readings, j, 0.6);
            let b = voting_metric(&scaled, &frame.readings, j, 0.6);
            invariant &= (a - b).abs() <= 1e-12;
            equivalent &= votes.metric(&vec![1.0; d], j) == votes.unweighted_metric(j);
        }
    }
    check("scale-invariance", invariant);
    check("bdmpf-equivalence", equivalent);

    // Same seeds, different worker counts: identical bits.
    let mut cfg = ExperimentConfig::paper(5);
    cfg.runs = 5;
    cfg.filters = FilterKind::ALL.to_vec();
    cfg.jobs = 1;
    let bits = |r: &ExperimentResult| -> Vec<u64> {
        r.results
            .iter()
            .flat_map(|f| f.runs.iter().flat_map(|run| run.estimates.iter().flatten().map(|v| v.to_bits())))
            .collect()
    };
    let a = bits(&monte_carlo(&cfg).unwrap());
    cfg.jobs = 4;
    let b = bits(&monte_carlo(&cfg).unwrap());
    check("reproducible", !a.is_empty() && a == b);

    verdict("property suites", pass, parts.join(" "))
}

fn main() -> ExitCode {
    let criteria: [fn() -> Verdict; 8] = [
        criterion_1_trust_trajectories,
        criterion_2_ipf_beats_bdmpf,
        criterion_3_rmse_magnitude,
        criterion_4_alpha_sweep,
        criterion_5_ipf_convergence,
        criterion_6_linear_scaling,
        criterion_7_real_data_fault_detection,
        criterion_8_property_suites,
    ];
    let mut passed = 0;
    for (i, run) in criteria.iter().enumerate() {
        let v = run();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {} ({}): {}", i + 1, v.title, v.detail);
        passed += usize::from(v.pass);
    }
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
