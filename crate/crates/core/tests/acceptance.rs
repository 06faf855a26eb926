//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any criterion fails.

mod common;

use std::process::Command;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vslab::bounds::log_factors_lemma_check;
use vslab::complexity::{ball, doubling_dimension, phi, phi_c, Centers, PhiMode};
use vslab::concept::{make_class, star_number, vc_dimension, ClassSpec, ConceptClass};
use vslab::distribution::Distribution;
use vslab::harness::{run_lower_bound, run_trials, run_validation, stats, ExperimentConfig, Verdict};
use vslab::learners::{run_algorithm1, Algo1Cache, Algo1Params, Algo1Plan};
use vslab::noise::{bounded_noise_from, lower_bound_construction, risk_minimizer, ScenarioParams};
use vslab::numeric::{q_frac, q_int, q_to_f64, Q};
use vslab::version_space::{compression_set_size, CompressionMode, LabeledSample, VersionSpaceView};

const SEED: u64 = 20_240_917;

fn class(spec: &str) -> ConceptClass {
    make_class(&spec.parse::<ClassSpec>().unwrap()).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn validate(cfg: &str) -> (bool, String) {
    let cfg = ExperimentConfig::from_json(cfg).unwrap();
    let (report, _) = run_validation(&cfg).unwrap();
    let mut lines = Vec::new();
    for c in &report.checks {
        lines.push(format!(
            "{} {}/{:?} {:?} m={} viol={}/{} ci99_low={:.4} mean={:.5} bound_mean={:.5} {:?}",
            cfg.class, c.bound, c.quantity, c.kind, c.m, c.violations, c.trials, c.ci_low, c.quantity_mean, c.bound_mean, c.verdict
        ));
    }
    (report.checks.iter().all(|c| c.verdict == Verdict::Pass) && !report.checks.is_empty(), lines.join("\n    "))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for _ in 0..200 {
        let c = common::random_class(&mut rng, 7, 32);
        if vc_dimension(&c) != common::vc_brute(c.masks(), c.n()) {
            mismatches += 1;
        }
        if star_number(&c, c.n()).unwrap().value() != Some(common::star_brute(c.masks(), c.n())) {
            mismatches += 1;
        }
        let target = c.mask(rng.gen_range(0..c.len()));
        let m = rng.gen_range(1..=10);
        let points: Vec<usize> = (0..m).map(|_| rng.gen_range(0..c.n())).collect();
        let sample = LabeledSample::from_target(&points, target);
        let got = compression_set_size(&c, &sample, CompressionMode::Exact).unwrap().size;
        if got != common::compression_brute(c.masks(), &sample.pairs) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over 200 classes x 3 measures"))
}

fn criterion_2() -> Outcome {
    let (pass, detail) = validate(
        r#"{"class":"thresholds(64)","target":32,"m_grid":[32,128,512],"delta":0.1,"trials":2000,"seed":2,
            "quantities":["dis_mass","nhat"],
            "bounds":[{"name":"pdis_nhat","quantity":"dis_mass","kind":"quantile","params":{"nhat":"@nhat"}}]}"#,
    );
    outcome(pass, detail)
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (spec, target) in [("thresholds(64)", 32), ("axis_rectangles(4x4)", 50)] {
        let cfg = format!(
            r#"{{"class":"{spec}","target":{target},"m_grid":[32,128,512],"delta":0.1,"trials":2000,"seed":3,
                "quantities":["closure_er"],
                "bounds":[{{"name":"closure","quantity":"closure_er","kind":"quantile","params":{{"dim":"@vc"}}}},
                          {{"name":"closure_expectation","quantity":"closure_er","kind":"expectation","params":{{"dim":"@vc"}}}}]}}"#
        );
        let (p, d) = validate(&cfg);
        pass &= p;
        details.push(d);
    }
    outcome(pass, details.join("\n    "))
}

fn criterion_4() -> Outcome {
    let (pass, detail) = validate(
        r#"{"class":"star(8)","target":0,"m_grid":[16,64,256,1024],"delta":0.1,"trials":2000,"seed":4,
            "quantities":["dis_mass"],
            "bounds":[{"name":"pdis_star","quantity":"dis_mass","kind":"quantile","params":{"star":"@star"}}]}"#,
    );
    outcome(pass, detail)
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (spec, target) in [("thresholds(64)", 32), ("star(8)", 0)] {
        let cfg = format!(
            r#"{{"class":"{spec}","target":{target},"m_grid":[32,128,512],"delta":0.1,"trials":2000,"seed":5,
                "quantities":["sup_er","nhat"],
                "bounds":[{{"name":"erm_nhat","quantity":"sup_er","kind":"quantile","params":{{"dim":"@vc","nhat":"@nhat"}}}},
                          {{"name":"erm_subregion","quantity":"sup_er","kind":"quantile","params":{{"dim":"@vc","phi":"@phi_c:16"}}}}]}}"#
        );
        let (p, d) = validate(&cfg);
        pass &= p;
        details.push(d);
    }
    outcome(pass, details.join("\n    "))
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    for k in [2usize, 4, 8] {
        let c = class(&format!("star({k})"));
        let dist = Distribution::uniform(k).unwrap();
        for cc in [8i64, 16, 128] {
            let rho = q_frac(1, k as u128) * q_frac(101, 100);
            let view = ball(&c, 0, &rho, &dist);
            let got = phi(&c, &view, &dist, &(&rho / q_int(cc)), PhiMode::Real).unwrap().value;
            let want = Q::one() - q_int(k as i64) * &rho / q_int(cc);
            if got != want {
                bad.push(format!("k={k} c={cc}: {got} != {want}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut sandwich_bad = 0;
    for _ in 0..100 {
        let c = common::random_class(&mut rng, 5, 8);
        let weights: Vec<u128> = (0..c.n()).map(|_| rng.gen_range(0..5)).collect();
        let weights = if weights.iter().all(|&w| w == 0) { vec![1; c.n()] } else { weights };
        let dist = Distribution::from_weights(weights).unwrap();
        let members: Vec<usize> = (0..c.len()).filter(|_| rng.gen_bool(0.7)).collect();
        let view = if members.is_empty() { VersionSpaceView::full(&c) } else { VersionSpaceView::new(members) };
        let eta = q_frac(rng.gen_range(0..40), 80);
        let real = phi(&c, &view, &dist, &eta, PhiMode::Real).unwrap().value;
        let binary = phi(&c, &view, &dist, &eta, PhiMode::Binary).unwrap().value;
        let half = phi(&c, &view, &dist, &(&eta / q_int(2)), PhiMode::Real).unwrap().value;
        if !(real <= binary && binary <= q_int(2) * half) {
            sandwich_bad += 1;
        }
    }
    outcome(bad.is_empty() && sandwich_bad == 0, format!("star mismatches {bad:?}; sandwich violations {sandwich_bad}/100"))
}

fn criterion_7() -> Outcome {
    let mut bad = Vec::new();
    for k in [2usize, 4, 8] {
        let c = class(&format!("star({k})"));
        let dist = Distribution::uniform(k).unwrap();
        let kq = q_int(k as i64);
        for cc in [2i64, 4, 16] {
            let cq = q_int(cc);
            for r0 in [Q::zero(), q_frac(1, 2 * k as u128)] {
                let v = phi_c(&c, &dist, 0, &r0, &cq, PhiMode::Real).unwrap().value;
                let scale = Q::one() - Q::one() / &cq;
                let (lo, hi) = if r0.is_zero() {
                    (&scale * &kq, &scale * &kq)
                } else {
                    let inv = Q::one() / &r0;
                    let lo_arg = &inv - Q::one() / (&cq - Q::one());
                    (&scale * kq.clone().min(lo_arg), &scale * kq.clone().min(inv))
                };
                if !(lo <= v && v <= hi) {
                    bad.push(format!("k={k} c={cc} r0={r0}: {v} not in [{lo}, {hi}]"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{} of 18 cases outside the interval {bad:?}", bad.len()))
}

fn criterion_8() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for spec in ["star(4)", "thresholds(8)", "intervals(8)", "powerset(3)"] {
        let c = class(spec);
        let dist = Distribution::uniform(c.n()).unwrap();
        let d = vc_dimension(&c) as u32;
        for r0 in [q_frac(1, 10), q_frac(3, 10)] {
            for t in [0, c.len() / 2] {
                let target = c.mask(t);
                let dd = doubling_dimension(&c, &dist, target, &r0, Centers::AllLabelings).unwrap();
                let p = phi_c(&c, &dist, target, &r0, &q_int(8), PhiMode::Real).unwrap().value;
                // 2^D <= (96 phi)^(2d), compared exactly
                let rhs = (q_int(96) * &p).pow(2 * d as i32);
                checked += 1;
                if q_int(dd.covering as i64) > rhs {
                    bad.push(format!("{spec} target={t} r0={r0}: D={} phi_8={}", dd.value, q_to_f64(&p)));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} instances, violations {bad:?}"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut violations = 0;
    let draw = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(0.0..6.0));
    for _ in 0..100_000 {
        let (a, b, c1) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let c2 = if rng.gen_bool(0.1) { 0.0 } else { draw(&mut rng) - 1.0 };
        if !log_factors_lemma_check(a, b, c1, c2).unwrap().holds {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations in 100000 tuples"))
}

fn criterion_10() -> Outcome {
    let c = class("star(32)");
    let s = lower_bound_construction(&c, &ScenarioParams::RealizableStar { epsilon: q_frac(1, 64) }).unwrap();
    let m = (0.8 * s.regime).floor() as usize;
    let r = run_lower_bound(&s, &[m], 2000, SEED + 10, 0).unwrap();
    let row = &r.rows[0];
    outcome(
        row.verdict == "PASS",
        format!("regime {:.2}, m={m}, frequency {:.4}, ci99 [{:.4}, {:.4}] vs 1/2", r.regime, row.frequency, row.ci_low, row.ci_high),
    )
}

fn criterion_11() -> Outcome {
    let c = class("thresholds(16)");
    let dist = Distribution::uniform(16).unwrap();
    let beta = q_frac(1, 10);
    let target = c.mask(8);
    let noise = bounded_noise_from(target, 16, &beta, c.full_mask()).unwrap();
    let (h_star, best) = risk_minimizer(&c, &dist, &noise).unwrap();
    let a = Q::one() / (Q::one() - q_int(2) * &beta);
    let cache = Algo1Cache::default();
    let mut retention = String::new();
    let mut retained_ok = true;
    let mut medians = Vec::new();
    for m in [64usize, 256, 1024] {
        let plan = Algo1Plan::new(&c, &dist, Algo1Params { m, delta: 0.1, a: a.clone(), alpha: 1.0, c0: 2.0 }).unwrap();
        let runs = run_trials(SEED + 11 + m as u64, 500, 0, |_, rng| run_algorithm1(&c, &dist, &noise, &plan, &cache, rng)).unwrap();
        let excess: Vec<f64> = runs.iter().map(|r| q_to_f64(&(noise.error(&dist, c.mask(r.final_index)) - &best))).collect();
        medians.push(stats::median(&excess));
        if m == 256 {
            let kept = runs.iter().filter(|r| r.final_members.contains(&h_star)).count();
            let (lo, _) = stats::ci99(runs.len() - kept, runs.len());
            retained_ok = lo <= 0.1;
            retention = format!("h* kept in {kept}/500 runs at m=256 (miss ci99_low {lo:.4} vs 0.1)");
        }
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    outcome(
        retained_ok && decreasing,
        format!("{retention}; median excess at m=64,256,1024: {medians:?} (strictly decreasing: {decreasing})"),
    )
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"class":"star(8)","m_grid":[16,64],"delta":0.1,"trials":300,"seed":12,"quantities":["dis_mass","sup_er","nhat"],
            "bounds":[{"name":"pdis_star","quantity":"dis_mass","kind":"quantile","params":{"star":"@star"}}]}"#,
    )
    .unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_vslab"))
            .args(["validate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.code().is_some());
        std::fs::read(&out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    let same = a == b;
    let same_workers = a == c;
    outcome(same && same_workers && !a.is_empty(), format!("repeat identical: {same}; 1 vs 4 workers identical: {same_workers}; {} bytes", a.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("oracle equivalence for vc, star and compression", criterion_1),
        ("disagreement mass vs compression-size bound", criterion_2),
        ("closure error, quantile and expectation", criterion_3),
        ("disagreement mass vs star-number bound on star(8)", criterion_4),
        ("worst consistent error vs compression and subregion bounds", criterion_5),
        ("exact LP values on star(k) and the binary sandwich", criterion_6),
        ("phi_c interval on star(k)", criterion_7),
        ("doubling dimension vs phi_8", criterion_8),
        ("log-factors inequality fuzz", criterion_9),
        ("coupon-collector lower bound on star(32)", criterion_10),
        ("Algorithm 1 under bounded noise", criterion_11),
        ("byte-identical validate output", criterion_12),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|s| s == &id.to_string()) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:2} {verdict} ({:.1}s) {name}\n    {}", t.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
