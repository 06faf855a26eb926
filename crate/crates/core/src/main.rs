use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vslab::bounds::{bound_catalog, evaluate_bound};
use vslab::complexity::{
    ball, covering_number, disagreement_coefficient, doubling_dimension, phi, phi_c, phi_hat_noise, Centers, CoverMode, PhiMode,
};
use vslab::concept::{
    closure_hull, is_intersection_closed, make_class, save_class, star_number, vc_dimension, ClassSpec, ConceptClass, GENERATORS,
};
use vslab::distribution::Distribution;
use vslab::harness::{
    cal_curve, estimate_m, quantile_nhat, run_lower_bound, run_noisy_lower_bound, run_trials, run_validation, stats, ExperimentConfig,
    RNG_DESCRIPTION,
};
use vslab::learners::{closure_predict, run_algorithm1, run_cal, run_monotone_rule, Algo1Cache, Algo1Params, Algo1Plan, MonotoneRule};
use vslab::noise::{bounded_noise_from, lower_bound_construction, risk_minimizer, sample_labeled, Labeler, ScenarioParams};
use vslab::numeric::{parse_rational, q_to_f64, Q};
use vslab::version_space::{compression_set_size, version_space, CompressionMode, LabeledSample, VersionSpaceView};
use vslab::{Error, Result};

#[derive(Parser)]
#[command(name = "vslab", version, about = "Version-space learning theory lab for finite concept classes")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 2000)]
    trials: usize,
    #[arg(long, global = true, default_value_t = 0.1)]
    delta: f64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for trial-parallel commands (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List generators or print a class.
    Classes {
        #[command(subcommand)]
        action: ClassesCmd,
    },
    /// Exact combinatorial and distribution-dependent measures.
    Measure {
        #[command(subcommand)]
        what: MeasureCmd,
    },
    /// Run a learner.
    Simulate {
        #[command(subcommand)]
        what: SimulateCmd,
    },
    /// Evaluate a bound formula.
    Bound {
        /// Bound name; `list` prints every name with its parameters.
        name: String,
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
    },
    /// Monte Carlo validation from a JSON config.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Lower-bound constructions.
    Lowerbound {
        #[command(subcommand)]
        kind: LowerCmd,
    },
}

#[derive(Subcommand)]
enum ClassesCmd {
    List,
    Show {
        spec: String,
    },
}

#[derive(Args, Clone)]
struct ClassArgs {
    #[arg(long)]
    class: String,
    #[arg(long, default_value = "uniform")]
    dist: String,
    /// Target hypothesis index.
    #[arg(long, default_value_t = 0)]
    target: usize,
}

#[derive(Subcommand)]
enum MeasureCmd {
    Vc {
        #[command(flatten)]
        c: ClassArgs,
    },
    Star {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Compression size of `--sample`, or the empirical quantile of nhat_{1:m} with `--m`.
    Nhat {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long)]
        sample: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    Theta {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long, default_value = "0")]
        r0: String,
    },
    /// Phi of a set of hypotheses (`--members`, or the ball `--radius` around the target).
    Phi {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long, value_delimiter = ',')]
        members: Vec<usize>,
        #[arg(long)]
        radius: Option<String>,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value = "real")]
        mode: String,
    },
    Phic {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long, default_value = "0")]
        r0: String,
        #[arg(long = "c", default_value = "16")]
        cc: String,
        #[arg(long, default_value = "real")]
        mode: String,
    },
    Phihat {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value = "0")]
        r0: String,
        #[arg(long = "c", default_value = "128")]
        cc: String,
    },
    Doubling {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long)]
        r0: String,
        #[arg(long, default_value = "all-labelings")]
        centers: String,
    },
    /// Covering number of the ball of `--ball` around the target at radius `--radius`.
    Cover {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long, default_value = "1")]
        ball: String,
        #[arg(long)]
        radius: String,
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long, default_value = "all-labelings")]
        centers: String,
    },
    /// Empirical M(eps, delta).
    Mhat {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_m: usize,
    },
}

#[derive(Subcommand)]
enum SimulateCmd {
    Closure {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long)]
        m: usize,
    },
    Monotone {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "dis_version_space")]
        rule: String,
    },
    /// One CAL run per budget, or a CSV curve over `--trials` runs when several budgets are given.
    Cal {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<u32>,
    },
    Algorithm1 {
        #[command(flatten)]
        c: ClassArgs,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "0.1")]
        beta: String,
        /// Defaults to 1/(1-2 beta).
        #[arg(long)]
        a: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        c0: f64,
    },
}

#[derive(Subcommand)]
enum LowerCmd {
    Realizable {
        #[arg(long)]
        class: String,
        #[arg(long)]
        epsilon: String,
        #[arg(long, value_delimiter = ',', required = true)]
        m_grid: Vec<usize>,
    },
    Noisy {
        #[arg(long)]
        class: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        zeta: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        m_grid: Vec<usize>,
    },
}

fn q_arg(field: &str, s: &str) -> Result<Q> {
    parse_rational(s).ok_or_else(|| Error::param(field, format!("{s:?} is not a number")))
}

fn load(c: &ClassArgs) -> Result<(ConceptClass, Distribution, u64)> {
    let class = make_class(&c.class.parse::<ClassSpec>()?)?;
    let dist = Distribution::from_spec(&c.dist, class.n())?;
    if c.target >= class.len() {
        return Err(Error::param("target", format!("index {} is outside the class of size {}", c.target, class.len())));
    }
    let t = class.mask(c.target);
    Ok((class, dist, t))
}

fn centers_arg(s: &str) -> Result<Centers> {
    match s {
        "members" => Ok(Centers::Members),
        "all-labelings" | "all_labelings" => Ok(Centers::AllLabelings),
        _ => Err(Error::param("centers", format!("{s:?} is not members|all-labelings"))),
    }
}

struct Output {
    path: Option<PathBuf>,
}

impl Output {
    fn text(&self, s: &str) -> Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, s)?,
            None => {
                let mut o = std::io::stdout().lock();
                o.write_all(s.as_bytes())?;
                if !s.ends_with('\n') {
                    o.write_all(b"\n")?;
                }
            }
        }
        Ok(())
    }

    fn json<T: Serialize>(&self, v: &T) -> Result<()> {
        self.text(&serde_json::to_string_pretty(v).expect("serializable"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let out = Output { path: cli.out.clone() };
    if !(cli.delta > 0.0 && cli.delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    match &cli.command {
        Command::Classes { action } => match action {
            ClassesCmd::List => {
                let mut s = String::new();
                for (name, doc) in GENERATORS {
                    s.push_str(&format!("{name:28} {doc}\n"));
                }
                out.text(&s)?;
            }
            ClassesCmd::Show { spec } => {
                let c = make_class(&spec.parse::<ClassSpec>()?)?;
                out.text(&save_class(&c))?;
            }
        },
        Command::Measure { what } => measure(cli, &out, what)?,
        Command::Simulate { what } => simulate(cli, &out, what)?,
        Command::Bound { name, params } => {
            if name == "list" {
                let mut s = String::new();
                for (n, ps) in bound_catalog() {
                    s.push_str(&format!("{n:34} {}\n", ps.join(" ")));
                }
                out.text(&s)?;
                return Ok(0);
            }
            let mut map = BTreeMap::new();
            for p in params {
                let (k, v) = p.split_once('=').ok_or_else(|| Error::param("param", format!("{p:?} is not K=V")))?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
            let r = evaluate_bound(name, &map)?;
            out.text(&serde_json::to_string(&r).expect("serializable"))?;
        }
        Command::Validate { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if cli.out.is_some() {
                cfg.output = cli.out.clone();
            }
            if cli.workers != 0 {
                cfg.workers = cli.workers;
            }
            let (report, csv) = run_validation(&cfg)?;
            if cfg.output.is_none() {
                print!("{csv}");
            }
            for c in &report.checks {
                eprintln!(
                    "{:?} {} vs {:?} ({:?}) m={}: violations {}/{} ci99=[{:.4}, {:.4}] mean={:.5} bound={:.5}",
                    c.verdict, c.bound, c.quantity, c.kind, c.m, c.violations, c.trials, c.ci_low, c.ci_high, c.quantity_mean, c.bound_mean
                );
            }
            return Ok(if report.pass { 0 } else { 4 });
        }
        Command::Lowerbound { kind } => {
            let report = match kind {
                LowerCmd::Realizable { class, epsilon, m_grid } => {
                    let c = make_class(&class.parse::<ClassSpec>()?)?;
                    let s = lower_bound_construction(&c, &ScenarioParams::RealizableStar { epsilon: q_arg("epsilon", epsilon)? })?;
                    serde_json::to_value(run_lower_bound(&s, m_grid, cli.trials, cli.seed, cli.workers)?).expect("serializable")
                }
                LowerCmd::Noisy { class, k, zeta, beta, m_grid } => {
                    let c = make_class(&class.parse::<ClassSpec>()?)?;
                    let (r, ts) = run_noisy_lower_bound(&c, *k, *zeta, *beta, cli.delta, m_grid, cli.trials, cli.seed, cli.workers)?;
                    serde_json::json!({ "report": r, "worst_t": ts })
                }
            };
            let fail = report["rows"].as_array().or(report["report"]["rows"].as_array()).is_some_and(|rows| rows.iter().any(|r| r["verdict"] == "FAIL"));
            out.json(&report)?;
            return Ok(if fail { 4 } else { 0 });
        }
    }
    Ok(0)
}

fn measure(cli: &Cli, out: &Output, what: &MeasureCmd) -> Result<()> {
    match what {
        MeasureCmd::Vc { c } => {
            let (class, _, _) = load(c)?;
            out.json(&serde_json::json!({ "class": class.name(), "vc": vc_dimension(&class) }))
        }
        MeasureCmd::Star { c, cap } => {
            let (class, _, _) = load(c)?;
            let s = star_number(&class, cap.unwrap_or(class.n()))?;
            out.json(&serde_json::json!({ "class": class.name(), "star": s.value(), "witness": s.witness() }))
        }
        MeasureCmd::Nhat { c, sample, m, mode } => {
            let (class, dist, target) = load(c)?;
            match (sample, m) {
                (Some(s), _) => {
                    let sample = LabeledSample::parse(s, class.space())?;
                    out.json(&compression_set_size(&class, &sample, mode.parse::<CompressionMode>()?)?)
                }
                (None, Some(m)) => out.json(&quantile_nhat(&class, &dist, target, *m, cli.delta, cli.trials, cli.seed, cli.workers)?),
                (None, None) => Err(Error::param("sample", "give --sample or --m")),
            }
        }
        MeasureCmd::Theta { c, r0 } => {
            let (class, dist, target) = load(c)?;
            let v = disagreement_coefficient(&class, &dist, target, &q_arg("r0", r0)?)?;
            out.json(&serde_json::json!({ "theta": v.to_string(), "value": q_to_f64(&v) }))
        }
        MeasureCmd::Phi { c, members, radius, eta, mode } => {
            let (class, dist, target) = load(c)?;
            let view = match radius {
                Some(r) => ball(&class, target, &q_arg("radius", r)?, &dist),
                None if members.is_empty() => VersionSpaceView::full(&class),
                None => {
                    if let Some(&bad) = members.iter().find(|&&i| i >= class.len()) {
                        return Err(Error::param("members", format!("index {bad} is outside the class")));
                    }
                    VersionSpaceView::new(members.clone())
                }
            };
            out.json(&phi(&class, &view, &dist, &q_arg("eta", eta)?, mode.parse::<PhiMode>()?)?)
        }
        MeasureCmd::Phic { c, r0, cc, mode } => {
            let (class, dist, target) = load(c)?;
            out.json(&phi_c(&class, &dist, target, &q_arg("r0", r0)?, &q_arg("c", cc)?, mode.parse::<PhiMode>()?)?)
        }
        MeasureCmd::Phihat { c, a, alpha, r0, cc } => {
            let (class, dist, _) = load(c)?;
            out.json(&phi_hat_noise(&class, &dist, &q_arg("a", a)?, *alpha, &q_arg("r0", r0)?, &q_arg("c", cc)?)?)
        }
        MeasureCmd::Doubling { c, r0, centers } => {
            let (class, dist, target) = load(c)?;
            out.json(&doubling_dimension(&class, &dist, target, &q_arg("r0", r0)?, centers_arg(centers)?)?)
        }
        MeasureCmd::Cover { c, ball: b, radius, mode, centers } => {
            let (class, dist, target) = load(c)?;
            let view = ball(&class, target, &q_arg("ball", b)?, &dist);
            out.json(&covering_number(&view, &class, &dist, &q_arg("radius", radius)?, mode.parse::<CoverMode>()?, centers_arg(centers)?)?)
        }
        MeasureCmd::Mhat { c, epsilon, max_m } => {
            let (class, dist, target) = load(c)?;
            out.json(&estimate_m(&class, &dist, target, &q_arg("epsilon", epsilon)?, cli.delta, cli.trials, cli.seed, cli.workers, *max_m)?)
        }
    }
}

fn simulate(cli: &Cli, out: &Output, what: &SimulateCmd) -> Result<()> {
    match what {
        SimulateCmd::Closure { c, m } => {
            let (class, dist, target) = load(c)?;
            let mut rng = vslab::harness::trial_rng(cli.seed, 0);
            let sample = sample_labeled(&dist, &Labeler::Target(target), *m, &mut rng);
            let h = closure_predict(&class, &sample)?;
            let hull = closure_hull(&class)?;
            out.json(&serde_json::json!({
                "prediction": vslab::concept::Hypothesis { bits: h, n: class.n() }.labels(),
                "in_hull": hull.contains(h),
                "error": q_to_f64(&dist.mass(h ^ target)),
                "intersection_closed": is_intersection_closed(&class),
                "version_space_size": version_space(&class, &sample).len(),
            }))
        }
        SimulateCmd::Monotone { c, m, rule } => {
            let (class, dist, target) = load(c)?;
            let mut rng = vslab::harness::trial_rng(cli.seed, 0);
            let tr = run_monotone_rule(&class, &dist, target, rule.parse::<MonotoneRule>()?, *m, &mut rng)?;
            let mut s = format!("# vslab simulate monotone; rng = {RNG_DESCRIPTION}; master seed = {}\nstep,point,mass,consistent,monotone,nhat\n", cli.seed);
            for st in &tr.steps {
                s.push_str(&format!("{},{},{},{},{},{}\n", st.t, st.point, st.mass, st.consistent, st.monotone, st.nhat.map_or(String::new(), |v| v.to_string())));
            }
            out.text(&s)
        }
        SimulateCmd::Cal { c, budgets } => {
            let (class, dist, target) = load(c)?;
            if budgets.len() == 1 {
                let mut rng = vslab::harness::trial_rng(cli.seed, 0);
                return out.json(&run_cal(&class, &dist, target, budgets[0], &mut rng)?);
            }
            let rows = cal_curve(&class, &dist, target, budgets, cli.trials, cli.seed, cli.workers)?;
            let mut s = format!("# vslab simulate cal; rng = {RNG_DESCRIPTION}; master seed = {}\nbudget,mean_labels,mean_error,mean_dis_mass,coverage,mean_samples\n", cli.seed);
            for r in rows {
                s.push_str(&format!("{},{},{},{},{},{}\n", r.budget, r.mean_labels, r.mean_error, r.mean_dis_mass, r.coverage, r.mean_samples));
            }
            out.text(&s)
        }
        SimulateCmd::Algorithm1 { c, m, beta, a, alpha, c0 } => {
            let (class, dist, target) = load(c)?;
            let b = q_arg("beta", beta)?;
            let noise = bounded_noise_from(target, class.n(), &b, class.full_mask())?;
            let a = match a {
                Some(s) => q_arg("a", s)?,
                None => Q::from_integer(1.into()) / (Q::from_integer(1.into()) - &b * Q::from_integer(2.into())),
            };
            let plan = Algo1Plan::new(&class, &dist, Algo1Params { m: *m, delta: cli.delta, a, alpha: *alpha, c0: *c0 })?;
            let cache = Algo1Cache::default();
            let (h_star, best) = risk_minimizer(&class, &dist, &noise)?;
            let runs = run_trials(cli.seed, cli.trials, cli.workers, |_, rng| run_algorithm1(&class, &dist, &noise, &plan, &cache, rng))?;
            let kept = runs.iter().filter(|r| r.final_members.contains(&h_star)).count();
            let excess: Vec<f64> = runs.iter().map(|r| q_to_f64(&(noise.error(&dist, class.mask(r.final_index)) - &best))).collect();
            let (lo, hi) = stats::ci99(kept, runs.len());
            out.json(&serde_json::json!({
                "plan": plan,
                "h_star": h_star,
                "h_star_retained": kept,
                "trials": runs.len(),
                "retained_ci99": [lo, hi],
                "median_excess": stats::median(&excess),
                "first_run": runs.first(),
            }))
        }
    }
}

