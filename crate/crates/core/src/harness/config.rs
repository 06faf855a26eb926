use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::stats::{ci99, mean_se};
use super::{run_trials, stream_seed, RNG_DESCRIPTION};
use crate::bounds::{bound_params, evaluate_bound};
use crate::complexity::{phi_c, PhiMode};
use crate::concept::{make_class, star_number, vc_dimension, ClassSpec, ConceptClass, StarNumber};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::learners::{closure_predict, erm_set};
use crate::noise::{bounded_noise_from, risk_minimizer, sample_labeled, Labeler, NoiseModel};
use crate::numeric::{f64_to_q, parse_rational, q_int, q_to_f64};
use crate::version_space::{dis_of, prefix_nhat_trace, version_space, worst_consistent_error, DEFAULT_NHAT_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `P(DIS(V_m))`
    DisMass,
    /// Worst error over the version space.
    SupEr,
    /// `max_{t <= m}` compression size of the prefix.
    Nhat,
    /// Error of the Closure output.
    ClosureEr,
    /// Worst excess error over the empirical risk minimizers.
    ErmExcess,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::DisMass => "dis_mass",
            Quantity::SupEr => "sup_er",
            Quantity::Nhat => "nhat",
            Quantity::ClosureEr => "closure_er",
            Quantity::ErmExcess => "erm_excess",
        }
    }

    fn realizable_only(self) -> bool {
        !matches!(self, Quantity::ErmExcess)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub beta: String,
    /// Points whose labels may flip; all points when absent.
    #[serde(default)]
    pub flip: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Quantile,
    Expectation,
}

/// A bound compared against a measured quantity. Parameter values are numbers or references:
/// `@m`, `@delta`, `@dim`, `@vc`, `@star`, `@nhat` (per trial) and `@phi_c:<c>` (`phi_c(dim/m)`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    pub name: String,
    pub quantity: Quantity,
    pub kind: CheckKind,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub class: String,
    #[serde(default = "default_dist")]
    pub dist: String,
    #[serde(default)]
    pub target: usize,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    pub m_grid: Vec<usize>,
    pub delta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub quantities: Vec<Quantity>,
    #[serde(default)]
    pub bounds: Vec<BoundSpec>,
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_dist() -> String {
    "uniform".into()
}

fn default_trials() -> usize {
    2000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// `values[j][q]`: quantity `q` at grid point `j`.
    pub values: Vec<Vec<f64>>,
    /// `bounds[j][b]`: bound `b` evaluated with this trial's parameters at grid point `j`.
    pub bounds: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub bound: String,
    pub quantity: Quantity,
    pub kind: CheckKind,
    pub m: usize,
    pub bound_mean: f64,
    pub bound_min: f64,
    pub violations: usize,
    pub trials: usize,
    pub violation_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub quantity_mean: f64,
    pub quantity_se: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub config: ExperimentConfig,
    pub rng: String,
    pub checks: Vec<BoundCheck>,
    pub pass: bool,
}

struct Prepared {
    class: ConceptClass,
    dist: Distribution,
    target: u64,
    noise: Option<NoiseModel>,
    dim: usize,
    star: Option<usize>,
    /// `phi_c(dim/m)` keyed by (c as string, m)
    phis: HashMap<(String, usize), f64>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    if cfg.trials < 1 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if cfg.m_grid.is_empty() || cfg.m_grid.contains(&0) {
        return Err(Error::param("m_grid", "must be a nonempty list of positive sizes"));
    }
    let class = make_class(&cfg.class.parse::<ClassSpec>()?)?;
    let dist = Distribution::from_spec(&cfg.dist, class.n())?;
    if cfg.target >= class.len() {
        return Err(Error::param("target", format!("index {} is outside the class of size {}", cfg.target, class.len())));
    }
    let target = class.mask(cfg.target);
    let noise = match &cfg.noise {
        None => None,
        Some(ns) => {
            let beta = parse_rational(&ns.beta).ok_or_else(|| Error::param("noise.beta", "not a number"))?;
            let flip = match &ns.flip {
                None => class.full_mask(),
                Some(pts) => pts.iter().try_fold(0u64, |acc, &x| {
                    if x < class.n() {
                        Ok(acc | 1 << x)
                    } else {
                        Err(Error::param("noise.flip", format!("point {x} is outside the space")))
                    }
                })?,
            };
            Some(bounded_noise_from(target, class.n(), &beta, flip)?)
        }
    };
    if noise.is_some() {
        if let Some(q) = cfg.quantities.iter().find(|q| q.realizable_only()) {
            return Err(Error::param("quantities", format!("{} needs noise-free labels", q.name())));
        }
    }
    for b in &cfg.bounds {
        if !cfg.quantities.contains(&b.quantity) {
            return Err(Error::param("bounds", format!("{} compares against {}, which is not measured", b.name, b.quantity.name())));
        }
        if b.params.values().any(|v| v == "@nhat") && !cfg.quantities.contains(&Quantity::Nhat) {
            return Err(Error::param("bounds", format!("{} uses @nhat, which is not measured", b.name)));
        }
    }
    let dim = vc_dimension(&class);
    let needs_star = cfg.bounds.iter().any(|b| b.params.values().any(|v| v == "@star"));
    let star = if needs_star {
        match star_number(&class, class.n())? {
            StarNumber::Value { s, .. } => Some(s),
            StarNumber::ExceedsCap => None,
        }
    } else {
        None
    };
    let mut phis = HashMap::new();
    for b in &cfg.bounds {
        for v in b.params.values() {
            if let Some(c) = v.strip_prefix("@phi_c:") {
                let cq = parse_rational(c).ok_or_else(|| Error::param("bounds", format!("{v:?} has a bad constant")))?;
                for &m in &cfg.m_grid {
                    let key = (c.to_string(), m);
                    if phis.contains_key(&key) {
                        continue;
                    }
                    let r0 = q_int(dim as i64) / q_int(m as i64);
                    let r0 = if r0 >= q_int(1) { f64_to_q(1.0 - 1e-12)? } else { r0 };
                    let v = phi_c(&class, &dist, target, &r0, &cq, PhiMode::Real)?.value;
                    phis.insert(key, q_to_f64(&v));
                }
            }
        }
    }
    Ok(Prepared { class, dist, target, noise, dim, star, phis })
}

fn resolve(p: &Prepared, cfg: &ExperimentConfig, b: &BoundSpec, m: usize, nhat: Option<usize>) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, v) in &b.params {
        let val = match v.as_str() {
            "@m" => m.to_string(),
            "@delta" => format!("{}", cfg.delta),
            "@dim" | "@vc" => p.dim.to_string(),
            "@star" => p.star.ok_or_else(|| Error::param(k.clone(), "star number unavailable"))?.to_string(),
            "@nhat" => nhat.ok_or_else(|| Error::param(k.clone(), "nhat not measured"))?.to_string(),
            s if s.starts_with("@phi_c:") => format!("{}", p.phis[&(s["@phi_c:".len()..].to_string(), m)]),
            s if s.starts_with('@') => return Err(Error::param(k.clone(), format!("unknown reference {s}"))),
            s => s.to_string(),
        };
        out.insert(k.clone(), val);
    }
    let wanted = bound_params(&b.name).ok_or_else(|| Error::param("bounds", format!("unknown bound {:?}", b.name)))?;
    for (k, val) in [("m", m.to_string()), ("delta", format!("{}", cfg.delta))] {
        if wanted.contains(&k) {
            out.entry(k.to_string()).or_insert(val);
        }
    }
    Ok(out)
}

fn run_trial(p: &Prepared, cfg: &ExperimentConfig, i: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<TrialRecord> {
    let max_m = *cfg.m_grid.iter().max().expect("nonempty grid");
    let labeler = match &p.noise {
        Some(n) => Labeler::Noise(n),
        None => Labeler::Target(p.target),
    };
    let sample = sample_labeled(&p.dist, &labeler, max_m, rng);
    let nhat_trace = if cfg.quantities.contains(&Quantity::Nhat) {
        let pts: Vec<usize> = sample.pairs.iter().map(|&(x, _)| x).collect();
        Some(prefix_nhat_trace(&p.class, &pts, p.target, DEFAULT_NHAT_BUDGET)?)
    } else {
        None
    };
    let best = match &p.noise {
        Some(n) => Some(risk_minimizer(&p.class, &p.dist, n)?.1),
        None => None,
    };
    let mut values = Vec::with_capacity(cfg.m_grid.len());
    let mut bounds = Vec::with_capacity(cfg.m_grid.len());
    for &m in &cfg.m_grid {
        let lm = sample.prefix(m);
        let nhat = nhat_trace.as_ref().map(|t| t[..m].iter().copied().max().unwrap_or(0));
        let row = cfg
            .quantities
            .iter()
            .map(|q| -> Result<f64> {
                Ok(match q {
                    Quantity::DisMass => p.dist.mass_f64(dis_of(&version_space(&p.class, &lm).masks(&p.class))),
                    Quantity::SupEr => q_to_f64(&worst_consistent_error(&p.class, &version_space(&p.class, &lm), &p.dist, p.target)?),
                    Quantity::Nhat => nhat.expect("trace computed") as f64,
                    Quantity::ClosureEr => p.dist.mass_f64(closure_predict(&p.class, &lm)? ^ p.target),
                    Quantity::ErmExcess => {
                        let n = p.noise.as_ref().map_or_else(|| NoiseModel::deterministic(p.target, p.class.n()), |n| n.clone());
                        let best = best.clone().unwrap_or_else(|| q_int(0));
                        let worst = erm_set(&p.class, &lm).masks(&p.class).iter().map(|&h| n.error(&p.dist, h)).max().expect("nonempty");
                        (worst - best).to_f64().unwrap_or(f64::NAN)
                    }
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let bvals = cfg
            .bounds
            .iter()
            .map(|b| Ok(evaluate_bound(&b.name, &resolve(p, cfg, b, m, nhat)?)?.value))
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
        bounds.push(bvals);
    }
    Ok(TrialRecord { trial: i, seed: stream_seed(cfg.seed, i), values, bounds })
}

fn write_csv(cfg: &ExperimentConfig, records: &[TrialRecord], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "# vslab validate; rng = {RNG_DESCRIPTION}; master seed = {}", cfg.seed)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trial".to_string(), "seed".to_string(), "m".to_string()];
    header.extend(cfg.quantities.iter().map(|q| q.name().to_string()));
    header.extend(cfg.bounds.iter().enumerate().map(|(i, b)| format!("bound{}_{}", i, b.name)));
    w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
    for r in records {
        for (j, &m) in cfg.m_grid.iter().enumerate() {
            let mut row = vec![r.trial.to_string(), r.seed.to_string(), m.to_string()];
            row.extend(r.values[j].iter().map(|v| format!("{v}")));
            row.extend(r.bounds[j].iter().map(|v| format!("{v}")));
            w.write_record(&row).map_err(|e| Error::Io(e.into()))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<BoundCheck> {
    let mut checks = Vec::new();
    for (bi, b) in cfg.bounds.iter().enumerate() {
        let qi = cfg.quantities.iter().position(|q| *q == b.quantity).expect("validated");
        for (j, &m) in cfg.m_grid.iter().enumerate() {
            let qs: Vec<f64> = records.iter().map(|r| r.values[j][qi]).collect();
            let bs: Vec<f64> = records.iter().map(|r| r.bounds[j][bi]).collect();
            let violations = qs.iter().zip(&bs).filter(|(q, b)| q > b).count();
            let t = records.len();
            let (ci_low, ci_high) = ci99(violations, t);
            let (qm, qse) = mean_se(&qs);
            let (bm, _) = mean_se(&bs);
            let bmin = bs.iter().copied().fold(f64::INFINITY, f64::min);
            let pass = match b.kind {
                CheckKind::Quantile => ci_low <= cfg.delta,
                CheckKind::Expectation => qm <= bm + 3.0 * qse,
            };
            checks.push(BoundCheck {
                bound: b.name.clone(),
                quantity: b.quantity,
                kind: b.kind,
                m,
                bound_mean: bm,
                bound_min: bmin,
                violations,
                trials: t,
                violation_rate: violations as f64 / t as f64,
                ci_low,
                ci_high,
                quantity_mean: qm,
                quantity_se: qse,
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            });
        }
    }
    checks
}

/// Runs every trial, writes the CSV (to `output` when set) and returns the report together with the CSV text.
pub fn run_validation(cfg: &ExperimentConfig) -> Result<(ValidationReport, String)> {
    let p = prepare(cfg)?;
    let records = run_trials(cfg.seed, cfg.trials, cfg.workers, |i, rng| run_trial(&p, cfg, i, rng))?;
    let mut buf = Vec::new();
    write_csv(cfg, &records, &mut buf)?;
    let csv_text = String::from_utf8(buf).expect("csv is utf-8");
    let checks = summarize(cfg, &records);
    let pass = checks.iter().all(|c| c.verdict == Verdict::Pass);
    let report = ValidationReport { config: cfg.clone(), rng: RNG_DESCRIPTION.to_string(), checks, pass };
    if let Some(path) = &cfg.output {
        std::fs::write(path, &csv_text)?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path.with_extension("json"), json)?;
    }
    Ok((report, csv_text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(workers: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "class": "thresholds(8)", "target": 3, "m_grid": [4, 16], "delta": 0.1, "trials": 50, "seed": 42,
                "quantities": ["dis_mass", "nhat", "sup_er"], "workers": {workers},
                "bounds": [
                    {{"name": "pdis_nhat", "quantity": "dis_mass", "kind": "quantile", "params": {{"nhat": "@nhat"}}}},
                    {{"name": "monotone_vc_expectation", "quantity": "dis_mass", "kind": "expectation", "params": {{"vc": "@vc"}}}}
                ]
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn deterministic_across_workers() {
        let (r1, a) = run_validation(&cfg(1)).unwrap();
        let (_, b) = run_validation(&cfg(3)).unwrap();
        assert_eq!(a, b);
        assert!(r1.pass);
        assert_eq!(r1.checks.len(), 4);
        assert!(a.starts_with("# vslab validate"));
    }

    #[test]
    fn config_errors() {
        let mut c = cfg(1);
        c.delta = 1.0;
        assert!(matches!(run_validation(&c), Err(Error::Param { .. })));
        let mut c = cfg(1);
        c.noise = Some(NoiseSpec { beta: "0.1".into(), flip: None });
        assert!(run_validation(&c).is_err());
        assert!(ExperimentConfig::from_json(r#"{"class": "thresholds(4)", "bogus": 1}"#).is_err());
    }

    #[test]
    fn degenerate_point_mass() {
        let mut c = cfg(1);
        c.dist = "masses:0,0,0,1,0,0,0,0".into();
        let (r, _) = run_validation(&c).unwrap();
        assert!(r.pass);
        assert!(r.checks.iter().all(|k| k.quantity_mean == 0.0));
    }
}
