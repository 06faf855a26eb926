use serde::Serialize;

use super::run_trials;
use super::stats::{ci99, lower_quantile, mean_se};
use crate::concept::{bit, ConceptClass};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::learners::{erm_set, run_cal};
use crate::noise::{lower_bound_construction, risk_minimizer, sample_labeled, LowerBoundScenario, ScenarioKind, ScenarioParams};
use crate::numeric::{f64_to_q, Q};
use crate::version_space::{consistent_with, prefix_nhat_trace, worst_consistent_weight, DEFAULT_NHAT_BUDGET};

fn check_target(c: &ConceptClass, target: u64) -> Result<()> {
    if c.contains(target) {
        Ok(())
    } else {
        Err(Error::domain("target is not a member of the class"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MEstimate {
    /// Smallest `m` whose empirical frequency of `sup er <= eps` reaches `1 - delta/2`.
    pub m_hat: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Frequency and interval one step below the estimate (absent when the estimate is 1).
    pub below: Option<(f64, f64, f64)>,
}

/// Estimates `M(eps, delta)` from per-trial hitting times of `sup_{h in V_m} er(h) <= eps`. The hitting event is
/// monotone in `m`, so the bisection over `m` reduces to the empirical distribution of the hitting times.
pub fn estimate_m(
    c: &ConceptClass,
    dist: &Distribution,
    target: u64,
    eps: &Q,
    delta: f64,
    trials: usize,
    seed: u64,
    workers: usize,
    max_m: usize,
) -> Result<MEstimate> {
    check_target(c, target)?;
    if eps <= &Q::from_integer(0.into()) || eps > &Q::from_integer(1.into()) {
        return Err(Error::param("epsilon", "must lie in (0, 1]"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let eps_w = (eps * Q::from_integer(dist.denom().into())).floor().to_integer();
    let eps_w: u128 = num_traits::ToPrimitive::to_u128(&eps_w).unwrap_or(u128::MAX);
    let hits = run_trials(seed, trials, workers, |_, rng| {
        let (mut pos, mut neg) = (0u64, 0u64);
        for m in 1..=max_m {
            let x = dist.sample_point(rng);
            if target & bit(x) != 0 {
                pos |= bit(x);
            } else {
                neg |= bit(x);
            }
            let v = consistent_with(c, pos, neg);
            if worst_consistent_weight(c, &v, dist, target)? <= eps_w {
                return Ok(m);
            }
        }
        Err(Error::Budget(format!("sup error stayed above epsilon for {max_m} samples")))
    })?;
    let need = 1.0 - delta / 2.0;
    let mut sorted = hits.clone();
    sorted.sort_unstable();
    let freq_at = |m: usize| sorted.partition_point(|&h| h <= m);
    let mut m_hat = sorted[sorted.len() - 1];
    for &h in &sorted {
        if freq_at(h) as f64 >= need * trials as f64 {
            m_hat = h;
            break;
        }
    }
    let k = freq_at(m_hat);
    let (ci_low, ci_high) = ci99(k, trials);
    let below = (m_hat > 1).then(|| {
        let kb = freq_at(m_hat - 1);
        let (lo, hi) = ci99(kb, trials);
        (kb as f64 / trials as f64, lo, hi)
    });
    Ok(MEstimate { m_hat, frequency: k as f64 / trials as f64, ci_low, ci_high, below })
}

#[derive(Clone, Debug, Serialize)]
pub struct NhatQuantile {
    pub m: usize,
    pub delta: f64,
    pub quantile: usize,
    pub mean: f64,
    pub max: usize,
}

/// Empirical `(1 - delta)`-quantile of `nhat_{1:m}`.
pub fn quantile_nhat(c: &ConceptClass, dist: &Distribution, target: u64, m: usize, delta: f64, trials: usize, seed: u64, workers: usize) -> Result<NhatQuantile> {
    check_target(c, target)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let values = run_trials(seed, trials, workers, |_, rng| {
        let pts = dist.sample_points(rng, m);
        Ok(prefix_nhat_trace(c, &pts, target, DEFAULT_NHAT_BUDGET)?.into_iter().max().unwrap_or(0))
    })?;
    let as_f: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    Ok(NhatQuantile { m, delta, quantile: lower_quantile(&values, 1.0 - delta), mean: mean_se(&as_f).0, max: values.iter().copied().max().unwrap_or(0) })
}

#[derive(Clone, Debug, Serialize)]
pub struct CalCurveRow {
    pub budget: u32,
    pub mean_labels: f64,
    pub mean_error: f64,
    pub mean_dis_mass: f64,
    pub coverage: f64,
    pub mean_samples: f64,
}

/// Mean CAL behavior per label budget. Trial `i` uses the same stream for every budget.
pub fn cal_curve(c: &ConceptClass, dist: &Distribution, target: u64, budgets: &[u32], trials: usize, seed: u64, workers: usize) -> Result<Vec<CalCurveRow>> {
    check_target(c, target)?;
    if budgets.is_empty() {
        return Err(Error::param("budgets", "must be nonempty"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let per_trial = run_trials(seed, trials, workers, |i, _| {
        budgets
            .iter()
            .map(|&n| {
                let mut rng = super::trial_rng(seed, i);
                let r = run_cal(c, dist, target, n, &mut rng)?;
                let dis = if r.labels == 0 && r.samples == 0 { 1.0 } else { r.final_dis_mass() };
                Ok((r.labels as f64, r.final_error, dis, r.samples as f64))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(budgets
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let col = |f: fn(&(f64, f64, f64, f64)) -> f64| per_trial.iter().map(|t| f(&t[j])).sum::<f64>() / trials as f64;
            let dis = col(|t| t.2);
            CalCurveRow { budget: n, mean_labels: col(|t| t.0), mean_error: col(|t| t.1), mean_dis_mass: dis, coverage: 1.0 - dis, mean_samples: col(|t| t.3) }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundRow {
    pub m: usize,
    pub in_regime: bool,
    pub hits: usize,
    pub trials: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// PASS/FAIL inside the regime, "n/a" outside it.
    pub verdict: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundReport {
    pub kind: ScenarioKind,
    pub threshold: String,
    pub regime: f64,
    /// Required frequency: 1/2 for the realizable construction, delta for the noisy one.
    pub level: f64,
    pub rows: Vec<LowerBoundRow>,
}

/// Realizable: frequency of `sup_{h in V_m} er(h) >= eps`. Noisy: frequency of the lowest-index empirical risk
/// minimizer having excess error at least the threshold.
pub fn run_lower_bound(s: &LowerBoundScenario, m_grid: &[usize], trials: usize, seed: u64, workers: usize) -> Result<LowerBoundReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let max_m = m_grid.iter().copied().max().ok_or_else(|| Error::param("m_grid", "must be nonempty"))?;
    let c = &s.class;
    let level = match s.kind {
        ScenarioKind::RealizableStar => 0.5,
        ScenarioKind::NoisyStar => s.params.get("delta").and_then(|d| d.parse().ok()).unwrap_or(0.1),
    };
    let thr_w = {
        let w = (&s.threshold * Q::from_integer(s.dist.denom().into())).ceil().to_integer();
        num_traits::ToPrimitive::to_u128(&w).unwrap_or(u128::MAX)
    };
    let best = match &s.noise {
        Some(n) => Some(risk_minimizer(c, &s.dist, n)?.1),
        None => None,
    };
    let hits = run_trials(seed, trials, workers, |_, rng| {
        let sample = sample_labeled(&s.dist, &s.labeler(), max_m, rng);
        m_grid
            .iter()
            .map(|&m| -> Result<bool> {
                let lm = sample.prefix(m);
                match (&s.noise, &best) {
                    (None, _) => {
                        let target = c.mask(s.target);
                        let (pos, neg) = lm.masks();
                        let v = consistent_with(c, pos, neg);
                        // sup er >= eps  <=>  worst weight >= ceil(eps * D)
                        Ok(worst_consistent_weight(c, &v, &s.dist, target)? >= thr_w)
                    }
                    (Some(n), Some(b)) => {
                        let h = erm_set(c, &lm).members()[0];
                        Ok(n.error(&s.dist, c.mask(h)) - b >= s.threshold)
                    }
                    _ => unreachable!(),
                }
            })
            .collect::<Result<Vec<bool>>>()
    })?;
    let rows = m_grid
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let k = hits.iter().filter(|h| h[j]).count();
            let (lo, hi) = ci99(k, trials);
            let in_regime = (m as f64) < s.regime;
            let verdict = if !in_regime {
                "n/a".to_string()
            } else if lo > level {
                "PASS".to_string()
            } else {
                "FAIL".to_string()
            };
            LowerBoundRow { m, in_regime, hits: k, trials, frequency: k as f64 / trials as f64, ci_low: lo, ci_high: hi, verdict }
        })
        .collect();
    Ok(LowerBoundReport { kind: s.kind, threshold: s.threshold.to_string(), regime: s.regime, level, rows })
}

/// Runs the noisy construction for every `t in 1..=k` and reports, per `m`, the scenario with the highest
/// failure frequency (the claim is that some `t` defeats the learner).
pub fn run_noisy_lower_bound(
    c: &ConceptClass,
    k: usize,
    zeta: f64,
    beta: f64,
    delta: f64,
    m_grid: &[usize],
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<(LowerBoundReport, Vec<usize>)> {
    let mut best: Option<(LowerBoundReport, Vec<usize>)> = None;
    for t in 1..=k {
        let s = lower_bound_construction(c, &ScenarioParams::NoisyStar { k, zeta: f64_to_q(zeta)?, beta: f64_to_q(beta)?, t, delta })?;
        let r = run_lower_bound(&s, m_grid, trials, seed, workers)?;
        best = Some(match best {
            None => {
                let ts = vec![t; r.rows.len()];
                (r, ts)
            }
            Some((mut acc, mut ts)) => {
                for (j, row) in r.rows.into_iter().enumerate() {
                    if row.hits > acc.rows[j].hits {
                        acc.rows[j] = row;
                        ts[j] = t;
                    }
                }
                (acc, ts)
            }
        });
    }
    best.ok_or_else(|| Error::param("k", "must be at least 2"))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::{make_class, ClassSpec};
    use crate::numeric::{q_frac, q_int};

    fn class(s: &str) -> ConceptClass {
        make_class(&s.parse::<ClassSpec>().unwrap()).unwrap()
    }

    #[test]
    fn m_estimate_examples() {
        let c = class("thresholds(5)");
        let d = Distribution::uniform(5).unwrap();
        let e = estimate_m(&c, &d, c.mask(2), &q_int(1), 0.1, 50, 1, 1, 1000).unwrap();
        assert_eq!(e.m_hat, 1);
        let small = estimate_m(&c, &d, c.mask(2), &q_frac(1, 20), 0.1, 200, 1, 2, 10_000).unwrap();
        let large = estimate_m(&c, &d, c.mask(2), &q_frac(1, 10), 0.1, 200, 1, 2, 10_000).unwrap();
        assert!(large.m_hat <= small.m_hat);
        assert!(small.frequency >= 0.95);
    }

    #[test]
    fn nhat_quantile_examples() {
        let c = class("thresholds(5)");
        let d = Distribution::uniform(5).unwrap();
        for m in [1, 5, 40] {
            assert!(quantile_nhat(&c, &d, c.mask(2), m, 0.1, 100, 3, 2).unwrap().quantile <= 2);
        }
    }

    #[test]
    fn cal_curve_rows() {
        let c = class("thresholds(5)");
        let d = Distribution::uniform(5).unwrap();
        let rows = cal_curve(&c, &d, c.mask(2), &[0, 1, 2, 4, 8], 200, 9, 2).unwrap();
        assert_eq!(rows[0].mean_labels, 0.0);
        for r in &rows {
            assert_eq!(r.coverage, 1.0 - r.mean_dis_mass);
        }
        assert!(rows.last().unwrap().mean_error <= rows[0].mean_error);
    }

    #[test]
    fn realizable_lower_bound_small() {
        let c = class("star(32)");
        let s = lower_bound_construction(&c, &ScenarioParams::RealizableStar { epsilon: q_frac(1, 64) }).unwrap();
        let r = run_lower_bound(&s, &[10, 2000], 300, 4, 2).unwrap();
        assert!(r.rows[0].frequency > 0.9);
        assert_eq!(r.rows[1].verdict, "n/a");
        assert!(r.rows[1].frequency < 0.1);
    }

    #[test]
    fn noisy_lower_bound_small_m() {
        let c = class("star(6)");
        let (r, _) = run_noisy_lower_bound(&c, 4, 0.25, 0.3, 0.1, &[2, 8], 300, 5, 2).unwrap();
        assert!(r.rows[0].frequency > 0.1);
    }
}
