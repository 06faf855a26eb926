//! Consistent monotone rules, the Closure algorithm, CAL, empirical risk minimization and the noise-robust
//! round-based learner.

mod algorithm1;

pub use algorithm1::{run_algorithm1, Algo1Cache, Algo1Params, Algo1Plan, Algo1Round, Algo1RunRecord};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concept::{bit, is_intersection_closed, vc_dimension_of, ConceptClass};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{div0, log_e, mul0, Q};
use crate::version_space::{consistent_with, dis_of, prefix_nhat_trace, version_space, LabeledSample, VersionSpaceView, DEFAULT_NHAT_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneRule {
    /// Points labeled negative by some consistent hypothesis while the target says positive.
    ClosureErrorRegion,
    /// Disagreement region of the version space.
    DisVersionSpace,
}

impl std::str::FromStr for MonotoneRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closure_error_region" | "closure" => Ok(MonotoneRule::ClosureErrorRegion),
            "dis_version_space" | "dis" => Ok(MonotoneRule::DisVersionSpace),
            _ => Err(Error::param("rule", format!("{s:?} is not closure_error_region|dis_version_space"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneStep {
    pub t: usize,
    pub point: usize,
    pub region: u64,
    pub mass: f64,
    pub consistent: bool,
    pub monotone: bool,
    pub nhat: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneRuleTrace {
    pub rule: MonotoneRule,
    pub steps: Vec<MonotoneStep>,
}

impl MonotoneRuleTrace {
    pub fn all_flags_hold(&self) -> bool {
        self.steps.iter().all(|s| s.consistent && s.monotone)
    }

    pub fn final_mass(&self) -> f64 {
        self.steps.last().map_or(1.0, |s| s.mass)
    }
}

fn check_target(c: &ConceptClass, target: u64) -> Result<()> {
    if c.contains(target) {
        Ok(())
    } else {
        Err(Error::domain("target is not a member of the class"))
    }
}

/// Region produced by `rule` after seeing the target-labeled points in `seen`.
pub fn monotone_region(c: &ConceptClass, rule: MonotoneRule, target: u64, seen: u64) -> u64 {
    let v = consistent_with(c, target & seen, !target & seen);
    let masks = v.masks(c);
    match rule {
        MonotoneRule::DisVersionSpace => dis_of(&masks),
        MonotoneRule::ClosureErrorRegion => masks.iter().fold(0u64, |acc, &h| acc | (!h & target)),
    }
}

/// Runs a monotone rule over `points` (already drawn) and verifies consistency and monotonicity at each step.
/// With `with_nhat`, also records the compression size of each prefix.
pub fn monotone_trace(c: &ConceptClass, dist: &Distribution, target: u64, rule: MonotoneRule, points: &[usize], with_nhat: bool) -> Result<MonotoneRuleTrace> {
    check_target(c, target)?;
    if rule == MonotoneRule::ClosureErrorRegion && !is_intersection_closed(c) {
        return Err(Error::domain("closure error region needs an intersection-closed class"));
    }
    let nhat = if with_nhat { Some(prefix_nhat_trace(c, points, target, DEFAULT_NHAT_BUDGET)?) } else { None };
    let mut steps = Vec::with_capacity(points.len());
    let mut seen = 0u64;
    let mut prev: Option<u64> = None;
    for (t, &x) in points.iter().enumerate() {
        seen |= bit(x);
        let region = monotone_region(c, rule, target, seen);
        steps.push(MonotoneStep {
            t: t + 1,
            point: x,
            region,
            mass: dist.mass_f64(region),
            consistent: region & seen == 0,
            monotone: prev.is_none_or(|p| region & !p == 0),
            nhat: nhat.as_ref().map(|v| v[t]),
        });
        prev = Some(region);
    }
    Ok(MonotoneRuleTrace { rule, steps })
}

pub fn run_monotone_rule<R: Rng + ?Sized>(
    c: &ConceptClass,
    dist: &Distribution,
    target: u64,
    rule: MonotoneRule,
    m: usize,
    rng: &mut R,
) -> Result<MonotoneRuleTrace> {
    let points = dist.sample_points(rng, m);
    monotone_trace(c, dist, target, rule, &points, true)
}

/// Predicts positive exactly where every consistent hypothesis does.
pub fn closure_predict(c: &ConceptClass, sample: &LabeledSample) -> Result<u64> {
    if !is_intersection_closed(c) {
        return Err(Error::domain("Closure needs an intersection-closed class"));
    }
    let v = version_space(c, sample);
    if v.is_empty() {
        return Err(Error::domain("empty version space"));
    }
    Ok(v.masks(c).iter().fold(c.full_mask(), |acc, &h| acc & h))
}

#[derive(Clone, Debug, Serialize)]
pub struct CalRunRecord {
    pub budget: u32,
    pub labels: u32,
    pub samples: u64,
    pub final_index: usize,
    pub final_error: f64,
    /// `P(DIS(V_m))` after each executed step (steps skipped once the region has zero mass are not listed).
    pub dis_trace: Vec<f64>,
    /// 1-based sample indices at which a label was requested.
    pub queries: Vec<u64>,
    /// The target stayed in the version space and each query fell in the current disagreement region.
    pub invariants_hold: bool,
}

impl CalRunRecord {
    pub fn final_dis_mass(&self) -> f64 {
        self.dis_trace.last().copied().unwrap_or(1.0)
    }
}

/// Simulates CAL with label budget `n` and sample limit `2^n`.
pub fn run_cal<R: Rng + ?Sized>(c: &ConceptClass, dist: &Distribution, target: u64, n: u32, rng: &mut R) -> Result<CalRunRecord> {
    check_target(c, target)?;
    let limit: u64 = if n >= 64 { u64::MAX } else { 1u64 << n };
    let (mut pos, mut neg) = (0u64, 0u64);
    let mut v = VersionSpaceView::full(c);
    let mut dis = dis_of(&v.masks(c));
    let (mut t, mut m) = (0u32, 0u64);
    let mut dis_trace = Vec::new();
    let mut queries = Vec::new();
    let mut ok = true;
    while t < n && m < limit {
        if dist.mass_weight(dis) == 0 {
            // no further query can happen; the remaining draws only advance m
            m = limit;
            break;
        }
        m += 1;
        let x = dist.sample_point(rng);
        if dis & bit(x) != 0 {
            t += 1;
            queries.push(m);
            if target & bit(x) != 0 {
                pos |= bit(x);
            } else {
                neg |= bit(x);
            }
            v = consistent_with(c, pos, neg);
            dis = dis_of(&v.masks(c));
            ok &= v.members().iter().any(|&i| c.mask(i) == target);
        }
        dis_trace.push(dist.mass_f64(dis));
    }
    let final_index = v.members()[0];
    Ok(CalRunRecord {
        budget: n,
        labels: t,
        samples: m,
        final_index,
        final_error: dist.mass_f64(c.mask(final_index) ^ target),
        dis_trace,
        queries,
        invariants_hold: ok,
    })
}

/// Empirical risk minimizers.
pub fn erm_set(c: &ConceptClass, sample: &LabeledSample) -> VersionSpaceView {
    let mistakes = empirical_mistakes(c.masks(), sample);
    let best = mistakes.iter().copied().min().unwrap_or(0);
    VersionSpaceView::new(mistakes.iter().enumerate().filter(|(_, &k)| k == best).map(|(i, _)| i).collect())
}

/// Number of sample pairs each hypothesis mislabels.
pub fn empirical_mistakes(masks: &[u64], sample: &LabeledSample) -> Vec<usize> {
    let mut pos_count = [0usize; 64];
    let mut neg_count = [0usize; 64];
    for &(x, y) in &sample.pairs {
        if y > 0 {
            pos_count[x] += 1;
        } else {
            neg_count[x] += 1;
        }
    }
    masks
        .iter()
        .map(|&h| (0..64).map(|x| if h >> x & 1 == 1 { neg_count[x] } else { pos_count[x] }).sum())
        .collect()
}

pub fn diameter(masks: &[u64], dist: &Distribution) -> u128 {
    let mut best = 0;
    for (i, &h) in masks.iter().enumerate() {
        for &g in &masks[i + 1..] {
            best = best.max(dist.mass_weight(h ^ g));
        }
    }
    best
}

/// Uniform envelope `1 ∧ inf_{r >= diam} c0 sqrt(r T(r) / m) + c0 T(r) / m` with
/// `T(r) = vc Log(P(R)/r) + Log(1/delta)`, minimized over a finite grid of radii.
pub fn u_complexity(masks: &[u64], dist: &Distribution, m: u64, delta: f64, region: u64, c0: f64) -> Result<f64> {
    if c0 <= 1.0 {
        return Err(Error::param("c0", "must exceed 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if m < 1 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if masks.is_empty() {
        return Err(Error::domain("empty set of classifiers"));
    }
    let vc = vc_dimension_of(masks, dist.n()) as f64;
    let diam = dist.weight_to_f64(diameter(masks, dist));
    let pr = dist.mass_f64(region);
    let mf = m as f64;
    let conf = log_e(1.0 / delta);
    let at = |r: f64| -> f64 {
        let t = mul0(vc, log_e(div0(pr, r))) + conf;
        if !t.is_finite() {
            return f64::INFINITY;
        }
        c0 * (r * t / mf).sqrt() + c0 * t / mf
    };
    let mut best = f64::INFINITY;
    let lo = diam.max(1e-9);
    const GRID: usize = 512;
    let mut grid = vec![diam, pr];
    grid.extend((0..GRID).map(|i| lo * (1.0 / lo).powf(i as f64 / (GRID - 1) as f64)));
    for r in grid {
        if r >= diam {
            best = best.min(at(r));
        }
    }
    Ok(best.min(1.0))
}

/// Exact error of `h` against a deterministic target.
pub fn target_error(dist: &Distribution, h: u64, target: u64) -> Q {
    dist.mass(h ^ target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::{closure_hull, make_class, ClassSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn class(s: &str) -> ConceptClass {
        make_class(&s.parse::<ClassSpec>().unwrap()).unwrap()
    }

    fn not_closed() -> ConceptClass {
        ConceptClass::new("v", crate::concept::InstanceSpace::indexed(3).unwrap(), vec![0b011, 0b110, 0]).unwrap()
    }

    #[test]
    fn closure_predict_examples() {
        let c = class("thresholds(5)");
        let s = LabeledSample::new(vec![(3, 1)]);
        assert_eq!(closure_predict(&c, &s).unwrap(), 0b11000);
        assert_eq!(closure_predict(&c, &LabeledSample::default()).unwrap(), 0);
        let unique = LabeledSample::from_target(&[0, 1, 2, 3, 4], c.mask(2));
        assert_eq!(closure_predict(&c, &unique).unwrap(), c.mask(2));
        assert!(closure_predict(&not_closed(), &LabeledSample::default()).is_err());
        let bad = LabeledSample::new(vec![(3, 1), (4, -1)]);
        assert!(closure_predict(&c, &bad).is_err());
    }

    #[test]
    fn closure_output_in_hull_and_consistent() {
        let c = class("axis_rectangles(3x3)");
        let hull = closure_hull(&c).unwrap();
        let d = Distribution::uniform(9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = c.mask(7);
        for _ in 0..30 {
            let pts = d.sample_points(&mut rng, 6);
            let s = LabeledSample::from_target(&pts, target);
            let h = closure_predict(&c, &s).unwrap();
            assert!(hull.contains(h));
            let (pos, neg) = s.masks();
            assert_eq!(h & neg, 0);
            assert_eq!(pos & !h, 0);
        }
    }

    #[test]
    fn monotone_traces() {
        let c = class("thresholds(5)");
        let d = Distribution::uniform(5).unwrap();
        let target = c.mask(2);
        let tr = monotone_trace(&c, &d, target, MonotoneRule::DisVersionSpace, &[0, 1, 2, 3, 4], true).unwrap();
        assert!(tr.all_flags_hold());
        assert_eq!(tr.final_mass(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pts = d.sample_points(&mut rng, 8);
            let a = monotone_trace(&c, &d, target, MonotoneRule::ClosureErrorRegion, &pts, false).unwrap();
            let b = monotone_trace(&c, &d, target, MonotoneRule::DisVersionSpace, &pts, false).unwrap();
            assert!(a.all_flags_hold() && b.all_flags_hold());
            for (x, y) in a.steps.iter().zip(&b.steps) {
                assert_eq!(x.region & !y.region, 0);
            }
        }
        let one = run_monotone_rule(&c, &d, target, MonotoneRule::DisVersionSpace, 1, &mut rng).unwrap();
        assert_eq!(one.steps.len(), 1);
        assert_eq!(one.steps[0].region & bit(one.steps[0].point), 0);
        let d3 = Distribution::uniform(3).unwrap();
        assert!(monotone_trace(&not_closed(), &d3, 0, MonotoneRule::ClosureErrorRegion, &[0], false).is_err());
    }

    #[test]
    fn cal_examples() {
        let c = class("thresholds(5)");
        let d = Distribution::uniform(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = run_cal(&c, &d, c.mask(2), 0, &mut rng).unwrap();
        assert_eq!((r.labels, r.samples, r.final_index), (0, 0, 0));
        let r = run_cal(&c, &d, c.mask(2), 10, &mut rng).unwrap();
        assert_eq!(r.final_error, 0.0);
        assert!(r.invariants_hold && r.labels <= 10);
        assert_eq!(r.final_index, 2);
    }

    #[test]
    fn erm_examples() {
        let c = class("thresholds(5)");
        assert_eq!(erm_set(&c, &LabeledSample::default()).len(), 6);
        let s = LabeledSample::from_target(&[1, 3], c.mask(2));
        assert_eq!(erm_set(&c, &s), version_space(&c, &s));
        // a contradictory pair leaves every hypothesis with one mistake
        let s = LabeledSample::new(vec![(0, 1), (0, -1)]);
        assert_eq!(erm_set(&c, &s).len(), 6);
        let s = LabeledSample::new(vec![(0, 1), (0, -1), (0, 1)]);
        assert_eq!(erm_set(&c, &s).members(), &[0]);
    }

    #[test]
    fn u_examples() {
        let c = class("thresholds(5)");
        let d = Distribution::uniform(5).unwrap();
        let single = [c.mask(2)];
        let v = u_complexity(&single, &d, 100, (-1.0f64).exp(), 0, 2.0).unwrap();
        assert!((v - 0.02).abs() < 1e-12, "{v}");
        let all = c.masks();
        let full = c.full_mask();
        let mut prev = 2.0;
        for m in [1, 2, 8, 64, 1024, 1 << 16] {
            let u = u_complexity(all, &d, m, 0.1, full, 2.0).unwrap();
            assert!(u <= 1.0 && u <= prev);
            prev = u;
        }
        assert!(u_complexity(all, &d, 10, 0.1, full, 1.0).is_err());
    }
}
