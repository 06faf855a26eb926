//! Label-noise models and the lower-bound scenario constructions.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concept::{bit, load_class, save_class, star_number, ConceptClass};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational, q_int, q_to_f64, Q};
use crate::version_space::LabeledSample;

const HEADER: &str = "vslab-noise v1";

/// Conditional probability of a positive label at each point.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    eta_plus: Vec<Q>,
    eta_f64: Vec<f64>,
}

impl PartialEq for NoiseModel {
    fn eq(&self, other: &Self) -> bool {
        self.eta_plus == other.eta_plus
    }
}

impl Eq for NoiseModel {}

impl NoiseModel {
    pub fn new(eta_plus: Vec<Q>) -> Result<Self> {
        if let Some(x) = eta_plus.iter().position(|e| e.is_negative() || e > &Q::one()) {
            return Err(Error::domain(format!("eta at point {x} lies outside [0, 1]")));
        }
        let eta_f64 = eta_plus.iter().map(q_to_f64).collect();
        Ok(NoiseModel { eta_plus, eta_f64 })
    }

    /// Deterministic labels given by `target`.
    pub fn deterministic(target: u64, n: usize) -> Self {
        NoiseModel::new((0..n).map(|x| if target >> x & 1 == 1 { Q::one() } else { Q::zero() }).collect()).expect("0/1 entries")
    }

    pub fn n(&self) -> usize {
        self.eta_plus.len()
    }

    pub fn eta(&self, x: usize) -> &Q {
        &self.eta_plus[x]
    }

    pub fn etas(&self) -> &[Q] {
        &self.eta_plus
    }

    /// True iff `P(Y != target(X) | X = x) <= beta` at every point.
    pub fn is_bounded(&self, target: u64, beta: &Q) -> bool {
        (0..self.n()).all(|x| {
            let flip = if target >> x & 1 == 1 { Q::one() - &self.eta_plus[x] } else { self.eta_plus[x].clone() };
            &flip <= beta
        })
    }

    /// Exact error rate `P(h(X) != Y)`.
    pub fn error(&self, dist: &Distribution, h: u64) -> Q {
        (0..self.n())
            .filter(|&x| dist.weight(x) > 0)
            .map(|x| dist.point_mass(x) * if h >> x & 1 == 1 { Q::one() - &self.eta_plus[x] } else { self.eta_plus[x].clone() })
            .sum()
    }

    fn check_against(&self, dist: &Distribution) -> Result<()> {
        if self.n() != dist.n() {
            return Err(Error::domain(format!("noise model has {} points, distribution has {}", self.n(), dist.n())));
        }
        Ok(())
    }
}

pub fn bounded_noise_from(target: u64, n: usize, beta: &Q, flip_set: u64) -> Result<NoiseModel> {
    if beta.is_negative() || beta * q_int(2) >= Q::one() {
        return Err(Error::param("beta", "must lie in [0, 1/2)"));
    }
    if n < 64 && flip_set >> n != 0 {
        return Err(Error::domain("flip set contains points outside the space"));
    }
    let eta = (0..n)
        .map(|x| {
            let pos = target >> x & 1 == 1;
            match (pos, flip_set & bit(x) != 0) {
                (true, true) => Q::one() - beta,
                (false, true) => beta.clone(),
                (true, false) => Q::one(),
                (false, false) => Q::zero(),
            }
        })
        .collect();
    NoiseModel::new(eta)
}

/// Exact minimizer of the error rate over the class; ties go to the lowest index.
pub fn risk_minimizer(c: &ConceptClass, dist: &Distribution, noise: &NoiseModel) -> Result<(usize, Q)> {
    noise.check_against(dist)?;
    let mut best: Option<(usize, Q)> = None;
    for (i, &h) in c.masks().iter().enumerate() {
        let e = noise.error(dist, h);
        if best.as_ref().is_none_or(|(_, b)| &e < b) {
            best = Some((i, e));
        }
    }
    Ok(best.expect("classes are nonempty"))
}

#[derive(Clone, Debug, Serialize)]
pub struct BernsteinCheck {
    pub holds: bool,
    pub h_star: usize,
    /// First hypothesis (by index) violating the condition.
    pub violator: Option<usize>,
}

/// Checks `P(h != h*) <= a (er(h) - er(h*))^alpha` for every member.
pub fn bernstein_check(c: &ConceptClass, dist: &Distribution, noise: &NoiseModel, a: &Q, alpha: f64) -> Result<BernsteinCheck> {
    if a < &Q::one() {
        return Err(Error::param("a", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", "must lie in [0, 1]"));
    }
    let (h_star, best) = risk_minimizer(c, dist, noise)?;
    let star = c.mask(h_star);
    for (i, &h) in c.masks().iter().enumerate() {
        let gap = dist.mass(h ^ star);
        let excess = noise.error(dist, h) - &best;
        let ok = if alpha == 1.0 {
            gap <= a * &excess
        } else if alpha == 0.0 {
            &gap <= a
        } else {
            let lhs = q_to_f64(&gap);
            let rhs = q_to_f64(a) * q_to_f64(&excess).powf(alpha);
            lhs <= rhs * (1.0 + 1e-12)
        };
        if !ok {
            return Ok(BernsteinCheck { holds: false, h_star, violator: Some(i) });
        }
    }
    Ok(BernsteinCheck { holds: true, h_star, violator: None })
}

pub enum Labeler<'a> {
    Target(u64),
    Noise(&'a NoiseModel),
}

/// `m` i.i.d. labeled draws. Every draw consumes one point and one uniform, so a zero-noise model and the
/// matching target produce identical samples from the same stream.
pub fn sample_labeled<R: Rng + ?Sized>(dist: &Distribution, labeler: &Labeler, m: usize, rng: &mut R) -> LabeledSample {
    let pairs = (0..m)
        .map(|_| {
            let x = dist.sample_point(rng);
            let u: f64 = rng.gen();
            let p = match labeler {
                Labeler::Target(t) => {
                    if t >> x & 1 == 1 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Labeler::Noise(nm) => nm.eta_f64[x],
            };
            (x, if u < p { 1 } else { -1 })
        })
        .collect();
    LabeledSample::new(pairs)
}

pub fn save_noise(noise: &NoiseModel) -> String {
    let mut out = format!("{HEADER}\n{}\n", noise.n());
    for e in &noise.eta_plus {
        out.push_str(&format_rational(e));
        out.push('\n');
    }
    out
}

pub fn load_noise(text: &str) -> Result<NoiseModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header {HEADER:?}"))),
    }
    let (ln, count) = lines.next().ok_or_else(|| Error::parse(2, "missing point count"))?;
    let n: usize = count.parse().map_err(|_| Error::parse(ln, format!("{count:?} is not a point count")))?;
    let mut eta = Vec::with_capacity(n);
    for (ln, l) in lines {
        eta.push(parse_rational(l).ok_or_else(|| Error::parse(ln, format!("{l:?} is not a probability")))?);
    }
    if eta.len() != n {
        return Err(Error::parse(n + 2, format!("expected {n} values, found {}", eta.len())));
    }
    NoiseModel::new(eta)
}

pub fn load_noise_file(path: &Path) -> Result<NoiseModel> {
    load_noise(&std::fs::read_to_string(path)?)
}

pub fn save_noise_file(noise: &NoiseModel, path: &Path) -> Result<()> {
    std::fs::write(path, save_noise(noise))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    RealizableStar,
    NoisyStar,
}

#[derive(Clone, Debug)]
pub struct LowerBoundScenario {
    pub kind: ScenarioKind,
    pub class: ConceptClass,
    pub dist: Distribution,
    /// Realizable target, or the minimizer `h_t` in the noisy case.
    pub target: usize,
    /// Present for the noisy construction.
    pub noise: Option<NoiseModel>,
    /// Star points used, in order `x_1, x_2, ...`.
    pub points: Vec<usize>,
    pub params: BTreeMap<String, String>,
    /// Excess-error level the learner is claimed to reach with the stated probability.
    pub threshold: Q,
    /// Sample sizes strictly below this value are inside the failure regime.
    pub regime: f64,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    kind: ScenarioKind,
    class: String,
    masses: Vec<String>,
    target: usize,
    noise: Option<Vec<String>>,
    points: Vec<usize>,
    params: BTreeMap<String, String>,
    threshold: String,
    regime: f64,
}

impl LowerBoundScenario {
    pub fn to_json(&self) -> String {
        let f = ScenarioFile {
            kind: self.kind,
            class: save_class(&self.class),
            masses: self.dist.masses().iter().map(format_rational).collect(),
            target: self.target,
            noise: self.noise.as_ref().map(|n| n.etas().iter().map(format_rational).collect()),
            points: self.points.clone(),
            params: self.params.clone(),
            threshold: format_rational(&self.threshold),
            regime: self.regime,
        };
        serde_json::to_string_pretty(&f).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        let parse = |s: &String| parse_rational(s).ok_or_else(|| Error::domain(format!("{s:?} is not a rational")));
        let masses = f.masses.iter().map(parse).collect::<Result<Vec<_>>>()?;
        let noise = match &f.noise {
            Some(v) => Some(NoiseModel::new(v.iter().map(parse).collect::<Result<Vec<_>>>()?)?),
            None => None,
        };
        Ok(LowerBoundScenario {
            kind: f.kind,
            class: load_class(&f.class)?,
            dist: Distribution::from_masses(&masses)?,
            target: f.target,
            noise,
            points: f.points,
            params: f.params,
            threshold: parse(&f.threshold)?,
            regime: f.regime,
        })
    }

    /// Labeler for drawing training data from this scenario.
    pub fn labeler(&self) -> Labeler<'_> {
        match &self.noise {
            Some(n) => Labeler::Noise(n),
            None => Labeler::Target(self.class.mask(self.target)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ScenarioParams {
    RealizableStar { epsilon: Q },
    NoisyStar { k: usize, zeta: Q, beta: Q, t: usize, delta: f64 },
}

pub fn lower_bound_construction(c: &ConceptClass, params: &ScenarioParams) -> Result<LowerBoundScenario> {
    let witness = match star_number(c, c.n())? {
        crate::concept::StarNumber::Value { witness: Some(w), .. } => w,
        _ => return Err(Error::domain("class has no star set")),
    };
    let s = witness.points.len();
    let n = c.n();
    match params {
        ScenarioParams::RealizableStar { epsilon } => {
            if !epsilon.is_positive() || epsilon * q_int(48) >= Q::one() {
                return Err(Error::param("epsilon", "must lie in (0, 1/48)"));
            }
            let m_eps = ((Q::one() + epsilon) / epsilon).floor().to_integer().to_usize().unwrap_or(usize::MAX);
            let s_used = s.min(m_eps);
            if s_used < 2 {
                return Err(Error::domain("star number below 2 gives no coupon-collector structure"));
            }
            let points: Vec<usize> = witness.points[..s_used].to_vec();
            let mut masses = vec![Q::zero(); n];
            masses[points[0]] = Q::one() - epsilon * q_int(s_used as i64 - 1);
            for &x in &points[1..] {
                masses[x] = epsilon.clone();
            }
            let inv_eps = (Q::one() / epsilon).floor().to_integer().to_f64().unwrap_or(f64::INFINITY);
            let regime = ((s as f64 - 1.0).min(inv_eps)).ln() / (2.0 * q_to_f64(epsilon));
            let mut p = BTreeMap::new();
            p.insert("epsilon".into(), format_rational(epsilon));
            p.insert("star_number".into(), s.to_string());
            p.insert("points_used".into(), s_used.to_string());
            Ok(LowerBoundScenario {
                kind: ScenarioKind::RealizableStar,
                class: c.clone(),
                dist: Distribution::from_masses(&masses)?,
                target: witness.center,
                noise: None,
                points,
                params: p,
                threshold: epsilon.clone(),
                regime,
            })
        }
        ScenarioParams::NoisyStar { k, zeta, beta, t, delta } => {
            let k = *k;
            if k < 2 {
                return Err(Error::param("k", "must be at least 2"));
            }
            if !zeta.is_positive() || zeta * q_int(k as i64) > Q::one() {
                return Err(Error::param("zeta", "must lie in (0, 1/k]"));
            }
            if !beta.is_positive() || beta * q_int(2) >= Q::one() {
                return Err(Error::param("beta", "must lie in (0, 1/2)"));
            }
            if *t < 1 || *t > k {
                return Err(Error::param("t", "must lie in 1..=k"));
            }
            if !(*delta > 0.0 && *delta < 1.0) {
                return Err(Error::param("delta", "must lie in (0, 1)"));
            }
            if s < k + 1 {
                return Err(Error::domain(format!("star number {s} is below k + 1 = {}", k + 1)));
            }
            let points: Vec<usize> = witness.points[..=k].to_vec();
            let h_t = witness.leaves[t - 1];
            let ht_mask = c.mask(h_t);
            let mut masses = vec![Q::zero(); n];
            for &x in &points[..k] {
                masses[x] = zeta.clone();
            }
            masses[points[k]] = Q::one() - zeta * q_int(k as i64);
            let mut noise = NoiseModel::deterministic(ht_mask, n).eta_plus;
            for &x in &points[..k] {
                noise[x] = if ht_mask >> x & 1 == 1 { Q::one() - beta } else { beta.clone() };
            }
            let margin = Q::one() - beta * q_int(2);
            let threshold = zeta * &margin / q_int(2);
            let (b, z, g) = (q_to_f64(beta), q_to_f64(zeta), q_to_f64(&margin));
            let denom = z * g * g;
            let regime = (b * (1.0 / (4.0 * delta)).ln() / (2.0 * denom)).max(3.0 * b * (k as f64 / 96.0).ln() / (16.0 * denom));
            let mut p = BTreeMap::new();
            p.insert("k".into(), k.to_string());
            p.insert("zeta".into(), format_rational(zeta));
            p.insert("beta".into(), format_rational(beta));
            p.insert("t".into(), t.to_string());
            p.insert("delta".into(), delta.to_string());
            p.insert("center".into(), witness.center.to_string());
            Ok(LowerBoundScenario {
                kind: ScenarioKind::NoisyStar,
                class: c.clone(),
                dist: Distribution::from_masses(&masses)?,
                target: h_t,
                noise: Some(NoiseModel::new(noise)?),
                points,
                params: p,
                threshold,
                regime,
            })
        }
    }
}
