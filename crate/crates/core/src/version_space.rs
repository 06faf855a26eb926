//! Labeled samples, version spaces, disagreement regions and compression sets.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::concept::{bit, bits_of, ConceptClass, InstanceSpace};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::Q;

/// Default number of search nodes allowed for an exact compression-set search.
pub const DEFAULT_NHAT_BUDGET: u64 = 10_000_000;

/// Ordered labeled pairs `(point index, label in {-1,+1})`, repeats allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub pairs: Vec<(usize, i8)>,
}

impl LabeledSample {
    pub fn new(pairs: Vec<(usize, i8)>) -> Self {
        LabeledSample { pairs }
    }

    /// Labels each point of `points` with the target's label.
    pub fn from_target(points: &[usize], target: u64) -> Self {
        LabeledSample { pairs: points.iter().map(|&x| (x, label_of(target, x))).collect() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn prefix(&self, t: usize) -> LabeledSample {
        LabeledSample { pairs: self.pairs[..t].to_vec() }
    }

    /// Points labeled +1 and points labeled -1.
    pub fn masks(&self) -> (u64, u64) {
        self.pairs.iter().fold((0, 0), |(p, n), &(x, y)| if y > 0 { (p | bit(x), n) } else { (p, n | bit(x)) })
    }

    /// Parses `p1:-1,p3:+1` (labels may also be written `+`/`-`).
    pub fn parse(text: &str, space: &InstanceSpace) -> Result<Self> {
        let mut pairs = Vec::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (id, lab) = tok.rsplit_once(':').ok_or_else(|| Error::param("sample", format!("{tok:?} is not `point:label`")))?;
            let x = space.index_of(id.trim()).ok_or_else(|| Error::param("sample", format!("unknown point {id:?}")))?;
            let y = match lab.trim() {
                "+1" | "+" | "1" => 1,
                "-1" | "-" => -1,
                other => return Err(Error::param("sample", format!("label {other:?} is not +1/-1"))),
            };
            pairs.push((x, y));
        }
        Ok(LabeledSample { pairs })
    }
}

pub fn label_of(h: u64, x: usize) -> i8 {
    if h >> x & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Sorted hypothesis indices into a class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VersionSpaceView {
    members: Vec<usize>,
}

impl VersionSpaceView {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        VersionSpaceView { members }
    }

    pub fn full(c: &ConceptClass) -> Self {
        VersionSpaceView { members: (0..c.len()).collect() }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn masks(&self, c: &ConceptClass) -> Vec<u64> {
        self.members.iter().map(|&i| c.mask(i)).collect()
    }

    pub fn is_subset_of(&self, other: &VersionSpaceView) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }
}

/// Members consistent with `pos` (labeled +1) and `neg` (labeled -1).
pub fn consistent_with(c: &ConceptClass, pos: u64, neg: u64) -> VersionSpaceView {
    let members = c.masks().iter().enumerate().filter(|(_, &h)| h & pos == pos && h & neg == 0).map(|(i, _)| i).collect();
    VersionSpaceView { members }
}

pub fn version_space(c: &ConceptClass, sample: &LabeledSample) -> VersionSpaceView {
    let (pos, neg) = sample.masks();
    consistent_with(c, pos, neg)
}

/// Points on which two members of `masks` disagree (empty input gives the empty set).
pub fn dis_of(masks: &[u64]) -> u64 {
    match masks.first() {
        None => 0,
        Some(&h0) => masks.iter().fold(0, |acc, &h| acc | (h ^ h0)),
    }
}

pub fn disagreement_region(c: &ConceptClass, view: &VersionSpaceView) -> Result<u64> {
    if view.is_empty() {
        return Err(Error::domain("disagreement region of an empty version space"));
    }
    let h0 = c.mask(view.members[0]);
    Ok(view.members.iter().fold(0, |acc, &i| acc | (c.mask(i) ^ h0)))
}

pub fn region_mass(dist: &Distribution, region: u64) -> Q {
    dist.mass(region)
}

/// Largest error, relative to `target`, among members of the view.
pub fn worst_consistent_error(c: &ConceptClass, view: &VersionSpaceView, dist: &Distribution, target: u64) -> Result<Q> {
    Ok(dist.weight_to_q(worst_consistent_weight(c, view, dist, target)?))
}

pub fn worst_consistent_weight(c: &ConceptClass, view: &VersionSpaceView, dist: &Distribution, target: u64) -> Result<u128> {
    if view.is_empty() {
        return Err(Error::domain("worst consistent error of an empty version space"));
    }
    Ok(view.members.iter().map(|&i| dist.mass_weight(c.mask(i) ^ target)).max().unwrap_or(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressionMode {
    Exact,
    Greedy,
}

impl std::str::FromStr for CompressionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CompressionMode::Exact),
            "greedy" => Ok(CompressionMode::Greedy),
            _ => Err(Error::param("mode", format!("{s:?} is not exact|greedy"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compression {
    pub size: usize,
    /// Sample positions of the witness pairs, increasing.
    pub positions: Vec<usize>,
    pub witness: LabeledSample,
    /// False when produced by the greedy upper bound.
    pub exact: bool,
    pub evaluations: u64,
}

struct CoverProblem {
    /// First sample position of each distinct pair, in increasing order.
    positions: Vec<usize>,
    /// Each hypothesis outside the version space, as the set of pair ranks that exclude it.
    kills: Vec<u64>,
}

fn cover_problem(c: &ConceptClass, sample: &LabeledSample) -> Result<CoverProblem> {
    let (pos, neg) = sample.masks();
    if pos & neg != 0 || !c.masks().iter().any(|&h| h & pos == pos && h & neg == 0) {
        return Err(Error::domain("compression set of an empty version space"));
    }
    // with a nonempty version space each point carries a single label, so pairs are identified by points
    let mut rank_of = [usize::MAX; 64];
    let mut positions = Vec::new();
    for (t, &(x, _)) in sample.pairs.iter().enumerate() {
        if rank_of[x] == usize::MAX {
            rank_of[x] = positions.len();
            positions.push(t);
        }
    }
    let mut seen = HashSet::new();
    let mut kills = Vec::new();
    for &h in c.masks() {
        let k = (pos & !h) | (neg & h);
        if k != 0 && seen.insert(k) {
            kills.push(bits_of(k).fold(0u64, |a, x| a | bit(rank_of[x])));
        }
    }
    kills.sort_unstable();
    Ok(CoverProblem { positions, kills })
}

fn witness_from(sample: &LabeledSample, prob: &CoverProblem, chosen: u64, exact: bool, evaluations: u64) -> Compression {
    let positions: Vec<usize> = bits_of(chosen).map(|r| prob.positions[r]).collect();
    let witness = LabeledSample { pairs: positions.iter().map(|&t| sample.pairs[t]).collect() };
    Compression { size: positions.len(), positions, witness, exact, evaluations }
}

pub fn compression_set_size(c: &ConceptClass, sample: &LabeledSample, mode: CompressionMode) -> Result<Compression> {
    compression_set_size_with_budget(c, sample, mode, DEFAULT_NHAT_BUDGET)
}

pub fn compression_set_size_with_budget(c: &ConceptClass, sample: &LabeledSample, mode: CompressionMode, budget: u64) -> Result<Compression> {
    let prob = cover_problem(c, sample)?;
    match mode {
        CompressionMode::Greedy => {
            let mut chosen = if prob.positions.len() == 64 { u64::MAX } else { (1u64 << prob.positions.len()) - 1 };
            let mut evals = 0;
            for r in 0..prob.positions.len() {
                let trial = chosen & !bit(r);
                evals += 1;
                if prob.kills.iter().all(|&k| k & trial != 0) {
                    chosen = trial;
                }
            }
            Ok(witness_from(sample, &prob, chosen, false, evals))
        }
        CompressionMode::Exact => {
            let forced = prob.kills.iter().filter(|k| k.count_ones() == 1).fold(0u64, |a, &k| a | k);
            let mut rest: Vec<u64> = prob.kills.iter().copied().filter(|&k| k & forced == 0).collect();
            rest.sort_by_key(|k| (k.count_ones(), *k));
            let mut minimal: Vec<u64> = Vec::with_capacity(rest.len());
            for k in rest {
                if !minimal.iter().any(|&m| m & k == m) {
                    minimal.push(k);
                }
            }
            let mut evals = 0u64;
            for extra in 0..=prob.positions.len() {
                if let Some(found) = cover_dfs(&minimal, forced, 0, extra, &mut evals, budget)? {
                    return Ok(witness_from(sample, &prob, forced | found, true, evals));
                }
            }
            unreachable!("the full pair set always reproduces the version space")
        }
    }
}

fn highest_bit(k: u64) -> usize {
    63 - k.leading_zeros() as usize
}

/// Lexicographically first set of `left` more ranks, each at least `start`, hitting every set in `kills`.
fn cover_dfs(kills: &[u64], chosen: u64, start: usize, left: usize, evals: &mut u64, budget: u64) -> Result<Option<u64>> {
    *evals += 1;
    if *evals > budget {
        return Err(Error::Budget(format!("exact compression search exceeded {budget} evaluations; use greedy mode")));
    }
    let mut limit = usize::MAX;
    let mut any = false;
    for &k in kills {
        if k & chosen == 0 {
            any = true;
            let hi = highest_bit(k);
            if hi < start {
                return Ok(None);
            }
            limit = limit.min(hi);
        }
    }
    if !any {
        return Ok(Some(0));
    }
    if left == 0 {
        return Ok(None);
    }
    let candidates = kills.iter().filter(|&&k| k & chosen == 0).fold(0u64, |a, &k| a | k);
    for r in start..=limit {
        if candidates >> r & 1 == 0 {
            continue;
        }
        if let Some(found) = cover_dfs(kills, chosen | bit(r), r + 1, left - 1, evals, budget)? {
            return Ok(Some(found | bit(r)));
        }
    }
    Ok(None)
}

/// Exact compression size of every prefix `t = 1..=m` of the target-labeled sequence.
pub fn prefix_nhat_trace(c: &ConceptClass, points: &[usize], target: u64, budget: u64) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(points.len());
    let mut seen = 0u64;
    let mut current = 0usize;
    for t in 0..points.len() {
        let x = points[t];
        if seen & bit(x) == 0 {
            seen |= bit(x);
            let s = LabeledSample::from_target(&points[..=t], target);
            current = compression_set_size_with_budget(c, &s, CompressionMode::Exact, budget)?.size;
        }
        out.push(current);
    }
    Ok(out)
}

/// `max_t nhat_t` over all prefixes of the target-labeled sequence.
pub fn prefix_max_nhat(c: &ConceptClass, points: &[usize], target: u64) -> Result<usize> {
    if !c.contains(target) {
        return Err(Error::domain("target is not a member of the class"));
    }
    Ok(prefix_nhat_trace(c, points, target, DEFAULT_NHAT_BUDGET)?.into_iter().max().unwrap_or(0))
}
