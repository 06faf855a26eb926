use std::collections::BTreeSet;

use serde::Serialize;

use super::{check_target, radius_to_weight, RadiusProfile};
use crate::concept::{bits_of, ConceptClass};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{q_u128, Q};
use crate::version_space::{dis_of, VersionSpaceView};

pub const DEFAULT_COVER_BUDGET: u64 = 1_000_000;
const MAX_LABELING_POINTS: usize = 20;
const DOMINANCE_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Centers {
    /// Only members of the view may serve as centers.
    Members,
    /// Any classifier; enumerated as every labeling of the positive-mass disagreement points.
    AllLabelings,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMode {
    Exact,
    Greedy,
}

impl std::str::FromStr for CoverMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CoverMode::Exact),
            "greedy" => Ok(CoverMode::Greedy),
            _ => Err(Error::param("mode", format!("{s:?} is not exact|greedy"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Covering {
    pub size: usize,
    /// Center classifiers as positive-set masks.
    pub centers: Vec<u64>,
    /// False when the size is only a greedy upper bound.
    pub exact: bool,
    pub nodes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Doubling {
    /// `log2` of the largest covering number found.
    pub value: f64,
    pub covering: usize,
    pub radius: String,
}

type BitSet = Vec<u64>;

fn bitset_insert(s: &mut BitSet, i: usize) {
    s[i / 64] |= 1 << (i % 64);
}

fn bitset_count(s: &BitSet) -> usize {
    s.iter().map(|w| w.count_ones() as usize).sum()
}

fn is_subset(a: &BitSet, b: &BitSet) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

pub fn covering_number(view: &VersionSpaceView, c: &ConceptClass, dist: &Distribution, radius: &Q, mode: CoverMode, centers: Centers) -> Result<Covering> {
    covering_number_with_budget(view, c, dist, radius, mode, centers, DEFAULT_COVER_BUDGET)
}

pub fn covering_number_with_budget(
    view: &VersionSpaceView,
    c: &ConceptClass,
    dist: &Distribution,
    radius: &Q,
    mode: CoverMode,
    centers: Centers,
    budget: u64,
) -> Result<Covering> {
    if view.is_empty() {
        return Err(Error::domain("covering an empty view"));
    }
    if radius < &Q::from_integer(0.into()) {
        return Err(Error::domain("radius must be nonnegative"));
    }
    let members = view.masks(c);
    let w = radius_to_weight(radius, dist);
    let candidates: Vec<u64> = match centers {
        Centers::Members => members.clone(),
        Centers::AllLabelings => {
            let dis = dis_of(&members) & dist.support();
            let pts: Vec<usize> = bits_of(dis).collect();
            if pts.len() > MAX_LABELING_POINTS {
                return Err(Error::Capacity(format!(
                    "{} disagreement points exceed the labeling enumeration cap of {MAX_LABELING_POINTS}",
                    pts.len()
                )));
            }
            let base = members[0] & !dis;
            (0u64..1 << pts.len())
                .map(|code| pts.iter().enumerate().filter(|(j, _)| code >> j & 1 == 1).fold(base, |m, (_, &x)| m | 1 << x))
                .collect()
        }
    };
    let words = members.len().div_ceil(64);
    // distinct cover sets, keeping the first center realizing each
    let mut seen = BTreeSet::new();
    let mut sets: Vec<(BitSet, u64)> = Vec::new();
    for &g in &candidates {
        let mut s = vec![0u64; words];
        for (i, &h) in members.iter().enumerate() {
            if dist.mass_weight(h ^ g) <= w {
                bitset_insert(&mut s, i);
            }
        }
        if bitset_count(&s) > 0 && seen.insert(s.clone()) {
            sets.push((s, g));
        }
    }
    if sets.len() <= DOMINANCE_LIMIT {
        let keep: Vec<bool> = (0..sets.len())
            .map(|i| !(0..sets.len()).any(|j| j != i && sets[j].0 != sets[i].0 && is_subset(&sets[i].0, &sets[j].0)))
            .collect();
        sets = sets.into_iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect();
    }
    let greedy = greedy_cover(&sets, members.len());
    if mode == CoverMode::Greedy {
        return Ok(Covering { size: greedy.len(), centers: greedy.iter().map(|&i| sets[i].1).collect(), exact: false, nodes: 0 });
    }
    let mut search = CoverSearch {
        sets: &sets,
        max_size: sets.iter().map(|(s, _)| bitset_count(s)).max().unwrap_or(1),
        best: greedy,
        nodes: 0,
        budget,
    };
    let mut covered = vec![0u64; words];
    let mut chosen = Vec::new();
    search.run(&mut covered, &mut chosen, members.len())?;
    Ok(Covering { size: search.best.len(), centers: search.best.iter().map(|&i| sets[i].1).collect(), exact: true, nodes: search.nodes })
}

fn greedy_cover(sets: &[(BitSet, u64)], n: usize) -> Vec<usize> {
    let words = n.div_ceil(64);
    let mut covered = vec![0u64; words];
    let mut chosen = Vec::new();
    while bitset_count(&covered) < n {
        let (best, _) = sets
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (i, s.iter().zip(&covered).map(|(a, b)| (a & !b).count_ones()).sum::<u32>()))
            .fold((usize::MAX, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        for (c, s) in covered.iter_mut().zip(&sets[best].0) {
            *c |= s;
        }
        chosen.push(best);
    }
    chosen
}

struct CoverSearch<'a> {
    sets: &'a [(BitSet, u64)],
    max_size: usize,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl CoverSearch<'_> {
    fn run(&mut self, covered: &mut BitSet, chosen: &mut Vec<usize>, n: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget(format!("exact covering search exceeded {} nodes", self.budget)));
        }
        let uncovered = n - bitset_count(covered);
        if uncovered == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return Ok(());
        }
        if chosen.len() + uncovered.div_ceil(self.max_size) >= self.best.len() {
            return Ok(());
        }
        let e = (0..n).find(|&i| covered[i / 64] >> (i % 64) & 1 == 0).expect("an uncovered element exists");
        for (i, (s, _)) in self.sets.iter().enumerate() {
            if s[e / 64] >> (e % 64) & 1 == 0 {
                continue;
            }
            let saved = covered.clone();
            for (c, x) in covered.iter_mut().zip(s) {
                *c |= x;
            }
            chosen.push(i);
            self.run(covered, chosen, n)?;
            chosen.pop();
            *covered = saved;
        }
        Ok(())
    }
}

/// Greedy maximal packing: members taken in index order, kept when farther than `radius` from all kept so far.
pub fn packing(view: &VersionSpaceView, c: &ConceptClass, dist: &Distribution, radius: &Q) -> Vec<usize> {
    let w = radius_to_weight(radius, dist);
    let mut kept: Vec<usize> = Vec::new();
    for &i in view.members() {
        if kept.iter().all(|&j| dist.mass_weight(c.mask(i) ^ c.mask(j)) > w) {
            kept.push(i);
        }
    }
    kept
}

/// Local metric entropy: `max_{r >= r0} log2 N(r/2, B(target, r))` over `r0` and the radius breakpoints above it.
pub fn doubling_dimension(c: &ConceptClass, dist: &Distribution, target: u64, r0: &Q, centers: Centers) -> Result<Doubling> {
    check_target(c, target)?;
    if r0 <= &Q::from_integer(0.into()) {
        return Err(Error::domain("r0 must be positive"));
    }
    let profile = RadiusProfile::new(c, target, dist);
    let d = q_u128(dist.denom());
    let mut radii = vec![r0.clone()];
    radii.extend(profile.radii.iter().map(|&rw| q_u128(rw) / &d).filter(|rho| rho > r0));
    let mut best: Option<(usize, Q)> = None;
    for r in radii {
        let b = profile.ball_at_weight(radius_to_weight(&r, dist));
        let n = covering_number(&b, c, dist, &(&r / Q::from_integer(2.into())), CoverMode::Exact, centers)?.size;
        if best.as_ref().is_none_or(|(m, _)| n > *m) {
            best = Some((n, r));
        }
    }
    let (n, r) = best.expect("r0 is always a candidate");
    Ok(Doubling { value: (n as f64).log2(), covering: n, radius: r.to_string() })
}
