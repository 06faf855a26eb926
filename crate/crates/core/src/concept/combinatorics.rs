use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{bit, bits_of, full_mask, ConceptClass};
use crate::error::{Error, Result};

pub fn vc_dimension(c: &ConceptClass) -> usize {
    vc_dimension_of(c.masks(), c.n())
}

/// VC dimension of an arbitrary list of positive sets over `n` points.
///
/// Shattered sets are downward closed, so a depth-first walk over sets built in
/// increasing point order visits each shattered set exactly once.
pub fn vc_dimension_of(masks: &[u64], n: usize) -> usize {
    if masks.len() < 2 {
        return 0;
    }
    let limit = (usize::BITS - 1 - masks.len().leading_zeros()) as usize;
    let mut best = 0;
    let mut buf = Vec::with_capacity(masks.len());
    vc_dfs(masks, n, 0, 0, 0, limit, &mut best, &mut buf);
    best
}

#[allow(clippy::too_many_arguments)]
fn vc_dfs(masks: &[u64], n: usize, set: u64, size: usize, start: usize, limit: usize, best: &mut usize, buf: &mut Vec<u64>) {
    if size > *best {
        *best = size;
    }
    for x in start..n {
        if *best >= limit || size + (n - x) <= *best {
            return;
        }
        let next = set | bit(x);
        if shatters(masks, next, size + 1, buf) {
            vc_dfs(masks, n, next, size + 1, x + 1, limit, best, buf);
        }
    }
}

fn shatters(masks: &[u64], set: u64, size: usize, buf: &mut Vec<u64>) -> bool {
    if size >= 63 || (1usize << size) > masks.len() {
        return false;
    }
    buf.clear();
    buf.extend(masks.iter().map(|m| m & set));
    buf.sort_unstable();
    buf.dedup();
    buf.len() == 1usize << size
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarWitness {
    /// Index of the center hypothesis h0.
    pub center: usize,
    /// Star points x1..xs in increasing index order.
    pub points: Vec<usize>,
    /// For each star point, the lowest-index hypothesis differing from h0 there and nowhere else on the star points.
    pub leaves: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StarNumber {
    Value { s: usize, witness: Option<StarWitness> },
    ExceedsCap,
}

impl StarNumber {
    pub fn value(&self) -> Option<usize> {
        match self {
            StarNumber::Value { s, .. } => Some(*s),
            StarNumber::ExceedsCap => None,
        }
    }

    pub fn witness(&self) -> Option<&StarWitness> {
        match self {
            StarNumber::Value { witness, .. } => witness.as_ref(),
            StarNumber::ExceedsCap => None,
        }
    }
}

/// True iff every point of `set` is isolated against `h0` by some hypothesis.
fn is_star_set(masks: &[u64], h0: u64, set: u64) -> bool {
    let mut covered = 0u64;
    for &h in masks {
        let d = (h ^ h0) & set;
        if d != 0 && d & (d - 1) == 0 {
            covered |= d;
            if covered == set {
                return true;
            }
        }
    }
    covered == set
}

/// Exact star number, searching up to `cap + 1` points so that larger stars are reported as exceeding the cap.
pub fn star_number(c: &ConceptClass, cap: usize) -> Result<StarNumber> {
    if cap == 0 {
        return Err(Error::param("cap", "must be at least 1"));
    }
    let masks = c.masks();
    let n = c.n();
    let ceiling = (cap + 1).min(n).min(masks.len() - 1);
    let mut best = 0usize;
    let mut best_set = 0u64;
    let mut best_center = 0usize;
    for (ci, &h0) in masks.iter().enumerate() {
        if best >= ceiling {
            break;
        }
        let cands: Vec<usize> = (0..n).filter(|&x| is_star_set(masks, h0, bit(x))).collect();
        if cands.len() <= best {
            continue;
        }
        let mut local_best = best;
        let mut local_set = 0u64;
        star_dfs(masks, h0, 0, 0, &cands, ceiling, &mut local_best, &mut local_set);
        if local_best > best {
            best = local_best;
            best_set = local_set;
            best_center = ci;
        }
    }
    if best > cap {
        return Ok(StarNumber::ExceedsCap);
    }
    let witness = if best == 0 {
        None
    } else {
        let h0 = masks[best_center];
        let points: Vec<usize> = bits_of(best_set).collect();
        let leaves = points
            .iter()
            .map(|&x| masks.iter().position(|&h| (h ^ h0) & best_set == bit(x)).expect("star leaf"))
            .collect();
        Some(StarWitness { center: best_center, points, leaves })
    };
    Ok(StarNumber::Value { s: best, witness })
}

#[allow(clippy::too_many_arguments)]
fn star_dfs(masks: &[u64], h0: u64, set: u64, size: usize, cands: &[usize], ceiling: usize, best: &mut usize, best_set: &mut u64) {
    if size > *best {
        *best = size;
        *best_set = set;
    }
    for (i, &x) in cands.iter().enumerate() {
        if *best >= ceiling || size + (cands.len() - i) <= *best {
            return;
        }
        let next = set | bit(x);
        let rest: Vec<usize> = cands[i + 1..].iter().copied().filter(|&y| is_star_set(masks, h0, next | bit(y))).collect();
        if size + 1 + rest.len() <= *best {
            continue;
        }
        star_dfs(masks, h0, next, size + 1, &rest, ceiling, best, best_set);
    }
}

/// Checks the defining property of a star witness against a class.
pub fn star_witness_holds(c: &ConceptClass, w: &StarWitness) -> bool {
    if w.points.len() != w.leaves.len() {
        return false;
    }
    let set = w.points.iter().fold(0u64, |a, &x| a | bit(x));
    if set.count_ones() as usize != w.points.len() {
        return false;
    }
    let h0 = c.mask(w.center);
    w.points.iter().zip(&w.leaves).all(|(&x, &l)| (c.mask(l) ^ h0) & set == bit(x))
}

pub fn is_intersection_closed(c: &ConceptClass) -> bool {
    let masks = c.masks();
    if masks.len() as u128 == 1u128 << c.n() {
        return true;
    }
    for (i, &h) in masks.iter().enumerate() {
        for &g in &masks[i + 1..] {
            if !c.contains(h & g) {
                return false;
            }
        }
    }
    true
}

pub fn closure_hull(c: &ConceptClass) -> Result<ConceptClass> {
    closure_hull_with_cap(c, 1 << 20)
}

/// All intersections of nonempty subfamilies, original hypotheses first, then in discovery order.
pub fn closure_hull_with_cap(c: &ConceptClass, cap: usize) -> Result<ConceptClass> {
    let mut list: Vec<u64> = c.masks().to_vec();
    let mut seen: HashSet<u64> = list.iter().copied().collect();
    let mut i = 0;
    while i < list.len() {
        let e = list[i];
        for &g in c.masks() {
            let x = e & g;
            if seen.insert(x) {
                list.push(x);
                if list.len() > cap {
                    return Err(Error::Capacity(format!("closure hull exceeds {cap} hypotheses")));
                }
            }
        }
        i += 1;
    }
    let name = if list.len() == c.len() { c.name().to_string() } else { format!("closure({})", c.name()) };
    debug_assert!(list.iter().all(|&m| m & !full_mask(c.n()) == 0));
    ConceptClass::new(name, c.space().clone(), list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::{make_class, ClassSpec};

    fn class(s: &str) -> ConceptClass {
        make_class(&s.parse::<ClassSpec>().unwrap()).unwrap()
    }

    #[test]
    fn vc_examples() {
        assert_eq!(vc_dimension(&class("powerset(3)")), 3);
        assert_eq!(vc_dimension(&class("thresholds(5)")), 1);
        assert_eq!(vc_dimension(&class("intervals(5)")), 2);
        assert_eq!(vc_dimension(&class("star(6)")), 1);
        assert_eq!(vc_dimension(&class("axis_rectangles(4x4)")), 4);
        assert_eq!(vc_dimension(&class("at_most_d_positive(6,2)")), 2);
        assert_eq!(vc_dimension(&class("conjunctions(3)")), 3);
        assert_eq!(vc_dimension(&class("powerset(20)")), 20);
    }

    #[test]
    fn star_examples() {
        assert_eq!(star_number(&class("star(4)"), 10).unwrap().value(), Some(4));
        assert_eq!(star_number(&class("thresholds(5)"), 10).unwrap().value(), Some(2));
        assert_eq!(star_number(&class("singletons(5)"), 10).unwrap().value(), Some(4));
        assert_eq!(star_number(&class("intervals(6)"), 10).unwrap().value(), Some(6));
        assert_eq!(star_number(&class("star(32)"), 32).unwrap().value(), Some(32));
        assert_eq!(star_number(&class("thresholds(64)"), 64).unwrap().value(), Some(2));
        assert_eq!(star_number(&class("star(8)"), 3).unwrap(), StarNumber::ExceedsCap);
    }

    #[test]
    fn star_witness_is_valid() {
        for s in ["star(4)", "thresholds(5)", "singletons(5)", "intervals(5)", "powerset(3)"] {
            let c = class(s);
            let r = star_number(&c, c.n()).unwrap();
            let w = r.witness().unwrap();
            assert_eq!(w.points.len(), r.value().unwrap());
            assert!(star_witness_holds(&c, w), "{s}");
        }
    }

    #[test]
    fn singleton_star_centers_on_excluded_point() {
        let c = class("singletons(5)");
        let w = star_number(&c, 5).unwrap().witness().cloned().unwrap();
        assert!(!w.points.contains(&(c.mask(w.center).trailing_zeros() as usize)));
    }

    #[test]
    fn intersection_closed_examples() {
        assert!(is_intersection_closed(&class("thresholds(5)")));
        assert!(!is_intersection_closed(&class("singletons(5)")));
        assert!(is_intersection_closed(&class("powerset(3)")));
        assert!(is_intersection_closed(&class("axis_rectangles(3x3)")));
        assert!(is_intersection_closed(&class("conjunctions(2)")));
    }

    #[test]
    fn hull_examples() {
        let t = class("thresholds(5)");
        assert_eq!(closure_hull(&t).unwrap().masks(), t.masks());
        let s = closure_hull(&class("singletons(3)")).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.contains(0));
        assert!(is_intersection_closed(&s));
        assert!(matches!(closure_hull_with_cap(&class("singletons(5)"), 5), Err(Error::Capacity(_))));
    }
}
