//! Finite instance spaces, concept classes and their combinatorial measures.

mod combinatorics;
mod generators;
mod io;

pub use combinatorics::{
    closure_hull, closure_hull_with_cap, is_intersection_closed, star_number, star_witness_holds,
    vc_dimension, vc_dimension_of, StarNumber, StarWitness,
};
pub use generators::{make_class, make_class_with, ClassSpec, GENERATORS};
pub use io::{load_class, load_class_file, save_class, save_class_file};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Capacity limits applied by generators and hull construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_points: usize,
    pub max_hypotheses: usize,
    pub max_hull: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_points: 64, max_hypotheses: 1 << 20, max_hull: 1 << 20 }
    }
}

pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn bit(i: usize) -> u64 {
    1u64 << i
}

/// Iterates the set bit positions of `mask` in increasing order.
pub fn bits_of(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpace {
    points: Vec<String>,
}

impl InstanceSpace {
    pub fn new(points: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("instance space must contain at least one point"));
        }
        if points.len() > 64 {
            return Err(Error::Capacity(format!("{} points exceed the 64-point representation", points.len())));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &points {
            if p.is_empty() || p.chars().any(char::is_whitespace) {
                return Err(Error::domain(format!("invalid point identifier {p:?}")));
            }
            if !seen.insert(p.as_str()) {
                return Err(Error::domain(format!("duplicate point identifier {p}")));
            }
        }
        Ok(InstanceSpace { points })
    }

    /// Points named `p0 .. p{n-1}`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("p{i}")).collect())
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p == id)
    }
}

/// A labeling of the instance space, stored as the positive set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    pub bits: u64,
    pub n: usize,
}

impl Hypothesis {
    pub fn from_labels(labels: &[i8]) -> Result<Self> {
        if labels.len() > 64 {
            return Err(Error::Capacity("hypothesis longer than 64 points".into()));
        }
        let mut bits = 0u64;
        for (i, &y) in labels.iter().enumerate() {
            match y {
                1 => bits |= bit(i),
                -1 => {}
                _ => return Err(Error::domain(format!("label {y} is not +1/-1"))),
            }
        }
        Ok(Hypothesis { bits, n: labels.len() })
    }

    pub fn label(&self, x: usize) -> i8 {
        if self.bits >> x & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn labels(&self) -> Vec<i8> {
        (0..self.n).map(|i| self.label(i)).collect()
    }

    pub fn positive_set(&self) -> u64 {
        self.bits
    }
}

#[derive(Clone, Debug)]
pub struct ConceptClass {
    name: String,
    space: InstanceSpace,
    hyps: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl PartialEq for ConceptClass {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.space == other.space && self.hyps == other.hyps
    }
}

impl ConceptClass {
    /// Builds a class from positive-set masks. Duplicates are dropped, keeping first occurrences.
    pub fn new(name: impl Into<String>, space: InstanceSpace, masks: Vec<u64>) -> Result<Self> {
        let full = full_mask(space.n());
        let mut hyps = Vec::with_capacity(masks.len());
        let mut index = HashMap::with_capacity(masks.len());
        for m in masks {
            if m & !full != 0 {
                return Err(Error::domain("hypothesis labels a point outside the instance space"));
            }
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(m) {
                e.insert(hyps.len());
                hyps.push(m);
            }
        }
        if hyps.len() < 3 {
            return Err(Error::domain(format!("a concept class needs at least 3 distinct hypotheses, got {}", hyps.len())));
        }
        Ok(ConceptClass { name: name.into(), space, hyps, index })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn space(&self) -> &InstanceSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn len(&self) -> usize {
        self.hyps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyps.is_empty()
    }

    pub fn masks(&self) -> &[u64] {
        &self.hyps
    }

    pub fn mask(&self, i: usize) -> u64 {
        self.hyps[i]
    }

    pub fn hypothesis(&self, i: usize) -> Hypothesis {
        Hypothesis { bits: self.hyps[i], n: self.n() }
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    pub fn contains(&self, mask: u64) -> bool {
        self.index.contains_key(&mask)
    }

    pub fn full_mask(&self) -> u64 {
        full_mask(self.n())
    }
}
