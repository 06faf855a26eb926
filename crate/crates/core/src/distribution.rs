//! Finite distributions with exact integer weights over a common denominator.

use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;

use crate::concept::bits_of;
use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational, q_frac, q_to_f64, Q};

const HEADER: &str = "vslab-dist v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    weights: Vec<u128>,
    denom: u128,
    cumulative: Vec<u128>,
}

impl Distribution {
    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1; n])
    }

    /// Masses proportional to `weights`, reduced to lowest terms.
    pub fn from_weights(weights: Vec<u128>) -> Result<Self> {
        if weights.is_empty() || weights.len() > 64 {
            return Err(Error::domain("a distribution needs between 1 and 64 points"));
        }
        let mut total: u128 = 0;
        for &w in &weights {
            total = total.checked_add(w).ok_or_else(|| Error::Capacity("weight sum overflows u128".into()))?;
        }
        if total == 0 {
            return Err(Error::domain("distribution has zero total mass"));
        }
        let g = weights.iter().fold(total, |g, &w| g.gcd(&w));
        let weights: Vec<u128> = weights.into_iter().map(|w| w / g).collect();
        let mut acc = 0u128;
        let cumulative = weights
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Distribution { weights, denom: total / g, cumulative })
    }

    /// Nonnegative masses whose sum is within 1e-12 of 1; they are rescaled to sum to exactly 1.
    pub fn from_masses(masses: &[Q]) -> Result<Self> {
        if masses.iter().any(|m| m.is_negative()) {
            return Err(Error::domain("negative probability mass"));
        }
        let sum: Q = masses.iter().sum();
        let tol = q_frac(1, 1_000_000_000_000);
        if (&sum - Q::from_integer(1.into())).abs() > tol {
            return Err(Error::domain(format!("masses sum to {} rather than 1", q_to_f64(&sum))));
        }
        let lcm = masses.iter().fold(BigInt::from(1), |l, m| l.lcm(m.denom()));
        let mut weights = Vec::with_capacity(masses.len());
        for m in masses {
            let w = (m * Q::from_integer(lcm.clone())).to_integer();
            weights.push(w.to_u128().ok_or_else(|| Error::Capacity("mass denominators too large for u128".into()))?);
        }
        Self::from_weights(weights)
    }

    pub fn parse_masses<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        let masses = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| parse_rational(t.as_ref()).ok_or_else(|| Error::param("dist", format!("mass #{i} {:?} is not a number", t.as_ref()))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_masses(&masses)
    }

    /// `uniform`, `file:<path>`, or a comma-separated list of masses.
    pub fn from_spec(spec: &str, n: usize) -> Result<Self> {
        let spec = spec.trim();
        let d = if spec.eq_ignore_ascii_case("uniform") {
            Self::uniform(n)?
        } else if let Some(path) = spec.strip_prefix("file:") {
            load_distribution_file(Path::new(path))?
        } else {
            let body = spec.strip_prefix("masses:").unwrap_or(spec);
            let toks: Vec<&str> = body.split(',').collect();
            Self::parse_masses(&toks)?
        };
        if d.n() != n {
            return Err(Error::param("dist", format!("distribution has {} points but the class has {n}", d.n())));
        }
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn denom(&self) -> u128 {
        self.denom
    }

    pub fn weights(&self) -> &[u128] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> u128 {
        self.weights[x]
    }

    pub fn point_mass(&self, x: usize) -> Q {
        q_frac(self.weights[x], self.denom)
    }

    /// Positive-mass points as a mask.
    pub fn support(&self) -> u64 {
        self.weights.iter().enumerate().filter(|(_, &w)| w > 0).fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn mass_weight(&self, region: u64) -> u128 {
        bits_of(region).map(|x| self.weights[x]).sum()
    }

    pub fn mass(&self, region: u64) -> Q {
        q_frac(self.mass_weight(region), self.denom)
    }

    pub fn mass_f64(&self, region: u64) -> f64 {
        self.weight_to_f64(self.mass_weight(region))
    }

    pub fn weight_to_q(&self, w: u128) -> Q {
        q_frac(w, self.denom)
    }

    pub fn weight_to_f64(&self, w: u128) -> f64 {
        q_to_f64(&self.weight_to_q(w))
    }

    pub fn masses(&self) -> Vec<Q> {
        (0..self.n()).map(|x| self.point_mass(x)).collect()
    }

    /// Draws one point exactly proportionally to its weight.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.gen_range(0..self.denom);
        self.cumulative.partition_point(|&c| c <= u)
    }

    pub fn sample_points<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Vec<usize> {
        (0..m).map(|_| self.sample_point(rng)).collect()
    }
}

pub fn save_distribution(d: &Distribution) -> String {
    let mut out = format!("{HEADER}\n");
    for m in d.masses() {
        out.push_str(&format_rational(&m));
        out.push('\n');
    }
    out
}

pub fn load_distribution(text: &str) -> Result<Distribution> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header {HEADER:?}"))),
    }
    let mut masses = Vec::new();
    for (ln, l) in lines {
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        masses.push(parse_rational(t).ok_or_else(|| Error::parse(ln, format!("{t:?} is not a decimal mass")))?);
    }
    if masses.is_empty() {
        return Err(Error::parse(2, "no masses"));
    }
    Distribution::from_masses(&masses)
}

pub fn load_distribution_file(path: &Path) -> Result<Distribution> {
    load_distribution(&std::fs::read_to_string(path)?)
}

pub fn save_distribution_file(d: &Distribution, path: &Path) -> Result<()> {
    std::fs::write(path, save_distribution(d))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_masses() {
        let d = Distribution::uniform(5).unwrap();
        assert_eq!(d.mass(0), q_frac(0, 1));
        assert_eq!(d.mass(0b11111), q_frac(1, 1));
        assert_eq!(d.mass(0b100), q_frac(1, 5));
    }

    #[test]
    fn decimals_are_exact() {
        let d = Distribution::parse_masses(&["0.2", "0.2", "0.2", "0.4"]).unwrap();
        assert_eq!(d.denom(), 5);
        assert_eq!(d.weights(), &[1, 1, 1, 2]);
        assert!(Distribution::parse_masses(&["0.5", "0.4"]).is_err());
        assert!(Distribution::parse_masses(&["-0.5", "1.5"]).is_err());
    }

    #[test]
    fn near_one_sums_are_normalized() {
        let d = Distribution::parse_masses(&["0.3333333333333", "0.3333333333333", "0.3333333333334"]).unwrap();
        assert_eq!(d.mass(0b111), q_frac(1, 1));
    }

    #[test]
    fn file_round_trip() {
        let d = Distribution::from_weights(vec![1, 2, 0, 3]).unwrap();
        let text = save_distribution(&d);
        assert_eq!(load_distribution(&text).unwrap(), d);
        assert_eq!(save_distribution(&load_distribution(&text).unwrap()), text);
        let e = load_distribution("vslab-dist v1\n0.5\nx\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn sampling_never_hits_zero_mass() {
        let d = Distribution::from_weights(vec![0, 1, 0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = d.sample_point(&mut rng);
            assert!(x == 1 || x == 3);
        }
    }
}
