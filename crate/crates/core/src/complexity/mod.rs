//! Distribution-dependent complexity measures over a finite class.

mod cover;
mod phi;

pub use cover::{covering_number, covering_number_with_budget, doubling_dimension, packing, Centers, CoverMode, Covering, Doubling};
pub use phi::{
    certificate_value, phi, phi_c, phi_hat_noise, phi_of_masks, phi_with_budget, PhiMode, PhiResult, SupResult,
    WeightingCertificate, DEFAULT_PHI_BUDGET,
};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::concept::ConceptClass;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{q_u128, Q};
use crate::version_space::{dis_of, VersionSpaceView};

/// Distinct distances from a center, with the closed ball at each distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadiusProfile {
    pub center: u64,
    /// Distances in weight units (numerators over the distribution denominator), strictly increasing.
    pub radii: Vec<u128>,
    /// `balls[j]` holds every hypothesis index at distance at most `radii[j]`.
    pub balls: Vec<Vec<usize>>,
}

impl RadiusProfile {
    pub fn new(c: &ConceptClass, center: u64, dist: &Distribution) -> Self {
        let mut by_dist: Vec<(u128, usize)> = c.masks().iter().enumerate().map(|(i, &h)| (dist.mass_weight(h ^ center), i)).collect();
        by_dist.sort_unstable();
        let mut radii = Vec::new();
        let mut balls: Vec<Vec<usize>> = Vec::new();
        let mut acc: Vec<usize> = Vec::new();
        for (k, &(d, i)) in by_dist.iter().enumerate() {
            acc.push(i);
            if k + 1 == by_dist.len() || by_dist[k + 1].0 != d {
                radii.push(d);
                let mut b = acc.clone();
                b.sort_unstable();
                balls.push(b);
            }
        }
        RadiusProfile { center, radii, balls }
    }

    /// Closed ball of radius `w` in weight units.
    pub fn ball_at_weight(&self, w: u128) -> VersionSpaceView {
        let j = self.radii.partition_point(|&r| r <= w);
        if j == 0 {
            VersionSpaceView::new(vec![])
        } else {
            VersionSpaceView::new(self.balls[j - 1].clone())
        }
    }
}

/// `floor(r * D)`: the largest weight not exceeding radius `r`.
pub fn radius_to_weight(r: &Q, dist: &Distribution) -> u128 {
    if r.is_zero() || r < &Q::zero() {
        return 0;
    }
    let scaled = (r * q_u128(dist.denom())).floor().to_integer();
    num_traits::ToPrimitive::to_u128(&scaled).unwrap_or(u128::MAX)
}

pub fn ball(c: &ConceptClass, center: u64, r: &Q, dist: &Distribution) -> VersionSpaceView {
    let w = radius_to_weight(r, dist);
    let members = c.masks().iter().enumerate().filter(|(_, &h)| dist.mass_weight(h ^ center) <= w).map(|(i, _)| i).collect();
    VersionSpaceView::new(members)
}

fn check_target(c: &ConceptClass, target: u64) -> Result<()> {
    if c.contains(target) {
        Ok(())
    } else {
        Err(Error::domain("target is not a member of the class"))
    }
}

/// Disagreement coefficient, evaluated over the radius breakpoints above `r0` and the right limit at `r0`.
pub fn disagreement_coefficient(c: &ConceptClass, dist: &Distribution, target: u64, r0: &Q) -> Result<Q> {
    check_target(c, target)?;
    if r0 < &Q::zero() {
        return Err(Error::domain("r0 must be nonnegative"));
    }
    let profile = RadiusProfile::new(c, target, dist);
    let d = q_u128(dist.denom());
    let dis_mass = |ball: &[usize]| {
        let masks: Vec<u64> = ball.iter().map(|&i| c.mask(i)).collect();
        dist.mass(dis_of(&masks))
    };
    let mut best = Q::from_integer(1.into());
    if r0 > &Q::zero() {
        let b = profile.ball_at_weight(radius_to_weight(r0, dist));
        let v = dis_mass(b.members()) / r0;
        if v > best {
            best = v;
        }
    }
    for (j, &rw) in profile.radii.iter().enumerate() {
        let rho = q_u128(rw) / &d;
        if rw == 0 || &rho <= r0 {
            continue;
        }
        let v = dis_mass(&profile.balls[j]) / rho;
        if v > best {
            best = v;
        }
    }
    Ok(best)
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
    fn ball_examples() {
        let c = class("star(4)");
        let d = Distribution::uniform(4).unwrap();
        assert_eq!(ball(&c, 0, &q_frac(1, 4), &d).len(), 5);
        assert_eq!(ball(&c, 0, &q_int(1), &d).len(), 5);
        assert_eq!(ball(&c, 0, &q_int(0), &d).members(), &[0]);
        let dz = Distribution::from_weights(vec![1, 1, 1, 0]).unwrap();
        assert_eq!(ball(&c, 0, &q_int(0), &dz).members(), &[0, 4]);
    }

    #[test]
    fn theta_examples() {
        let c = class("star(4)");
        let d = Distribution::uniform(4).unwrap();
        assert_eq!(disagreement_coefficient(&c, &d, 0, &q_int(0)).unwrap(), q_int(4));
        assert_eq!(disagreement_coefficient(&c, &d, 0, &q_frac(1, 2)).unwrap(), q_int(2));
        let t = class("thresholds(5)");
        let point = Distribution::from_weights(vec![0, 0, 1, 0, 0]).unwrap();
        assert!(disagreement_coefficient(&t, &d, 0, &q_int(-1)).is_err());
        // every ball around h0 with radius below 1 has a zero-mass disagreement region
        assert_eq!(disagreement_coefficient(&t, &point, t.mask(0), &q_int(0)).unwrap(), q_int(1));
    }

    #[test]
    fn profile_balls_grow() {
        let c = class("intervals(6)");
        let d = Distribution::uniform(6).unwrap();
        let p = RadiusProfile::new(&c, c.mask(3), &d);
        assert!(p.radii.windows(2).all(|w| w[0] < w[1]));
        assert!(p.balls[0].contains(&3));
        assert!(p.balls.windows(2).all(|w| w[0].len() < w[1].len()));
    }
}
