use std::collections::HashMap;
use std::sync::Mutex;

use num_traits::One;
use rand::Rng;
use serde::Serialize;

use super::{empirical_mistakes, u_complexity};
use crate::complexity::{phi_hat_noise, phi_with_budget, PhiMode, DEFAULT_PHI_BUDGET};
use crate::concept::{vc_dimension, ConceptClass};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::noise::{sample_labeled, Labeler, NoiseModel};
use crate::numeric::{f64_to_q, log_e, q_int, q_to_f64, Q};
use crate::version_space::LabeledSample;

/// Constant in the subregion measure used by the schedule.
const C_SUB: f64 = 128.0;

#[derive(Clone, Debug, Serialize)]
pub struct Algo1Params {
    pub m: usize,
    pub delta: f64,
    #[serde(serialize_with = "ser_q")]
    pub a: Q,
    pub alpha: f64,
    pub c0: f64,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

/// The `eta_k` / `delta_k` schedule. It depends only on the class, the distribution and the parameters, so it is
/// computed once and shared across runs.
#[derive(Clone, Debug, Serialize)]
pub struct Algo1Plan {
    pub params: Algo1Params,
    pub rounds: usize,
    pub dim: usize,
    pub deltas: Vec<f64>,
    pub radii: Vec<Option<f64>>,
    /// Noise-adapted measure at each round's radius (`None` when the schedule already forces `eta >= 1`).
    pub phi_hat: Vec<Option<f64>>,
    #[serde(skip)]
    pub etas: Vec<Q>,
}

impl Algo1Plan {
    pub fn new(c: &ConceptClass, dist: &Distribution, params: Algo1Params) -> Result<Self> {
        if params.m < 2 {
            return Err(Error::param("m", "must be at least 2"));
        }
        if !(params.delta > 0.0 && params.delta < 1.0) {
            return Err(Error::param("delta", "must lie in (0, 1)"));
        }
        if params.a < Q::one() {
            return Err(Error::param("a", "must be at least 1"));
        }
        if !(params.alpha > 0.0 && params.alpha <= 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1]"));
        }
        if params.c0 <= 1.0 {
            return Err(Error::param("c0", "must exceed 1"));
        }
        let m = params.m as f64;
        let rounds = (params.m as f64).log2().floor() as usize;
        let deltas: Vec<f64> = (0..rounds).map(|k| params.delta / ((2.0 * m).log2() - k as f64).powi(2)).collect();
        let dim = vc_dimension(c);
        let d = dim as f64;
        let a = q_to_f64(&params.a);
        let alpha = params.alpha;
        let expo = alpha / (2.0 - alpha);
        let c1 = (32.0 * params.c0).powf(2.0 * alpha / (2.0 - alpha));
        let eta_of = |r: f64| (2.0 / C_SUB) * (r / a).powf(1.0 / alpha);
        let mut etas = vec![q_int(2) / f64_to_q(C_SUB)?];
        let mut radii = vec![None];
        let mut phi_hat = vec![None];
        let mut memo: HashMap<String, f64> = HashMap::new();
        for k in 1..rounds {
            let scale = a * 2f64.powi(1 - k as i32);
            let conf = log_e(1.0 / deltas[k - 1]);
            // Log >= 1, so this radius is a lower bound on the scheduled one
            let r_floor = a * c1 * (scale * (d + conf)).powf(expo);
            if eta_of(r_floor) >= 1.0 {
                etas.push(f64_to_q(eta_of(r_floor))?);
                radii.push(Some(r_floor));
                phi_hat.push(None);
                continue;
            }
            let r0 = f64_to_q(a * (a * d * 2f64.powi(1 - k as i32)).powf(expo))?;
            let key = r0.to_string();
            let ph = match memo.get(&key) {
                Some(&v) => v,
                None => {
                    let v = q_to_f64(&phi_hat_noise(c, dist, &params.a, alpha, &r0, &f64_to_q(C_SUB)?)?.value);
                    memo.insert(key, v);
                    v
                }
            };
            let r = a * c1 * (scale * (d * log_e(ph) + conf)).powf(expo);
            etas.push(f64_to_q(eta_of(r))?);
            radii.push(Some(r));
            phi_hat.push(Some(ph));
        }
        etas.truncate(rounds);
        radii.truncate(rounds);
        phi_hat.truncate(rounds);
        Ok(Algo1Plan { params, rounds, dim, deltas, radii, phi_hat, etas })
    }
}

/// Shared memo of the binary-measure regions, keyed by the current hypothesis set and `eta`.
#[derive(Default)]
pub struct Algo1Cache {
    regions: Mutex<HashMap<(Vec<usize>, Q), u64>>,
}

impl Algo1Cache {
    fn region(&self, c: &ConceptClass, dist: &Distribution, members: &[usize], eta: &Q) -> Result<u64> {
        let key = (members.to_vec(), eta.clone());
        if let Some(&r) = self.regions.lock().expect("cache lock").get(&key) {
            return Ok(r);
        }
        let masks: Vec<u64> = members.iter().map(|&i| c.mask(i)).collect();
        let r = phi_with_budget(&masks, dist, eta, PhiMode::Binary, DEFAULT_PHI_BUDGET)?.certificate.gamma_one_region();
        self.regions.lock().expect("cache lock").insert(key, r);
        Ok(r)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Algo1Round {
    pub k: usize,
    pub eta: f64,
    pub delta_k: f64,
    pub region_mass: f64,
    pub d_size: usize,
    pub g_size: usize,
    pub u: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Algo1RunRecord {
    pub rounds: Vec<Algo1Round>,
    pub final_index: usize,
    pub final_members: Vec<usize>,
}

pub fn run_algorithm1<R: Rng + ?Sized>(
    c: &ConceptClass,
    dist: &Distribution,
    noise: &NoiseModel,
    plan: &Algo1Plan,
    cache: &Algo1Cache,
    rng: &mut R,
) -> Result<Algo1RunRecord> {
    if noise.n() != dist.n() {
        return Err(Error::domain("noise model and distribution sizes differ"));
    }
    let sample = sample_labeled(dist, &Labeler::Noise(noise), plan.params.m, rng);
    let mut g: Vec<usize> = (0..c.len()).collect();
    let mut rounds = Vec::with_capacity(plan.rounds);
    for k in 0..plan.rounds {
        let eta = &plan.etas[k];
        let region = cache.region(c, dist, &g, eta)?;
        let d_k = LabeledSample::new(sample.pairs[1 << k..1 << (k + 1)].iter().copied().filter(|&(x, _)| region >> x & 1 == 1).collect());
        let masks: Vec<u64> = g.iter().map(|&i| c.mask(i)).collect();
        let mistakes = empirical_mistakes(&masks, &d_k);
        let best = mistakes.iter().copied().min().unwrap_or(0);
        let u = u_complexity(&masks, dist, 1 << k, plan.deltas[k], region, plan.params.c0)?;
        let threshold = (4.0 * q_to_f64(eta)).max(u);
        let scale = (1u64 << k) as f64;
        rounds.push(Algo1Round {
            k,
            eta: q_to_f64(eta),
            delta_k: plan.deltas[k],
            region_mass: dist.mass_f64(region),
            d_size: d_k.len(),
            g_size: g.len(),
            u,
        });
        g = g.iter().zip(&mistakes).filter(|(_, &mk)| (mk - best) as f64 / scale <= threshold).map(|(&i, _)| i).collect();
    }
    Ok(Algo1RunRecord { rounds, final_index: g[0], final_members: g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::{make_class, ClassSpec};
    use crate::noise::bounded_noise_from;
    use crate::numeric::q_frac;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(beta: Q) -> (ConceptClass, Distribution, NoiseModel) {
        let c = make_class(&"thresholds(5)".parse::<ClassSpec>().unwrap()).unwrap();
        let d = Distribution::uniform(5).unwrap();
        let nm = bounded_noise_from(c.mask(2), 5, &beta, c.full_mask()).unwrap();
        (c, d, nm)
    }

    fn params(m: usize, beta: f64) -> Algo1Params {
        Algo1Params { m, delta: 0.1, a: f64_to_q(1.0 / (1.0 - 2.0 * beta)).unwrap(), alpha: 1.0, c0: 2.0 }
    }

    #[test]
    fn round_count_and_deltas() {
        let (c, d, nm) = setup(q_frac(1, 10));
        let plan = Algo1Plan::new(&c, &d, params(8, 0.1)).unwrap();
        assert_eq!(plan.rounds, 3);
        for (k, dk) in plan.deltas.iter().enumerate() {
            assert_eq!(*dk, 0.1 / (4.0 - k as f64).powi(2));
        }
        assert!(plan.deltas.iter().sum::<f64>() < 0.1);
        let cache = Algo1Cache::default();
        let r = run_algorithm1(&c, &d, &nm, &plan, &cache, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.rounds.len(), 3);
        assert!(r.rounds.windows(2).all(|w| w[1].g_size <= w[0].g_size));
    }

    #[test]
    fn realizable_keeps_consistent_member() {
        let (c, d, nm) = setup(q_int(0));
        let plan = Algo1Plan::new(&c, &d, params(64, 0.0)).unwrap();
        let cache = Algo1Cache::default();
        for seed in 0..10 {
            let r = run_algorithm1(&c, &d, &nm, &plan, &cache, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(r.final_members.contains(&2));
        }
        assert!(Algo1Plan::new(&c, &d, params(1, 0.0)).is_err());
    }
}
