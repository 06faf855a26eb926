use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{check_target, radius_to_weight, RadiusProfile};
use crate::concept::{bit, bits_of, ConceptClass};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, LpSolution};
use crate::numeric::{f64_to_q, q_u128, q_to_f64, Q};
use crate::version_space::{dis_of, VersionSpaceView};

pub const DEFAULT_PHI_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiMode {
    Real,
    Binary,
}

impl std::str::FromStr for PhiMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(PhiMode::Real),
            "binary" => Ok(PhiMode::Binary),
            _ => Err(Error::param("mode", format!("{s:?} is not real|binary"))),
        }
    }
}

/// Per-point weights with `gamma + zeta + xi = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightingCertificate {
    pub gamma: Vec<Q>,
    pub zeta: Vec<Q>,
    pub xi: Vec<Q>,
}

impl Serialize for WeightingCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Point {
            gamma: [String; 2],
            zeta: [String; 2],
            xi: [String; 2],
        }
        let pair = |q: &Q| [q.numer().to_string(), q.denom().to_string()];
        let pts: Vec<Point> = (0..self.gamma.len())
            .map(|i| Point { gamma: pair(&self.gamma[i]), zeta: pair(&self.zeta[i]), xi: pair(&self.xi[i]) })
            .collect();
        pts.serialize(s)
    }
}

impl WeightingCertificate {
    /// Points with `gamma = 1`.
    pub fn gamma_one_region(&self) -> u64 {
        self.gamma.iter().enumerate().filter(|(_, g)| g.is_one()).fold(0, |m, (i, _)| m | bit(i))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiResult {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub certificate: WeightingCertificate,
    /// Branch-and-bound nodes (binary mode) or 1 (real mode).
    pub nodes: u64,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

pub fn phi(c: &ConceptClass, view: &VersionSpaceView, dist: &Distribution, eta: &Q, mode: PhiMode) -> Result<PhiResult> {
    phi_of_masks(&view.masks(c), dist, eta, mode)
}

pub fn phi_of_masks(masks: &[u64], dist: &Distribution, eta: &Q, mode: PhiMode) -> Result<PhiResult> {
    phi_with_budget(masks, dist, eta, mode, DEFAULT_PHI_BUDGET)
}

struct Setup {
    n: usize,
    /// Positive-mass disagreement points, increasing.
    support: Vec<usize>,
    /// Distinct restrictions `h & S` of the hypotheses to the support set.
    patterns: Vec<u64>,
    weights: Vec<Q>,
    rhs: Q,
    /// Labels agreed by every hypothesis off the disagreement region.
    agreed: u64,
}

/// Baseline certificate: gamma = 1 on `region`, and zero-cost weights elsewhere.
fn base_certificate(s: &Setup, gamma_one: u64) -> WeightingCertificate {
    let mut gamma = vec![Q::zero(); s.n];
    let mut zeta = vec![Q::zero(); s.n];
    let mut xi = vec![Q::zero(); s.n];
    for x in 0..s.n {
        if gamma_one >> x & 1 == 1 {
            gamma[x] = Q::one();
        } else if s.agreed >> x & 1 == 1 {
            xi[x] = Q::one();
        } else {
            zeta[x] = Q::one();
        }
    }
    WeightingCertificate { gamma, zeta, xi }
}

pub fn phi_with_budget(masks: &[u64], dist: &Distribution, eta: &Q, mode: PhiMode, budget: u64) -> Result<PhiResult> {
    if masks.is_empty() {
        return Err(Error::domain("phi of an empty set of classifiers"));
    }
    if eta.is_negative() {
        return Err(Error::domain("eta must be nonnegative"));
    }
    let n = dist.n();
    let dis = dis_of(masks);
    let sup = dis & dist.support();
    let support: Vec<usize> = bits_of(sup).collect();
    let patterns: Vec<u64> = masks.iter().map(|&h| h & sup).collect::<BTreeSet<_>>().into_iter().collect();
    let setup = Setup {
        n,
        weights: support.iter().map(|&x| q_u128(dist.weight(x))).collect(),
        support,
        patterns,
        rhs: eta * q_u128(dist.denom()),
        agreed: masks[0] & !dis,
    };
    if setup.support.is_empty() || eta >= &Q::one() {
        return Ok(PhiResult { value: Q::zero(), certificate: base_certificate(&setup, 0), nodes: 0 });
    }
    match mode {
        PhiMode::Real => {
            let fixed = vec![Fix::Free; setup.support.len()];
            let (opt, cert) = relaxation(&setup, &fixed).expect("all-free relaxation is feasible");
            let total: Q = setup.weights.iter().sum();
            Ok(PhiResult { value: (total - opt) / q_u128(dist.denom()), certificate: cert, nodes: 1 })
        }
        PhiMode::Binary => branch_and_bound(&setup, dist, budget),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fix {
    Free,
    One,
    Zero,
}

/// Solves the relaxation with some gamma values fixed. Returns the maximized `sum w (zeta + xi)` over free
/// points and the full certificate.
fn relaxation(s: &Setup, fixed: &[Fix]) -> Option<(Q, WeightingCertificate)> {
    // column layout: free points get (zeta, xi), gamma-zero points get zeta only
    let mut col_of = vec![(usize::MAX, usize::MAX); s.support.len()];
    let mut ncols = 0;
    for (i, f) in fixed.iter().enumerate() {
        match f {
            Fix::Free => {
                col_of[i] = (ncols, ncols + 1);
                ncols += 2;
            }
            Fix::Zero => {
                col_of[i] = (ncols, usize::MAX);
                ncols += 1;
            }
            Fix::One => {}
        }
    }
    let mut objective = vec![Q::zero(); ncols];
    for (i, f) in fixed.iter().enumerate() {
        if *f == Fix::Free {
            objective[col_of[i].0] = s.weights[i].clone();
            objective[col_of[i].1] = s.weights[i].clone();
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for &p in &s.patterns {
        let mut row = vec![Q::zero(); ncols];
        let mut r = s.rhs.clone();
        for (i, &x) in s.support.iter().enumerate() {
            let positive = p >> x & 1 == 1;
            match fixed[i] {
                Fix::Free => {
                    let col = if positive { col_of[i].0 } else { col_of[i].1 };
                    row[col] = s.weights[i].clone();
                }
                Fix::Zero => {
                    // xi = 1 - zeta
                    if positive {
                        row[col_of[i].0] = s.weights[i].clone();
                    } else {
                        row[col_of[i].0] = -s.weights[i].clone();
                        r -= &s.weights[i];
                    }
                }
                Fix::One => {}
            }
        }
        rows.push(row);
        rhs.push(r);
    }
    for (i, f) in fixed.iter().enumerate() {
        if *f == Fix::One {
            continue;
        }
        let mut row = vec![Q::zero(); ncols];
        row[col_of[i].0] = Q::one();
        if *f == Fix::Free {
            row[col_of[i].1] = Q::one();
        }
        rows.push(row);
        rhs.push(Q::one());
    }
    let sol = solve(&LinearProgram { objective, rows, rhs });
    let (value, x) = match sol {
        LpSolution::Optimal { value, x } => (value, x),
        LpSolution::Infeasible => return None,
        LpSolution::Unbounded => unreachable!("phi relaxation is bounded"),
    };
    let mut cert = base_certificate(s, 0);
    for (i, &pt) in s.support.iter().enumerate() {
        let (z, xi) = match fixed[i] {
            Fix::Free => (x[col_of[i].0].clone(), x[col_of[i].1].clone()),
            Fix::Zero => (x[col_of[i].0].clone(), Q::one() - &x[col_of[i].0]),
            Fix::One => (Q::zero(), Q::zero()),
        };
        cert.gamma[pt] = Q::one() - &z - &xi;
        cert.zeta[pt] = z;
        cert.xi[pt] = xi;
    }
    Some((value, cert))
}

fn branch_and_bound(s: &Setup, dist: &Distribution, budget: u64) -> Result<PhiResult> {
    let denom = q_u128(dist.denom());
    let total: Q = s.weights.iter().sum();
    let all = s.support.iter().fold(0u64, |m, &x| m | bit(x));
    let mut best_val = total.clone();
    let mut best_cert = base_certificate(s, all);
    let mut nodes = 0u64;
    let mut stack = vec![vec![Fix::Free; s.support.len()]];
    while let Some(fixed) = stack.pop() {
        nodes += 1;
        if nodes > budget {
            return Err(Error::Budget(format!("binary phi search exceeded {budget} nodes")));
        }
        let Some((opt, cert)) = relaxation(s, &fixed) else { continue };
        let mut bound = -opt;
        for (i, f) in fixed.iter().enumerate() {
            if *f != Fix::Zero {
                bound += &s.weights[i];
            }
        }
        if bound >= best_val {
            continue;
        }
        let frac = s.support.iter().enumerate().find(|(i, &x)| fixed[*i] == Fix::Free && !cert.gamma[x].is_zero() && !cert.gamma[x].is_one());
        match frac {
            None => {
                best_val = bound;
                best_cert = cert;
            }
            Some((i, _)) => {
                let mut one = fixed.clone();
                one[i] = Fix::One;
                let mut zero = fixed;
                zero[i] = Fix::Zero;
                // explored first: gamma = 0
                stack.push(one);
                stack.push(zero);
            }
        }
    }
    Ok(PhiResult { value: best_val / denom, certificate: best_cert, nodes })
}

/// Value `E[gamma]` of a certificate if it satisfies every constraint exactly.
pub fn certificate_value(masks: &[u64], dist: &Distribution, eta: &Q, cert: &WeightingCertificate) -> Option<Q> {
    let n = dist.n();
    for x in 0..n {
        let (g, z, xi) = (&cert.gamma[x], &cert.zeta[x], &cert.xi[x]);
        if g.is_negative() || z.is_negative() || xi.is_negative() || !(g + z + xi).is_one() {
            return None;
        }
    }
    for &h in masks {
        let load: Q = (0..n).map(|x| dist.point_mass(x) * if h >> x & 1 == 1 { &cert.zeta[x] } else { &cert.xi[x] }).sum();
        if &load > eta {
            return None;
        }
    }
    Some((0..n).map(|x| dist.point_mass(x) * &cert.gamma[x]).sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct SupResult {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    /// Radius attaining the supremum (None when the floor of 1 is binding).
    pub radius: Option<String>,
    pub center: Option<usize>,
}

/// Candidate radii: the right limit at `r0` (as `r0` itself, when positive) and each breakpoint above `r0`.
fn sup_candidates(profile: &RadiusProfile, dist: &Distribution, r0: &Q) -> Vec<(Q, VersionSpaceView)> {
    let d = q_u128(dist.denom());
    let mut out = Vec::new();
    if r0.is_positive() {
        out.push((r0.clone(), profile.ball_at_weight(radius_to_weight(r0, dist))));
    }
    for (j, &rw) in profile.radii.iter().enumerate() {
        let rho = q_u128(rw) / &d;
        if rw > 0 && &rho > r0 {
            out.push((rho, VersionSpaceView::new(profile.balls[j].clone())));
        }
    }
    out
}

pub fn phi_c(c: &ConceptClass, dist: &Distribution, target: u64, r0: &Q, cc: &Q, mode: PhiMode) -> Result<SupResult> {
    check_target(c, target)?;
    if cc <= &Q::one() {
        return Err(Error::domain("c must exceed 1"));
    }
    if r0.is_negative() || r0 >= &Q::one() {
        return Err(Error::domain("r0 must lie in [0, 1)"));
    }
    let profile = RadiusProfile::new(c, target, dist);
    let mut best = SupResult { value: Q::one(), radius: None, center: None };
    for (rho, b) in sup_candidates(&profile, dist, r0) {
        let v = phi(c, &b, dist, &(&rho / cc), mode)?.value / &rho;
        if v > best.value {
            best = SupResult { value: v, radius: Some(rho.to_string()), center: None };
        }
    }
    Ok(best)
}

/// Noise-adapted measure: supremum over every center `h` and radius `r > r0` of `Phi(B(h,r), (r/a)^(1/alpha)/c) / r`.
pub fn phi_hat_noise(c: &ConceptClass, dist: &Distribution, a: &Q, alpha: f64, r0: &Q, cc: &Q) -> Result<SupResult> {
    if a < &Q::one() {
        return Err(Error::domain("a must be at least 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha must lie in (0, 1]"));
    }
    if cc <= &Q::one() {
        return Err(Error::domain("c must exceed 1"));
    }
    if r0.is_negative() {
        return Err(Error::domain("r0 must be nonnegative"));
    }
    let mut best = SupResult { value: Q::one(), radius: None, center: None };
    if r0 >= &Q::one() {
        return Ok(best);
    }
    let eta_of = |rho: &Q| -> Result<Q> {
        if alpha == 1.0 {
            Ok(rho / a / cc)
        } else {
            f64_to_q((q_to_f64(&(rho / a))).powf(1.0 / alpha) / q_to_f64(cc))
        }
    };
    for (ci, &center) in c.masks().iter().enumerate() {
        let profile = RadiusProfile::new(c, center, dist);
        for (rho, b) in sup_candidates(&profile, dist, r0) {
            let v = phi(c, &b, dist, &eta_of(&rho)?, PhiMode::Real)?.value / &rho;
            if v > best.value {
                best = SupResult { value: v, radius: Some(rho.to_string()), center: Some(ci) };
            }
        }
    }
    Ok(best)
}
