//! Brute-force reference implementations, written without reuse of the library's search code.
#![allow(dead_code)]

use rand::Rng;
use vslab::concept::{ConceptClass, InstanceSpace};

pub fn random_class<R: Rng>(rng: &mut R, max_n: usize, max_size: usize) -> ConceptClass {
    let n = rng.gen_range(2..=max_n);
    let size = rng.gen_range(3..=max_size.min(1 << n));
    let mut masks: Vec<u64> = Vec::new();
    while masks.len() < size {
        let h = rng.gen_range(0..1u64 << n);
        if !masks.contains(&h) {
            masks.push(h);
        }
    }
    ConceptClass::new("random", InstanceSpace::indexed(n).unwrap(), masks).unwrap()
}

fn subsets(n: usize) -> impl Iterator<Item = u64> {
    0..1u64 << n
}

pub fn vc_brute(masks: &[u64], n: usize) -> usize {
    let mut best = 0;
    for s in subsets(n) {
        let k = s.count_ones() as usize;
        if k <= best {
            continue;
        }
        let mut seen = std::collections::HashSet::new();
        for &h in masks {
            seen.insert(h & s);
        }
        if seen.len() == 1 << k {
            best = k;
        }
    }
    best
}

pub fn star_brute(masks: &[u64], n: usize) -> usize {
    let mut best = 0;
    for s in subsets(n) {
        let k = s.count_ones() as usize;
        if k <= best {
            continue;
        }
        let ok = masks.iter().any(|&h0| {
            (0..n).filter(|x| s >> x & 1 == 1).all(|x| masks.iter().any(|&h| (h ^ h0) & s == 1 << x))
        });
        if ok {
            best = k;
        }
    }
    best
}

fn consistent(masks: &[u64], pairs: &[(usize, i8)]) -> Vec<u64> {
    masks.iter().copied().filter(|&h| pairs.iter().all(|&(x, y)| ((h >> x & 1 == 1) as i8 * 2 - 1) == y)).collect()
}

/// Smallest subsample (by positions) whose version space equals that of the full sample.
pub fn compression_brute(masks: &[u64], pairs: &[(usize, i8)]) -> usize {
    let full = consistent(masks, pairs);
    let m = pairs.len();
    (0..=m)
        .find(|&k| {
            (0u64..1 << m).filter(|s| s.count_ones() as usize == k).any(|s| {
                let sub: Vec<(usize, i8)> = (0..m).filter(|i| s >> i & 1 == 1).map(|i| pairs[i]).collect();
                consistent(masks, &sub) == full
            })
        })
        .unwrap()
}

/// Minimum of `E[gamma]` in floating point by enumerating every vertex of the polytope in `(zeta, xi)` with
/// `gamma = 1 - zeta - xi` on every point, inside the disagreement region or not.
pub fn phi_vertex_enumeration(masks: &[u64], probs: &[f64], eta: f64) -> f64 {
    let n = probs.len();
    let nv = 2 * n;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for &h in masks {
        let mut a = vec![0.0; nv];
        for x in 0..n {
            if h >> x & 1 == 1 {
                a[2 * x] = probs[x];
            } else {
                a[2 * x + 1] = probs[x];
            }
        }
        rows.push((a, eta));
    }
    for x in 0..n {
        let mut a = vec![0.0; nv];
        a[2 * x] = 1.0;
        a[2 * x + 1] = 1.0;
        rows.push((a, 1.0));
        for j in 0..2 {
            let mut a = vec![0.0; nv];
            a[2 * x + j] = -1.0;
            rows.push((a, 0.0));
        }
    }
    let total: f64 = probs.iter().sum();
    // maximize sum P (zeta + xi)
    let gain: Vec<f64> = (0..nv).map(|v| probs[v / 2]).collect();
    let mut best = f64::NEG_INFINITY;
    let mut choose = Vec::new();
    enumerate(&rows, nv, 0, &mut choose, &gain, &mut best);
    total - best
}

fn enumerate(rows: &[(Vec<f64>, f64)], nv: usize, start: usize, choose: &mut Vec<usize>, obj: &[f64], best: &mut f64) {
    if choose.len() == nv {
        if let Some(x) = solve_square(rows, choose, nv) {
            if rows.iter().all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9) {
                let v: f64 = obj.iter().zip(&x).map(|(p, q)| p * q).sum();
                if v > *best {
                    *best = v;
                }
            }
        }
        return;
    }
    for i in start..rows.len() {
        if rows.len() - i < nv - choose.len() {
            break;
        }
        choose.push(i);
        enumerate(rows, nv, i + 1, choose, obj, best);
        choose.pop();
    }
}

fn solve_square(rows: &[(Vec<f64>, f64)], choose: &[usize], nv: usize) -> Option<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = choose.iter().map(|&i| {
        let mut r = rows[i].0.clone();
        r.push(rows[i].1);
        r
    }).collect();
    for col in 0..nv {
        let piv = (col..nv).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..nv {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=nv {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..nv).map(|i| m[i][nv] / m[i][i]).collect())
}
