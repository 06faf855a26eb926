//! Dense two-phase simplex over exact rationals.
//!
//! Solves `max c·x` subject to `A x <= b`, `x >= 0`. Entries of `b` may be negative;
//! an auxiliary variable then drives a first phase that finds a feasible basis.

use num_traits::{One, Signed, Zero};

use crate::numeric::Q;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<Q>,
    pub rows: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution {
    Optimal { value: Q, x: Vec<Q> },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn optimal(&self) -> Option<(&Q, &[Q])> {
        match self {
            LpSolution::Optimal { value, x } => Some((value, x)),
            _ => None,
        }
    }
}

struct Tableau {
    t: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col].clone();
        if !p.is_one() {
            let inv = p.recip();
            for v in self.t[row].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[row] *= &inv;
        }
        let prow = self.t[row].clone();
        let prhs = self.rhs[row].clone();
        for i in 0..self.t.len() {
            if i == row {
                continue;
            }
            let f = self.t[i][col].clone();
            if f.is_zero() {
                continue;
            }
            for (j, pv) in prow.iter().enumerate() {
                if !pv.is_zero() {
                    let d = &f * pv;
                    self.t[i][j] -= d;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost · x` from the current feasible basis. Returns false if unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: &dyn Fn(usize) -> bool) -> bool {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            let mut reduced = cost.to_vec();
            for (i, &b) in self.basis.iter().enumerate() {
                if cost[b].is_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    if !self.t[i][j].is_zero() {
                        let d = &cost[b] * &self.t[i][j];
                        reduced[j] -= d;
                    }
                }
            }
            let mut enter: Option<usize> = None;
            for j in 0..self.cols {
                if !allowed(j) || !reduced[j].is_positive() {
                    continue;
                }
                match enter {
                    None => enter = Some(j),
                    Some(e) if !bland && reduced[j] > reduced[e] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(col) = enter else { return true };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((r, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((row, ratio)) = leave else { return false };
            if ratio.is_zero() {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
        }
    }

    fn value(&self, cost: &[Q]) -> Q {
        self.basis.iter().zip(&self.rhs).map(|(&b, r)| &cost[b] * r).sum()
    }
}

pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.objective.len();
    let m = lp.rows.len();
    assert_eq!(lp.rhs.len(), m, "rhs length must match row count");
    let art = n + m;
    let cols = n + m + 1;
    let mut t = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        assert_eq!(row.len(), n, "row width must match objective length");
        let mut r = Vec::with_capacity(cols);
        r.extend(row.iter().cloned());
        r.extend((0..m).map(|k| if k == i { Q::one() } else { Q::zero() }));
        r.push(-Q::one());
        t.push(r);
    }
    let mut tab = Tableau { t, rhs: lp.rhs.clone(), basis: (n..n + m).collect(), cols };

    let worst = (0..m).filter(|&i| tab.rhs[i].is_negative()).min_by(|&a, &b| tab.rhs[a].cmp(&tab.rhs[b]));
    if let Some(row) = worst {
        let mut cost = vec![Q::zero(); cols];
        cost[art] = -Q::one();
        tab.pivot(row, art);
        tab.optimize(&cost, &|_| true);
        if tab.value(&cost).is_negative() {
            return LpSolution::Infeasible;
        }
        if let Some(r) = tab.basis.iter().position(|&b| b == art) {
            if let Some(j) = (0..art).find(|&j| !tab.t[r][j].is_zero()) {
                tab.pivot(r, j);
            }
        }
    }
    let mut cost = vec![Q::zero(); cols];
    cost[..n].clone_from_slice(&lp.objective);
    if !tab.optimize(&cost, &|j| j != art) {
        return LpSolution::Unbounded;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs[i].clone();
        }
    }
    LpSolution::Optimal { value: tab.value(&cost), x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{q_frac, q_int};

    fn q(v: i64) -> Q {
        q_int(v)
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let lp = LinearProgram {
            objective: vec![q(3), q(5)],
            rows: vec![vec![q(1), q(0)], vec![q(0), q(2)], vec![q(3), q(2)]],
            rhs: vec![q(4), q(12), q(18)],
        };
        let sol = solve(&lp);
        let (v, x) = sol.optimal().unwrap();
        assert_eq!(*v, q(36));
        assert_eq!(x, &[q(2), q(6)]);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // max -x - y, x + y >= 2 (i.e. -x - y <= -2), x <= 3 -> -2
        let lp = LinearProgram {
            objective: vec![q(-1), q(-1)],
            rows: vec![vec![q(-1), q(-1)], vec![q(1), q(0)]],
            rhs: vec![q(-2), q(3)],
        };
        assert_eq!(*solve(&lp).optimal().unwrap().0, q(-2));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = LinearProgram { objective: vec![q(1)], rows: vec![vec![q(1)], vec![q(-1)]], rhs: vec![q(1), q(-2)] };
        assert_eq!(solve(&inf), LpSolution::Infeasible);
        let unb = LinearProgram { objective: vec![q(1), q(0)], rows: vec![vec![q(0), q(1)]], rhs: vec![q(1)] };
        assert_eq!(solve(&unb), LpSolution::Unbounded);
    }

    #[test]
    fn fractional_optimum() {
        // max x + y, 3x + y <= 1, x + 3y <= 1 -> 1/2
        let lp = LinearProgram {
            objective: vec![q(1), q(1)],
            rows: vec![vec![q(3), q(1)], vec![q(1), q(3)]],
            rhs: vec![q(1), q(1)],
        };
        assert_eq!(*solve(&lp).optimal().unwrap().0, q_frac(1, 2));
    }
}
