//! Closed-form bound evaluators.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{div0, log_2, log_e, mul0, parse_rational, q_to_f64};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundResult {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub value: f64,
    /// The value exceeds 1 (only meaningful for bounds on probabilities or error rates).
    pub clamped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Domain {
    /// `x >= 0`
    NonNeg,
    /// `x >= 1`
    AtLeastOne,
    /// `0 < x < 1`
    Open01,
    /// `0 < x <= 1`
    HalfOpen01,
    /// `0 < x < 1/2`
    Half,
    /// `x > 0`
    Positive,
}

impl Domain {
    fn check(self, v: f64) -> bool {
        match self {
            Domain::NonNeg => v >= 0.0,
            Domain::AtLeastOne => v >= 1.0,
            Domain::Open01 => v > 0.0 && v < 1.0,
            Domain::HalfOpen01 => v > 0.0 && v <= 1.0,
            Domain::Half => v > 0.0 && v < 0.5,
            Domain::Positive => v > 0.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Domain::NonNeg => "must be nonnegative",
            Domain::AtLeastOne => "must be at least 1",
            Domain::Open01 => "must lie in (0, 1)",
            Domain::HalfOpen01 => "must lie in (0, 1]",
            Domain::Half => "must lie in (0, 1/2)",
            Domain::Positive => "must be positive",
        }
    }
}

fn domain_of(param: &str) -> Domain {
    match param {
        "m" | "a" | "M" => Domain::AtLeastOne,
        "delta" => Domain::Open01,
        "alpha" => Domain::HalfOpen01,
        "beta" => Domain::Half,
        "constant" => Domain::Positive,
        _ => Domain::NonNeg,
    }
}

struct Formula {
    name: &'static str,
    params: &'static [&'static str],
    rate: bool,
    eval: fn(&P) -> f64,
}

struct P(BTreeMap<&'static str, f64>);

impl P {
    fn get(&self, k: &str) -> f64 {
        self.0[k]
    }
}

/// `a (dim Log(L) + Log(1/delta)) / m` raised to `1/(2 - alpha)`.
fn bernstein_shape(p: &P, log_arg: f64, with_delta: bool) -> f64 {
    let (a, alpha, d, m) = (p.get("a"), p.get("alpha"), p.get("dim"), p.get("m"));
    let conf = if with_delta { log_e(1.0 / p.get("delta")) } else { 0.0 };
    p.get("constant") * (a * (mul0(d, log_e(log_arg)) + conf) / m).powf(1.0 / (2.0 - alpha))
}

/// `(1/a) (m / (a dim))^(alpha/(2-alpha))`
fn bernstein_log_arg(p: &P) -> f64 {
    let (a, alpha, d, m) = (p.get("a"), p.get("alpha"), p.get("dim"), p.get("m"));
    div0(m, a * d).powf(alpha / (2.0 - alpha)) / a
}

const FORMULAS: &[Formula] = &[
    Formula {
        name: "monotone_vc",
        params: &["vc", "m", "delta"],
        rate: true,
        eval: |p| 4.0 / p.get("m") * (17.0 * p.get("vc") + 4.0 * (4.0 / p.get("delta")).ln()),
    },
    Formula { name: "monotone_vc_expectation", params: &["vc", "m"], rate: true, eval: |p| 68.0 * (p.get("vc") + 1.0) / p.get("m") },
    Formula {
        name: "classic_vapnik",
        params: &["vc", "m", "delta"],
        rate: true,
        eval: |p| {
            let (vc, m) = (p.get("vc"), p.get("m"));
            2.0 / m * (mul0(vc, log_2(div0(2.0 * std::f64::consts::E * m, vc))) + log_2(2.0 / p.get("delta")))
        },
    },
    Formula {
        name: "compression_lemma",
        params: &["n", "m", "delta"],
        rate: true,
        eval: |p| {
            let (n, m) = (p.get("n"), p.get("m"));
            (mul0(n, log_e(div0(std::f64::consts::E * m, n))) + log_e(1.0 / p.get("delta"))) / (m - n)
        },
    },
    Formula {
        name: "monotone_compression",
        params: &["n", "m", "delta"],
        rate: true,
        eval: |p| (21.0 * p.get("n") + 16.0 * (3.0 / p.get("delta")).ln()) / p.get("m"),
    },
    Formula { name: "monotone_compression_expectation", params: &["n", "m"], rate: true, eval: |p| (21.0 * p.get("n") + 34.0) / p.get("m") },
    Formula {
        name: "closure",
        params: &["dim", "m", "delta"],
        rate: true,
        eval: |p| (21.0 * p.get("dim") + 16.0 * (3.0 / p.get("delta")).ln()) / p.get("m"),
    },
    Formula { name: "closure_expectation", params: &["dim", "m"], rate: true, eval: |p| (21.0 * p.get("dim") + 34.0) / p.get("m") },
    Formula {
        name: "pdis_nhat",
        params: &["nhat", "m", "delta"],
        rate: true,
        eval: |p| 16.0 / p.get("m") * (2.0 * p.get("nhat") + (3.0 / p.get("delta")).ln()),
    },
    Formula {
        name: "pdis_star",
        params: &["star", "m", "delta"],
        rate: true,
        eval: |p| (21.0 * p.get("star") + 16.0 * (3.0 / p.get("delta")).ln()) / p.get("m"),
    },
    Formula {
        name: "erm_nhat",
        params: &["dim", "nhat", "m", "delta"],
        rate: true,
        eval: |p| {
            let d = p.get("dim");
            let inner = 49.0 * std::f64::consts::E * div0(p.get("nhat"), d) + 37.0;
            8.0 / p.get("m") * (mul0(d, inner.ln()) + 8.0 * (6.0 / p.get("delta")).ln())
        },
    },
    Formula {
        name: "erm_star",
        params: &["dim", "star", "m", "delta", "constant"],
        rate: true,
        eval: |p| {
            let (d, m) = (p.get("dim"), p.get("m"));
            p.get("constant") / m * (mul0(d, log_e(div0(p.get("star").min(m), d))) + log_e(1.0 / p.get("delta")))
        },
    },
    Formula {
        name: "erm_star_expectation",
        params: &["dim", "star", "m", "constant"],
        rate: true,
        eval: |p| {
            let (d, m) = (p.get("dim"), p.get("m"));
            p.get("constant") / m * mul0(d, log_e(div0(p.get("star").min(m), d)))
        },
    },
    Formula {
        name: "erm_dist_free",
        params: &["dim", "star", "m", "delta", "constant"],
        rate: true,
        eval: |p| {
            let (d, m) = (p.get("dim"), p.get("m"));
            p.get("constant") / m * (mul0(d, log_e(div0((d * p.get("star")).min(m), d))) + log_e(1.0 / p.get("delta")))
        },
    },
    Formula {
        name: "erm_subregion",
        params: &["dim", "phi", "m", "delta"],
        rate: true,
        eval: |p| 21.0 / p.get("m") * (mul0(p.get("dim"), (83.0 * p.get("phi")).ln()) + 3.0 * (4.0 / p.get("delta")).ln()),
    },
    Formula {
        name: "cal_labels",
        params: &["nhat_tilde", "M", "delta", "constant"],
        rate: false,
        eval: |p| {
            let lm = log_e(p.get("M"));
            p.get("constant") * (p.get("nhat_tilde") + log_e(lm / p.get("delta"))) * lm
        },
    },
    Formula {
        name: "bernstein_erm",
        params: &["a", "alpha", "dim", "m", "delta", "constant"],
        rate: true,
        eval: |p| bernstein_shape(p, bernstein_log_arg(p), true),
    },
    Formula {
        name: "bernstein_gk",
        params: &["a", "alpha", "dim", "m", "delta", "theta", "constant"],
        rate: true,
        eval: |p| bernstein_shape(p, p.get("theta"), true),
    },
    Formula {
        name: "bernstein_star",
        params: &["a", "alpha", "dim", "star", "m", "delta", "constant"],
        rate: true,
        eval: |p| bernstein_shape(p, p.get("star").min(bernstein_log_arg(p)), true),
    },
    Formula {
        name: "bernstein_star_expectation",
        params: &["a", "alpha", "dim", "star", "m", "constant"],
        rate: true,
        eval: |p| bernstein_shape(p, p.get("star").min(bernstein_log_arg(p)), false),
    },
    Formula {
        name: "erm_lower",
        params: &["dim", "star", "m", "delta", "constant"],
        rate: true,
        eval: |p| {
            let m = p.get("m");
            p.get("constant") * ((p.get("dim") + log_e(p.get("star").min(m)) + log_e(1.0 / p.get("delta"))) / m).min(1.0)
        },
    },
    Formula {
        name: "erm_lower_expectation",
        params: &["dim", "star", "m", "constant"],
        rate: true,
        eval: |p| {
            let m = p.get("m");
            p.get("constant") * ((p.get("dim") + log_e(p.get("star").min(m))) / m).min(1.0)
        },
    },
    Formula {
        name: "bounded_lower",
        params: &["dim", "star", "beta", "m", "delta", "constant"],
        rate: true,
        eval: |p| {
            let (b, m) = (p.get("beta"), p.get("m"));
            let g = 1.0 - 2.0 * b;
            let num = p.get("dim") + b * log_e(p.get("star").min(g * g * m)) + log_e(1.0 / p.get("delta"));
            p.get("constant") * (num / (g * m)).min(g)
        },
    },
    Formula {
        name: "zc_noise",
        params: &["a", "alpha", "dim", "m", "delta", "phi_hat", "constant"],
        rate: true,
        eval: |p| bernstein_shape(p, p.get("phi_hat"), true),
    },
];

/// Names and required parameters of every evaluator.
pub fn bound_catalog() -> Vec<(&'static str, &'static [&'static str])> {
    FORMULAS.iter().map(|f| (f.name, f.params)).collect()
}

/// Required parameters of the named evaluator.
pub fn bound_params(name: &str) -> Option<&'static [&'static str]> {
    FORMULAS.iter().find(|f| f.name == name).map(|f| f.params)
}

pub fn evaluate_bound(name: &str, params: &BTreeMap<String, String>) -> Result<BoundResult> {
    let f = FORMULAS.iter().find(|f| f.name == name).ok_or_else(|| Error::param("name", format!("unknown bound {name:?}")))?;
    if let Some(extra) = params.keys().find(|k| !f.params.contains(&k.as_str())) {
        return Err(Error::param(extra.clone(), format!("not a parameter of {name}")));
    }
    let mut values = BTreeMap::new();
    for &k in f.params {
        let raw = params.get(k).ok_or_else(|| Error::param(k, "missing"))?;
        let v = parse_rational(raw).map(|q| q_to_f64(&q)).or_else(|| raw.parse::<f64>().ok()).ok_or_else(|| Error::param(k, format!("{raw:?} is not a number")))?;
        let dom = domain_of(k);
        if !v.is_finite() || !dom.check(v) {
            return Err(Error::param(k, dom.describe()));
        }
        values.insert(k, v);
    }
    if let (Some(&n), Some(&m)) = (values.get("n"), values.get("m")) {
        if f.name == "compression_lemma" && n >= m {
            return Err(Error::param("n", "must be below m"));
        }
    }
    let value = (f.eval)(&P(values));
    Ok(BoundResult { name: name.to_string(), params: params.clone(), value, clamped: f.rate && value > 1.0 })
}

/// Convenience wrapper taking numeric parameters.
pub fn evaluate_bound_f64(name: &str, params: &[(&str, f64)]) -> Result<BoundResult> {
    let map = params.iter().map(|(k, v)| (k.to_string(), format!("{v}"))).collect();
    evaluate_bound(name, &map)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LogFactorsCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `a ln(c1 (c2 + b/a)) <= a ln(c1 (c2 + e)) + b/e`, with a relative rounding allowance of `1e-12`.
pub fn log_factors_lemma_check(a: f64, b: f64, c1: f64, c2: f64) -> Result<LogFactorsCheck> {
    for (k, v) in [("a", a), ("b", b), ("c1", c1)] {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(Error::param(k, "must be at least 1"));
        }
    }
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(Error::param("c2", "must be nonnegative"));
    }
    let e = std::f64::consts::E;
    let lhs = a * (c1 * (c2 + b / a)).ln();
    let rhs = a * (c1 * (c2 + e)).ln() + b / e;
    Ok(LogFactorsCheck { holds: lhs <= rhs + 1e-12 * rhs.abs().max(1.0), lhs, rhs })
}
