use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{bit, full_mask, load_class_file, Caps, ConceptClass, InstanceSpace};
use crate::error::{Error, Result};

/// Built-in generator signatures, as accepted by [`ClassSpec::from_str`].
pub const GENERATORS: &[(&str, &str)] = &[
    ("thresholds(n)", "n+1 rays: h_t(p_i) = +1 iff i >= t"),
    ("intervals(n)", "empty set plus every contiguous run of points"),
    ("singletons(n)", "one positive point each"),
    ("star(k)", "all-negative plus the k singletons"),
    ("powerset(n)", "every labeling, n <= 20"),
    ("conjunctions(p)", "monotone-or-negated conjunctions over {0,1}^p plus the empty concept"),
    ("axis_rectangles(wxh)", "empty set plus every axis-aligned rectangle on a w-by-h grid, w*h <= 24"),
    ("at_most_d_positive(n,d)", "every labeling with at most d positive points"),
    ("from_file(path)", "vslab-class v1 file"),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassSpec {
    Thresholds(usize),
    Intervals(usize),
    Singletons(usize),
    Star(usize),
    Powerset(usize),
    Conjunctions(usize),
    AxisRectangles(usize, usize),
    AtMostDPositive(usize, usize),
    FromFile(PathBuf),
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassSpec::Thresholds(n) => write!(f, "thresholds({n})"),
            ClassSpec::Intervals(n) => write!(f, "intervals({n})"),
            ClassSpec::Singletons(n) => write!(f, "singletons({n})"),
            ClassSpec::Star(k) => write!(f, "star({k})"),
            ClassSpec::Powerset(n) => write!(f, "powerset({n})"),
            ClassSpec::Conjunctions(p) => write!(f, "conjunctions({p})"),
            ClassSpec::AxisRectangles(w, h) => write!(f, "axis_rectangles({w}x{h})"),
            ClassSpec::AtMostDPositive(n, d) => write!(f, "at_most_d_positive({n},{d})"),
            ClassSpec::FromFile(p) => write!(f, "from_file({})", p.display()),
        }
    }
}

impl FromStr for ClassSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("class", format!("cannot parse class spec {s:?}"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim().to_ascii_lowercase().replace('-', "_");
        let args = &s[open + 1..s.len() - 1];
        if name == "from_file" {
            return Ok(ClassSpec::FromFile(PathBuf::from(args.trim())));
        }
        let nums: Vec<usize> = args
            .split([',', 'x', 'X'])
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let one = |v: &[usize]| if v.len() == 1 { Ok(v[0]) } else { Err(bad()) };
        let two = |v: &[usize]| if v.len() == 2 { Ok((v[0], v[1])) } else { Err(bad()) };
        Ok(match name.as_str() {
            "thresholds" => ClassSpec::Thresholds(one(&nums)?),
            "intervals" => ClassSpec::Intervals(one(&nums)?),
            "singletons" => ClassSpec::Singletons(one(&nums)?),
            "star" => ClassSpec::Star(one(&nums)?),
            "powerset" => ClassSpec::Powerset(one(&nums)?),
            "conjunctions" => ClassSpec::Conjunctions(one(&nums)?),
            "axis_rectangles" | "rectangles" => {
                let (w, h) = two(&nums)?;
                ClassSpec::AxisRectangles(w, h)
            }
            "at_most_d_positive" => {
                let (n, d) = two(&nums)?;
                ClassSpec::AtMostDPositive(n, d)
            }
            _ => return Err(bad()),
        })
    }
}

pub fn make_class(spec: &ClassSpec) -> Result<ConceptClass> {
    make_class_with(spec, &Caps::default())
}

fn check_points(n: usize, caps: &Caps) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("instance space must contain at least one point"));
    }
    if n > caps.max_points.min(64) {
        return Err(Error::Capacity(format!("{n} points exceed the cap of {}", caps.max_points.min(64))));
    }
    Ok(())
}

fn run(lo: usize, hi: usize) -> u64 {
    // points lo..=hi
    full_mask(hi + 1) & !full_mask(lo)
}

pub fn make_class_with(spec: &ClassSpec, caps: &Caps) -> Result<ConceptClass> {
    let name = spec.to_string();
    let cap_h = |count: u128| -> Result<()> {
        if count > caps.max_hypotheses as u128 {
            Err(Error::Capacity(format!("{name} would have {count} hypotheses (cap {})", caps.max_hypotheses)))
        } else {
            Ok(())
        }
    };
    match *spec {
        ClassSpec::Thresholds(n) => {
            check_points(n, caps)?;
            let masks = (0..=n).map(|t| full_mask(n) & !full_mask(t)).collect();
            ConceptClass::new(name, InstanceSpace::indexed(n)?, masks)
        }
        ClassSpec::Intervals(n) => {
            check_points(n, caps)?;
            let mut masks = vec![0u64];
            for a in 0..n {
                for b in a..n {
                    masks.push(run(a, b));
                }
            }
            ConceptClass::new(name, InstanceSpace::indexed(n)?, masks)
        }
        ClassSpec::Singletons(n) => {
            check_points(n, caps)?;
            ConceptClass::new(name, InstanceSpace::indexed(n)?, (0..n).map(bit).collect())
        }
        ClassSpec::Star(k) => {
            check_points(k, caps)?;
            let masks = std::iter::once(0).chain((0..k).map(bit)).collect();
            ConceptClass::new(name, InstanceSpace::indexed(k)?, masks)
        }
        ClassSpec::Powerset(n) => {
            if n > 20 {
                return Err(Error::Capacity(format!("powerset({n}) exceeds n <= 20")));
            }
            check_points(n, caps)?;
            cap_h(1u128 << n)?;
            ConceptClass::new(name, InstanceSpace::indexed(n)?, (0..1u64 << n).collect())
        }
        ClassSpec::Conjunctions(p) => {
            if p == 0 || p > 12 {
                return Err(Error::Capacity(format!("conjunctions({p}) needs 1 <= p <= 12")));
            }
            let n = 1usize << p;
            check_points(n, caps)?;
            cap_h(3u128.pow(p as u32) + 1)?;
            let points = (0..n)
                .map(|b| (0..p).map(|j| if b >> j & 1 == 1 { '1' } else { '0' }).collect())
                .collect();
            let mut masks = Vec::with_capacity(3usize.pow(p as u32) + 1);
            for code in 0..3usize.pow(p as u32) {
                let mut mask = 0u64;
                'pt: for b in 0..n {
                    let mut c = code;
                    for j in 0..p {
                        let lit = c % 3;
                        c /= 3;
                        let v = b >> j & 1;
                        if (lit == 1 && v == 0) || (lit == 2 && v == 1) {
                            continue 'pt;
                        }
                    }
                    mask |= bit(b);
                }
                masks.push(mask);
            }
            masks.push(0);
            ConceptClass::new(name, InstanceSpace::new(points)?, masks)
        }
        ClassSpec::AxisRectangles(w, h) => {
            if w == 0 || h == 0 || w * h > 24 {
                return Err(Error::Capacity(format!("axis_rectangles({w}x{h}) needs 1 <= w*h <= 24")));
            }
            check_points(w * h, caps)?;
            let points = (0..h).flat_map(|j| (0..w).map(move |i| format!("{i}:{j}"))).collect();
            let mut masks = vec![0u64];
            for x1 in 0..w {
                for x2 in x1..w {
                    for y1 in 0..h {
                        for y2 in y1..h {
                            let mut m = 0u64;
                            for j in y1..=y2 {
                                for i in x1..=x2 {
                                    m |= bit(j * w + i);
                                }
                            }
                            masks.push(m);
                        }
                    }
                }
            }
            ConceptClass::new(name, InstanceSpace::new(points)?, masks)
        }
        ClassSpec::AtMostDPositive(n, d) => {
            check_points(n, caps)?;
            if d > n {
                return Err(Error::param("d", format!("d = {d} exceeds n = {n}")));
            }
            let mut count: u128 = 0;
            let mut binom: u128 = 1;
            for i in 0..=d {
                count += binom;
                binom = binom * (n - i) as u128 / (i + 1) as u128;
            }
            cap_h(count)?;
            let mut masks = Vec::with_capacity(count as usize);
            for size in 0..=d {
                push_combinations(n, size, 0, 0, &mut masks);
            }
            ConceptClass::new(name, InstanceSpace::indexed(n)?, masks)
        }
        ClassSpec::FromFile(ref path) => load_class_file(path),
    }
}

fn push_combinations(n: usize, left: usize, start: usize, acc: u64, out: &mut Vec<u64>) {
    if left == 0 {
        out.push(acc);
        return;
    }
    for i in start..=n - left {
        push_combinations(n, left - 1, i + 1, acc | bit(i), out);
    }
}
