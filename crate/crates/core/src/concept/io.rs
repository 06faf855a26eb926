use std::path::Path;

use super::{bit, ConceptClass, InstanceSpace};
use crate::error::{Error, Result};

const HEADER: &str = "vslab-class v1";

/// Serializes a class in the `vslab-class v1` text format.
pub fn save_class(c: &ConceptClass) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    if !c.name().is_empty() {
        out.push(' ');
        out.push_str(c.name());
    }
    out.push('\n');
    out.push_str(&format!("{} {}\n", c.n(), c.len()));
    out.push_str(&c.space().points().join(" "));
    out.push('\n');
    for &m in c.masks() {
        let row: Vec<&str> = (0..c.n()).map(|i| if m >> i & 1 == 1 { "+1" } else { "-1" }).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_class(text: &str) -> Result<ConceptClass> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let name = match header.strip_prefix(HEADER) {
        Some(rest) if rest.is_empty() || rest.starts_with(' ') => rest.trim().to_string(),
        _ => return Err(Error::parse(1, format!("expected header {HEADER:?}"))),
    };
    let (ln, dims) = lines.next().ok_or_else(|| Error::parse(2, "missing `n H` line"))?;
    let dims: Vec<&str> = dims.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::parse(ln, "expected `n H`"));
    }
    let n: usize = dims[0].parse().map_err(|_| Error::parse(ln, "n is not a nonnegative integer"))?;
    let h: usize = dims[1].parse().map_err(|_| Error::parse(ln, "H is not a nonnegative integer"))?;
    if n > 64 {
        return Err(Error::Capacity(format!("{n} points exceed the 64-point representation")));
    }
    let (ln, pts) = lines.next().ok_or_else(|| Error::parse(3, "missing point identifiers"))?;
    let points: Vec<String> = pts.split_whitespace().map(str::to_string).collect();
    if points.len() != n {
        return Err(Error::parse(ln, format!("expected {n} point identifiers, found {}", points.len())));
    }
    let space = InstanceSpace::new(points).map_err(|e| Error::parse(ln, e.to_string()))?;
    let mut masks = Vec::with_capacity(h);
    for k in 0..h {
        let (ln, row) = lines.next().ok_or_else(|| Error::parse(4 + k, "missing hypothesis row"))?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != n {
            return Err(Error::parse(ln, format!("expected {n} labels, found {}", toks.len())));
        }
        let mut m = 0u64;
        for (i, t) in toks.iter().enumerate() {
            match *t {
                "+1" | "1" => m |= bit(i),
                "-1" => {}
                _ => return Err(Error::parse(ln, format!("label {t:?} is not +1/-1"))),
            }
        }
        masks.push(m);
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(ln, format!("unexpected trailing content {extra:?}")));
    }
    let name = if name.is_empty() { "file".to_string() } else { name };
    ConceptClass::new(name, space, masks)
}

pub fn save_class_file(c: &ConceptClass, path: &Path) -> Result<()> {
    std::fs::write(path, save_class(c))?;
    Ok(())
}

pub fn load_class_file(path: &Path) -> Result<ConceptClass> {
    load_class(&std::fs::read_to_string(path)?)
}
