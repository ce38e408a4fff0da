//! Value parsers for command-line literals.

use std::f64::consts::PI;

/// Parses `0.3`, `pi`, `-pi/4`, `3pi/4`, `3*pi/8`, `0.5pi` or `π/2`.
/// List types that clap parses as one value rather than one item per flag.
pub type Floats = Vec<f64>;
pub type Ints = Vec<u64>;

pub fn angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(&t)),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => {
            let d: f64 = d.trim().parse().map_err(|_| format!("bad denominator in angle {s:?}"))?;
            if d == 0.0 {
                return Err(format!("zero denominator in angle {s:?}"));
            }
            (n.trim(), d)
        }
        None => (body, 1.0),
    };
    let value = match num.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.trim().trim_end_matches('*').trim();
            let c: f64 = if coef.is_empty() { 1.0 } else { coef.parse().map_err(|_| format!("bad angle {s:?}"))? };
            c * PI
        }
        None => num.parse().map_err(|_| format!("bad angle {s:?}"))?,
    };
    let v = value / den;
    if !v.is_finite() {
        return Err(format!("angle {s:?} is not finite"));
    }
    Ok(if neg { -v } else { v })
}

/// Comma-separated angles.
pub fn angle_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(angle).collect()
}

/// `lo,hi` with `lo < hi`.
pub fn angle_range(s: &str) -> Result<(f64, f64), String> {
    match angle_list(s)?.as_slice() {
        &[lo, hi] if lo < hi => Ok((lo, hi)),
        &[_, _] => Err(format!("range {s:?} must be increasing")),
        _ => Err(format!("range {s:?} needs exactly two angles")),
    }
}

/// Comma-separated integers and inclusive `a-b` spans, e.g. `3-7,9`.
pub fn int_list(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad span {part:?}"))?;
                let b: u64 = b.trim().parse().map_err(|_| format!("bad span {part:?}"))?;
                if a > b {
                    return Err(format!("span {part:?} is decreasing"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad integer {part:?}"))?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// A probability in `[0, 1]`, or a comma-separated list of them.
pub fn probabilities(s: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad probability {p:?}")))
        .collect::<Result<_, _>>()?;
    if let Some(p) = v.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(format!("probability {p} outside [0, 1]"));
    }
    Ok(v)
}
