use std::fmt;
use std::str::FromStr;

/// A list of values written as comma-separated items, each a number, `inf`,
/// or an inclusive range `lo:hi:step`.
///
/// The original text is kept so that the echoed configuration replays to the
/// same values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    text: String,
    values: Vec<f64>,
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Range points are rounded to 12 decimals so `0.55:0.95:0.1` yields `0.95`
/// rather than `0.9500000000000001`.
fn snap(x: f64) -> f64 {
    let s = (x * 1e12).round() / 1e12;
    if (s - x).abs() <= 1e-9 * x.abs().max(1.0) { s } else { x }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(v)
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let mut values = Vec::new();
        for item in text.split(',') {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [v] => values.push(number(v)?),
                [lo, hi, step] => {
                    let (lo, hi, step) = (number(lo)?, number(hi)?, number(step)?);
                    if !(lo.is_finite() && hi.is_finite()) || !(step > 0.0 && step.is_finite()) {
                        return Err(format!("bad range `{item}`: need finite lo, hi and step > 0"));
                    }
                    if hi < lo {
                        return Err(format!("bad range `{item}`: hi < lo"));
                    }
                    let count = ((hi - lo) / step + 1e-9).floor() as usize;
                    if count > 1_000_000 {
                        return Err(format!("range `{item}` has more than 10^6 points"));
                    }
                    values.extend((0..=count).map(|i| snap(lo + i as f64 * step)));
                }
                _ => return Err(format!("`{item}` is neither a value nor lo:hi:step")),
            }
        }
        Ok(Grid { text: text.to_string(), values })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges_lists_and_infinity() {
        let g: Grid = "0.55:0.95:0.1".parse().unwrap();
        assert_eq!(g.values(), &[0.55, 0.65, 0.75, 0.85, 0.95]);
        let g: Grid = "0,0.5,inf".parse().unwrap();
        assert_eq!(g.values(), &[0.0, 0.5, f64::INFINITY]);
        let g: Grid = "1:2:0.5,8".parse().unwrap();
        assert_eq!(g.values(), &[1.0, 1.5, 2.0, 8.0]);
        assert_eq!(g.to_string(), "1:2:0.5,8");
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "a", "1:2", "2:1:0.5", "0:1:0", "nan", "0:inf:1"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
