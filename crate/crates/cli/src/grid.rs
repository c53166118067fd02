//! `START:STOP:COUNT` or single-value grid arguments.

use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl Grid {
    pub fn linspace(a: f64, b: f64, n: usize) -> Self {
        if n == 1 {
            return Grid(vec![a]);
        }
        Grid((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Grid(vec![num(v)?])),
            [a, b, n] => {
                let n: usize = n.trim().parse().map_err(|e| format!("count {n:?}: {e}"))?;
                let (a, b) = (num(a)?, num(b)?);
                if n == 0 || !a.is_finite() || !b.is_finite() || (n == 1 && a != b) {
                    return Err(format!("bad grid {s:?}"));
                }
                Ok(Grid::linspace(a, b, n))
            }
            _ => Err(format!("expected START:STOP:COUNT or a single value, got {s:?}")),
        }
    }
}
