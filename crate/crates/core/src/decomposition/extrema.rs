use crate::error::{Error, Result};

/// Indices of strict interior local maxima and minima.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extrema {
    pub maxima: Vec<usize>,
    pub minima: Vec<usize>,
}

impl Extrema {
    /// Enough extrema of both kinds to fit upper and lower envelopes.
    pub fn supports_envelopes(&self) -> bool {
        self.maxima.len() >= 2 && self.minima.len() >= 2
    }
}

/// Locate interior extrema. A flat run bounded on both sides by lower
/// (higher) samples counts as one maximum (minimum) at its midpoint.
pub fn find_extrema(series: &[f64]) -> Result<Extrema> {
    if series.len() < 3 {
        return Err(Error::Degenerate(format!(
            "extrema need at least 3 samples, got {}",
            series.len()
        )));
    }
    Ok(scan(series))
}

pub(crate) fn scan(x: &[f64]) -> Extrema {
    let n = x.len();
    let mut out = Extrema::default();
    if n < 3 {
        return out;
    }
    // runs of equal values [start, end]
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && x[end + 1] == x[start] {
            end += 1;
        }
        if start > 0 && end + 1 < n {
            let v = x[start];
            let (left, right) = (x[start - 1], x[end + 1]);
            let mid = (start + end) / 2;
            if v > left && v > right {
                out.maxima.push(mid);
            } else if v < left && v < right {
                out.minima.push(mid);
            }
        }
        start = end + 1;
    }
    out
}
