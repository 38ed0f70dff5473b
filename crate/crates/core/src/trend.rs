//! Finite-horizon growth verdicts for sequences `L_n = log(value_n)`.
//!
//! A sequence grows subexponentially when `L_n / n -> 0`. Over a finite window
//! that is judged from the tail: a bounded tail, or least-squares slopes that
//! keep shrinking across the tail, are consistent with a sublinear `L_n`; a
//! steady slope reads as exponential growth at that rate.

use serde::Serialize;

use crate::numeric::{fit_line, tail_start};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "rate", rename_all = "kebab-case")]
pub enum Verdict {
    SubexponentialConsistent,
    ExponentialRate(f64),
    Inconclusive,
}

impl Verdict {
    pub fn is_subexponential(&self) -> bool {
        matches!(self, Verdict::SubexponentialConsistent)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendReport {
    /// `(n, L_n / n)` for every supplied point.
    pub normalized: Vec<(usize, f64)>,
    /// Least-squares slope of `L_n` against `n` over the tail half.
    pub fitted_rate: f64,
    pub verdict: Verdict,
}

/// Slope shrink factor across the two quarters of the tail below which growth is
/// read as sublinear in `n`.
const DECAY: f64 = 0.9;

pub fn classify(series: &[(usize, f64)]) -> TrendReport {
    let normalized = series
        .iter()
        .map(|&(n, l)| (n, if n == 0 { f64::NAN } else { l / n as f64 }))
        .collect();
    let start = tail_start(series.len());
    let tail = &series[start..];
    let head = &series[..start];
    let fitted_rate = slope(tail).unwrap_or(0.0);
    let verdict = if tail.len() < 4 || head.is_empty() {
        Verdict::Inconclusive
    } else if bounded(head, tail) {
        Verdict::SubexponentialConsistent
    } else {
        let mid = tail.len() / 2;
        match (slope(&tail[..mid]), slope(&tail[mid..])) {
            (Some(r1), Some(r2)) if r2.abs() < DECAY * r1.abs() => Verdict::SubexponentialConsistent,
            (Some(_), Some(_)) if fitted_rate.abs() > 1e-9 => Verdict::ExponentialRate(fitted_rate),
            (Some(_), Some(_)) => Verdict::SubexponentialConsistent,
            _ => Verdict::Inconclusive,
        }
    };
    TrendReport {
        normalized,
        fitted_rate,
        verdict,
    }
}

/// True when the tail never exceeds the magnitude already reached in the head.
pub fn bounded(head: &[(usize, f64)], tail: &[(usize, f64)]) -> bool {
    let head_max = head.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let tail_max = tail.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    tail_max <= head_max * (1.0 + 1e-9) + 1e-12
}

/// Bounded-consistency of a whole series, split into head and tail halves.
pub fn series_bounded(series: &[(usize, f64)]) -> bool {
    let start = tail_start(series.len());
    series.len() >= 2 && bounded(&series[..start], &series[start..])
}

/// Least-squares slope of the tail half of `series`.
pub fn tail_rate(series: &[(usize, f64)]) -> Option<f64> {
    slope(&series[tail_start(series.len())..])
}

fn slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, y)| (n as f64, y)).collect();
    fit_line(&pts).map(|f| f.slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(h: usize, f: impl Fn(f64) -> f64) -> Vec<(usize, f64)> {
        (1..=h).map(|n| (n, f(n as f64))).collect()
    }

    #[test]
    fn constant_is_subexponential() {
        let r = classify(&series(16, |_| 2f64.ln()));
        assert_eq!(r.verdict, Verdict::SubexponentialConsistent);
        assert!(r.fitted_rate.abs() < 1e-12);
    }

    #[test]
    fn geometric_growth_reports_rate() {
        let r = classify(&series(16, |n| n * 2f64.ln()));
        match r.verdict {
            Verdict::ExponentialRate(x) => assert!((x - 2f64.ln()).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
        let shifted = classify(&series(30, |n| (n + 1.0) * 2f64.ln()));
        assert!(matches!(shifted.verdict, Verdict::ExponentialRate(_)));
    }

    #[test]
    fn polynomial_growth_is_subexponential() {
        for h in [8, 16, 64, 256] {
            let r = classify(&series(h, |n| 2.0 * n.ln()));
            assert_eq!(r.verdict, Verdict::SubexponentialConsistent, "h={h}");
        }
    }

    #[test]
    fn short_series_is_inconclusive() {
        assert_eq!(classify(&series(4, |n| n)).verdict, Verdict::Inconclusive);
    }
}
