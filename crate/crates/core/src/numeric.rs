//! Small numeric helpers: compensated summation and least-squares fits.

/// Neumaier compensated accumulator. Deterministic for a fixed insertion order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sum {
    total: f64,
    comp: f64,
}

impl Sum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.comp += (self.total - t) + x;
        } else {
            self.comp += (x - t) + self.total;
        }
        self.total = t;
    }

    pub fn merge(&mut self, other: &Sum) {
        self.add(other.total);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.total + self.comp
    }
}

pub fn sum_all(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = Sum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 with fewer than three points).
    pub stderr: f64,
}

pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = sum_all(points.iter().map(|p| p.0)) / nf;
    let my = sum_all(points.iter().map(|p| p.1)) / nf;
    let sxx = sum_all(points.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    if sxx <= 0.0 {
        return None;
    }
    let sxy = sum_all(points.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss = sum_all(points.iter().map(|p| {
            let r = p.1 - intercept - slope * p.0;
            r * r
        }));
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        stderr,
    })
}

/// Slope of `y` against `n` with one free intercept per residue class `n mod period`.
///
/// With `period == 1` this is the plain least-squares slope. A periodic schedule
/// makes `log Z_n` a line plus a periodic offset; separate intercepts remove
/// the offset without biasing the slope.
pub fn phase_slope(points: &[(usize, f64)], period: usize) -> Option<f64> {
    let period = period.max(1);
    let mut by_phase: Vec<Vec<(f64, f64)>> = vec![Vec::new(); period];
    for &(n, y) in points {
        by_phase[n % period].push((n as f64, y));
    }
    let mut sxy = Sum::new();
    let mut sxx = Sum::new();
    for class in &by_phase {
        if class.is_empty() {
            continue;
        }
        let k = class.len() as f64;
        let mx = sum_all(class.iter().map(|p| p.0)) / k;
        let my = sum_all(class.iter().map(|p| p.1)) / k;
        for p in class {
            sxy.add((p.0 - mx) * (p.1 - my));
            sxx.add((p.0 - mx) * (p.0 - mx));
        }
    }
    let sxx = sxx.value();
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy.value() / sxx)
}

/// Indices of the tail half of a window of `len` entries (the last `ceil(len/2)`).
pub fn tail_start(len: usize) -> usize {
    len / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = Sum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn line_fit_exact() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        let f = fit_line(&pts).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn phase_slope_removes_periodic_offset() {
        let pts: Vec<(usize, f64)> = (1..=20)
            .map(|n| (n, 0.5 * n as f64 + if n % 2 == 0 { 0.3 } else { -0.2 }))
            .collect();
        assert!((phase_slope(&pts, 2).unwrap() - 0.5).abs() < 1e-12);
        assert!((phase_slope(&pts, 1).unwrap() - 0.5).abs() > 1e-4);
    }

    #[test]
    fn degenerate_fits() {
        assert!(fit_line(&[(1.0, 2.0)]).is_none());
        assert!(fit_line(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
    }
}
