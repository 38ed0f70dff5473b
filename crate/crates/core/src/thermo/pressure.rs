//! Finite-horizon pressure estimates and the Bowen-parameter bisection.

use serde::{Deserialize, Serialize};

use super::partition::{partition_sequence, NormMemo, PartitionOptions, PartitionValue, Strategy, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::maps::FamilyKind;
use crate::numeric::{phase_slope, tail_start};
use crate::system::SystemSpec;

/// How the pressure proxy is read off `s_n(t) = (1/n) log Z_n(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyKind {
    /// Slope of `log Z_n` over the tail half, fitted per phase of the slice period.
    TailSlope,
    /// Minimum of `s_n` over the tail half.
    TailMin,
}

#[derive(Clone, Copy, Debug)]
pub struct PressureOptions<'a> {
    pub strategy: Strategy,
    pub proxy: ProxyKind,
    pub budget: u128,
    pub memo: Option<&'a NormMemo>,
}

impl Default for PressureOptions<'_> {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            proxy: ProxyKind::TailSlope,
            budget: DEFAULT_BUDGET,
            memo: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureRow {
    pub n: usize,
    pub t: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    pub s_lo: f64,
    pub s_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub t: f64,
    pub window: (usize, usize),
    pub rows: Vec<PressureRow>,
    /// `min s_n` over the tail half (lower end of the bracket).
    pub lower: f64,
    /// `max s_n` over the tail half (upper end of the bracket).
    pub upper: f64,
    /// Proxy for `P(t)` used by root finding, as a `(lo, hi)` pair.
    pub proxy: (f64, f64),
    pub proxy_kind: ProxyKind,
    /// Slice period used to phase-align the tail fit.
    pub period: usize,
    /// Tail spread `upper - lower` exceeds the tolerance `1/n`.
    pub oscillating: bool,
    pub strategy: Strategy,
}

/// `s_n(t)` for `n` in `window` with a `P(t)` proxy over the tail half.
pub fn pressure_estimate(
    system: &SystemSpec,
    t: f64,
    window: (usize, usize),
    opts: &PressureOptions,
) -> Result<PressureEstimate> {
    let (start, n_max) = window;
    if start == 0 || start > n_max {
        return Err(Error::Config(format!("empty pressure window [{start}, {n_max}]")));
    }
    let popts = PartitionOptions {
        strategy: opts.strategy,
        budget: opts.budget,
        memo: opts.memo,
    };
    let seq = partition_sequence(system, 1, n_max, t, &popts)?;
    let strategy = seq[0].strategy;
    let rows: Vec<PressureRow> = seq.iter().filter(|v| v.n >= start).map(row).collect();
    let tail = &rows[tail_start(rows.len())..];
    let lower = tail.iter().map(|r| r.s_lo).fold(f64::INFINITY, f64::min);
    let upper = tail.iter().map(|r| r.s_hi).fold(f64::NEG_INFINITY, f64::max);
    let first = tail[0].n;
    let period = system.period_over(first, n_max, (tail.len() / 3).max(1)).unwrap_or(1);
    let tail_min = (
        tail.iter().map(|r| r.s_lo).fold(f64::INFINITY, f64::min),
        tail.iter().map(|r| r.s_hi).fold(f64::INFINITY, f64::min),
    );
    let proxy = match opts.proxy {
        ProxyKind::TailMin => tail_min,
        ProxyKind::TailSlope => {
            let lo: Vec<(usize, f64)> = tail.iter().map(|r| (r.n, r.z_lo.ln())).collect();
            let hi: Vec<(usize, f64)> = tail.iter().map(|r| (r.n, r.z_hi.ln())).collect();
            match (phase_slope(&lo, period), phase_slope(&hi, period)) {
                (Some(a), Some(b)) => (a.min(b), b.max(a)),
                _ => tail_min,
            }
        }
    };
    Ok(PressureEstimate {
        t,
        window,
        rows,
        lower,
        upper,
        proxy,
        proxy_kind: opts.proxy,
        period,
        oscillating: upper - lower > 1.0 / n_max as f64,
        strategy,
    })
}

fn row(v: &PartitionValue) -> PressureRow {
    let n = v.n as f64;
    PressureRow {
        n: v.n,
        t: v.t,
        z_lo: v.lo,
        z_hi: v.hi,
        s_lo: v.lo.ln() / n,
        s_hi: v.hi.ln() / n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BisectionStep {
    pub t: f64,
    pub proxy_lo: f64,
    pub proxy_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionResult {
    /// Lower end of the bracket for the Bowen parameter.
    pub lo: f64,
    /// Upper end of the bracket for the Bowen parameter.
    pub hi: f64,
    pub horizon: usize,
    pub tol: f64,
    pub strategy: Strategy,
    pub proxy_kind: ProxyKind,
    pub period: usize,
    pub trace: Vec<BisectionStep>,
    /// Reasons the bracket might not enclose the true value.
    pub uncertainty: Vec<String>,
}

impl DimensionResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bowen parameter over horizon `n_max`, by bisection on the pressure proxy.
pub fn bowen_dimension(system: &SystemSpec, t_bracket: (f64, f64), n_max: usize, tol: f64) -> Result<DimensionResult> {
    let memo = NormMemo::new();
    let opts = PressureOptions {
        memo: (system.kind() == FamilyKind::Mixed).then_some(&memo),
        ..Default::default()
    };
    bowen_dimension_with(system, t_bracket, n_max, tol, &opts)
}

pub fn bowen_dimension_with(
    system: &SystemSpec,
    t_bracket: (f64, f64),
    n_max: usize,
    tol: f64,
    opts: &PressureOptions,
) -> Result<DimensionResult> {
    let (t_lo, t_hi) = t_bracket;
    if !(t_lo < t_hi) || !(tol > 0.0) {
        return Err(Error::Config(format!(
            "bad bracket [{t_lo}, {t_hi}] or tolerance {tol}"
        )));
    }
    let d = system.dim() as f64;
    if t_lo < 0.0 || t_hi > d {
        return Err(Error::Input(format!("bracket [{t_lo}, {t_hi}] outside [0, {d}]")));
    }
    let mut trace = Vec::new();
    let mut meta = None;
    let mut eval = |t: f64, trace: &mut Vec<BisectionStep>| -> Result<(f64, f64)> {
        let e = pressure_estimate(system, t, (1, n_max), opts)?;
        meta.get_or_insert((e.strategy, e.period));
        trace.push(BisectionStep {
            t,
            proxy_lo: e.proxy.0,
            proxy_hi: e.proxy.1,
        });
        Ok(e.proxy)
    };
    let at_lo = eval(t_lo, &mut trace)?;
    let at_hi = eval(t_hi, &mut trace)?;
    // P is non-increasing in t: the upper proxy must still be non-negative at t_lo
    // and the lower one non-positive at t_hi.
    if at_lo.1 < 0.0 || at_hi.0 > 0.0 {
        return Err(Error::Bracketing {
            t_lo,
            t_hi,
            p_lo: at_lo.1,
            p_hi: at_hi.0,
        });
    }
    let mut uncertainty = Vec::new();
    let exact = at_lo.0 == at_lo.1 && at_hi.0 == at_hi.1;
    let root = |pick: fn((f64, f64)) -> f64,
                trace: &mut Vec<BisectionStep>,
                eval: &mut dyn FnMut(f64, &mut Vec<BisectionStep>) -> Result<(f64, f64)>|
     -> Result<(f64, f64)> {
        let (mut a, mut b) = (t_lo, t_hi);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if pick(eval(mid, trace)?) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok((a, b))
    };
    let (lo, hi) = if exact {
        root(|p| p.0, &mut trace, &mut eval)?
    } else {
        let lo = if at_lo.0 < 0.0 {
            uncertainty.push(format!("lower pressure bound is already negative at t={t_lo}"));
            t_lo
        } else {
            root(|p| p.0, &mut trace, &mut eval)?.0
        };
        let hi = if at_hi.1 > 0.0 {
            uncertainty.push(format!("upper pressure bound is still positive at t={t_hi}"));
            t_hi
        } else {
            root(|p| p.1, &mut trace, &mut eval)?.1
        };
        (lo, hi)
    };
    let (strategy, period) = meta.expect("evaluated at least once");
    if strategy == Strategy::BdpBracket {
        uncertainty.push("partition sums bracketed by the distortion constant".into());
    }
    Ok(DimensionResult {
        lo,
        hi,
        horizon: n_max,
        tol,
        strategy,
        proxy_kind: opts.proxy,
        period,
        trace,
        uncertainty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ConformalMap, Region, Space};
    use crate::symbolic::{GraphSchedule, Incidence, Letter};

    fn ifs(maps_at: impl Fn(usize) -> Vec<ConformalMap>, h: usize) -> SystemSpec {
        let maps: Vec<Vec<ConformalMap>> = (1..=h).map(&maps_at).collect();
        let alphabets = maps
            .iter()
            .map(|m| (0..m.len()).map(|i| Letter::new(i.to_string(), 0, 0)).collect())
            .collect();
        let sched = GraphSchedule::new(vec![1; h + 1], alphabets, vec![Incidence::Full; h - 1]).unwrap();
        SystemSpec::new("t", sched, vec![vec![Space::new(Region::unit())]; h + 1], maps).unwrap()
    }

    fn cantor(h: usize) -> SystemSpec {
        ifs(
            |_| {
                vec![
                    ConformalMap::similarity(1.0 / 3.0, 0.0),
                    ConformalMap::similarity(1.0 / 3.0, 2.0 / 3.0),
                ]
            },
            h,
        )
    }

    #[test]
    fn cantor_pressure_is_linear() {
        let s = cantor(12);
        let e = pressure_estimate(&s, 0.5, (1, 12), &PressureOptions::default()).unwrap();
        let want = 2f64.ln() - 0.5 * 3f64.ln();
        assert!((e.proxy.0 - want).abs() < 1e-12);
        assert!((e.lower - want).abs() < 1e-12 && (e.upper - want).abs() < 1e-12);
        assert_eq!(e.period, 1);
        assert!(!e.oscillating);
    }

    #[test]
    fn cantor_dimension() {
        let r = bowen_dimension(&cantor(30), (0.0, 1.0), 30, 1e-10).unwrap();
        let h = 2f64.ln() / 3f64.ln();
        assert!(r.lo <= h + 1e-12 && h <= r.hi + 1e-12 && r.hi - r.lo <= 1e-10);
        assert!(r.uncertainty.is_empty());
    }

    #[test]
    fn alternating_uses_period_two() {
        let s = ifs(
            |n| {
                if n % 2 == 1 {
                    vec![ConformalMap::similarity(0.5, 0.0), ConformalMap::similarity(0.5, 0.5)]
                } else {
                    vec![
                        ConformalMap::similarity(0.25, 0.0),
                        ConformalMap::similarity(0.25, 0.75),
                    ]
                }
            },
            20,
        );
        let e = pressure_estimate(&s, 2.0 / 3.0, (1, 20), &PressureOptions::default()).unwrap();
        assert_eq!(e.period, 2);
        assert!(e.proxy.0.abs() < 1e-12);
        assert!(!e.oscillating);
        let r = bowen_dimension(&s, (0.0, 1.0), 20, 1e-6).unwrap();
        assert!((r.midpoint() - 2.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn bad_bracket_is_reported() {
        let s = cantor(10);
        assert!(matches!(
            bowen_dimension(&s, (0.7, 1.0), 10, 1e-6),
            Err(Error::Bracketing { .. })
        ));
        assert!(matches!(
            bowen_dimension(&s, (0.0, 0.5), 10, 1e-6),
            Err(Error::Bracketing { .. })
        ));
    }

    #[test]
    fn cf_bracket_contains_exact_enumeration() {
        let s = ifs(|_| vec![ConformalMap::cf(1.0), ConformalMap::cf(2.0)], 12);
        let opts = PressureOptions {
            strategy: Strategy::BdpBracket,
            ..Default::default()
        };
        let b = bowen_dimension_with(&s, (0.0, 1.0), 12, 1e-6, &opts).unwrap();
        let e = bowen_dimension(&s, (0.0, 1.0), 12, 1e-6).unwrap();
        assert!(b.lo <= e.lo + 1e-6 && e.hi <= b.hi + 1e-6, "{b:?} {e:?}");
        // Dimension of {1,2}-continued fractions is about 0.5313.
        assert!((e.midpoint() - 0.5313).abs() < 0.02, "{}", e.midpoint());
    }
}
