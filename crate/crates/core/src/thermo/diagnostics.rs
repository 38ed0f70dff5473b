//! Finite-horizon diagnostics built on norms, partition sums and growth data:
//! critical exponents, the general lower bound, balancing classes, exponential
//! growth bounds, Hausdorff-measure trends and even variation.

use serde::{Deserialize, Serialize};

use super::partition::{partition_sequence, PartitionOptions};
use crate::error::{Error, Result};
use crate::maps::FamilyKind;
use crate::numeric::{fit_line, phase_slope, tail_start};
use crate::symbolic::{find_primitivity, growth_stats, PrimitivityCertificate};
use crate::system::{compose_norm, SystemSpec};
use crate::trend::{self, TrendReport};

/// Safety margin for advisory inequality verdicts on fitted rates.
const MARGIN: f64 = 1e-3;

/// `(c̲_n, c̄_n)`: least lower and greatest upper single-letter norm at time `n`.
pub fn norm_extremes(system: &SystemSpec, n: usize) -> (f64, f64) {
    let s = system.schedule();
    s.alive_letters(n).fold((f64::INFINITY, 0.0f64), |(lo, hi), a| {
        let b = system.letter_norm(n, a);
        (lo.min(b.lo), hi.max(b.hi))
    })
}

/// `(d̲_n, d̄_n)`: smallest and largest diameter of the spaces at time `n`.
pub fn diameter_extremes(system: &SystemSpec, n: usize) -> (f64, f64) {
    system
        .spaces_at(n)
        .iter()
        .map(|s| s.region.diameter())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

/// `(n, ρ_n)` for `n = 1..=horizon`, with `ρ_n = c̄_n / c̲_n`.
pub fn rho_sequence(system: &SystemSpec, horizon: usize) -> Vec<(usize, f64)> {
    (1..=horizon.min(system.horizon()))
        .map(|n| {
            let (lo, hi) = norm_extremes(system, n);
            (n, hi / lo)
        })
        .collect()
}

/// Primitivity search with connector norms bounded below by certified brackets.
pub fn certify_primitivity(system: &SystemSpec, p_max: usize) -> Result<Option<PrimitivityCertificate>> {
    let h = system.horizon();
    if h < 2 {
        return Ok(None);
    }
    find_primitivity(system.schedule(), p_max.min(h - 2), |w| {
        compose_norm(w, system).map(|b| b.lo).unwrap_or(0.0)
    })
}

/// How the size of an infinite family's tail sums is controlled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum FamilyRule {
    /// Finitely many maps at every time.
    Finite,
    /// Norms comparable to `|b|^{-exponent}` over a lattice of rank `index_dim`.
    PowerLaw { exponent: f64, index_dim: usize },
    /// Infinite family without a tail bound.
    Unspecified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaBounds {
    /// Infimum of exponents with every `Z_(n)(t)` finite.
    pub theta_n: f64,
    /// Lower bound for the finiteness exponent of the pressure.
    pub theta_phi_lower: f64,
}

/// Critical exponents from a tail-sum rule, by bisection on the convergence test.
pub fn theta_bounds(rule: &FamilyRule, tol: f64) -> Result<ThetaBounds> {
    let theta = match *rule {
        FamilyRule::Finite => 0.0,
        FamilyRule::PowerLaw { exponent, index_dim } => {
            if !(exponent > 0.0) || index_dim == 0 {
                return Err(Error::Config(format!(
                    "power-law rule needs a positive exponent and lattice rank, got {exponent} and {index_dim}"
                )));
            }
            // Σ_{b ∈ Z^k \ 0} |b|^{-αt} converges iff αt > k.
            let converges = |t: f64| exponent * t > index_dim as f64;
            let (mut lo, mut hi) = (0.0, 1.0f64);
            while !converges(hi) {
                hi *= 2.0;
            }
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if converges(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
        FamilyRule::Unspecified => {
            return Err(Error::Config(
                "infinite family needs a tail-sum rule (finite or power-law) to bound its critical exponent".into(),
            ))
        }
    };
    Ok(ThetaBounds {
        theta_n: theta,
        theta_phi_lower: theta,
    })
}

/// Whether `θ_N ≤ θ_Φ-lower ≤ B ≤ d` holds for a computed triple.
pub fn theta_chain_holds(theta: &ThetaBounds, bowen_hi: f64, dim: usize) -> bool {
    theta.theta_n <= theta.theta_phi_lower
        && theta.theta_phi_lower <= bowen_hi + MARGIN
        && bowen_hi <= dim as f64 + MARGIN
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundDiagnostics {
    pub t: f64,
    pub p: Option<usize>,
    /// `(n, ρ_n)`.
    pub rho: Vec<(usize, f64)>,
    /// `(n, log Z̃_n(t))` for `n ≥ 2`.
    pub log_z_tilde: Vec<(usize, f64)>,
    /// `(n, log Z̃_n / (1 + log max ρ_j + sup log(d̄_{n+k}/d̲_n)))` in log form.
    pub log_kappa_terms: Vec<(usize, f64)>,
    pub kappa_proxy: f64,
    pub delta_proxy: f64,
    /// `δ·(p² + p + 1)`.
    pub threshold: f64,
    /// Advisory: the fitted data place the dimension above `t`.
    pub exceeds_t: bool,
    pub note: String,
}

/// Finite-horizon proxies for the general lower bound at exponent `t`.
pub fn lower_bound_diagnostics(system: &SystemSpec, t: f64, window: (usize, usize)) -> Result<LowerBoundDiagnostics> {
    let (start, n_max) = window;
    let h = system.horizon();
    if start == 0 || start >= n_max || n_max > h {
        return Err(Error::Config(format!(
            "lower-bound window [{start}, {n_max}] needs 1 ≤ start < end ≤ {h}"
        )));
    }
    let cert = certify_primitivity(system, 4)?;
    let stats = growth_stats(system.schedule(), None)?;
    let rho = rho_sequence(system, n_max);
    let z = partition_sequence(system, 1, n_max, t, &PartitionOptions::default())?;
    let d = system.dim() as f64;
    let mut log_z_tilde = Vec::new();
    let mut log_kappa_terms = Vec::new();
    for n in 2..=n_max {
        let g_min = stats.records[n - 2].g_min as f64;
        let (c_lo, _) = norm_extremes(system, n);
        let (d_lo, _) = diameter_extremes(system, n);
        let lz = z[n - 2].lo.ln() + (t / d) * g_min.ln() + t * c_lo.ln() + t * d_lo.ln();
        log_z_tilde.push((n, lz));
        if n < n_max {
            let max_rho = rho[..=n].iter().map(|r| r.1).fold(1.0, f64::max);
            let spread = (n..=h)
                .map(|k| (diameter_extremes(system, k).1 / d_lo).ln())
                .fold(0.0, f64::max);
            let den = 1.0 + max_rho.ln() + spread;
            if n >= start {
                log_kappa_terms.push((n, lz - den.ln()));
            }
        }
    }
    let tail = &log_kappa_terms[tail_start(log_kappa_terms.len())..];
    let period = system
        .period_over(tail.first().map_or(1, |p| p.0), n_max, (tail.len() / 3).max(1))
        .unwrap_or(1);
    let kappa_proxy = phase_slope(tail, period).unwrap_or(f64::NAN);
    let g = stats.log_g_max();
    let delta_proxy = trend::tail_rate(&g).unwrap_or(0.0).max(0.0);
    let (p, threshold, exceeds_t, note) = match &cert {
        Some(c) => {
            let k = (c.p * c.p + c.p + 1) as f64;
            let thr = delta_proxy * k;
            let ok = kappa_proxy.is_finite() && thr + MARGIN < kappa_proxy;
            (Some(c.p), thr, ok, "advisory finite-horizon verdict".to_string())
        }
        None => (
            None,
            f64::NAN,
            false,
            "no primitivity certificate found; lower bound inapplicable".to_string(),
        ),
    };
    Ok(LowerBoundDiagnostics {
        t,
        p,
        rho,
        log_z_tilde,
        log_kappa_terms,
        kappa_proxy,
        delta_proxy,
        threshold,
        exceeds_t,
        note,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalancingClass {
    Perfectly,
    Balanced,
    Weakly,
    Barely,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalancingReport {
    /// Strongest class consistent with the data.
    pub class: BalancingClass,
    /// Every class implied by the strongest one, strongest first.
    pub labels: Vec<BalancingClass>,
    pub rho: Vec<(usize, f64)>,
    pub log_rho_trend: TrendReport,
    pub log_log_rho_trend: TrendReport,
}

/// Balancing class of a `ρ_n` sequence; `similarity` says whether all maps are affine similarities.
pub fn classify_rho(rho: &[(usize, f64)], similarity: bool) -> BalancingReport {
    let log_rho: Vec<(usize, f64)> = rho.iter().map(|&(n, r)| (n, r.ln())).collect();
    let loglog: Vec<(usize, f64)> = rho.iter().map(|&(n, r)| (n, (1.0 + r.ln()).ln())).collect();
    let log_rho_trend = trend::classify(&log_rho);
    let log_log_rho_trend = trend::classify(&loglog);
    let class = if similarity && rho.iter().all(|r| (r.1 - 1.0).abs() <= 1e-12) {
        BalancingClass::Perfectly
    } else if trend::series_bounded(&log_rho) {
        BalancingClass::Balanced
    } else if log_rho_trend.verdict.is_subexponential() {
        BalancingClass::Weakly
    } else if log_log_rho_trend.verdict.is_subexponential() {
        BalancingClass::Barely
    } else {
        BalancingClass::Unclassified
    };
    let chain = [
        BalancingClass::Perfectly,
        BalancingClass::Balanced,
        BalancingClass::Weakly,
        BalancingClass::Barely,
    ];
    let labels = chain.iter().copied().filter(|c| *c >= class).collect();
    BalancingReport {
        class,
        labels,
        rho: rho.to_vec(),
        log_rho_trend,
        log_log_rho_trend,
    }
}

pub fn balancing_class(system: &SystemSpec, horizon: usize) -> BalancingReport {
    classify_rho(&rho_sequence(system, horizon), system.kind() == FamilyKind::Similarity)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum AbBounds {
    Bounds {
        a0: f64,
        a1: f64,
        b0: f64,
        b1: f64,
        lower: f64,
        upper: f64,
        /// `a/b` when both rate pairs agree.
        point: Option<f64>,
    },
    Inapplicable {
        reason: String,
    },
}

/// Dimension bounds `[a₀/b₁, a₁/b₀]` from fitted exponential rates of followers and norms.
pub fn ab_dimension_bounds(system: &SystemSpec, horizon: usize) -> Result<AbBounds> {
    let h = horizon.min(system.horizon());
    let stats = growth_stats(&system.schedule().truncate(h)?, None)?;
    let slope = |pts: Vec<(usize, f64)>| -> f64 {
        let tail: Vec<(f64, f64)> = pts[tail_start(pts.len())..]
            .iter()
            .map(|&(n, y)| (n as f64, y))
            .collect();
        fit_line(&tail).map_or(f64::NAN, |f| f.slope)
    };
    let a0 = slope(stats.log_g_min());
    let a1 = slope(stats.log_g_max());
    let inv_hi: Vec<(usize, f64)> = (1..=h).map(|n| (n, -norm_extremes(system, n).1.ln())).collect();
    let inv_lo: Vec<(usize, f64)> = (1..=h).map(|n| (n, -norm_extremes(system, n).0.ln())).collect();
    let b0 = slope(inv_hi);
    let b1 = slope(inv_lo);
    let (a0, a1) = (a0.min(a1), a1.max(a0));
    let (b0, b1) = (b0.min(b1), b1.max(b0));
    let positive = |x: f64| x.is_finite() && x > MARGIN;
    if !positive(a0) || !positive(b0) {
        return Ok(AbBounds::Inapplicable {
            reason: format!("fitted rates must be positive and finite: a0={a0}, b0={b0}"),
        });
    }
    let close = |x: f64, y: f64| (x - y).abs() <= MARGIN * x.abs().max(y.abs());
    Ok(AbBounds::Bounds {
        a0,
        a1,
        b0,
        b1,
        lower: a0 / b1,
        upper: a1 / b0,
        point: (close(a0, a1) && close(b0, b1)).then(|| 0.5 * (a0 + a1) / (0.5 * (b0 + b1))),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureVerdict {
    Zero,
    FinitePositive,
    Infinite,
    Inconclusive,
    Inapplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureTrend {
    pub h: f64,
    pub verdict: MeasureVerdict,
    /// `(n, log Z_n(h))`.
    pub log_z: Vec<(usize, f64)>,
    pub tail_slope: f64,
    pub reasons: Vec<String>,
}

/// Tail behaviour of `Z_n(h)` for systems meeting the Hausdorff-measure hypotheses.
pub fn hausdorff_measure_trend(system: &SystemSpec, h: f64, window: (usize, usize)) -> Result<MeasureTrend> {
    let (start, n_max) = window;
    if start == 0 || start >= n_max || n_max > system.horizon() {
        return Err(Error::Config(format!(
            "measure window [{start}, {n_max}] is not inside the horizon"
        )));
    }
    let mut reasons = Vec::new();
    let bal = balancing_class(system, n_max);
    if bal.class > BalancingClass::Balanced {
        reasons.push(format!("not balanced (class {:?})", bal.class));
    }
    let counts: Vec<(usize, f64)> = (1..=n_max)
        .map(|n| (n, system.schedule().alive_count(n) as f64))
        .collect();
    if !trend::series_bounded(&counts) {
        reasons.push("alphabet sizes are not uniformly bounded".into());
    }
    let diam: Vec<(usize, f64)> = (0..=n_max)
        .map(|n| {
            let (lo, hi) = diameter_extremes(system, n);
            (n, hi.ln().abs().max(lo.ln().abs()))
        })
        .collect();
    if !trend::series_bounded(&diam) {
        reasons.push("space diameters drift away from a fixed range".into());
    }
    if certify_primitivity(system, 4)?.is_none() {
        reasons.push("no primitivity certificate".into());
    }
    let z = partition_sequence(system, 1, n_max, h, &PartitionOptions::default())?;
    let log_z: Vec<(usize, f64)> = z.iter().filter(|v| v.n >= start).map(|v| (v.n, v.lo.ln())).collect();
    let tail = &log_z[tail_start(log_z.len())..];
    let period = system
        .period_over(tail[0].0, n_max, (tail.len() / 3).max(1))
        .unwrap_or(1);
    let tail_slope = phase_slope(tail, period).unwrap_or(f64::NAN);
    let verdict = if !reasons.is_empty() {
        MeasureVerdict::Inapplicable
    } else if !tail_slope.is_finite() {
        MeasureVerdict::Inconclusive
    } else if tail_slope < -MARGIN {
        MeasureVerdict::Zero
    } else if tail_slope > MARGIN {
        MeasureVerdict::Infinite
    } else {
        MeasureVerdict::FinitePositive
    };
    Ok(MeasureTrend {
        h,
        verdict,
        log_z,
        tail_slope,
        reasons,
    })
}

/// Default cap on the even-variation constant.
pub const EVEN_VARIATION_CAP: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvenVariation {
    pub passed: bool,
    /// Smallest `c` with `η_i/c ≤ ‖Dφ_i^(n)‖ ≤ c·η_i` over the horizon.
    pub c: f64,
    pub eta: Vec<f64>,
    pub cap: f64,
    pub reason: Option<String>,
}

/// Even-variation check with `η_i` the geometric mean of letter `i`'s norms.
pub fn evenly_varying_check(system: &SystemSpec, horizon: usize, cap: f64) -> EvenVariation {
    let s = system.schedule();
    let h = horizon.min(system.horizon());
    let fail = |reason: &str| EvenVariation {
        passed: false,
        c: f64::INFINITY,
        eta: Vec::new(),
        cap,
        reason: Some(reason.into()),
    };
    if !s.is_ifs() {
        return fail("even variation is defined for iterated function systems only");
    }
    let k = s.alphabet(1).len();
    if (1..=h).any(|n| s.alphabet(n).len() != k || s.alive_count(n) != k) {
        return fail("letter index sets differ across times");
    }
    let mut eta = Vec::with_capacity(k);
    let mut c = 1.0f64;
    for i in 0..k {
        let logs: Vec<(f64, f64)> = (1..=h)
            .map(|n| {
                let b = system.letter_norm(n, i);
                (b.lo.ln(), b.hi.ln())
            })
            .collect();
        let mean = logs.iter().map(|l| 0.5 * (l.0 + l.1)).sum::<f64>() / h as f64;
        for &(lo, hi) in &logs {
            c = c.max((hi - mean).exp()).max((mean - lo).exp());
        }
        eta.push(mean.exp());
    }
    let passed = c <= cap;
    EvenVariation {
        passed,
        c,
        eta,
        cap,
        reason: (!passed).then(|| format!("sandwich constant {c} exceeds the cap {cap}")),
    }
}
