//! Which dimension formula a system's finite-horizon data supports.
//!
//! Every result is checked up to the materialised horizon only; a passing check
//! is evidence, not proof, for the infinite system.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{diameter_diagnostics, verify_osc, DiameterReport};
use crate::maps::FamilyKind;
use crate::symbolic::{growth_stats, subexp_diagnostic, SubexpReport};
use crate::system::SystemSpec;
use crate::thermo::{
    ab_dimension_bounds, balancing_class, certify_primitivity, evenly_varying_check, AbBounds, BalancingClass,
    BalancingReport, EvenVariation, EVEN_VARIATION_CAP,
};
use crate::trend::Verdict;

/// Largest connector length tried when certifying primitivity.
pub const PRIMITIVITY_P_MAX: usize = 4;
/// Levels at which the open set condition is checked.
pub const OSC_LEVELS: usize = 4;

/// The result that justifies reading the Bowen parameter as the Hausdorff dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Justification {
    /// Stationary finite primitive system: the classical formula.
    AutonomousFinite,
    /// Finite ascending, finitely primitive system.
    AscendingPrimitive,
    /// Finite non-stationary iterated function system with subexponential alphabets.
    SubexponentialIfs,
    /// Weakly balanced, finitely primitive, with subexponentially growing followers.
    WeaklyBalancedPrimitive,
    /// Exponential follower growth and norms decaying at fitted rates `a` and `b`; dimension `a/b`.
    GrowthRateRatio,
    /// Iterated function system whose letter norms vary evenly over time.
    EvenlyVarying,
    /// Nothing beyond the general bound `HD ≤ B`.
    UpperBoundOnly,
}

impl Justification {
    pub const ALL: [Justification; 7] = [
        Justification::AutonomousFinite,
        Justification::AscendingPrimitive,
        Justification::SubexponentialIfs,
        Justification::WeaklyBalancedPrimitive,
        Justification::GrowthRateRatio,
        Justification::EvenlyVarying,
        Justification::UpperBoundOnly,
    ];

    pub fn statement(&self) -> &'static str {
        match self {
            Justification::AutonomousFinite => "HD = B for a finite autonomous primitive conformal system",
            Justification::AscendingPrimitive => "HD = B for a finite ascending, finitely primitive system",
            Justification::SubexponentialIfs => {
                "HD = B for a finite non-stationary IFS with subexponentially bounded alphabets"
            }
            Justification::WeaklyBalancedPrimitive => {
                "HD = B for a weakly balanced, finitely primitive system with subexponential followers"
            }
            Justification::GrowthRateRatio => "HD = a/b from exponential follower growth and norm decay rates",
            Justification::EvenlyVarying => "HD = B for an evenly varying iterated function system",
            Justification::UpperBoundOnly => "upper bound only: HD ≤ B",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Justification::AutonomousFinite => "autonomous-finite",
            Justification::AscendingPrimitive => "ascending-primitive",
            Justification::SubexponentialIfs => "subexponential-ifs",
            Justification::WeaklyBalancedPrimitive => "weakly-balanced-primitive",
            Justification::GrowthRateRatio => "growth-rate-ratio",
            Justification::EvenlyVarying => "evenly-varying",
            Justification::UpperBoundOnly => "upper-bound-only",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|j| j.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub justification: Justification,
    pub holds: bool,
    /// Failed hypotheses, empty when the check holds.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimitivitySummary {
    pub p: usize,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub horizon: usize,
    pub stationary: bool,
    pub ifs: bool,
    pub ascending: bool,
    pub similarity: bool,
    pub primitivity: Option<PrimitivitySummary>,
    pub osc: Vec<(usize, bool)>,
    pub subexp: SubexpReport,
    pub balancing: BalancingReport,
    pub diameters: DiameterReport,
    pub even_variation: Option<EvenVariation>,
    pub ab: AbBounds,
    pub checks: Vec<TheoremCheck>,
    /// First justification whose hypotheses hold, in the order of [`Justification::ALL`].
    pub justification: Justification,
    pub summary: String,
}

impl HypothesisReport {
    pub fn supports(&self, j: Justification) -> bool {
        self.checks.iter().any(|c| c.justification == j && c.holds)
    }

    /// The `a/b` point estimate, when that path applies.
    pub fn rate_ratio(&self) -> Option<f64> {
        match self.ab {
            AbBounds::Bounds { point, .. } if self.supports(Justification::GrowthRateRatio) => point,
            _ => None,
        }
    }
}

fn class_label(c: BalancingClass) -> &'static str {
    match c {
        BalancingClass::Perfectly => "perfectly balanced",
        BalancingClass::Balanced => "balanced",
        BalancingClass::Weakly => "weakly balanced",
        BalancingClass::Barely => "barely balanced",
        BalancingClass::Unclassified => "unbalanced",
    }
}

/// Runs every structural check over times `1..=horizon`.
pub fn check_hypotheses(system: &SystemSpec, horizon: usize) -> Result<HypothesisReport> {
    let h = horizon.min(system.horizon());
    let schedule = system.schedule().truncate(h)?;
    let cert = if h >= 2 {
        certify_primitivity(system, PRIMITIVITY_P_MAX)?
    } else {
        None
    };
    let stats = growth_stats(&schedule, cert.as_ref())?;
    let subexp = subexp_diagnostic(&stats);
    let balancing = balancing_class(system, h);
    let diameters = diameter_diagnostics(system, h);
    let osc = (1..=OSC_LEVELS.min(h))
        .map(|n| Ok((n, verify_osc(system, n)?.holds())))
        .collect::<Result<Vec<_>>>()?;
    let ifs = system.schedule().is_ifs();
    let stationary = system.is_stationary();
    let even_variation = ifs.then(|| evenly_varying_check(system, h, EVEN_VARIATION_CAP));
    let ab = ab_dimension_bounds(system, h)?;

    let mut common = Vec::new();
    if let Some(&(n, _)) = osc.iter().find(|(_, ok)| !ok) {
        common.push(format!("open set condition fails at level {n}"));
    }
    if !diameters.condition_holds {
        common.push("space diameters or vertex counts vary exponentially".to_string());
    }
    let primitive = cert.is_some();
    let alphabet_sub = subexp.alphabet.verdict.is_subexponential();
    let followers_sub = subexp.followers.verdict.is_subexponential();
    let check = |j: Justification, own: Vec<(bool, &str)>| {
        let mut failures = common.clone();
        failures.extend(own.into_iter().filter(|(ok, _)| !ok).map(|(_, why)| why.to_string()));
        TheoremCheck {
            justification: j,
            holds: failures.is_empty(),
            failures,
        }
    };
    let growth_exponential = matches!(subexp.followers.verdict, Verdict::ExponentialRate(_));
    let ab_point = matches!(ab, AbBounds::Bounds { point: Some(_), .. });
    let checks = vec![
        check(
            Justification::AutonomousFinite,
            vec![
                (stationary, "system is not stationary"),
                (primitive, "no primitivity certificate"),
            ],
        ),
        check(
            Justification::AscendingPrimitive,
            vec![
                (system.is_ascending(), "system is not ascending"),
                (primitive, "no primitivity certificate"),
            ],
        ),
        check(
            Justification::SubexponentialIfs,
            vec![
                (ifs, "not an iterated function system"),
                (alphabet_sub, "alphabet sizes are not subexponentially bounded"),
            ],
        ),
        check(
            Justification::WeaklyBalancedPrimitive,
            vec![
                (balancing.class <= BalancingClass::Weakly, "not weakly balanced"),
                (primitive, "no primitivity certificate"),
                (followers_sub, "follower counts are not subexponential"),
            ],
        ),
        check(
            Justification::GrowthRateRatio,
            vec![
                (growth_exponential, "followers do not grow exponentially"),
                (ab_point, "fitted growth and decay rates do not settle"),
            ],
        ),
        check(
            Justification::EvenlyVarying,
            vec![(
                even_variation.as_ref().is_some_and(|e| e.passed),
                "even variation check fails or does not apply",
            )],
        ),
        TheoremCheck {
            justification: Justification::UpperBoundOnly,
            holds: true,
            failures: Vec::new(),
        },
    ];
    let justification = checks.iter().find(|c| c.holds).map(|c| c.justification).unwrap();
    let mut descr = Vec::new();
    if stationary {
        descr.push("autonomous".to_string());
    } else if system.is_ascending() {
        descr.push("ascending".to_string());
    } else {
        descr.push("non-autonomous".to_string());
    }
    descr.push(class_label(balancing.class).to_string());
    let summary = format!("{}: {}", descr.join(", "), justification.statement());
    Ok(HypothesisReport {
        horizon: h,
        stationary,
        ifs,
        ascending: system.is_ascending(),
        similarity: system.kind() == FamilyKind::Similarity,
        primitivity: cert.map(|c| PrimitivitySummary { p: c.p, q: c.q }),
        osc,
        subexp,
        balancing,
        diameters,
        even_variation,
        ab,
        checks,
        justification,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::bundled;

    #[test]
    fn bundled_justifications() {
        let cases: Vec<(SystemSpec, Justification)> = vec![
            (bundled::cantor3(16).unwrap(), Justification::AutonomousFinite),
            (bundled::alternating(16).unwrap(), Justification::SubexponentialIfs),
            (bundled::cf12(12).unwrap(), Justification::AutonomousFinite),
            (bundled::cf_ascending(12).unwrap(), Justification::AscendingPrimitive),
            (bundled::ab_half(14).unwrap(), Justification::GrowthRateRatio),
            (bundled::crafted_p2(12).unwrap(), Justification::AutonomousFinite),
            (bundled::pinched2(12).unwrap(), Justification::WeaklyBalancedPrimitive),
        ];
        for (s, want) in cases {
            let r = check_hypotheses(&s, s.horizon()).unwrap();
            assert_eq!(r.justification, want, "{}: {:?}", s.name(), r.checks);
        }
    }

    #[test]
    fn cantor_summary() {
        let r = check_hypotheses(&bundled::cantor3(16).unwrap(), 16).unwrap();
        assert!(r.summary.starts_with("autonomous, perfectly balanced"), "{}", r.summary);
        assert_eq!(r.primitivity.as_ref().unwrap().p, 0);
    }

    #[test]
    fn ab_half_point() {
        let r = check_hypotheses(&bundled::ab_half(14).unwrap(), 14).unwrap();
        assert!((r.rate_ratio().unwrap() - 0.5).abs() < 0.02);
    }

    #[test]
    fn names_round_trip() {
        for j in Justification::ALL {
            assert_eq!(Justification::from_name(j.name()), Some(j));
        }
    }
}
