//! Ascending systems: alphabets that only grow, over a fixed family of maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{ConformalMap, Region};
use crate::symbolic::Incidence;
use crate::system::SystemSpec;

use super::builders::{cycled, single_vertex_system};

/// Master family with an inclusion schedule `I^(1) ⊆ I^(2) ⊆ …`.
#[derive(Clone, Debug)]
pub struct AscendingSpec {
    pub name: String,
    pub region: Region,
    /// `maps[k][i]` is the map of master letter `i` at times `n ≡ k + 1` modulo
    /// `maps.len()`; a single layer makes the family stationary.
    pub maps: Vec<Vec<ConformalMap>>,
    pub labels: Vec<String>,
    /// Master-letter indices of `I^(n)`; the last entry repeats past its end.
    pub alphabets: Vec<Vec<usize>>,
}

impl AscendingSpec {
    pub fn is_stationary(&self) -> bool {
        self.maps.windows(2).all(|w| w[0] == w[1])
    }

    fn alphabet(&self, n: usize) -> &[usize] {
        &self.alphabets[(n - 1).min(self.alphabets.len() - 1)]
    }

    fn validate(&self) -> Result<()> {
        if self.maps.is_empty() || self.alphabets.is_empty() {
            return Err(Error::Config(format!(
                "{}: needs maps and at least one alphabet",
                self.name
            )));
        }
        let size = self.labels.len();
        if self.maps.iter().any(|layer| layer.len() != size) {
            return Err(Error::Config(format!(
                "{}: every map layer needs one map per master letter",
                self.name
            )));
        }
        for (k, alpha) in self.alphabets.iter().enumerate() {
            if alpha.is_empty() {
                return Err(Error::Build(format!("{}: empty alphabet at time {}", self.name, k + 1)));
            }
            if let Some(&i) = alpha.iter().find(|&&i| i >= size) {
                return Err(Error::Config(format!(
                    "{}: time {} uses unknown letter {i}",
                    self.name,
                    k + 1
                )));
            }
            if k > 0 {
                if let Some(&i) = self.alphabets[k - 1].iter().find(|i| !alpha.contains(i)) {
                    return Err(Error::Build(format!(
                        "{}: not ascending at time {}: letter {} leaves the alphabet",
                        self.name,
                        k + 1,
                        self.labels[i]
                    )));
                }
            }
        }
        Ok(())
    }

    fn restricted(&self, letters: impl Fn(usize) -> Vec<usize>, name: String, horizon: usize) -> Result<SystemSpec> {
        let mut maps = Vec::with_capacity(horizon);
        let mut labels = Vec::with_capacity(horizon);
        for n in 1..=horizon {
            let layer = cycled(&self.maps, n - 1);
            let alpha = letters(n);
            maps.push(alpha.iter().map(|&i| layer[i].clone()).collect());
            labels.push(alpha.iter().map(|&i| self.labels[i].clone()).collect());
        }
        single_vertex_system(&name, self.region, maps, labels, &[Incidence::Full])
    }
}

/// System with alphabet `I^(n)` at time `n`, flagged ascending.
pub fn build_ascending(spec: &AscendingSpec, horizon: usize) -> Result<SystemSpec> {
    spec.validate()?;
    Ok(spec
        .restricted(|n| spec.alphabet(n).to_vec(), spec.name.clone(), horizon)?
        .with_ascending(true))
}

/// Autonomous system on the first-`ℓ` alphabet `I^(ℓ)`.
pub fn truncated_autonomous(spec: &AscendingSpec, ell: usize, horizon: usize) -> Result<SystemSpec> {
    spec.validate()?;
    if !spec.is_stationary() {
        return Err(Error::Unsupported(
            "truncated autonomous subsystems need a stationary family".into(),
        ));
    }
    let alpha = spec.alphabet(ell.max(1)).to_vec();
    spec.restricted(|_| alpha.clone(), format!("{}-at{ell}", spec.name), horizon)
}

/// The autonomous closure on `I_∞ = ∪ I^(n)`.
#[derive(Clone, Debug, Serialize)]
pub struct Closure {
    #[serde(skip)]
    pub system: SystemSpec,
    pub letters: Vec<String>,
    /// Whether the union was cut at the cap.
    pub truncated: bool,
    pub note: String,
}

/// Closure of the alphabets up to `through` (all listed alphabets when the
/// schedule has settled), keeping at most `cap` letters in order of arrival.
pub fn autonomous_closure(spec: &AscendingSpec, through: usize, cap: usize, horizon: usize) -> Result<Closure> {
    spec.validate()?;
    if !spec.is_stationary() {
        return Err(Error::Unsupported(
            "autonomous closure is defined for stationary ascending iterated function systems".into(),
        ));
    }
    if cap == 0 {
        return Err(Error::Config("closure cap must be positive".into()));
    }
    let mut union: Vec<usize> = Vec::new();
    for n in 1..=through.max(spec.alphabets.len()) {
        for &i in spec.alphabet(n) {
            if !union.contains(&i) {
                union.push(i);
            }
        }
    }
    let truncated = union.len() > cap;
    let kept = if truncated {
        union[..cap].to_vec()
    } else {
        union.clone()
    };
    let note = if truncated {
        format!(
            "closure cut to the first {cap} of {} letters seen through time {}; the remaining tail is omitted",
            union.len(),
            through.max(spec.alphabets.len())
        )
    } else {
        format!("closure holds all {} letters", kept.len())
    };
    let system = spec
        .restricted(|_| kept.clone(), format!("{}-closure", spec.name), horizon)?
        .with_note(note.clone());
    Ok(Closure {
        system,
        letters: kept.iter().map(|&i| spec.labels[i].clone()).collect(),
        truncated,
        note,
    })
}
