//! Systems built from blocks of words of another system: one-step primitive
//! re-blocking, maximizing-pair subsystems and re-blocking at pinch times.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::ConformalMap;
use crate::numeric::Sum;
use crate::symbolic::{GraphSchedule, Incidence, Letter, PrimitivityCertificate, Word};
use crate::system::{compose_norm, distortion_constant, SystemSpec};
use crate::thermo::{partition, Strategy, DEFAULT_BUDGET};

/// Relative slack when comparing partition sums of a system and its re-blocking.
pub const IDENTITY_RTOL: f64 = 1e-12;

fn join_labels(system: &SystemSpec, w: &Word) -> String {
    w.letters
        .iter()
        .enumerate()
        .map(|(k, &a)| system.schedule().letter(w.time_of(k), a).label.as_str())
        .collect::<Vec<_>>()
        .join(".")
}

fn block_map(system: &SystemSpec, w: &Word) -> ConformalMap {
    let maps: Vec<ConformalMap> = system.word_maps(w).into_iter().cloned().collect();
    if maps.len() == 1 {
        maps.into_iter().next().unwrap()
    } else {
        ConformalMap::Composite(maps)
    }
}

fn words_of(system: &SystemSpec, m: usize, n: usize) -> Result<Vec<Word>> {
    let count = system.schedule().count_words(m, n)?;
    if count > DEFAULT_BUDGET {
        return Err(Error::Budget(format!("{count} words on times {m}..={n}")));
    }
    let mut out = Vec::with_capacity(count as usize);
    system
        .schedule()
        .enumerate_words(m, n, |w| out.push(Word::new(m, w.to_vec())))?;
    Ok(out)
}

fn carry_over(system: &SystemSpec, built: SystemSpec) -> SystemSpec {
    match system.declared_k() {
        Some(k) => built.with_declared_k(k),
        None => built,
    }
}

/// Block system of a `p`-finitely primitive system.
#[derive(Clone, Debug)]
pub struct Reblocked {
    pub system: SystemSpec,
    pub block: usize,
    /// Original times left out because they do not fill a whole block.
    pub dropped_times: usize,
}

/// Re-blocks into words of length `p`: `Î^(n) = I^{(n-1)p+1, np}` with the
/// incidence induced by `A^(np)`.
pub fn reblock_one_primitive(system: &SystemSpec, cert: &PrimitivityCertificate) -> Result<Reblocked> {
    let p = cert.p;
    if p == 0 {
        return Err(Error::Config("re-blocking needs a certificate with p ≥ 1".into()));
    }
    let s = system.schedule();
    let blocks = system.horizon() / p;
    if blocks == 0 {
        return Err(Error::Config(format!(
            "horizon {} is shorter than one block of {p}",
            system.horizon()
        )));
    }
    let mut alphabets = Vec::with_capacity(blocks);
    let mut maps = Vec::with_capacity(blocks);
    let mut words = Vec::with_capacity(blocks);
    for n in 1..=blocks {
        let ws = words_of(system, (n - 1) * p + 1, n * p)?;
        alphabets.push(
            ws.iter()
                .map(|w| {
                    let first = s.letter(w.start, w.letters[0]).initial;
                    let last = s.letter(w.end(), *w.letters.last().unwrap()).terminal;
                    Letter::new(join_labels(system, w), first, last)
                })
                .collect::<Vec<_>>(),
        );
        maps.push(ws.iter().map(|w| block_map(system, w)).collect::<Vec<_>>());
        words.push(ws);
    }
    let incidence = (1..blocks)
        .map(|n| {
            let time = n * p;
            let full = matches!(s.incidence(time), Incidence::Full);
            if full {
                return Incidence::Full;
            }
            Incidence::Matrix(
                words[n - 1]
                    .iter()
                    .map(|a| {
                        let last = *a.letters.last().unwrap();
                        words[n].iter().map(|b| s.allowed(time, last, b.letters[0])).collect()
                    })
                    .collect(),
            )
        })
        .collect();
    let vertex_counts = (0..=blocks).map(|n| s.vertex_count(n * p)).collect();
    let schedule = GraphSchedule::new(vertex_counts, alphabets, incidence)?;
    let spaces = (0..=blocks).map(|n| system.spaces_at(n * p).to_vec()).collect();
    let built = SystemSpec::new(format!("{}-blocks{p}", system.name()), schedule, spaces, maps)?;
    Ok(Reblocked {
        system: carry_over(system, built),
        block: p,
        dropped_times: system.horizon() - blocks * p,
    })
}

/// Subsystem keeping, in every block, the words between the endpoint pair
/// with the largest restricted partition sum.
#[derive(Clone, Debug, Serialize)]
pub struct GBoundedSubsystem {
    #[serde(skip)]
    pub system: SystemSpec,
    pub ell: usize,
    pub p: usize,
    pub t: f64,
    /// Maximizing `(a*_n, b*_n)` per block, as letter indices.
    pub pairs: Vec<(usize, usize)>,
    /// Restricted partition sums of the maximizing pairs.
    pub pair_sums: Vec<f64>,
    pub connectors: Vec<Word>,
    pub k: f64,
    /// Largest connector-layer partition sum.
    pub m: f64,
    pub q: f64,
    /// `K² M^p / Q^t`.
    pub sandwich_factor: f64,
}

/// Builds `S_ℓ`: block `n` covers times `(n-1)(ℓ+p)+1 ..= n(ℓ+p)`; its letters
/// are the words of length `ℓ` from `a*_n` to `b*_n` followed by a fixed
/// connector into `a*_{n+1}`. Ties go to the lexicographically smallest pair.
pub fn extract_subsystem_g_bounded(
    system: &SystemSpec,
    cert: &PrimitivityCertificate,
    ell: usize,
    t: f64,
) -> Result<GBoundedSubsystem> {
    let p = cert.p;
    if ell <= p || ell == 0 {
        return Err(Error::Config(format!(
            "block length {ell} must exceed the primitivity gap {p}"
        )));
    }
    let h = system.horizon();
    let step = ell + p;
    if h < ell {
        return Err(Error::Config(format!("horizon {h} is shorter than one block")));
    }
    let blocks = (h - ell) / step;
    if blocks == 0 {
        return Err(Error::Config(format!(
            "horizon {h} cannot hold a block of {ell} plus a connector and the next block"
        )));
    }
    let mut pairs = Vec::with_capacity(blocks + 1);
    let mut pair_sums = Vec::with_capacity(blocks + 1);
    let mut restricted = Vec::with_capacity(blocks + 1);
    for n in 1..=blocks + 1 {
        let m = (n - 1) * step + 1;
        let mut sums: BTreeMap<(usize, usize), (Sum, Vec<Word>)> = BTreeMap::new();
        for w in words_of(system, m, m + ell - 1)? {
            let norm = compose_norm(&w, system)?.hi;
            let e = sums
                .entry((w.letters[0], *w.letters.last().unwrap()))
                .or_insert_with(|| (Sum::new(), Vec::new()));
            e.0.add(norm.powf(t));
            e.1.push(w);
        }
        let (&best, (sum, _)) = sums
            .iter()
            .fold(None::<(&(usize, usize), &(Sum, Vec<Word>))>, |acc, cur| match acc {
                Some(a) if a.1 .0.value() >= cur.1 .0.value() => Some(a),
                _ => Some(cur),
            })
            .ok_or_else(|| Error::Integrity {
                time: m,
                message: "no admissible block words".into(),
            })?;
        pairs.push(best);
        pair_sums.push(sum.value());
        restricted.push(sums.remove(&best).unwrap().1);
    }
    let mut connectors = Vec::with_capacity(blocks);
    for n in 1..=blocks {
        let at = n * ell + (n - 1) * p;
        let lambda = cert
            .connector(at, pairs[n - 1].1, pairs[n].0)
            .ok_or_else(|| Error::Certification(format!("no connector from time {at} into block {}", n + 1)))?;
        connectors.push(lambda);
    }
    let s = system.schedule();
    let mut alphabets = Vec::with_capacity(blocks);
    let mut maps = Vec::with_capacity(blocks);
    let mut spaces = vec![vec![*system.space(0, s.letter(1, pairs[0].0).initial)]];
    for n in 1..=blocks {
        let letters: Vec<Word> = restricted[n - 1].iter().map(|w| w.concat(&connectors[n - 1])).collect();
        alphabets.push(
            letters
                .iter()
                .map(|w| Letter::new(join_labels(system, w), 0, 0))
                .collect(),
        );
        maps.push(letters.iter().map(|w| block_map(system, w)).collect());
        let w = &letters[0];
        let v = s.letter(w.end(), *w.letters.last().unwrap()).terminal;
        spaces.push(vec![*system.space(w.end(), v)]);
    }
    let schedule = GraphSchedule::new(vec![1; blocks + 1], alphabets, vec![Incidence::Full; blocks - 1])?;
    let built = SystemSpec::new(format!("{}-sub{ell}", system.name()), schedule, spaces, maps)?;
    let k = distortion_constant(system)?;
    let mut m = 1.0f64;
    if p > 0 {
        for n in 1..=blocks {
            let from = n * ell + (n - 1) * p + 1;
            m = m.max(partition(system, from, from + p - 1, t, Strategy::Auto)?.hi);
        }
    }
    let q = cert.q;
    Ok(GBoundedSubsystem {
        system: carry_over(system, built),
        ell,
        p,
        t,
        pairs: pairs[..blocks].to_vec(),
        pair_sums: pair_sums[..blocks].to_vec(),
        connectors,
        k,
        m,
        q,
        sandwich_factor: k * k * m.powi(p as i32) / q.powf(t),
    })
}

/// Re-blocking of a system at times where it passes through a single vertex.
#[derive(Clone, Debug, Serialize)]
pub struct PinchedSubsystem {
    #[serde(skip)]
    pub system: SystemSpec,
    pub pinch_times: Vec<usize>,
    /// `(ℓ_n² - ℓ_{n-1}²)/n` for each pinch index `n`.
    pub growth: Vec<f64>,
    /// `(n, t, Z^Φ_{ℓ_n}(t), Z^S_n(t))` checked on construction.
    pub identity_checks: Vec<(usize, f64, f64, f64)>,
}

/// Times used to verify the partition identity.
const IDENTITY_CHECK_BLOCKS: usize = 5;

/// Whether `(ℓ_n² - ℓ_{n-1}²)/n` stays bounded: the second half of the sequence
/// may not exceed the first half's maximum by more than a quarter.
fn growth_bounded(growth: &[f64]) -> bool {
    let half = growth.len() / 2;
    let head = growth[..half].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tail = growth[half..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    tail <= 1.25 * head
}

/// NCIFS with letters `E^(n) = I^{ℓ_{n-1}+1, ℓ_n}` (`ℓ_0 = 0`).
pub fn reblock_pinched(system: &SystemSpec, pinch_times: &[usize]) -> Result<PinchedSubsystem> {
    let s = system.schedule();
    let h = system.horizon();
    if pinch_times.len() < 4 {
        return Err(Error::Config(
            "pinched re-blocking needs at least 4 pinch times to judge their growth".into(),
        ));
    }
    if pinch_times.windows(2).any(|w| w[0] >= w[1]) || pinch_times[0] == 0 {
        return Err(Error::Config(
            "pinch times must be positive and strictly increasing".into(),
        ));
    }
    if let Some(&l) = pinch_times.iter().find(|&&l| l > h) {
        return Err(Error::Config(format!("pinch time {l} exceeds the horizon {h}")));
    }
    if s.vertex_count(0) != 1 {
        return Err(Error::Build(
            "pinching hypothesis: the initial vertex set must be a singleton".into(),
        ));
    }
    for &l in pinch_times {
        if s.vertex_count(l) != 1 {
            return Err(Error::Build(format!(
                "pinching hypothesis: V at time {l} has {} vertices, not one",
                s.vertex_count(l)
            )));
        }
        if l < h {
            let all_ones = s
                .alive_letters(l)
                .all(|a| s.alive_letters(l + 1).all(|b| s.allowed(l, a, b)));
            if !all_ones {
                return Err(Error::Build(format!(
                    "pinching hypothesis: incidence at time {l} is not all ones"
                )));
            }
        }
    }
    let growth: Vec<f64> = pinch_times
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let prev = if k == 0 { 0 } else { pinch_times[k - 1] };
            ((l * l - prev * prev) as f64) / (k + 1) as f64
        })
        .collect();
    if !growth_bounded(&growth) {
        return Err(Error::Build(format!(
            "pinching hypothesis: (ℓ_n² - ℓ_(n-1)²)/n grows without bound ({:.3} → {:.3})",
            growth[0],
            growth.last().unwrap()
        )));
    }
    let j = pinch_times.len();
    let mut alphabets = Vec::with_capacity(j);
    let mut maps = Vec::with_capacity(j);
    let mut spaces = vec![system.spaces_at(0).to_vec()];
    for k in 0..j {
        let from = if k == 0 { 1 } else { pinch_times[k - 1] + 1 };
        let ws = words_of(system, from, pinch_times[k])?;
        alphabets.push(ws.iter().map(|w| Letter::new(join_labels(system, w), 0, 0)).collect());
        maps.push(ws.iter().map(|w| block_map(system, w)).collect());
        spaces.push(system.spaces_at(pinch_times[k]).to_vec());
    }
    let schedule = GraphSchedule::new(vec![1; j + 1], alphabets, vec![Incidence::Full; j - 1])?;
    let built = carry_over(
        system,
        SystemSpec::new(format!("{}-pinched", system.name()), schedule, spaces, maps)?,
    );
    let t = 0.5;
    let mut identity_checks = Vec::new();
    for n in 1..=j.min(IDENTITY_CHECK_BLOCKS) {
        let z_phi = partition(system, 1, pinch_times[n - 1], t, Strategy::Auto)?.hi;
        let z_s = partition(&built, 1, n, t, Strategy::Auto)?.hi;
        if (z_phi - z_s).abs() > IDENTITY_RTOL * z_phi.abs().max(z_s.abs()) {
            return Err(Error::Integrity {
                time: pinch_times[n - 1],
                message: format!("re-blocked partition sum {z_s} differs from {z_phi}"),
            });
        }
        identity_checks.push((n, t, z_phi, z_s));
    }
    Ok(PinchedSubsystem {
        system: built,
        pinch_times: pinch_times.to_vec(),
        growth,
        identity_checks,
    })
}
