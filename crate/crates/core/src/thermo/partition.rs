//! Partition functions `Z_{m,n}(t) = Σ_{ω ∈ I^{m,n}} ‖Dφ_ω‖^t`.

use dashmap::DashMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{self, ConformalMap, FamilyKind, NormBracket, Region};
use crate::numeric::Sum;
use crate::symbolic::{Incidence, Word};
use crate::system::{distortion_constant, SystemSpec};

/// Default cap on the number of tree nodes an enumeration may visit.
pub const DEFAULT_BUDGET: u128 = 1 << 26;

/// Below this many subtrees the enumeration is split one level deeper.
const MIN_ROOTS: u128 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Matrix-exact for similarity families, enumeration within budget
    /// otherwise, then the distortion bracket.
    Auto,
    EnumerateExact,
    MatrixExact,
    BdpBracket,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionValue {
    pub m: usize,
    pub n: usize,
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
    pub strategy: Strategy,
}

/// Concurrent memo of norm brackets for families without a closed form.
#[derive(Debug, Default)]
pub struct NormMemo {
    table: DashMap<Word, NormBracket>,
}

impl NormMemo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&self, w: &Word, f: impl FnOnce() -> Result<NormBracket>) -> Result<NormBracket> {
        if let Some(b) = self.table.get(w) {
            return Ok(*b);
        }
        let b = f()?;
        self.table.insert(w.clone(), b);
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PartitionOptions<'a> {
    pub strategy: Strategy,
    pub budget: u128,
    pub memo: Option<&'a NormMemo>,
}

impl Default for PartitionOptions<'_> {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            budget: DEFAULT_BUDGET,
            memo: None,
        }
    }
}

/// How single nodes of the word tree get their norms.
enum Kernel {
    /// Product of per-letter ratios.
    Similarity(Vec<Vec<f64>>),
    /// Continuant recursion: digits per letter and the left end of each letter's domain.
    Moebius {
        digits: Vec<Vec<Vec<f64>>>,
        left: Vec<Vec<f64>>,
    },
    Generic,
}

fn kernel(system: &SystemSpec) -> Kernel {
    let h = system.horizon();
    match system.kind() {
        FamilyKind::Similarity => Kernel::Similarity(
            (1..=h)
                .map(|n| {
                    system
                        .maps_at(n)
                        .iter()
                        .map(|m| {
                            let mut p = Vec::new();
                            m.flatten_into(&mut p);
                            p.iter()
                                .map(|x| match x {
                                    ConformalMap::Similarity { ratio, .. } => ratio.abs(),
                                    _ => unreachable!(),
                                })
                                .product()
                        })
                        .collect()
                })
                .collect(),
        ),
        FamilyKind::Moebius => {
            let mut left = Vec::with_capacity(h);
            for n in 1..=h {
                let mut row = Vec::new();
                for a in 0..system.schedule().alphabet(n).len() {
                    let v = system.schedule().letter(n, a).terminal;
                    match system.space(n, v).region {
                        Region::Interval { lo, .. } if lo >= 0.0 => row.push(lo),
                        _ => return Kernel::Generic,
                    }
                }
                left.push(row);
            }
            let digits = (1..=h)
                .map(|n| {
                    system
                        .maps_at(n)
                        .iter()
                        .map(|m| {
                            let mut p = Vec::new();
                            m.flatten_into(&mut p);
                            p.iter()
                                .map(|x| match x {
                                    ConformalMap::MoebiusInverse { digit } => *digit,
                                    _ => unreachable!(),
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            Kernel::Moebius { digits, left }
        }
        FamilyKind::Mixed => Kernel::Generic,
    }
}

/// `Z_{m,n}(t)` with a certified bracket.
pub fn partition(system: &SystemSpec, m: usize, n: usize, t: f64, strategy: Strategy) -> Result<PartitionValue> {
    let opts = PartitionOptions {
        strategy,
        ..Default::default()
    };
    partition_sequence(system, m, n, t, &opts).map(|mut v| v.pop().expect("non-empty window"))
}

/// `Z_{m,j}(t)` for every `j = m..=n_max`, from one traversal.
pub fn partition_sequence(
    system: &SystemSpec,
    m: usize,
    n_max: usize,
    t: f64,
    opts: &PartitionOptions,
) -> Result<Vec<PartitionValue>> {
    if !(t >= 0.0 && t <= system.dim() as f64) {
        return Err(Error::Input(format!("exponent t={t} outside [0, {}]", system.dim())));
    }
    let sched = system.schedule();
    if m == 0 || m > n_max || n_max > sched.horizon() {
        return Err(Error::Config(format!(
            "window [{m}, {n_max}] is not inside the horizon {}",
            sched.horizon()
        )));
    }
    let strategy = resolve(system, m, n_max, opts)?;
    let pairs = match strategy {
        Strategy::EnumerateExact => enumerate(system, m, n_max, t, opts)?,
        Strategy::MatrixExact => {
            let Kernel::Similarity(f) = kernel(system) else {
                return Err(Error::Config(
                    "matrix-exact needs multiplicative norms (similarities); use enumerate-exact or bdp-bracket".into(),
                ));
            };
            let z = transfer(system, m, n_max, |n, a| f[n - 1][a].powf(t));
            z.into_iter().map(|v| (v, v)).collect()
        }
        Strategy::BdpBracket => {
            let k = distortion_constant(system)?;
            let hi = transfer(system, m, n_max, |n, a| system.letter_norm(n, a).hi.powf(t));
            let lo = transfer(system, m, n_max, |n, a| system.letter_norm(n, a).lo.powf(t));
            lo.into_iter()
                .zip(hi)
                .enumerate()
                .map(|(j, (l, h))| (l * k.powf(-2.0 * j as f64 * t), h))
                .collect()
        }
        Strategy::Auto => unreachable!(),
    };
    Ok(pairs
        .into_iter()
        .enumerate()
        .map(|(j, (lo, hi))| PartitionValue {
            m,
            n: m + j,
            t,
            lo,
            hi,
            strategy,
        })
        .collect())
}

fn resolve(system: &SystemSpec, m: usize, n: usize, opts: &PartitionOptions) -> Result<Strategy> {
    let nodes = || -> Result<u128> {
        (m..=n).try_fold(0u128, |acc, j| {
            Ok(acc.saturating_add(system.schedule().count_words(m, j)?))
        })
    };
    match opts.strategy {
        Strategy::Auto => {
            if system.kind() == FamilyKind::Similarity {
                Ok(Strategy::MatrixExact)
            } else if nodes()? <= opts.budget {
                Ok(Strategy::EnumerateExact)
            } else {
                Ok(Strategy::BdpBracket)
            }
        }
        Strategy::EnumerateExact => {
            let count = nodes()?;
            if count > opts.budget {
                Err(Error::Budget(format!(
                    "enumerating {count} words exceeds the budget {}; use the matrix-exact or bdp-bracket strategy",
                    opts.budget
                )))
            } else {
                Ok(Strategy::EnumerateExact)
            }
        }
        s => Ok(s),
    }
}

/// Weighted transfer over letters: the sum over words ending at each letter,
/// propagated one time step at a time.
fn transfer(system: &SystemSpec, m: usize, n_max: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let sched = system.schedule();
    let mut w: Vec<f64> = (0..sched.alphabet(m).len())
        .map(|a| if sched.is_alive(m, a) { weight(m, a) } else { 0.0 })
        .collect();
    let mut out = vec![crate::numeric::sum_all(w.iter().copied())];
    for j in m..n_max {
        let next_len = sched.alphabet(j + 1).len();
        let mut acc = vec![Sum::new(); next_len];
        match sched.incidence(j) {
            Incidence::Full => {
                let mut by_vertex = vec![Sum::new(); sched.vertex_count(j)];
                for (a, &x) in w.iter().enumerate() {
                    if sched.is_alive(j, a) {
                        by_vertex[sched.letter(j, a).terminal].add(x);
                    }
                }
                for (b, slot) in acc.iter_mut().enumerate() {
                    if sched.is_alive(j + 1, b) {
                        slot.merge(&by_vertex[sched.letter(j + 1, b).initial]);
                    }
                }
            }
            Incidence::Matrix(_) => {
                for (a, &x) in w.iter().enumerate() {
                    if !sched.is_alive(j, a) {
                        continue;
                    }
                    for &b in sched.successors(j, a) {
                        acc[b as usize].add(x);
                    }
                }
            }
        }
        w = acc
            .iter()
            .enumerate()
            .map(|(b, s)| {
                if sched.is_alive(j + 1, b) {
                    s.value() * weight(j + 1, b)
                } else {
                    0.0
                }
            })
            .collect();
        out.push(crate::numeric::sum_all(w.iter().copied()));
    }
    out
}

type State = (f64, f64);

fn enumerate(system: &SystemSpec, m: usize, n_max: usize, t: f64, opts: &PartitionOptions) -> Result<Vec<(f64, f64)>> {
    let sched = system.schedule();
    let len = n_max - m + 1;
    let kern = kernel(system);
    let step = |s: &State, n: usize, a: usize| -> State {
        match &kern {
            Kernel::Similarity(f) => (s.0 * f[n - 1][a], 0.0),
            Kernel::Moebius { digits, .. } => digits[n - 1][a].iter().fold(*s, |(qp, q), &b| (q, b * q + qp)),
            Kernel::Generic => *s,
        }
    };
    let value = |prefix: &[usize], s: &State| -> Result<(f64, f64)> {
        let end = m + prefix.len() - 1;
        match &kern {
            Kernel::Similarity(_) => Ok((s.0, s.0)),
            Kernel::Moebius { left, .. } => {
                let x0 = left[end - 1][prefix[prefix.len() - 1]];
                let v = 1.0 / (s.0 * x0 + s.1).powi(2);
                Ok((v, v))
            }
            Kernel::Generic => {
                let w = Word::new(m, prefix.to_vec());
                let f = || maps::norm_of(&system.word_maps(&w), &system.word_domain(&w));
                let b = match opts.memo {
                    Some(memo) => memo.get_or_compute(&w, f)?,
                    None => f()?,
                };
                Ok((b.lo, b.hi))
            }
        }
    };
    let root: State = match kern {
        Kernel::Moebius { .. } => (0.0, 1.0),
        _ => (1.0, 0.0),
    };

    let mut split = 1;
    while split < len && sched.count_words(m, m + split - 1)? < MIN_ROOTS {
        split += 1;
    }
    let mut totals = vec![(Sum::new(), Sum::new()); len];
    let mut failure: Option<Error> = None;
    if split > 1 {
        sched.walk(m, m + split - 2, &root, &step, &mut |p, s| match value(p, s) {
            Ok((lo, hi)) => {
                totals[p.len() - 1].0.add(lo.powf(t));
                totals[p.len() - 1].1.add(hi.powf(t));
            }
            Err(e) => failure = failure.clone().or(Some(e)),
        })?;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let roots = sched.prefixes(m, split)?;
    let parts: Vec<Result<Vec<(Sum, Sum)>>> = roots
        .par_iter()
        .map(|r| {
            let mut state = root;
            for (k, &a) in r.iter().enumerate() {
                state = step(&state, m + k, a);
            }
            let mut local = vec![(Sum::new(), Sum::new()); len - split + 1];
            let mut err = None;
            let mut prefix = r.clone();
            sched.walk_below(m, n_max, &mut prefix, &state, &step, &mut |p, s| match value(p, s) {
                Ok((lo, hi)) => {
                    let slot = &mut local[p.len() - split];
                    slot.0.add(lo.powf(t));
                    slot.1.add(hi.powf(t));
                }
                Err(e) => err = err.clone().or(Some(e)),
            });
            match err {
                Some(e) => Err(e),
                None => Ok(local),
            }
        })
        .collect();
    for part in parts {
        for (k, (lo, hi)) in part?.iter().enumerate() {
            totals[split - 1 + k].0.merge(lo);
            totals[split - 1 + k].1.merge(hi);
        }
    }
    Ok(totals.iter().map(|(l, h)| (l.value(), h.value())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Space;
    use crate::symbolic::{GraphSchedule, Letter};

    fn ifs(h: usize, maps: Vec<ConformalMap>) -> SystemSpec {
        let letters: Vec<Letter> = (0..maps.len()).map(|i| Letter::new(i.to_string(), 0, 0)).collect();
        let sched = GraphSchedule::new(vec![1; h + 1], vec![letters; h], vec![Incidence::Full; h - 1]).unwrap();
        SystemSpec::new("t", sched, vec![vec![Space::new(Region::unit())]; h + 1], vec![maps; h]).unwrap()
    }

    fn cantor(h: usize) -> SystemSpec {
        ifs(
            h,
            vec![
                ConformalMap::similarity(1.0 / 3.0, 0.0),
                ConformalMap::similarity(1.0 / 3.0, 2.0 / 3.0),
            ],
        )
    }

    #[test]
    fn cantor_closed_forms() {
        let s = cantor(10);
        for strat in [
            Strategy::EnumerateExact,
            Strategy::MatrixExact,
            Strategy::BdpBracket,
            Strategy::Auto,
        ] {
            let z = partition(&s, 1, 2, 0.5, strat).unwrap();
            assert!((z.lo - 4.0 / 3.0).abs() < 1e-14, "{strat:?}");
            assert!((z.hi - 4.0 / 3.0).abs() < 1e-14);
            let h = 2f64.ln() / 3f64.ln();
            let z = partition(&s, 1, 9, h, strat).unwrap();
            assert!((z.hi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cf12_two_letters_matches_grid_oracle() {
        let s = ifs(4, vec![ConformalMap::cf(1.0), ConformalMap::cf(2.0)]);
        let z = partition(&s, 1, 2, 1.0, Strategy::EnumerateExact).unwrap();
        // Grid sup of |D(φ_a∘φ_b)| per word.
        let mut total = 0.0;
        for a in [1.0, 2.0] {
            for b in [1.0, 2.0] {
                let mut best = 0.0f64;
                for i in 0..=200_000 {
                    let x = i as f64 / 200_000.0;
                    let y = 1.0 / (b + x);
                    best = best.max(1.0 / ((b + x) * (b + x) * (a + y) * (a + y)));
                }
                total += best;
            }
        }
        assert!((z.hi - total).abs() < 1e-9, "{} vs {total}", z.hi);
        assert!((z.hi - (0.25 + 1.0 / 9.0 + 1.0 / 9.0 + 1.0 / 25.0)).abs() < 1e-15);
        assert!(partition(&s, 1, 2, 1.0, Strategy::MatrixExact).is_err());
        let b = partition(&s, 1, 3, 1.0, Strategy::BdpBracket).unwrap();
        let e = partition(&s, 1, 3, 1.0, Strategy::EnumerateExact).unwrap();
        assert!(b.lo <= e.lo && e.hi <= b.hi);
    }

    #[test]
    fn budget_is_enforced() {
        let s = cantor(20);
        let opts = PartitionOptions {
            strategy: Strategy::EnumerateExact,
            budget: 1000,
            memo: None,
        };
        assert!(matches!(
            partition_sequence(&s, 1, 20, 0.5, &opts),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn sequence_matches_single_calls() {
        let s = ifs(
            8,
            vec![ConformalMap::cf(1.0), ConformalMap::cf(2.0), ConformalMap::cf(3.0)],
        );
        let seq = partition_sequence(&s, 2, 7, 0.7, &PartitionOptions::default()).unwrap();
        for v in &seq {
            let one = partition(&s, 2, v.n, 0.7, Strategy::EnumerateExact).unwrap();
            assert_eq!(one.hi.to_bits(), v.hi.to_bits());
        }
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let s = ifs(
            12,
            vec![ConformalMap::cf(1.0), ConformalMap::cf(2.0), ConformalMap::cf(5.0)],
        );
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| partition_sequence(&s, 1, 12, 0.53, &PartitionOptions::default()).unwrap())
        };
        let a = run(1);
        let b = run(4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.hi.to_bits(), y.hi.to_bits());
        }
    }

    #[test]
    fn memo_is_used_for_generic_families() {
        let t = crate::maps::TabulatedMap::new(vec![0.0, 1.0], vec![0.0, 0.4], vec![(0.4, 0.4)]).unwrap();
        let maps = vec![
            ConformalMap::Tabulated(std::sync::Arc::new(t)),
            ConformalMap::similarity(0.4, 0.6),
        ];
        let s = ifs(5, maps);
        let memo = NormMemo::new();
        let opts = PartitionOptions {
            strategy: Strategy::EnumerateExact,
            budget: DEFAULT_BUDGET,
            memo: Some(&memo),
        };
        let z = partition_sequence(&s, 1, 5, 1.0, &opts).unwrap();
        assert_eq!(memo.len(), 2 + 4 + 8 + 16 + 32);
        assert!((z[4].hi - 0.8f64.powi(5)).abs() < 1e-12);
        assert!(z[4].lo <= z[4].hi);
    }
}
