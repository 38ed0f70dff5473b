//! The full system: schedule, spaces, maps and certified constants.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{self, combine_kinds, ConformalMap, FamilyKind, NormBracket, Region, Space};
use crate::symbolic::{GraphSchedule, Incidence, Word};

/// Longest block searched when single letters fail to contract.
pub const MAX_CONTRACTION_BLOCK: usize = 8;

/// Containment slack when checking that images stay inside their codomain.
const FIT_TOL: f64 = 1e-12;

/// Uniform contraction at some block length: every admissible word of
/// `block` letters has norm at most `eta_block`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Contraction {
    pub block: usize,
    pub eta_block: f64,
    /// Largest single-letter upper bound (may be ≥ 1 when `block > 1`).
    pub eta_single: f64,
}

impl Contraction {
    /// Upper bound on `‖Dφ_ω‖` for any admissible word of length `len`.
    pub fn word_bound(&self, len: usize) -> f64 {
        if self.block == 1 {
            return self.eta_block.powi(len as i32);
        }
        self.eta_block.powi((len / self.block) as i32) * self.eta_single.max(1.0).powi((len % self.block) as i32)
    }
}

#[derive(Clone, Debug)]
pub struct SystemSpec {
    name: String,
    note: String,
    schedule: GraphSchedule,
    spaces: Vec<Vec<Space>>,
    maps: Vec<Vec<ConformalMap>>,
    dim: usize,
    declared_k: Option<f64>,
    ascending: bool,
    norms: Vec<Vec<NormBracket>>,
    kind: FamilyKind,
    contraction: Contraction,
}

impl SystemSpec {
    /// Validates shapes, codomain fit and uniform contraction.
    ///
    /// `spaces[n][v]` is `X_v^(n)` for `n = 0..=H`; `maps[n-1][a]` is the map of
    /// letter `a ∈ I^(n)`.
    pub fn new(
        name: impl Into<String>,
        schedule: GraphSchedule,
        spaces: Vec<Vec<Space>>,
        maps: Vec<Vec<ConformalMap>>,
    ) -> Result<Self> {
        let h = schedule.horizon();
        if spaces.len() != h + 1 || maps.len() != h {
            return Err(Error::Build(format!(
                "horizon {h} needs {} space layers and {h} map layers",
                h + 1
            )));
        }
        let dim = spaces[0].first().map(|s| s.region.dim()).unwrap_or(1);
        for (n, layer) in spaces.iter().enumerate() {
            if layer.len() != schedule.vertex_count(n) {
                return Err(Error::Build(format!(
                    "time {n}: {} spaces for {} vertices",
                    layer.len(),
                    schedule.vertex_count(n)
                )));
            }
            if layer
                .iter()
                .any(|s| s.region.dim() != dim || !(s.region.diameter() > 0.0))
            {
                return Err(Error::Build(format!(
                    "time {n}: spaces must be non-degenerate and of one dimension"
                )));
            }
        }
        let mut kinds = Vec::new();
        for n in 1..=h {
            if maps[n - 1].len() != schedule.alphabet(n).len() {
                return Err(Error::Build(format!("time {n}: one map per letter required")));
            }
            for (a, m) in maps[n - 1].iter().enumerate() {
                let l = schedule.letter(n, a);
                if dim == 2 && m.kind() != FamilyKind::Similarity {
                    return Err(Error::Build("two-dimensional systems support similarities only".into()));
                }
                if let ConformalMap::Similarity { ratio, .. } = m {
                    if !(ratio.abs() > 0.0) || !ratio.is_finite() {
                        return Err(Error::Build(format!(
                            "time {n}: letter {} has a degenerate ratio",
                            l.label
                        )));
                    }
                }
                kinds.push(m.kind());
            }
        }
        let kind = combine_kinds(kinds);
        let mut s = Self {
            name: name.into(),
            note: String::new(),
            schedule,
            spaces,
            maps,
            dim,
            declared_k: None,
            ascending: false,
            norms: Vec::new(),
            kind,
            contraction: Contraction {
                block: 1,
                eta_block: 0.0,
                eta_single: 0.0,
            },
        };
        s.norms = (1..=h)
            .map(|n| {
                (0..s.schedule.alphabet(n).len())
                    .map(|a| s.word_norm(&Word::new(n, vec![a])))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        s.contraction = s.certify_contraction()?;
        for n in 1..=h {
            for (a, m) in s.maps[n - 1].iter().enumerate() {
                let l = s.schedule.letter(n, a);
                let domain = s.spaces[n][l.terminal].region;
                let codomain = s.spaces[n - 1][l.initial].region;
                let image = m
                    .image(&domain)
                    .map_err(|e| Error::Build(format!("time {n}, letter {}: {e}", l.label)))?;
                let tol = FIT_TOL * (1.0 + codomain.diameter());
                if !codomain.contains(&image, tol) {
                    return Err(Error::Build(format!(
                        "time {n}: image of letter {} escapes its codomain ({image:?} not in {codomain:?})",
                        l.label
                    )));
                }
            }
        }
        Ok(s)
    }

    pub fn with_declared_k(mut self, k: f64) -> Self {
        self.declared_k = Some(k);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_ascending(mut self, flag: bool) -> Self {
        self.ascending = flag;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn note(&self) -> &str {
        &self.note
    }

    pub fn schedule(&self) -> &GraphSchedule {
        &self.schedule
    }

    pub fn horizon(&self) -> usize {
        self.schedule.horizon()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn is_ascending(&self) -> bool {
        self.ascending
    }

    pub fn declared_k(&self) -> Option<f64> {
        self.declared_k
    }

    pub fn contraction(&self) -> Contraction {
        self.contraction
    }

    /// `X_v^(n)`.
    pub fn space(&self, n: usize, v: usize) -> &Space {
        &self.spaces[n][v]
    }

    pub fn spaces_at(&self, n: usize) -> &[Space] {
        &self.spaces[n]
    }

    pub fn map(&self, n: usize, a: usize) -> &ConformalMap {
        &self.maps[n - 1][a]
    }

    pub fn maps_at(&self, n: usize) -> &[ConformalMap] {
        &self.maps[n - 1]
    }

    /// Single-letter norm bracket of `a ∈ I^(n)`.
    pub fn letter_norm(&self, n: usize, a: usize) -> NormBracket {
        self.norms[n - 1][a]
    }

    /// The domain `X_{t(ω)}` of a word's composed map.
    pub fn word_domain(&self, w: &Word) -> Region {
        let last = w.letters[w.len() - 1];
        self.spaces[w.end()][self.schedule.letter(w.end(), last).terminal].region
    }

    /// Primitive maps of a word, outermost first.
    pub fn word_maps(&self, w: &Word) -> Vec<&ConformalMap> {
        let mut out = Vec::with_capacity(w.len());
        for (k, &a) in w.letters.iter().enumerate() {
            self.maps[w.time_of(k) - 1][a].flatten_into(&mut out);
        }
        out
    }

    fn word_norm(&self, w: &Word) -> Result<NormBracket> {
        maps::norm_of(&self.word_maps(w), &self.word_domain(w))
    }

    fn certify_contraction(&self) -> Result<Contraction> {
        let h = self.horizon();
        let eta_single = self.norms.iter().flatten().map(|b| b.hi).fold(0.0, f64::max);
        if eta_single < 1.0 {
            return Ok(Contraction {
                block: 1,
                eta_block: eta_single,
                eta_single,
            });
        }
        for m in 2..=MAX_CONTRACTION_BLOCK.min(h) {
            let mut worst = 0.0f64;
            for start in 1..=h + 1 - m {
                let mut failed = None;
                self.schedule.enumerate_words(start, start + m - 1, |w| {
                    if failed.is_some() {
                        return;
                    }
                    match self.word_norm(&Word::new(start, w.to_vec())) {
                        Ok(b) => worst = worst.max(b.hi),
                        Err(e) => failed = Some(e),
                    }
                })?;
                if let Some(e) = failed {
                    return Err(e);
                }
            }
            if worst < 1.0 {
                return Ok(Contraction {
                    block: m,
                    eta_block: worst,
                    eta_single,
                });
            }
        }
        Err(Error::Certification(format!(
            "no block length up to {MAX_CONTRACTION_BLOCK} is uniformly contracting (single-letter bound {eta_single})"
        )))
    }

    /// Whether times `a` and `b` carry identical letters, maps, spaces and incidence.
    pub fn same_slice(&self, a: usize, b: usize) -> bool {
        let s = &self.schedule;
        if a == b {
            return true;
        }
        let h = self.horizon();
        if a > h || b > h {
            return false;
        }
        let inc_eq = |x: usize, y: usize| -> bool {
            if x >= h || y >= h {
                return x >= h && y >= h;
            }
            match (s.incidence(x), s.incidence(y)) {
                (Incidence::Full, Incidence::Full) => true,
                (Incidence::Matrix(p), Incidence::Matrix(q)) => p == q,
                _ => false,
            }
        };
        s.alphabet(a) == s.alphabet(b)
            && self.maps[a - 1] == self.maps[b - 1]
            && self.spaces[a] == self.spaces[b]
            && (0..s.alphabet(a).len()).all(|k| s.is_alive(a, k) == s.is_alive(b, k))
            && (inc_eq(a, b) || a.max(b) >= h)
    }

    /// Whether every time slice equals the first one.
    pub fn is_stationary(&self) -> bool {
        (2..=self.horizon()).all(|n| self.same_slice(1, n)) && self.spaces[0] == self.spaces[1]
    }

    /// Smallest `k` such that slices repeat with period `k` over times `from..=to`.
    pub fn period_over(&self, from: usize, to: usize, max_period: usize) -> Option<usize> {
        (1..=max_period).find(|&k| (from..=to.saturating_sub(k)).all(|n| self.same_slice(n, n + k)))
    }
}

/// Certified norm bracket of an admissible word.
pub fn compose_norm(w: &Word, system: &SystemSpec) -> Result<NormBracket> {
    system.schedule.ensure_admissible(w)?;
    system.word_norm(w)
}

/// Image `φ_ω(X_{t(ω)})` of an admissible word.
pub fn image_region(w: &Word, system: &SystemSpec) -> Result<Region> {
    system.schedule.ensure_admissible(w)?;
    maps::image_of(&system.word_maps(w), &system.word_domain(w))
}

/// Bounded-distortion constant `K`.
///
/// Similarities give 1. Möbius branches `1/(b+x)` with all digits at least
/// `b_min` on `[0, 1]` give `(1 + 1/b_min)²`, which is 4 for integer digits.
/// Tabulated maps with constant derivative give 1; other tabulated or mixed
/// families need a declared value.
pub fn distortion_constant(system: &SystemSpec) -> Result<f64> {
    if let Some(k) = system.declared_k {
        return Ok(k);
    }
    let mut prims = Vec::new();
    for n in 1..=system.horizon() {
        for m in system.maps_at(n) {
            m.flatten_into(&mut prims);
        }
    }
    let affine = |m: &ConformalMap| match m {
        ConformalMap::Similarity { .. } => true,
        ConformalMap::Tabulated(t) => t.derivative_spread() == 1.0,
        _ => false,
    };
    if prims.iter().all(|m| affine(m)) {
        return Ok(1.0);
    }
    if prims.iter().all(|m| matches!(m, ConformalMap::MoebiusInverse { .. })) {
        let unit = (0..=system.horizon()).all(|n| system.spaces_at(n).iter().all(|s| s.region == Region::unit()));
        let b_min = prims
            .iter()
            .map(|m| match m {
                ConformalMap::MoebiusInverse { digit } => *digit,
                _ => unreachable!(),
            })
            .fold(f64::INFINITY, f64::min);
        if unit && b_min > 0.0 {
            return Ok((1.0 + 1.0 / b_min).powi(2));
        }
    }
    Err(Error::Certification(
        "distortion of this family cannot be certified from the map data; declare K".into(),
    ))
}

/// Uniform contraction certificate (block length and bound).
pub fn contraction_eta(system: &SystemSpec) -> Contraction {
    system.contraction
}
