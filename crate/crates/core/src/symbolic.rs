//! Time-indexed multigraphs, admissible words and finite primitivity.
//!
//! Times are 1-based for letters: `I^(n)` for `n = 1..=horizon` joins a vertex
//! of `V_{n-1}` to a vertex of `V_n`. Vertices are keyed by `(vertex, time)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trend::{self, TrendReport};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Letter {
    pub label: String,
    /// Vertex in `V_{n-1}`.
    pub initial: usize,
    /// Vertex in `V_n`.
    pub terminal: usize,
}

impl Letter {
    pub fn new(label: impl Into<String>, initial: usize, terminal: usize) -> Self {
        Self {
            label: label.into(),
            initial,
            terminal,
        }
    }
}

/// Incidence between consecutive alphabets.
#[derive(Clone, Debug, PartialEq)]
pub enum Incidence {
    /// Every composable pair is allowed.
    Full,
    /// Explicit 0/1 matrix, rows indexed by `I^(n)`, columns by `I^(n+1)`.
    Matrix(Vec<Vec<bool>>),
}

#[derive(Clone, Debug)]
enum Successors {
    ByVertex(Vec<Vec<u32>>),
    ByLetter(Vec<Vec<u32>>),
}

/// A finite word `(ω_m, …, ω_n)` of letter indices starting at time `m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Word {
    pub start: usize,
    pub letters: Vec<usize>,
}

impl Word {
    pub fn new(start: usize, letters: Vec<usize>) -> Self {
        Self { start, letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Time of the last letter.
    pub fn end(&self) -> usize {
        self.start + self.letters.len() - 1
    }

    /// Time of letter `k` of the word.
    pub fn time_of(&self, k: usize) -> usize {
        self.start + k
    }

    pub fn concat(&self, other: &Word) -> Word {
        debug_assert_eq!(other.start, self.end() + 1);
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word::new(self.start, letters)
    }
}

#[derive(Clone, Debug)]
pub struct GraphSchedule {
    vertex_counts: Vec<usize>,
    alphabets: Vec<Vec<Letter>>,
    incidence: Vec<Incidence>,
    alive: Vec<Vec<bool>>,
    successors: Vec<Successors>,
}

impl GraphSchedule {
    /// Builds and prunes a schedule.
    ///
    /// `vertex_counts[n]` is `#V_n` for `n = 0..=H`, `alphabets[n-1]` is `I^(n)` and
    /// `incidence[n-1]` is `A^(n)` for `n = 1..H`. Letters at the horizon are taken
    /// to extend; everything else without an infinite continuation, or without a
    /// predecessor, is pruned.
    pub fn new(vertex_counts: Vec<usize>, alphabets: Vec<Vec<Letter>>, incidence: Vec<Incidence>) -> Result<Self> {
        let h = alphabets.len();
        if h == 0 {
            return Err(Error::Build("schedule needs at least one time step".into()));
        }
        if vertex_counts.len() != h + 1 {
            return Err(Error::Build(format!(
                "expected {} vertex sets for horizon {h}, got {}",
                h + 1,
                vertex_counts.len()
            )));
        }
        if incidence.len() != h - 1 {
            return Err(Error::Build(format!(
                "expected {} incidence matrices for horizon {h}, got {}",
                h - 1,
                incidence.len()
            )));
        }
        for (k, alpha) in alphabets.iter().enumerate() {
            let n = k + 1;
            if alpha.is_empty() {
                return Err(Error::Integrity {
                    time: n,
                    message: "empty alphabet".into(),
                });
            }
            for l in alpha {
                if l.initial >= vertex_counts[n - 1] || l.terminal >= vertex_counts[n] {
                    return Err(Error::Integrity {
                        time: n,
                        message: format!("letter {} names a vertex outside V", l.label),
                    });
                }
            }
        }
        for (k, inc) in incidence.iter().enumerate() {
            let n = k + 1;
            if let Incidence::Matrix(rows) = inc {
                let (a, b) = (&alphabets[n - 1], &alphabets[n]);
                if rows.len() != a.len() || rows.iter().any(|r| r.len() != b.len()) {
                    return Err(Error::Integrity {
                        time: n,
                        message: format!("incidence matrix must be {}x{}", a.len(), b.len()),
                    });
                }
                for (i, row) in rows.iter().enumerate() {
                    for (j, &on) in row.iter().enumerate() {
                        if on && a[i].terminal != b[j].initial {
                            return Err(Error::Integrity {
                                time: n,
                                message: format!(
                                    "incidence allows {} -> {} but they do not share a vertex",
                                    a[i].label, b[j].label
                                ),
                            });
                        }
                    }
                }
            }
        }
        let alive = alphabets.iter().map(|a| vec![true; a.len()]).collect();
        let mut s = Self {
            vertex_counts,
            alphabets,
            incidence,
            alive,
            successors: Vec::new(),
        };
        s.prune()?;
        s.index_successors();
        Ok(s)
    }

    fn raw_allowed(&self, n: usize, a: usize, b: usize) -> bool {
        let (la, lb) = (&self.alphabets[n - 1][a], &self.alphabets[n][b]);
        match &self.incidence[n - 1] {
            Incidence::Full => la.terminal == lb.initial,
            Incidence::Matrix(m) => m[a][b],
        }
    }

    fn prune(&mut self) -> Result<()> {
        let h = self.horizon();
        loop {
            let mut changed = false;
            for n in (1..h).rev() {
                let live_next = self.live_vertices(n + 1, true);
                for a in 0..self.alphabets[n - 1].len() {
                    if !self.alive[n - 1][a] {
                        continue;
                    }
                    let ok = match &self.incidence[n - 1] {
                        Incidence::Full => live_next[self.alphabets[n - 1][a].terminal],
                        Incidence::Matrix(m) => (0..self.alphabets[n].len()).any(|b| m[a][b] && self.alive[n][b]),
                    };
                    if !ok {
                        self.alive[n - 1][a] = false;
                        changed = true;
                    }
                }
            }
            for n in 2..=h {
                let live_prev = self.live_vertices(n - 1, false);
                for b in 0..self.alphabets[n - 1].len() {
                    if !self.alive[n - 1][b] {
                        continue;
                    }
                    let ok = match &self.incidence[n - 2] {
                        Incidence::Full => live_prev[self.alphabets[n - 1][b].initial],
                        Incidence::Matrix(m) => {
                            (0..self.alphabets[n - 2].len()).any(|a| m[a][b] && self.alive[n - 2][a])
                        }
                    };
                    if !ok {
                        self.alive[n - 1][b] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for n in 1..=h {
            if !self.alive[n - 1].iter().any(|&x| x) {
                return Err(Error::Integrity {
                    time: n,
                    message: "no letter survives pruning; the limit set is empty".into(),
                });
            }
        }
        Ok(())
    }

    /// Vertices touched by live letters of `I^(n)`: initial ones (`by_initial`) or terminal ones.
    fn live_vertices(&self, n: usize, by_initial: bool) -> Vec<bool> {
        let count = if by_initial {
            self.vertex_counts[n - 1]
        } else {
            self.vertex_counts[n]
        };
        let mut v = vec![false; count];
        for (a, l) in self.alphabets[n - 1].iter().enumerate() {
            if self.alive[n - 1][a] {
                v[if by_initial { l.initial } else { l.terminal }] = true;
            }
        }
        v
    }

    fn index_successors(&mut self) {
        let h = self.horizon();
        self.successors = (1..h)
            .map(|n| match &self.incidence[n - 1] {
                Incidence::Full => {
                    let mut by = vec![Vec::new(); self.vertex_counts[n]];
                    for (b, l) in self.alphabets[n].iter().enumerate() {
                        if self.alive[n][b] {
                            by[l.initial].push(b as u32);
                        }
                    }
                    Successors::ByVertex(by)
                }
                Incidence::Matrix(m) => Successors::ByLetter(
                    (0..self.alphabets[n - 1].len())
                        .map(|a| {
                            (0..self.alphabets[n].len())
                                .filter(|&b| m[a][b] && self.alive[n][b])
                                .map(|b| b as u32)
                                .collect()
                        })
                        .collect(),
                ),
            })
            .collect();
    }

    pub fn horizon(&self) -> usize {
        self.alphabets.len()
    }

    /// `#V_n` for `n = 0..=horizon`.
    pub fn vertex_count(&self, n: usize) -> usize {
        self.vertex_counts[n]
    }

    /// The raw alphabet `I^(n)`, pruned letters included.
    pub fn alphabet(&self, n: usize) -> &[Letter] {
        &self.alphabets[n - 1]
    }

    pub fn letter(&self, n: usize, a: usize) -> &Letter {
        &self.alphabets[n - 1][a]
    }

    pub fn incidence(&self, n: usize) -> &Incidence {
        &self.incidence[n - 1]
    }

    pub fn is_alive(&self, n: usize, a: usize) -> bool {
        self.alive[n - 1][a]
    }

    pub fn alive_letters(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.alive[n - 1].iter().enumerate().filter(|p| *p.1).map(|p| p.0)
    }

    /// `#I^(n)` after pruning.
    pub fn alive_count(&self, n: usize) -> usize {
        self.alive[n - 1].iter().filter(|&&x| x).count()
    }

    /// Live letters of `I^(n+1)` allowed after `a ∈ I^(n)`, in increasing order.
    pub fn successors(&self, n: usize, a: usize) -> &[u32] {
        match &self.successors[n - 1] {
            Successors::ByVertex(by) => &by[self.alphabets[n - 1][a].terminal],
            Successors::ByLetter(by) => &by[a],
        }
    }

    /// Whether `A^(n)(a, b) = 1`.
    pub fn allowed(&self, n: usize, a: usize, b: usize) -> bool {
        self.raw_allowed(n, a, b)
    }

    /// Whether the schedule is an NCIFS: one vertex per time and full incidence.
    pub fn is_ifs(&self) -> bool {
        self.vertex_counts.iter().all(|&c| c == 1)
            && self.incidence.iter().all(|i| match i {
                Incidence::Full => true,
                Incidence::Matrix(m) => m.iter().all(|r| r.iter().all(|&x| x)),
            })
    }

    /// The same system seen only up to time `h`, keeping the pruning decided at
    /// the full horizon.
    pub fn truncate(&self, h: usize) -> Result<Self> {
        if h == 0 || h > self.horizon() {
            return Err(Error::Config(format!(
                "cannot truncate horizon {} to {h}",
                self.horizon()
            )));
        }
        let mut s = Self {
            vertex_counts: self.vertex_counts[..=h].to_vec(),
            alphabets: self.alphabets[..h].to_vec(),
            incidence: self.incidence[..h - 1].to_vec(),
            alive: self.alive[..h].to_vec(),
            successors: Vec::new(),
        };
        s.index_successors();
        Ok(s)
    }

    fn check_window(&self, m: usize, n: usize) -> Result<()> {
        if m == 0 || m > n {
            return Err(Error::Config(format!("invalid time window [{m}, {n}]")));
        }
        if n > self.horizon() {
            return Err(Error::Config(format!(
                "time {n} exceeds the materialized horizon {}",
                self.horizon()
            )));
        }
        Ok(())
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.is_empty() || w.start == 0 {
            return Err(Error::Input("empty word or start time 0".into()));
        }
        if w.end() > self.horizon() {
            return Err(Error::Input(format!(
                "word ends at time {} beyond horizon {}",
                w.end(),
                self.horizon()
            )));
        }
        for (k, &a) in w.letters.iter().enumerate() {
            let n = w.time_of(k);
            if a >= self.alphabets[n - 1].len() {
                return Err(Error::Input(format!("no letter {a} at time {n}")));
            }
        }
        Ok(())
    }

    /// True iff consecutive letters are allowed and every letter lies on an
    /// infinite admissible word.
    pub fn is_admissible(&self, w: &Word) -> Result<bool> {
        self.check_word(w)?;
        for (k, &a) in w.letters.iter().enumerate() {
            if !self.is_alive(w.time_of(k), a) {
                return Ok(false);
            }
        }
        Ok(w.letters
            .windows(2)
            .enumerate()
            .all(|(k, p)| self.raw_allowed(w.time_of(k), p[0], p[1])))
    }

    pub fn ensure_admissible(&self, w: &Word) -> Result<()> {
        if self.is_admissible(w)? {
            Ok(())
        } else {
            Err(Error::Input(format!("word {:?} is not admissible", w.letters)))
        }
    }

    /// Depth-first traversal of every prefix of `I^{m,n}` in lexicographic order.
    ///
    /// `step(state, time, letter)` extends a state by one letter; `visit` sees
    /// every prefix (lengths `1..=n-m+1`) with its state.
    pub fn walk<S, F, V>(&self, m: usize, n: usize, root: &S, step: &F, visit: &mut V) -> Result<()>
    where
        F: Fn(&S, usize, usize) -> S,
        V: FnMut(&[usize], &S),
    {
        self.check_window(m, n)?;
        let mut prefix = Vec::with_capacity(n - m + 1);
        for a in self.alive_letters(m) {
            let s = step(root, m, a);
            prefix.push(a);
            self.walk_below(m, n, &mut prefix, &s, step, visit);
            prefix.pop();
        }
        Ok(())
    }

    /// Continues a traversal below an admissible, non-empty `prefix` starting at `m`.
    pub fn walk_below<S, F, V>(&self, m: usize, n: usize, prefix: &mut Vec<usize>, state: &S, step: &F, visit: &mut V)
    where
        F: Fn(&S, usize, usize) -> S,
        V: FnMut(&[usize], &S),
    {
        visit(prefix, state);
        let time = m + prefix.len() - 1;
        if time >= n {
            return;
        }
        let last = prefix[prefix.len() - 1];
        for &b in self.successors(time, last) {
            let s = step(state, time + 1, b as usize);
            prefix.push(b as usize);
            self.walk_below(m, n, prefix, &s, step, visit);
            prefix.pop();
        }
    }

    /// All admissible prefixes of length `depth` starting at `m`, lexicographically.
    pub fn prefixes(&self, m: usize, depth: usize) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        self.enumerate_words(m, m + depth - 1, |w| out.push(w.to_vec()))?;
        Ok(out)
    }

    /// Visits each word of `I^{m,n}` exactly once, depth-first and lexicographic.
    pub fn enumerate_words<V: FnMut(&[usize])>(&self, m: usize, n: usize, mut visitor: V) -> Result<()> {
        let len = n + 1 - m.min(n + 1);
        self.walk(m, n, &(), &|_, _, _| (), &mut |w, _| {
            if w.len() == len {
                visitor(w)
            }
        })
    }

    /// `#I^{m,n}` by dynamic programming (saturating).
    pub fn count_words(&self, m: usize, n: usize) -> Result<u128> {
        self.check_window(m, n)?;
        let mut v: Vec<u128> = self.alive[m - 1].iter().map(|&x| x as u128).collect();
        for time in m..n {
            let mut next = vec![0u128; self.alphabets[time].len()];
            match &self.successors[time - 1] {
                Successors::ByVertex(by) => {
                    let mut at = vec![0u128; by.len()];
                    for (a, &c) in v.iter().enumerate() {
                        let t = self.alphabets[time - 1][a].terminal;
                        at[t] = at[t].saturating_add(c);
                    }
                    for (list, &c) in by.iter().zip(&at) {
                        for &b in list {
                            next[b as usize] = next[b as usize].saturating_add(c);
                        }
                    }
                }
                Successors::ByLetter(by) => {
                    for (a, &c) in v.iter().enumerate() {
                        if c == 0 {
                            continue;
                        }
                        for &b in &by[a] {
                            next[b as usize] = next[b as usize].saturating_add(c);
                        }
                    }
                }
            }
            v = next;
        }
        Ok(v.into_iter().fold(0u128, |s, c| s.saturating_add(c)))
    }

    /// Number of admissible words of length `k` following the letter `a ∈ I^(n)`.
    pub fn follower_count(&self, n: usize, a: usize, k: usize) -> u128 {
        self.follower_counts(n, k)[a]
    }

    /// `follower_count(n, a, k)` for every letter of `I^(n)`, by a backward pass
    /// that sums each distinct successor list once.
    pub fn follower_counts(&self, n: usize, k: usize) -> Vec<u128> {
        let mut w: Vec<u128> = vec![1; self.alphabets[n + k - 1].len()];
        for time in (n..n + k).rev() {
            let sum = |list: &[u32]| list.iter().fold(0u128, |acc, &b| acc.saturating_add(w[b as usize]));
            w = match &self.successors[time - 1] {
                Successors::ByVertex(by) => {
                    let per: Vec<u128> = by.iter().map(|l| sum(l)).collect();
                    self.alphabets[time - 1].iter().map(|l| per[l.terminal]).collect()
                }
                Successors::ByLetter(by) => by.iter().map(|l| sum(l)).collect(),
            };
        }
        w
    }

    /// `L_ω^{n+1,n+k}`: the length-`k` words allowed to follow `word`.
    pub fn follower_set(&self, word: &Word, k: usize) -> Result<Vec<Word>> {
        if k == 0 {
            return Err(Error::Input("follower depth must be at least 1".into()));
        }
        self.ensure_admissible(word)?;
        let n = word.end();
        self.check_window(n + 1, n + k)?;
        let last = word.letters[word.len() - 1];
        let mut out = Vec::new();
        for &b in self.successors(n, last) {
            let mut prefix = vec![b as usize];
            self.walk_below(n + 1, n + k, &mut prefix, &(), &|_, _, _| (), &mut |w, _| {
                if w.len() == k {
                    out.push(Word::new(n + 1, w.to_vec()));
                }
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub n: usize,
    /// `#I^(n)`.
    pub count: usize,
    /// Least number of followers of a letter of `I^(n)`.
    pub g_min: usize,
    /// Greatest number of followers of a letter of `I^(n)`.
    pub g_max: usize,
    pub xi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthStats {
    /// Records for `n = 1..horizon` (followers need time `n + 1`).
    pub records: Vec<GrowthRecord>,
    /// `#I^(n)` for `n = 1..=horizon`.
    pub counts: Vec<usize>,
}

impl GrowthStats {
    /// `(n, log #I^(n))`.
    pub fn log_counts(&self) -> Vec<(usize, f64)> {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (k + 1, (c as f64).ln()))
            .collect()
    }

    /// `(n, log Ḡ_n)`.
    pub fn log_g_max(&self) -> Vec<(usize, f64)> {
        self.records.iter().map(|r| (r.n, (r.g_max as f64).ln())).collect()
    }

    /// `(n, log G̲_n)`.
    pub fn log_g_min(&self) -> Vec<(usize, f64)> {
        self.records.iter().map(|r| (r.n, (r.g_min as f64).ln())).collect()
    }
}

fn integrity(time: usize, message: String) -> Error {
    Error::Integrity { time, message }
}

/// Follower statistics, checking the elementary inequality chain on every time
/// and, given a primitivity certificate, the longer chain through `G̲_n^{p+1}`.
pub fn growth_stats(s: &GraphSchedule, cert: Option<&PrimitivityCertificate>) -> Result<GrowthStats> {
    let h = s.horizon();
    if h < 2 {
        return Err(Error::Config("growth statistics need horizon at least 2".into()));
    }
    let counts: Vec<usize> = (1..=h).map(|n| s.alive_count(n)).collect();
    let mut records = Vec::with_capacity(h - 1);
    for n in 1..h {
        let (mut lo, mut hi) = (usize::MAX, 0usize);
        for a in s.alive_letters(n) {
            let g = s.successors(n, a).len();
            lo = lo.min(g);
            hi = hi.max(g);
        }
        let (cn, cn1) = (counts[n - 1], counts[n]);
        if !(1 <= lo && lo <= hi && hi <= cn1 && cn1 <= hi * cn) {
            return Err(integrity(
                n,
                format!("follower chain broken: G_min={lo}, G_max={hi}, #I(n)={cn}, #I(n+1)={cn1}"),
            ));
        }
        records.push(GrowthRecord {
            n,
            count: cn,
            g_min: lo,
            g_max: hi,
            xi: hi as f64 / lo as f64,
        });
    }
    if let Some(cert) = cert {
        let p = cert.p;
        for n in 1..h {
            if n + p + 1 > h || n + p >= h {
                break;
            }
            let (mut lo, mut hi) = (u128::MAX, 0u128);
            let followers = s.follower_counts(n, p + 1);
            for a in s.alive_letters(n) {
                let c = followers[a];
                lo = lo.min(c);
                hi = hi.max(c);
            }
            let words = s.count_words(n, n + p + 1)?;
            let top = (n..=n + p).fold(counts[n - 1] as f64, |acc, j| acc * records[j - 1].g_max as f64);
            let far = counts[n + p] as u128;
            let r = &records[n + p - 1];
            let ok = r.g_min <= r.g_max
                && (r.g_max as u128) <= far
                && far <= lo
                && lo <= hi
                && hi <= words
                && (words as f64) <= top * (1.0 + 1e-12);
            if !ok {
                return Err(integrity(
                    n,
                    format!("primitivity chain broken: #I(n+p+1)={far}, G^(p+1) in [{lo}, {hi}], #I(n..n+p+1)={words}"),
                ));
            }
        }
    }
    Ok(GrowthStats { records, counts })
}

/// Connector words `Λ_n ⊆ I^{n+1,n+p}` for a single time `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectorSet {
    pub time: usize,
    pub words: Vec<Word>,
    /// `(a, b) -> index into words`.
    #[serde(skip)]
    pub pairs: BTreeMap<(usize, usize), usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimitivityCertificate {
    pub p: usize,
    pub connectors: Vec<ConnectorSet>,
    /// Lower bound on connector derivative norms.
    pub q: f64,
    pub horizon_checked: usize,
}

impl PrimitivityCertificate {
    /// The stored connector from `a ∈ I^(n)` to `b ∈ I^(n+p+1)`.
    pub fn connector(&self, n: usize, a: usize, b: usize) -> Option<Word> {
        if self.p == 0 {
            return Some(Word::new(n + 1, Vec::new()));
        }
        let set = self.connectors.get(n - 1)?;
        set.pairs.get(&(a, b)).map(|&i| set.words[i].clone())
    }
}

/// Smallest `p ≤ p_max` such that every letter pair `p + 1` steps apart is
/// joined by an admissible connector of length `p`.
///
/// `connector_norm` gives a certified lower bound on `‖Dφ_λ‖` for a connector.
pub fn find_primitivity<F>(s: &GraphSchedule, p_max: usize, connector_norm: F) -> Result<Option<PrimitivityCertificate>>
where
    F: Fn(&Word) -> f64,
{
    let h = s.horizon();
    if h < p_max + 2 {
        return Err(Error::Config(format!(
            "primitivity search up to p={p_max} needs horizon at least {}",
            p_max + 2
        )));
    }
    'p: for p in 0..=p_max {
        let mut connectors = Vec::new();
        for n in 1..h - p {
            let far = n + p + 1;
            let targets = s.alive_count(far);
            let mut set = ConnectorSet {
                time: n,
                words: Vec::new(),
                pairs: BTreeMap::new(),
            };
            for a in s.alive_letters(n) {
                if p == 0 {
                    if s.successors(n, a).len() != targets {
                        continue 'p;
                    }
                    continue;
                }
                let mut found: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for &c in s.successors(n, a) {
                    let mut prefix = vec![c as usize];
                    s.walk_below(n + 1, n + p, &mut prefix, &(), &|_, _, _| (), &mut |w, _| {
                        if w.len() == p {
                            for &b in s.successors(n + p, w[p - 1]) {
                                found.entry(b as usize).or_insert_with(|| w.to_vec());
                            }
                        }
                    });
                }
                if found.len() != targets {
                    continue 'p;
                }
                for (b, w) in found {
                    let word = Word::new(n + 1, w);
                    let idx = match set.words.iter().position(|x| *x == word) {
                        Some(i) => i,
                        None => {
                            set.words.push(word);
                            set.words.len() - 1
                        }
                    };
                    set.pairs.insert((a, b), idx);
                }
            }
            connectors.push(set);
        }
        let q = connectors
            .iter()
            .flat_map(|c| c.words.iter())
            .map(&connector_norm)
            .fold(1.0f64, f64::min);
        if !(q > 0.0) {
            return Err(Error::Certification("connector norm bound is not positive".into()));
        }
        return Ok(Some(PrimitivityCertificate {
            p,
            connectors,
            q,
            horizon_checked: h,
        }));
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubexpReport {
    pub alphabet: TrendReport,
    pub followers: TrendReport,
}

/// Growth verdicts for `#I^(n)` and `Ḡ_n`; never a claim about the true limit.
pub fn subexp_diagnostic(stats: &GrowthStats) -> SubexpReport {
    SubexpReport {
        alphabet: trend::classify(&stats.log_counts()),
        followers: trend::classify(&stats.log_g_max()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ifs(sizes: &[usize]) -> GraphSchedule {
        let alphabets = sizes
            .iter()
            .map(|&k| (0..k).map(|i| Letter::new(i.to_string(), 0, 0)).collect())
            .collect();
        GraphSchedule::new(
            vec![1; sizes.len() + 1],
            alphabets,
            vec![Incidence::Full; sizes.len() - 1],
        )
        .unwrap()
    }

    fn matrix_schedule(k: usize, h: usize, m: &[Vec<bool>]) -> GraphSchedule {
        let alphabets = (0..h)
            .map(|_| (0..k).map(|i| Letter::new(i.to_string(), 0, 0)).collect())
            .collect();
        GraphSchedule::new(vec![1; h + 1], alphabets, vec![Incidence::Matrix(m.to_vec()); h - 1]).unwrap()
    }

    fn identity(k: usize) -> Vec<Vec<bool>> {
        (0..k).map(|i| (0..k).map(|j| i == j).collect()).collect()
    }

    #[test]
    fn full_product_counts() {
        let s = ifs(&[2, 2, 2, 2]);
        let mut c = 0;
        s.enumerate_words(1, 3, |_| c += 1).unwrap();
        assert_eq!(c, 8);
        assert_eq!(s.count_words(1, 3).unwrap(), 8);
    }

    #[test]
    fn identity_gives_constant_words() {
        let s = matrix_schedule(2, 6, &identity(2));
        let mut words = Vec::new();
        s.enumerate_words(1, 5, |w| words.push(w.to_vec())).unwrap();
        assert_eq!(words, vec![vec![0; 5], vec![1; 5]]);
    }

    #[test]
    fn lexicographic_order() {
        let s = ifs(&[2, 3, 2]);
        let mut words = Vec::new();
        s.enumerate_words(1, 2, |w| words.push(w.to_vec())).unwrap();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
        assert_eq!(words.len(), 6);
    }

    #[test]
    fn single_letter_and_disallowed_pair() {
        let m = vec![vec![true, false], vec![true, true]];
        let s = matrix_schedule(2, 4, &m);
        assert!(s.is_admissible(&Word::new(1, vec![0])).unwrap());
        assert!(!s.is_admissible(&Word::new(1, vec![0, 1])).unwrap());
        assert!(s.is_admissible(&Word::new(1, vec![1, 0])).unwrap());
        assert!(s.is_admissible(&Word::new(1, vec![5])).is_err());
        assert!(s.is_admissible(&Word::new(4, vec![0, 0])).is_err());
    }

    /// Three vertices; `e7` at time 3 leads to a vertex with no outgoing letters later.
    fn dead_end_schedule() -> GraphSchedule {
        let l = |s: &str, i, t| Letter::new(s, i, t);
        let alphabets = vec![
            vec![l("e1", 0, 1), l("e2", 0, 0)],
            vec![l("e3", 1, 2), l("e4", 0, 0)],
            vec![l("e7", 2, 1), l("e5", 2, 0), l("e6", 0, 0)],
            vec![l("e8", 0, 0)],
            vec![l("e9", 0, 0)],
        ];
        GraphSchedule::new(vec![3; 6], alphabets, vec![Incidence::Full; 4]).unwrap()
    }

    #[test]
    fn dead_end_is_not_admissible() {
        let s = dead_end_schedule();
        // e7 ends at vertex 1, where nothing starts at time 4.
        assert!(!s.is_admissible(&Word::new(1, vec![0, 0, 0])).unwrap());
        assert!(s.is_admissible(&Word::new(1, vec![0, 0, 1])).unwrap());
        assert!(!s.is_alive(3, 0));
        // Brute force: a letter is live iff some full-length path passes through it.
        let mut through = vec![vec![false; 3]; 5];
        let h = s.horizon();
        let mut stack: Vec<Vec<usize>> = (0..s.alphabet(1).len()).map(|a| vec![a]).collect();
        while let Some(w) = stack.pop() {
            if w.len() == h {
                for (k, &a) in w.iter().enumerate() {
                    through[k][a] = true;
                }
                continue;
            }
            let n = w.len();
            for b in 0..s.alphabet(n + 1).len() {
                if s.allowed(n, w[n - 1], b) {
                    let mut x = w.clone();
                    x.push(b);
                    stack.push(x);
                }
            }
        }
        for n in 1..=h {
            for a in 0..s.alphabet(n).len() {
                assert_eq!(s.is_alive(n, a), through[n - 1][a], "time {n} letter {a}");
            }
        }
    }

    #[test]
    fn cyclic_counts_match_matrix_power() {
        // 0 -> 1 -> 2 -> 0 and 0 -> 0.
        let m = vec![
            vec![true, true, false],
            vec![false, false, true],
            vec![true, false, false],
        ];
        let s = matrix_schedule(3, 5, &m);
        let mut c = 0u128;
        s.enumerate_words(1, 4, |_| c += 1).unwrap();
        let mut p = vec![vec![0u128; 3]; 3];
        for i in 0..3 {
            p[i][i] = 1;
        }
        for _ in 0..3 {
            let mut q = vec![vec![0u128; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        q[i][j] += p[i][k] * m[k][j] as u128;
                    }
                }
            }
            p = q;
        }
        let total: u128 = p.iter().flatten().sum();
        assert_eq!(c, total);
        assert_eq!(s.count_words(1, 4).unwrap(), total);
    }

    #[test]
    fn followers() {
        let s = ifs(&[2, 3, 2]);
        let f = s.follower_set(&Word::new(1, vec![1]), 1).unwrap();
        assert_eq!(f.len(), 3);
        let t = matrix_schedule(2, 5, &identity(2));
        let f = t.follower_set(&Word::new(1, vec![0]), 2).unwrap();
        assert_eq!(f, vec![Word::new(2, vec![0, 0])]);
        assert!(t.follower_set(&Word::new(1, vec![0]), 9).is_err());
    }

    #[test]
    fn follower_set_matches_filter() {
        let m = vec![
            vec![true, true, false],
            vec![false, false, true],
            vec![true, false, true],
        ];
        let s = matrix_schedule(3, 6, &m);
        let w = Word::new(1, vec![0, 1]);
        let got = s.follower_set(&w, 3).unwrap();
        let mut brute = Vec::new();
        s.enumerate_words(3, 5, |g| {
            let full = Word::new(1, [w.letters.clone(), g.to_vec()].concat());
            if s.is_admissible(&full).unwrap() {
                brute.push(Word::new(3, g.to_vec()));
            }
        })
        .unwrap();
        assert_eq!(got, brute);
    }

    #[test]
    fn growth_stats_simple_cases() {
        let s = ifs(&[2, 3, 4, 2]);
        let g = growth_stats(&s, None).unwrap();
        assert_eq!(g.records[0].g_min, 3);
        assert_eq!(g.records[1].g_max, 4);
        assert_eq!(g.records[2].xi, 1.0);
        let t = matrix_schedule(2, 5, &identity(2));
        let g = growth_stats(&t, None).unwrap();
        assert!(g.records.iter().all(|r| r.g_min == 1 && r.g_max == 1));
    }

    #[test]
    fn growth_stats_brute_force() {
        let m = vec![
            vec![true, true, false],
            vec![false, false, true],
            vec![true, false, true],
        ];
        let s = matrix_schedule(3, 5, &m);
        let g = growth_stats(&s, None).unwrap();
        for r in &g.records {
            let counts: Vec<usize> = s
                .alive_letters(r.n)
                .map(|a| {
                    (0..3)
                        .filter(|&b| s.allowed(r.n, a, b) && s.is_alive(r.n + 1, b))
                        .count()
                })
                .collect();
            assert_eq!(r.g_min, *counts.iter().min().unwrap());
            assert_eq!(r.g_max, *counts.iter().max().unwrap());
        }
    }

    #[test]
    fn primitivity_basic() {
        let s = ifs(&[3, 3, 3, 3, 3]);
        let c = find_primitivity(&s, 3, |_| 0.5).unwrap().unwrap();
        assert_eq!((c.p, c.q), (0, 1.0));
        let perm = vec![vec![false, true], vec![true, false]];
        let t = matrix_schedule(2, 8, &perm);
        assert!(find_primitivity(&t, 4, |_| 1.0).unwrap().is_none());
        assert!(find_primitivity(&t, 9, |_| 1.0).is_err());
    }

    #[test]
    fn primitivity_connectors_are_lexicographically_least() {
        // Golden-mean shift: 1 must be followed by 0.
        let m = vec![vec![true, true], vec![true, false]];
        let s = matrix_schedule(2, 6, &m);
        let c = find_primitivity(&s, 3, |w| 0.5f64.powi(w.len() as i32))
            .unwrap()
            .unwrap();
        assert_eq!(c.p, 1);
        assert_eq!(c.connector(1, 1, 1).unwrap().letters, vec![0]);
        assert_eq!(c.connector(2, 0, 0).unwrap().letters, vec![0]);
        assert_eq!(c.q, 0.5);
        let stats = growth_stats(&s, Some(&c)).unwrap();
        assert_eq!(stats.records.len(), 5);
    }

    #[test]
    fn subexp_verdicts() {
        let s = ifs(&[2; 16]);
        let r = subexp_diagnostic(&growth_stats(&s, None).unwrap());
        assert!(r.alphabet.verdict.is_subexponential());
        let sizes: Vec<usize> = (1..=12).map(|n| n * n).collect();
        let s = ifs(&sizes);
        let r = subexp_diagnostic(&growth_stats(&s, None).unwrap());
        assert!(r.alphabet.verdict.is_subexponential());
        let sizes: Vec<usize> = (1..=12).map(|n| 1usize << n).collect();
        let s = ifs(&sizes);
        let r = subexp_diagnostic(&growth_stats(&s, None).unwrap());
        match r.alphabet.verdict {
            crate::trend::Verdict::ExponentialRate(x) => assert!((x - 2f64.ln()).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
    }
}
