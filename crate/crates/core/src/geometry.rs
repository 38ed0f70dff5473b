//! Limit-set sampling through the coding map, level covers, a box-counting
//! oracle, and the geometric checks (open set condition, diameters).

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{self, ConformalMap, Region};
use crate::numeric::fit_line;
use crate::symbolic::Word;
use crate::system::SystemSpec;
use crate::trend::{self, TrendReport};

const ROUNDING: f64 = 4.0 * f64::EPSILON;

/// Interior overlaps at or below this depth are treated as touching boundaries.
pub const OVERLAP_TOL: f64 = 1e-12;

/// Below this many points box counts are flagged as undersampled.
pub const MIN_BOX_POINTS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitPoint {
    /// Coordinates; the second is 0 for one-dimensional systems.
    pub coords: [f64; 2],
    /// The true coding-map image lies within this distance of `coords`.
    pub radius: f64,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<LimitPoint>,
}

/// Composite of a word's maps, extended one letter at a time.
#[derive(Clone, Copy, Debug)]
enum Transform {
    /// `x -> s·x + o`.
    Affine { s: f64, o: [f64; 2] },
    /// `x -> (m0·x + m1)/(m2·x + m3)`.
    Moebius([f64; 4]),
}

impl Transform {
    fn then(self, inner: Transform) -> Transform {
        match (self, inner) {
            (Transform::Affine { s, o }, Transform::Affine { s: t, o: p }) => Transform::Affine {
                s: s * t,
                o: [s * p[0] + o[0], s * p[1] + o[1]],
            },
            (Transform::Moebius(m), Transform::Moebius(n)) => Transform::Moebius([
                m[0] * n[0] + m[1] * n[2],
                m[0] * n[1] + m[1] * n[3],
                m[2] * n[0] + m[3] * n[2],
                m[2] * n[1] + m[3] * n[3],
            ]),
            _ => unreachable!("transform families are fixed per system"),
        }
    }

    fn image(&self, r: &Region) -> Region {
        match (*self, *r) {
            (Transform::Affine { s, o }, Region::Interval { lo, hi }) => {
                let (a, b) = (s * lo + o[0], s * hi + o[0]);
                Region::interval(a.min(b), a.max(b))
            }
            (Transform::Affine { s, o }, Region::Disk { center, radius }) => {
                Region::disk([s * center[0] + o[0], s * center[1] + o[1]], s.abs() * radius)
            }
            (Transform::Moebius(m), Region::Interval { lo, hi }) => {
                let f = |x: f64| (m[0] * x + m[1]) / (m[2] * x + m[3]);
                let (a, b) = (f(lo), f(hi));
                Region::interval(a.min(b), a.max(b))
            }
            (Transform::Moebius(_), Region::Disk { .. }) => unreachable!("Möbius transforms act on intervals"),
        }
    }
}

fn primitive_transform(m: &ConformalMap) -> Option<Transform> {
    match m {
        ConformalMap::Similarity { ratio, offset } => Some(Transform::Affine { s: *ratio, o: *offset }),
        ConformalMap::MoebiusInverse { digit } => Some(Transform::Moebius([0.0, 1.0, 1.0, *digit])),
        _ => None,
    }
}

/// Per-letter transforms when every map is a similarity, or every map a Möbius
/// branch acting on intervals in `[0, ∞)`.
fn letter_transforms(system: &SystemSpec) -> Option<Vec<Vec<Transform>>> {
    let h = system.horizon();
    let mut out = Vec::with_capacity(h);
    let mut family = None;
    for n in 1..=h {
        let mut row = Vec::new();
        for (a, m) in system.maps_at(n).iter().enumerate() {
            let mut prims = Vec::new();
            m.flatten_into(&mut prims);
            let mut acc: Option<Transform> = None;
            for p in prims {
                let t = primitive_transform(p)?;
                let moeb = matches!(t, Transform::Moebius(_));
                if *family.get_or_insert(moeb) != moeb {
                    return None;
                }
                acc = Some(match acc {
                    None => t,
                    Some(x) => x.then(t),
                });
            }
            if matches!(acc, Some(Transform::Moebius(_))) {
                let v = system.schedule().letter(n, a).terminal;
                match system.space(n, v).region {
                    Region::Interval { lo, .. } if lo >= 0.0 => {}
                    _ => return None,
                }
            }
            row.push(acc?);
        }
        out.push(row);
    }
    Some(out)
}

fn point_from(region: Region, depth: usize, word: Word) -> LimitPoint {
    let c = region.center();
    let scale = 1.0 + c[0].abs().max(c[1].abs()) + region.diameter();
    LimitPoint {
        coords: c,
        radius: region.radius() + ROUNDING * depth as f64 * scale,
        word,
    }
}

/// Limit point coded by an admissible prefix: the center of its nested image
/// with the enclosure radius.
pub fn project_point(word: &Word, system: &SystemSpec) -> Result<LimitPoint> {
    if word.is_empty() {
        return Err(Error::Input("projection needs a non-empty word".into()));
    }
    let region = crate::system::image_region(word, system)?;
    Ok(point_from(region, word.len(), word.clone()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum SampleStrategy {
    /// One point per word of `I^{1,depth}`.
    Exhaustive,
    /// `max_points` uniformly random admissible words, one generator stream per point.
    RandomAdmissible { seed: u64 },
}

pub fn sample_limit_set(
    system: &SystemSpec,
    depth: usize,
    max_points: usize,
    strategy: SampleStrategy,
) -> Result<PointCloud> {
    let sched = system.schedule();
    if depth == 0 || depth > system.horizon() {
        return Err(Error::Config(format!(
            "sampling depth {depth} must lie in 1..={}",
            system.horizon()
        )));
    }
    let transforms = letter_transforms(system);
    let dim = system.dim();
    let project = |letters: Vec<usize>, state: Option<Transform>| -> Result<LimitPoint> {
        let word = Word::new(1, letters);
        match state {
            Some(t) => Ok(point_from(t.image(&system.word_domain(&word)), depth, word)),
            None => {
                let r = maps::image_of(&system.word_maps(&word), &system.word_domain(&word))?;
                Ok(point_from(r, depth, word))
            }
        }
    };
    let points = match strategy {
        SampleStrategy::Exhaustive => {
            let count = sched.count_words(1, depth)?;
            if count > max_points as u128 {
                return Err(Error::Budget(format!(
                    "depth {depth} has {count} words, above the point budget {max_points}; sample at random instead"
                )));
            }
            let mut out = Vec::with_capacity(count as usize);
            let mut err = None;
            let step = |s: &Option<Transform>, n: usize, a: usize| -> Option<Transform> {
                let tr = transforms.as_ref()?;
                Some(match s {
                    None => tr[n - 1][a],
                    Some(x) => x.then(tr[n - 1][a]),
                })
            };
            sched.walk(1, depth, &None, &step, &mut |p, s| {
                if p.len() == depth && err.is_none() {
                    match project(p.to_vec(), *s) {
                        Ok(pt) => out.push(pt),
                        Err(e) => err = Some(e),
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            out
        }
        SampleStrategy::RandomAdmissible { seed } => (0..max_points as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                let first: Vec<usize> = sched.alive_letters(1).collect();
                let mut letters = Vec::with_capacity(depth);
                letters.push(first[rng.gen_range(0..first.len())]);
                for n in 1..depth {
                    let succ = sched.successors(n, letters[n - 1]);
                    letters.push(succ[rng.gen_range(0..succ.len())] as usize);
                }
                let state = transforms.as_ref().map(|tr| {
                    letters
                        .iter()
                        .enumerate()
                        .map(|(k, &a)| tr[k][a])
                        .reduce(|x, y| x.then(y))
                        .expect("depth at least one")
                });
                project(letters, state)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(PointCloud { dim, points })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountFit {
    pub slope: f64,
    pub stderr: f64,
    /// `(k, N(2^{-k}))` over the window.
    pub counts: Vec<(u32, u64)>,
    /// Fewer than `MIN_BOX_POINTS` points were supplied.
    pub undersampled: bool,
}

/// Box-counting dimension over dyadic scales `2^{-k}`, `k ∈ [k_min, k_max]`,
/// on a grid anchored at 0. A point occupies every box its enclosure meets.
pub fn box_counting_dim(cloud: &PointCloud, scale_window: (u32, u32)) -> Result<BoxCountFit> {
    let (k_min, k_max) = scale_window;
    if k_min >= k_max || k_max > 52 {
        return Err(Error::Input(format!("degenerate scale window [{k_min}, {k_max}]")));
    }
    if cloud.points.is_empty() {
        return Err(Error::Input("box counting needs at least one point".into()));
    }
    let counts: Vec<(u32, u64)> = (k_min..=k_max).map(|k| (k, box_count(cloud, k))).collect();
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&(k, n)| (k as f64 * std::f64::consts::LN_2, (n as f64).ln()))
        .collect();
    let fit = fit_line(&pts).ok_or_else(|| Error::Input("scale window has too few scales".into()))?;
    Ok(BoxCountFit {
        slope: fit.slope,
        stderr: fit.stderr,
        counts,
        undersampled: cloud.points.len() < MIN_BOX_POINTS,
    })
}

fn box_range(x: f64, r: f64, eps: f64) -> (i64, i64) {
    (((x - r) / eps).floor() as i64, ((x + r) / eps).floor() as i64)
}

/// Number of boxes of side `2^{-k}` met by the point enclosures.
pub fn box_count(cloud: &PointCloud, k: u32) -> u64 {
    let eps = 0.5f64.powi(k as i32);
    if cloud.dim == 1 {
        let mut ranges: Vec<(i64, i64)> = cloud
            .points
            .iter()
            .map(|p| box_range(p.coords[0], p.radius, eps))
            .collect();
        ranges.sort_unstable();
        let mut total = 0u64;
        let mut cur: Option<(i64, i64)> = None;
        for (a, b) in ranges {
            cur = match cur {
                Some((x, y)) if a <= y + 1 => Some((x, y.max(b))),
                Some((x, y)) => {
                    total += (y - x + 1) as u64;
                    Some((a, b))
                }
                None => Some((a, b)),
            };
        }
        if let Some((x, y)) = cur {
            total += (y - x + 1) as u64;
        }
        total
    } else {
        let mut boxes = HashSet::new();
        for p in &cloud.points {
            let (x0, x1) = box_range(p.coords[0], p.radius, eps);
            let (y0, y1) = box_range(p.coords[1], p.radius, eps);
            for i in x0..=x1 {
                for j in y0..=y1 {
                    boxes.insert((i, j));
                }
            }
        }
        boxes.len() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscViolation {
    pub a: usize,
    pub b: usize,
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscReport {
    pub n: usize,
    pub cells: usize,
    pub violations: Vec<OscViolation>,
}

impl OscReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Pairwise interior-overlap check of the cells `φ_a^(n)(X_{t(a)})` among letters
/// of time `n` that share an initial vertex.
pub fn verify_osc(system: &SystemSpec, n: usize) -> Result<OscReport> {
    let sched = system.schedule();
    if n == 0 || n > system.horizon() {
        return Err(Error::Config(format!(
            "level {n} outside the horizon {}",
            system.horizon()
        )));
    }
    let mut cells: Vec<(usize, usize, Region)> = Vec::new();
    for a in sched.alive_letters(n) {
        let l = sched.letter(n, a);
        let r = system.map(n, a).image(&system.space(n, l.terminal).region)?;
        cells.push((l.initial, a, r));
    }
    let x_range = |r: &Region| match *r {
        Region::Interval { lo, hi } => (lo, hi),
        Region::Disk { center, radius } => (center[0] - radius, center[0] + radius),
    };
    cells.sort_by(|p, q| p.0.cmp(&q.0).then(x_range(&p.2).0.total_cmp(&x_range(&q.2).0)));
    let mut violations = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    for i in 0..cells.len() {
        let (v, a, r) = cells[i];
        let lo = x_range(&r).0;
        active.retain(|&j| cells[j].0 == v && x_range(&cells[j].2).1 > lo + OVERLAP_TOL);
        for &j in &active {
            let o = cells[j].2.overlap(&r);
            if o > OVERLAP_TOL {
                let (x, y) = (cells[j].1.min(a), cells[j].1.max(a));
                violations.push(OscViolation { a: x, b: y, overlap: o });
            }
        }
        active.push(i);
    }
    violations.sort_by_key(|p| (p.a, p.b));
    Ok(OscReport {
        n,
        cells: cells.len(),
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverCell {
    pub word: Word,
    pub region: Region,
    pub diameter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCover {
    pub n: usize,
    pub cells: Vec<CoverCell>,
}

impl LevelCover {
    pub fn covers(&self, x: [f64; 2], tol: f64) -> bool {
        self.cells.iter().any(|c| c.region.contains_point(x, tol))
    }
}

/// The cells `Y_ω = φ_ω(X_{t(ω)})` for all `ω ∈ I^{1,n}`.
pub fn level_cover(system: &SystemSpec, n: usize, max_cells: usize) -> Result<LevelCover> {
    let sched = system.schedule();
    let count = sched.count_words(1, n)?;
    if count > max_cells as u128 {
        return Err(Error::Budget(format!(
            "level {n} has {count} cells, above the budget {max_cells}"
        )));
    }
    let mut cells = Vec::with_capacity(count as usize);
    let mut err = None;
    sched.enumerate_words(1, n, |w| {
        let word = Word::new(1, w.to_vec());
        match maps::image_of(&system.word_maps(&word), &system.word_domain(&word)) {
            Ok(region) => cells.push(CoverCell {
                diameter: region.diameter(),
                word,
                region,
            }),
            Err(e) => err = err.clone().or(Some(e)),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(LevelCover { n, cells }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiameterReport {
    /// `(n, d̲_n)`.
    pub d_min: Vec<(usize, f64)>,
    /// `(n, d̄_n)`.
    pub d_max: Vec<(usize, f64)>,
    pub lower_trend: TrendReport,
    pub upper_trend: TrendReport,
    pub vertex_trend: TrendReport,
    /// No trend reads as exponential growth or decay.
    pub condition_holds: bool,
}

/// Space-diameter and vertex-count growth against the subexponential conditions.
pub fn diameter_diagnostics(system: &SystemSpec, horizon: usize) -> DiameterReport {
    let h = horizon.min(system.horizon());
    let (mut d_min, mut d_max, mut verts) = (Vec::new(), Vec::new(), Vec::new());
    for n in 1..=h {
        let (lo, hi) = crate::thermo::diameter_extremes(system, n);
        d_min.push((n, lo));
        d_max.push((n, hi));
        verts.push((n, (system.schedule().vertex_count(n) as f64).ln()));
    }
    let logs = |v: &[(usize, f64)]| v.iter().map(|&(n, d)| (n, d.ln())).collect::<Vec<_>>();
    let lower_trend = trend::classify(&logs(&d_min));
    let upper_trend = trend::classify(&logs(&d_max));
    let vertex_trend = trend::classify(&verts);
    let ok = |t: &TrendReport| !matches!(t.verdict, trend::Verdict::ExponentialRate(_));
    let condition_holds = ok(&lower_trend) && ok(&upper_trend) && ok(&vertex_trend);
    DiameterReport {
        d_min,
        d_max,
        lower_trend,
        upper_trend,
        vertex_trend,
        condition_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Space;
    use crate::symbolic::{GraphSchedule, Incidence, Letter};

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

    fn cf12(h: usize) -> SystemSpec {
        ifs(h, vec![ConformalMap::cf(1.0), ConformalMap::cf(2.0)])
    }

    #[test]
    fn projections() {
        let s = cantor(12);
        let p = project_point(&Word::new(1, vec![0; 10]), &s).unwrap();
        assert!(p.coords[0].abs() <= p.radius && (p.radius - 0.5 * 3f64.powi(-10)).abs() < 1e-13);
        let cf = cf12(20);
        let golden = project_point(&Word::new(1, vec![0; 20]), &cf).unwrap();
        assert!((golden.coords[0] - (5f64.sqrt() - 1.0) / 2.0).abs() <= golden.radius);
        let alt: Vec<usize> = (0..20).map(|k| 1 - k % 2).collect();
        let q = project_point(&Word::new(1, alt), &cf).unwrap();
        assert!((q.coords[0] - (3f64.sqrt() - 1.0) / 2.0).abs() <= q.radius);
        let alt: Vec<usize> = (0..20).map(|k| k % 2).collect();
        let q = project_point(&Word::new(1, alt), &cf).unwrap();
        assert!((q.coords[0] - (3f64.sqrt() - 1.0)).abs() <= q.radius);
        assert!(project_point(&Word::new(1, vec![]), &cf).is_err());
    }

    #[test]
    fn cantor_samples() {
        let c = sample_limit_set(&cantor(5), 3, 100, SampleStrategy::Exhaustive).unwrap();
        assert_eq!(c.points.len(), 8);
        let mut xs: Vec<f64> = c.points.iter().map(|p| p.coords[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!(xs.windows(2).all(|w| w[1] - w[0] >= 1.0 / 27.0 - 1e-12));
        assert!(matches!(
            sample_limit_set(&cantor(5), 5, 10, SampleStrategy::Exhaustive),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn fast_path_matches_generic_images() {
        let s = cf12(10);
        let c = sample_limit_set(&s, 10, 2000, SampleStrategy::Exhaustive).unwrap();
        assert_eq!(c.points.len(), 1024);
        for p in &c.points {
            let q = project_point(&p.word, &s).unwrap();
            assert!((p.coords[0] - q.coords[0]).abs() < 1e-12);
            assert!(p.coords[0] >= 1.0 / 3.0 - 1e-12 && p.coords[0] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn random_sampling_is_reproducible() {
        let s = cf12(20);
        let a = sample_limit_set(&s, 20, 500, SampleStrategy::RandomAdmissible { seed: 7 }).unwrap();
        let b = sample_limit_set(&s, 20, 500, SampleStrategy::RandomAdmissible { seed: 7 }).unwrap();
        assert_eq!(a, b);
        let c = sample_limit_set(&s, 20, 500, SampleStrategy::RandomAdmissible { seed: 8 }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn box_counting_examples() {
        let grid = PointCloud {
            dim: 1,
            points: (0..10_000)
                .map(|i| LimitPoint {
                    coords: [(i as f64 + 0.5) / 10_000.0, 0.0],
                    radius: 0.0,
                    word: Word::new(1, vec![]),
                })
                .collect(),
        };
        let f = box_counting_dim(&grid, (4, 12)).unwrap();
        assert!((f.slope - 1.0).abs() < 0.05 && !f.undersampled);
        let single = PointCloud {
            dim: 1,
            points: vec![grid.points[17].clone()],
        };
        let f = box_counting_dim(&single, (4, 12)).unwrap();
        assert!(f.slope.abs() < 1e-12 && f.undersampled);
        let c = sample_limit_set(&cantor(12), 12, 5000, SampleStrategy::Exhaustive).unwrap();
        let f = box_counting_dim(&c, (4, 14)).unwrap();
        assert!((f.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{}", f.slope);
        assert!(f.counts.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(box_counting_dim(&c, (5, 5)).is_err());
    }

    #[test]
    fn osc_examples() {
        assert!(verify_osc(&cantor(3), 1).unwrap().holds());
        for n in 1..=8 {
            assert!(verify_osc(&cf12(8), n).unwrap().holds());
        }
        let bad = ifs(
            3,
            vec![ConformalMap::similarity(0.6, 0.0), ConformalMap::similarity(0.6, 0.4)],
        );
        let r = verify_osc(&bad, 1).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert!((r.violations[0].overlap - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cover_contains_samples() {
        let s = cf12(10);
        let cover = level_cover(&s, 4, 100).unwrap();
        assert_eq!(cover.cells.len(), 16);
        let c = sample_limit_set(&s, 10, 2000, SampleStrategy::Exhaustive).unwrap();
        assert!(c.points.iter().all(|p| cover.covers(p.coords, 1e-12)));
    }

    #[test]
    fn diameters() {
        let r = diameter_diagnostics(&cantor(16), 16);
        assert!(r.condition_holds && r.upper_trend.fitted_rate == 0.0);
        let h = 24;
        let letters = vec![Letter::new("a", 0, 0)];
        let sched = GraphSchedule::new(vec![1; h + 1], vec![letters; h], vec![Incidence::Full; h - 1]).unwrap();
        let spaces: Vec<Vec<Space>> = (0..=h)
            .map(|n| vec![Space::new(Region::interval(0.0, 0.5f64.powi(n as i32)))])
            .collect();
        let maps: Vec<Vec<ConformalMap>> = (0..h).map(|_| vec![ConformalMap::similarity(0.25, 0.0)]).collect();
        let s = SystemSpec::new("shrink", sched, spaces, maps).unwrap();
        let r = diameter_diagnostics(&s, h);
        assert!(!r.condition_holds);
        match r.upper_trend.verdict {
            trend::Verdict::ExponentialRate(x) => assert!((x + 2f64.ln()).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
    }
}
