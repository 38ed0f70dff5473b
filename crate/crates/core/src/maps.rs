//! Conformal map families, regions and certified derivative-norm brackets.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative widening applied to interval-arithmetic brackets per composed map.
const ROUNDING: f64 = 4.0 * f64::EPSILON;

/// A compact interval (`d = 1`) or closed disk (`d = 2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Region {
    Interval { lo: f64, hi: f64 },
    Disk { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Region::Interval { lo, hi }
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Region::Disk { center, radius }
    }

    pub fn unit() -> Self {
        Region::interval(0.0, 1.0)
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Region::Interval { lo, hi } => hi - lo,
            Region::Disk { radius, .. } => 2.0 * radius,
        }
    }

    pub fn center(&self) -> [f64; 2] {
        match *self {
            Region::Interval { lo, hi } => [0.5 * (lo + hi), 0.0],
            Region::Disk { center, .. } => center,
        }
    }

    /// Half the diameter: every point of the region is this close to the center.
    pub fn radius(&self) -> f64 {
        0.5 * self.diameter()
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Disk { .. } => 2,
        }
    }

    /// Containment up to an absolute slack `tol`.
    pub fn contains(&self, other: &Region, tol: f64) -> bool {
        match (*self, *other) {
            (Region::Interval { lo, hi }, Region::Interval { lo: a, hi: b }) => a >= lo - tol && b <= hi + tol,
            (Region::Disk { center, radius }, Region::Disk { center: c, radius: r }) => {
                dist(center, c) + r <= radius + tol
            }
            _ => false,
        }
    }

    pub fn contains_point(&self, x: [f64; 2], tol: f64) -> bool {
        match *self {
            Region::Interval { lo, hi } => x[0] >= lo - tol && x[0] <= hi + tol,
            Region::Disk { center, radius } => dist(center, x) <= radius + tol,
        }
    }

    /// Depth of interior overlap: positive when the interiors meet.
    pub fn overlap(&self, other: &Region) -> f64 {
        match (*self, *other) {
            (Region::Interval { lo, hi }, Region::Interval { lo: a, hi: b }) => hi.min(b) - lo.max(a),
            (Region::Disk { center, radius }, Region::Disk { center: c, radius: r }) => radius + r - dist(center, c),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Concentric enlargement by `factor`.
    pub fn scaled(&self, factor: f64) -> Region {
        match *self {
            Region::Interval { lo, hi } => {
                let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo) * factor);
                Region::interval(m - h, m + h)
            }
            Region::Disk { center, radius } => Region::disk(center, radius * factor),
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// The space `X_v^(n)` together with its enlarged domain `W_v^(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Space {
    pub region: Region,
    pub enlarged: Region,
}

impl Space {
    /// A space with the default 1.5x concentric enlargement.
    pub fn new(region: Region) -> Self {
        Self {
            region,
            enlarged: region.scaled(1.5),
        }
    }
}

/// Monotone interval map given by values at knots plus certified derivative
/// bounds `|Dφ| ∈ [lo_i, hi_i]` on each knot interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TabulatedMap {
    knots: Vec<f64>,
    values: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    increasing: bool,
}

impl TabulatedMap {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || values.len() != knots.len() || bounds.len() != knots.len() - 1 {
            return Err(Error::Build(
                "tabulated map needs k knots, k values and k-1 bounds".into(),
            ));
        }
        let increasing = values[1] > values[0];
        for i in 0..knots.len() - 1 {
            let dx = knots[i + 1] - knots[i];
            let dy = values[i + 1] - values[i];
            if !(dx > 0.0) {
                return Err(Error::Build("tabulated knots must increase strictly".into()));
            }
            if (dy > 0.0) != increasing || dy == 0.0 {
                return Err(Error::Build("tabulated values must be strictly monotone".into()));
            }
            let (lo, hi) = bounds[i];
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Build(format!(
                    "derivative bounds on piece {i} must satisfy 0 < lo <= hi"
                )));
            }
            let mean = dy.abs() / dx;
            if mean < lo * (1.0 - 1e-12) || mean > hi * (1.0 + 1e-12) {
                return Err(Error::Build(format!(
                    "secant slope {mean} on piece {i} lies outside its derivative bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            knots,
            values,
            bounds,
            increasing,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Largest ratio of upper to lower derivative bound over the whole map.
    pub fn derivative_spread(&self) -> f64 {
        let hi = self.bounds.iter().map(|b| b.1).fold(0.0, f64::max);
        let lo = self.bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
        hi / lo
    }

    fn piece(&self, x: f64) -> usize {
        let k = self.knots.partition_point(|&k| k <= x);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// Enclosure of `|φ(x) - φ(k_i)|` growth on the piece containing `x`.
    fn point(&self, x: f64) -> (f64, f64) {
        let i = self.piece(x);
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let (lo, hi) = self.bounds[i];
        let (d0, d1) = ((x - k0).max(0.0), (k1 - x).max(0.0));
        if self.increasing {
            ((v0 + lo * d0).max(v1 - hi * d1), (v0 + hi * d0).min(v1 - lo * d1))
        } else {
            ((v1 + lo * d1).max(v0 - hi * d0), (v1 + hi * d1).min(v0 - lo * d0))
        }
    }

    fn image(&self, a: f64, b: f64) -> (f64, f64) {
        let (pa, pb) = (self.point(a), self.point(b));
        (pa.0.min(pb.0), pa.1.max(pb.1))
    }

    fn deriv(&self, a: f64, b: f64) -> (f64, f64) {
        let (i, j) = (self.piece(a), self.piece(b));
        self.bounds[i..=j]
            .iter()
            .fold((f64::INFINITY, 0.0f64), |acc, &(l, h)| (acc.0.min(l), acc.1.max(h)))
    }
}

/// One letter's map `φ_e^(n): X_{t(e)}^(n) -> X_{i(e)}^(n-1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ConformalMap {
    /// `x -> ratio·x + offset`. In one dimension only `offset[0]` is used and a
    /// negative ratio reverses orientation.
    Similarity {
        ratio: f64,
        offset: [f64; 2],
    },
    /// `x -> 1/(digit + x)`.
    MoebiusInverse {
        digit: f64,
    },
    Tabulated(Arc<TabulatedMap>),
    /// `φ_1 ∘ φ_2 ∘ … ∘ φ_k`, outermost first.
    Composite(Vec<ConformalMap>),
}

/// Which family the maps of a system belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Similarity,
    Moebius,
    Mixed,
}

impl ConformalMap {
    pub fn similarity(ratio: f64, offset: f64) -> Self {
        ConformalMap::Similarity {
            ratio,
            offset: [offset, 0.0],
        }
    }

    pub fn similarity_2d(ratio: f64, offset: [f64; 2]) -> Self {
        ConformalMap::Similarity { ratio, offset }
    }

    pub fn cf(digit: f64) -> Self {
        ConformalMap::MoebiusInverse { digit }
    }

    /// Pushes the primitive maps of `self`, outermost first.
    pub fn flatten_into<'a>(&'a self, out: &mut Vec<&'a ConformalMap>) {
        match self {
            ConformalMap::Composite(parts) => parts.iter().for_each(|m| m.flatten_into(out)),
            m => out.push(m),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            ConformalMap::Similarity { .. } => FamilyKind::Similarity,
            ConformalMap::MoebiusInverse { .. } => FamilyKind::Moebius,
            ConformalMap::Tabulated(_) => FamilyKind::Mixed,
            ConformalMap::Composite(parts) => combine_kinds(parts.iter().map(|p| p.kind())),
        }
    }

    /// Image of a region. Exact for similarities and Möbius branches, an
    /// enclosure for tabulated maps.
    pub fn image(&self, r: &Region) -> Result<Region> {
        match (self, *r) {
            (ConformalMap::Similarity { ratio, offset }, Region::Interval { lo, hi }) => {
                let (a, b) = (ratio * lo + offset[0], ratio * hi + offset[0]);
                Ok(Region::interval(a.min(b), a.max(b)))
            }
            (ConformalMap::Similarity { ratio, offset }, Region::Disk { center, radius }) => Ok(Region::disk(
                [ratio * center[0] + offset[0], ratio * center[1] + offset[1]],
                ratio.abs() * radius,
            )),
            (ConformalMap::MoebiusInverse { digit }, Region::Interval { lo, hi }) => {
                if digit + lo <= 0.0 {
                    return Err(Error::Input(format!(
                        "interval [{lo}, {hi}] meets the pole of 1/({digit}+x)"
                    )));
                }
                Ok(Region::interval(1.0 / (digit + hi), 1.0 / (digit + lo)))
            }
            (ConformalMap::Tabulated(t), Region::Interval { lo, hi }) => {
                let (a, b) = t.domain();
                if lo < a - 1e-12 || hi > b + 1e-12 {
                    return Err(Error::Input(format!(
                        "interval [{lo}, {hi}] leaves the tabulated domain"
                    )));
                }
                let (x, y) = t.image(lo.max(a), hi.min(b));
                Ok(Region::interval(x, y))
            }
            (ConformalMap::Composite(parts), r) => parts.iter().rev().try_fold(r, |acc, m| m.image(&acc)),
            (m, r) => Err(Error::Unsupported(format!("{:?} maps cannot act on {r:?}", m.kind()))),
        }
    }

    /// Bounds on `|Dφ|` over a region.
    fn derivative_on(&self, r: &Region) -> Result<(f64, f64)> {
        match (self, *r) {
            (ConformalMap::Similarity { ratio, .. }, _) => Ok((ratio.abs(), ratio.abs())),
            (ConformalMap::MoebiusInverse { digit }, Region::Interval { lo, hi }) => {
                Ok((1.0 / (digit + hi).powi(2), 1.0 / (digit + lo).powi(2)))
            }
            (ConformalMap::Tabulated(t), Region::Interval { lo, hi }) => {
                let (a, b) = t.domain();
                Ok(t.deriv(lo.max(a), hi.min(b)))
            }
            (m, r) => Err(Error::Unsupported(format!("{:?} derivative on {r:?}", m.kind()))),
        }
    }
}

pub fn combine_kinds(kinds: impl IntoIterator<Item = FamilyKind>) -> FamilyKind {
    let mut out: Option<FamilyKind> = None;
    for k in kinds {
        out = Some(match out {
            None => k,
            Some(o) if o == k => o,
            _ => FamilyKind::Mixed,
        });
    }
    out.unwrap_or(FamilyKind::Similarity)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    Exact,
    Continuant,
    Interval,
    BdpBracket,
}

/// Certified `lo ≤ sup|Dφ_ω| ≤ hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormBracket {
    pub lo: f64,
    pub hi: f64,
    pub method: NormMethod,
}

impl NormBracket {
    pub fn exact(v: f64, method: NormMethod) -> Self {
        Self { lo: v, hi: v, method }
    }
}

/// Continuants `(q_{k-1}, q_k)` of a digit string, with `q_{-1} = 0`, `q_0 = 1`.
pub fn continuants(digits: impl IntoIterator<Item = f64>) -> (f64, f64) {
    digits.into_iter().fold((0.0, 1.0), |(q0, q1), b| (q1, b * q1 + q0))
}

/// Norm of a composition of primitive maps acting on `domain`.
///
/// All similarities: exact product. All Möbius branches on a domain inside
/// `[0, ∞)`: the continuant formula `1/(q_{k-1}x_0 + q_k)²` at the left end
/// `x_0`. Anything else: an interval chain rule, with the upper bound taken
/// from enclosures of the whole domain and the lower bound from a point.
pub fn norm_of(maps: &[&ConformalMap], domain: &Region) -> Result<NormBracket> {
    if maps.iter().all(|m| matches!(m, ConformalMap::Similarity { .. })) {
        let v = maps.iter().fold(1.0, |acc, m| match m {
            ConformalMap::Similarity { ratio, .. } => acc * ratio.abs(),
            _ => unreachable!(),
        });
        return Ok(NormBracket::exact(v, NormMethod::Exact));
    }
    if let Region::Interval { lo: x0, .. } = *domain {
        if x0 >= 0.0 && maps.iter().all(|m| matches!(m, ConformalMap::MoebiusInverse { .. })) {
            let (qp, q) = continuants(maps.iter().map(|m| match m {
                ConformalMap::MoebiusInverse { digit } => *digit,
                _ => unreachable!(),
            }));
            let v = 1.0 / (qp * x0 + q).powi(2);
            return Ok(NormBracket::exact(v, NormMethod::Continuant));
        }
    }
    let hi = chain(maps, *domain)?.1;
    let point = match *domain {
        Region::Interval { lo, .. } => Region::interval(lo, lo),
        Region::Disk { center, .. } => Region::disk(center, 0.0),
    };
    let lo = chain(maps, point)?.0;
    let slack = ROUNDING * maps.len() as f64;
    Ok(NormBracket {
        lo: lo * (1.0 - slack),
        hi: hi * (1.0 + slack),
        method: NormMethod::Interval,
    })
}

/// Products of lower and upper derivative bounds along the composition.
fn chain(maps: &[&ConformalMap], domain: Region) -> Result<(f64, f64)> {
    let mut region = domain;
    let (mut lo, mut hi) = (1.0, 1.0);
    for m in maps.iter().rev() {
        let (a, b) = m.derivative_on(&region)?;
        lo *= a;
        hi *= b;
        region = m.image(&region)?;
    }
    Ok((lo, hi))
}

/// Image of `domain` under the composition, innermost map applied first.
pub fn image_of(maps: &[&ConformalMap], domain: &Region) -> Result<Region> {
    maps.iter().rev().try_fold(*domain, |r, m| m.image(&r))
}
