//! Lower bound `2q/(q+1)` for the Julia set of an elliptic function with poles
//! of multiplicity at most `q`, realised on a model system whose letter norms
//! follow the inverse-branch law `|b|^{-(q+1)/q}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{ConformalMap, Region};
use crate::system::SystemSpec;
use crate::thermo::{partition, Strategy};

use super::builders::single_vertex_system;

/// Times of the model system whose partition sums are checked.
pub const ELLIPTIC_HORIZON: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum EllipticRow {
    /// `t` at or above the divergence threshold.
    Refused { t: f64, threshold: f64 },
    /// The lattice window holds too little mass.
    NotFound { t: f64, lattice_sum: f64, target: f64 },
    Found {
        t: f64,
        poles: usize,
        /// Largest `|b|` among the chosen poles.
        radius: f64,
        lattice_sum: f64,
        target: f64,
        /// `(n, Z_n(t))` of the model system.
        z: Vec<(usize, f64)>,
        /// `Z_n(t) ≥ 2^n` at every checked time.
        growth_ok: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticReport {
    pub q: u32,
    pub threshold: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub k: f64,
    pub rows: Vec<EllipticRow>,
    /// Largest `t` in the grid whose model system passed.
    pub certified: Option<f64>,
}

/// `2q/(q+1)`.
pub fn elliptic_threshold(q: u32) -> f64 {
    2.0 * q as f64 / (q as f64 + 1.0)
}

/// Square-lattice poles with `r_min < |b| ≤ r_max`, by increasing modulus.
pub fn lattice_poles(r_min: f64, r_max: f64) -> Vec<f64> {
    let m = r_max.ceil() as i64;
    let mut out: Vec<f64> = (-m..=m)
        .flat_map(|i| (-m..=m).map(move |j| ((i * i + j * j) as f64).sqrt()))
        .filter(|&r| r > r_min && r <= r_max)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Autonomous model system: one disk similarity of ratio `|b|^{-(q+1)/q}` per
/// pole, placed on a grid inside the unit disk.
pub fn elliptic_model(q: u32, poles: &[f64], horizon: usize) -> Result<SystemSpec> {
    let e = (q as f64 + 1.0) / q as f64;
    let ratios: Vec<f64> = poles.iter().map(|b| b.powf(-e)).collect();
    let r_max = ratios.iter().cloned().fold(0.0, f64::max);
    if r_max <= 0.0 {
        return Err(Error::Input("model system needs at least one pole".into()));
    }
    let cell = 2.0 * r_max;
    let per_side = (2.0 / cell).floor() as i64;
    let mut centers = Vec::new();
    for i in 0..per_side {
        for j in 0..per_side {
            let c = [-1.0 + (i as f64 + 0.5) * cell, -1.0 + (j as f64 + 0.5) * cell];
            if (c[0] * c[0] + c[1] * c[1]).sqrt() + r_max <= 1.0 {
                centers.push(c);
            }
        }
    }
    if centers.len() < ratios.len() {
        return Err(Error::Build(format!(
            "{} poles do not fit in the unit disk ({} grid cells)",
            ratios.len(),
            centers.len()
        )));
    }
    let maps: Vec<ConformalMap> = ratios
        .iter()
        .zip(&centers)
        .map(|(&r, &c)| ConformalMap::similarity_2d(r, c))
        .collect();
    let labels: Vec<String> = (0..maps.len()).map(|i| i.to_string()).collect();
    single_vertex_system(
        &format!("elliptic-q{q}"),
        Region::disk([0.0, 0.0], 1.0),
        vec![maps; horizon],
        vec![labels; horizon],
        &[],
    )
}

/// For each `t` below the threshold, picks the smallest poles until
/// `Σ|b|^{-t(q+1)/q} ≥ 2K²` and checks `Z_n(t) ≥ 2^n` on the model system.
pub fn elliptic_lower_bound(q: u32, r_min: f64, r_max: f64, k: f64, t_grid: &[f64]) -> Result<EllipticReport> {
    if q == 0 {
        return Err(Error::Input("pole multiplicity must be at least 1".into()));
    }
    if !(r_min >= 1.0) || !(r_max > r_min) {
        return Err(Error::Input(format!(
            "lattice window ({r_min}, {r_max}] must satisfy 1 ≤ r_min < r_max"
        )));
    }
    if !(k >= 1.0) {
        return Err(Error::Input(format!("comparability constant {k} must be at least 1")));
    }
    let threshold = elliptic_threshold(q);
    let e = (q as f64 + 1.0) / q as f64;
    let poles = lattice_poles(r_min, r_max);
    let target = 2.0 * k * k;
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut certified: Option<f64> = None;
    for &t in t_grid {
        if t >= threshold {
            rows.push(EllipticRow::Refused { t, threshold });
            continue;
        }
        let mut sum = 0.0;
        let mut chosen = 0;
        while chosen < poles.len() && sum < target {
            sum += poles[chosen].powf(-t * e);
            chosen += 1;
        }
        if sum < target {
            rows.push(EllipticRow::NotFound {
                t,
                lattice_sum: sum,
                target,
            });
            continue;
        }
        let model = elliptic_model(q, &poles[..chosen], ELLIPTIC_HORIZON)?;
        let z = (1..=ELLIPTIC_HORIZON)
            .map(|n| Ok((n, partition(&model, 1, n, t, Strategy::Auto)?.lo)))
            .collect::<Result<Vec<_>>>()?;
        let growth_ok = z.iter().all(|&(n, v)| v >= 2f64.powi(n as i32));
        if growth_ok {
            certified = Some(certified.map_or(t, |c: f64| c.max(t)));
        }
        rows.push(EllipticRow::Found {
            t,
            poles: chosen,
            radius: poles[chosen - 1],
            lattice_sum: sum,
            target,
            z,
            growth_ok,
        });
    }
    Ok(EllipticReport {
        q,
        threshold,
        r_min,
        r_max,
        k,
        rows,
        certified,
    })
}
