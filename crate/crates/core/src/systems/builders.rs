//! Builders for single-vertex families on an interval: similarity systems,
//! geometric packings and continued-fraction systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{ConformalMap, Region, Space};
use crate::symbolic::{GraphSchedule, Incidence, Letter};
use crate::system::SystemSpec;

/// Ratios and offsets of the similarities `x -> r·x + o` at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityLayer {
    pub ratios: Vec<f64>,
    pub offsets: Vec<f64>,
}

/// Element `k` of a non-empty list repeated periodically.
pub(crate) fn cycled<T: Clone>(items: &[T], k: usize) -> T {
    items[k % items.len()].clone()
}

/// Iterated function system on one space: one vertex at every time.
pub fn single_vertex_system(
    name: &str,
    region: Region,
    maps: Vec<Vec<ConformalMap>>,
    labels: Vec<Vec<String>>,
    incidence: &[Incidence],
) -> Result<SystemSpec> {
    let h = maps.len();
    if h == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let alphabets = labels
        .into_iter()
        .map(|row| row.into_iter().map(|l| Letter::new(l, 0, 0)).collect())
        .collect();
    let inc = (0..h.saturating_sub(1))
        .map(|k| {
            if incidence.is_empty() {
                Incidence::Full
            } else {
                cycled(incidence, k)
            }
        })
        .collect();
    let schedule = GraphSchedule::new(vec![1; h + 1], alphabets, inc)?;
    SystemSpec::new(name, schedule, vec![vec![Space::new(region)]; h + 1], maps)
}

/// Similarity system on `[0, 1]` whose layers and incidence matrices repeat periodically.
pub fn build_similarity_system(
    name: &str,
    layers: &[SimilarityLayer],
    incidence: &[Incidence],
    horizon: usize,
) -> Result<SystemSpec> {
    if layers.is_empty() {
        return Err(Error::Config("similarity system needs at least one layer".into()));
    }
    let mut maps = Vec::with_capacity(horizon);
    let mut labels = Vec::with_capacity(horizon);
    for n in 0..horizon {
        let layer = &layers[n % layers.len()];
        if layer.ratios.len() != layer.offsets.len() || layer.ratios.is_empty() {
            return Err(Error::Config(format!(
                "layer {}: {} ratios for {} offsets",
                n % layers.len(),
                layer.ratios.len(),
                layer.offsets.len()
            )));
        }
        maps.push(
            layer
                .ratios
                .iter()
                .zip(&layer.offsets)
                .map(|(&r, &o)| ConformalMap::similarity(r, o))
                .collect(),
        );
        labels.push((0..layer.ratios.len()).map(|i| i.to_string()).collect());
    }
    single_vertex_system(name, Region::unit(), maps, labels, incidence)
}

/// At time `n`, `count_base^n` similarities of ratio `ratio_base^{-n}` placed at
/// `k / count_base^n`.
pub fn build_packing_system(name: &str, count_base: usize, ratio_base: f64, horizon: usize) -> Result<SystemSpec> {
    if count_base < 2 || ratio_base < count_base as f64 {
        return Err(Error::Config(format!(
            "packing needs count base ≥ 2 and ratio base ≥ count base, got {count_base} and {ratio_base}"
        )));
    }
    let mut maps = Vec::with_capacity(horizon);
    let mut labels = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let count = count_base
            .checked_pow(n as u32)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::Budget(format!("time {n} would need {count_base}^{n} maps")))?;
        let r = ratio_base.powi(-(n as i32));
        maps.push(
            (0..count)
                .map(|k| ConformalMap::similarity(r, k as f64 / count as f64))
                .collect(),
        );
        labels.push((0..count).map(|k| k.to_string()).collect());
    }
    single_vertex_system(name, Region::unit(), maps, labels, &[])
}

fn digit_label(d: f64) -> String {
    if d.fract() == 0.0 {
        format!("{}", d as i64)
    } else {
        format!("{d}")
    }
}

/// Continued-fraction system on `[0, 1]` with branches `x -> 1/(b + x)`;
/// digit sets and incidence matrices repeat periodically.
pub fn build_cf_system(name: &str, digits: &[Vec<f64>], incidence: &[Incidence], horizon: usize) -> Result<SystemSpec> {
    if digits.is_empty() || digits.iter().any(|d| d.is_empty()) {
        return Err(Error::Config(
            "continued-fraction system needs non-empty digit sets".into(),
        ));
    }
    if let Some(&d) = digits.iter().flatten().find(|&&d| !(d >= 1.0) || !d.is_finite()) {
        return Err(Error::Input(format!(
            "digit {d} is below 1; branches would leave [0, 1]"
        )));
    }
    let maps = (0..horizon)
        .map(|n| cycled(digits, n).iter().map(|&d| ConformalMap::cf(d)).collect())
        .collect();
    let labels = (0..horizon)
        .map(|n| cycled(digits, n).iter().map(|&d| digit_label(d)).collect())
        .collect();
    single_vertex_system(name, Region::unit(), maps, labels, incidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_point, verify_osc};
    use crate::symbolic::Word;
    use crate::system::distortion_constant;
    use crate::thermo::{bowen_dimension, partition, Strategy};

    #[test]
    fn cantor_from_layers() {
        let s = build_similarity_system(
            "cantor3",
            &[SimilarityLayer {
                ratios: vec![1.0 / 3.0, 1.0 / 3.0],
                offsets: vec![0.0, 2.0 / 3.0],
            }],
            &[],
            12,
        )
        .unwrap();
        assert!(s.is_stationary());
        assert_eq!(distortion_constant(&s).unwrap(), 1.0);
        for n in 1..=4 {
            assert!(verify_osc(&s, n).unwrap().holds());
        }
    }

    #[test]
    fn escaping_layer_is_rejected() {
        let r = build_similarity_system(
            "bad",
            &[SimilarityLayer {
                ratios: vec![0.5],
                offsets: vec![0.7],
            }],
            &[],
            3,
        );
        assert!(matches!(r, Err(Error::Build(_))));
    }

    #[test]
    fn packing_closed_form() {
        let s = build_packing_system("ab", 2, 4.0, 8).unwrap();
        assert_eq!(s.schedule().alphabet(8).len(), 256);
        for n in 1..=4 {
            assert!(verify_osc(&s, n).unwrap().holds());
        }
        // Z_n(1/2) = Π 2^j 4^{-j/2} = 1.
        let z = partition(&s, 1, 8, 0.5, Strategy::MatrixExact).unwrap();
        assert!((z.hi - 1.0).abs() < 1e-12);
        let r = bowen_dimension(&s, (0.0, 1.0), 8, 1e-6).unwrap();
        assert!(r.lo <= 0.5 && 0.5 <= r.hi);
    }

    #[test]
    fn cf_examples() {
        let s = build_cf_system("cf2", &[vec![2.0]], &[], 30).unwrap();
        let p = project_point(&Word::new(1, vec![0; 30]), &s).unwrap();
        assert!((p.coords[0] - (2f64.sqrt() - 1.0)).abs() <= p.radius + 1e-15);
        let alt = build_cf_system("alt", &[vec![1.0, 2.0], vec![2.0, 3.0]], &[], 6).unwrap();
        assert_eq!(alt.schedule().count_words(1, 6).unwrap(), 64);
        assert_eq!(alt.schedule().alphabet(2)[1].label, "3");
        assert!(matches!(
            build_cf_system("x", &[vec![0.5]], &[], 3),
            Err(Error::Input(_))
        ));
        let cf = build_cf_system("cf12", &[vec![1.0, 2.0]], &[], 8).unwrap();
        assert_eq!(distortion_constant(&cf).unwrap(), 4.0);
        assert_eq!(cf.contraction().block, 2);
    }
}
