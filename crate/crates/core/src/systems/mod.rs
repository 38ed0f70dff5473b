//! Builders for the standard families and the subsystem constructions used to
//! prove lower bounds.

mod ascending;
mod builders;
mod elliptic;
mod subsystems;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{ConformalMap, Region, Space};
use crate::symbolic::{GraphSchedule, Incidence, Letter};
use crate::system::SystemSpec;

pub use ascending::{autonomous_closure, build_ascending, truncated_autonomous, AscendingSpec, Closure};
pub use builders::{
    build_cf_system, build_packing_system, build_similarity_system, single_vertex_system, SimilarityLayer,
};
pub use elliptic::{
    elliptic_lower_bound, elliptic_model, elliptic_threshold, lattice_poles, EllipticReport, EllipticRow,
    ELLIPTIC_HORIZON,
};
pub use subsystems::{
    extract_subsystem_g_bounded, reblock_one_primitive, reblock_pinched, GBoundedSubsystem, PinchedSubsystem,
    Reblocked, IDENTITY_RTOL,
};

/// A letter of a graph-directed similarity system on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphLetter {
    pub label: String,
    pub initial: usize,
    pub terminal: usize,
    pub ratio: f64,
    pub offset: f64,
}

/// Letters at one time and the number of vertices they end in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphLayer {
    pub vertices: usize,
    pub letters: Vec<GraphLetter>,
}

/// Graph-directed similarity system with every space equal to `[0, 1]`;
/// layers and incidence matrices repeat periodically.
pub fn build_graph_system(
    name: &str,
    initial_vertices: usize,
    layers: &[GraphLayer],
    incidence: &[Incidence],
    horizon: usize,
) -> Result<SystemSpec> {
    if layers.is_empty() || horizon == 0 {
        return Err(Error::Config(
            "graph system needs at least one layer and a positive horizon".into(),
        ));
    }
    let layer = |n: usize| &layers[(n - 1) % layers.len()];
    let mut counts = vec![initial_vertices];
    counts.extend((1..=horizon).map(|n| layer(n).vertices));
    let alphabets = (1..=horizon)
        .map(|n| {
            layer(n)
                .letters
                .iter()
                .map(|l| Letter::new(l.label.clone(), l.initial, l.terminal))
                .collect()
        })
        .collect();
    let maps = (1..=horizon)
        .map(|n| {
            layer(n)
                .letters
                .iter()
                .map(|l| ConformalMap::similarity(l.ratio, l.offset))
                .collect()
        })
        .collect();
    let inc = (1..horizon)
        .map(|n| {
            if incidence.is_empty() {
                Incidence::Full
            } else {
                incidence[(n - 1) % incidence.len()].clone()
            }
        })
        .collect();
    let schedule = GraphSchedule::new(counts.clone(), alphabets, inc)?;
    let spaces = counts.iter().map(|&c| vec![Space::new(Region::unit()); c]).collect();
    SystemSpec::new(name, schedule, spaces, maps)
}

/// Ready-made systems used by the tools and tests.
pub mod bundled {
    use super::*;

    fn layer(ratios: &[f64], offsets: &[f64]) -> SimilarityLayer {
        SimilarityLayer {
            ratios: ratios.to_vec(),
            offsets: offsets.to_vec(),
        }
    }

    fn letter(label: &str, initial: usize, terminal: usize, ratio: f64, offset: f64) -> GraphLetter {
        GraphLetter {
            label: label.into(),
            initial,
            terminal,
            ratio,
            offset,
        }
    }

    /// Middle-thirds Cantor set.
    pub fn cantor3(horizon: usize) -> Result<SystemSpec> {
        build_similarity_system("cantor3", &[layer(&[1.0 / 3.0; 2], &[0.0, 2.0 / 3.0])], &[], horizon)
    }

    /// Two maps of ratio 1/2 at odd times and 1/4 at even times; dimension 2/3.
    pub fn alternating(horizon: usize) -> Result<SystemSpec> {
        build_similarity_system(
            "alternating",
            &[layer(&[0.5; 2], &[0.0, 0.5]), layer(&[0.25; 2], &[0.0, 0.75])],
            &[],
            horizon,
        )
    }

    /// Two maps of ratio 1/2 covering `[0, 1]`.
    pub fn full_interval(horizon: usize) -> Result<SystemSpec> {
        build_similarity_system("full-interval", &[layer(&[0.5; 2], &[0.0, 0.5])], &[], horizon)
    }

    /// Continued fractions with digits 1 and 2.
    pub fn cf12(horizon: usize) -> Result<SystemSpec> {
        build_cf_system("cf12", &[vec![1.0, 2.0]], &[], horizon)
    }

    pub fn cf_ascending_spec() -> AscendingSpec {
        AscendingSpec {
            name: "cf-ascending".into(),
            region: Region::unit(),
            maps: vec![vec![ConformalMap::cf(1.0), ConformalMap::cf(2.0)]],
            labels: vec!["1".into(), "2".into()],
            alphabets: vec![vec![0], vec![0, 1]],
        }
    }

    /// Digit 1 alone at time 1, digits 1 and 2 afterwards.
    pub fn cf_ascending(horizon: usize) -> Result<SystemSpec> {
        build_ascending(&cf_ascending_spec(), horizon)
    }

    /// `2^n` maps of ratio `4^{-n}` at time `n`; both growth rates give 1/2.
    pub fn ab_half(horizon: usize) -> Result<SystemSpec> {
        build_packing_system("ab-half", 2, 4.0, horizon)
    }

    /// Letters `a: u→v`, `b: v→u`, `c: v→v`; letters three steps apart always
    /// connect, two steps apart not.
    pub fn crafted_p2(horizon: usize) -> Result<SystemSpec> {
        let l = GraphLayer {
            vertices: 2,
            letters: vec![
                letter("a", 0, 1, 0.5, 0.0),
                letter("b", 1, 0, 0.4, 0.0),
                letter("c", 1, 1, 0.4, 0.6),
            ],
        };
        build_graph_system("crafted-p2", 2, &[l], &[], horizon)
    }

    /// Golden-mean shift on two similarities: `b` may not follow `b`.
    pub fn golden_p1(horizon: usize) -> Result<SystemSpec> {
        let l = GraphLayer {
            vertices: 1,
            letters: vec![letter("a", 0, 0, 0.4, 0.0), letter("b", 0, 0, 0.3, 0.7)],
        };
        let m = Incidence::Matrix(vec![vec![true, true], vec![true, false]]);
        build_graph_system("golden-p1", 1, &[l], &[m], horizon)
    }

    /// One vertex at even times and two at odd times.
    pub fn pinched2(horizon: usize) -> Result<SystemSpec> {
        let odd = GraphLayer {
            vertices: 2,
            letters: vec![
                letter("x", 0, 0, 1.0 / 3.0, 0.0),
                letter("y", 0, 1, 1.0 / 3.0, 2.0 / 3.0),
            ],
        };
        let even = GraphLayer {
            vertices: 1,
            letters: vec![letter("u", 0, 0, 0.5, 0.0), letter("w", 1, 0, 0.25, 0.5)],
        };
        build_graph_system("pinched2", 1, &[odd, even], &[], horizon)
    }

    /// Model system for double poles at the lattice scale `(20, 30]`, tuned for `t = 1.2`.
    pub fn elliptic_q2(horizon: usize) -> Result<SystemSpec> {
        let poles = lattice_poles(20.0, 30.0);
        let e = 1.5 * 1.2;
        let mut sum = 0.0;
        let chosen = poles
            .iter()
            .take_while(|&&b| {
                let more = sum < 2.0;
                sum += b.powf(-e);
                more
            })
            .count();
        elliptic_model(2, &poles[..chosen], horizon)
    }
}
