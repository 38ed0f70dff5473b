//! JSON run configuration: a system description plus run parameters.

use std::path::Path;

use bowen::geometry::SampleStrategy;
use bowen::hypotheses::Justification;
use bowen::systems::{self, AscendingSpec, GraphLayer, SimilarityLayer};
use bowen::thermo::{FamilyRule, ProxyKind, Strategy, DEFAULT_BUDGET};
use bowen::{ConformalMap, Incidence, Region, SystemSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_DEPTH: usize = 12;

/// Bundled configurations, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("cantor3", include_str!("../systems/cantor3.json")),
    ("alternating", include_str!("../systems/alternating.json")),
    ("full-interval", include_str!("../systems/full-interval.json")),
    ("cf12", include_str!("../systems/cf12.json")),
    ("cf-ascending", include_str!("../systems/cf-ascending.json")),
    ("ab-half", include_str!("../systems/ab-half.json")),
    ("crafted-p2", include_str!("../systems/crafted-p2.json")),
    ("golden-p1", include_str!("../systems/golden-p1.json")),
    ("pinched2", include_str!("../systems/pinched2.json")),
    ("elliptic-q2", include_str!("../systems/elliptic-q2.json")),
];

/// Incidence between consecutive alphabets; sized against the alphabets when built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IncidenceSpec {
    /// `"full"` or `"identity"`.
    Named(String),
    Matrix(Vec<Vec<u8>>),
    Rule(IncidenceRule),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IncidenceRule {
    /// `A_ij = 1` iff `j ≡ i + shift` modulo the column count.
    CyclicShift { shift: usize },
    /// `A_ij = 1` iff `i ≠ j`.
    NoRepeat,
    /// `A_ij = 1` iff `i = 0` or `j = 0`: letter 0 may follow and precede anything.
    GoldenMean,
}

/// A map of the master family of an ascending system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    Digit { digit: f64 },
    Similarity { ratio: f64, offset: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterLetter {
    pub label: String,
    #[serde(flatten)]
    pub map: MapSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Similarity {
        name: String,
        horizon: usize,
        layers: Vec<SimilarityLayer>,
        #[serde(default)]
        incidence: Vec<IncidenceSpec>,
    },
    GeometricPacking {
        name: String,
        horizon: usize,
        count_base: usize,
        ratio_base: f64,
    },
    ContinuedFraction {
        name: String,
        horizon: usize,
        digits: Vec<Vec<f64>>,
        #[serde(default)]
        incidence: Vec<IncidenceSpec>,
    },
    Ascending {
        name: String,
        horizon: usize,
        letters: Vec<MasterLetter>,
        /// Labels of `I^(n)`; the last entry repeats.
        alphabets: Vec<Vec<String>>,
    },
    Graph {
        name: String,
        horizon: usize,
        initial_vertices: usize,
        layers: Vec<GraphLayer>,
        #[serde(default)]
        incidence: Vec<IncidenceSpec>,
    },
    EllipticModel {
        name: String,
        horizon: usize,
        q: u32,
        r_min: f64,
        r_max: f64,
        #[serde(default = "one")]
        k: f64,
        /// Exponent the pole set is chosen for.
        t: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    Exhaustive,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SubsystemConfig {
    GBounded { ell: usize, t: f64 },
    Pinched { pinch_times: Vec<usize> },
    Reblock,
    Closure { cap: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub t_bracket: Option<(f64, f64)>,
    pub n_max: Option<usize>,
    pub tol: f64,
    pub strategy: Strategy,
    pub proxy: ProxyKind,
    pub budget: u128,
    pub seed: u64,
    /// Sampling depth; defaults to `min(DEFAULT_DEPTH, horizon)`.
    pub depth: Option<usize>,
    pub max_points: usize,
    pub sample: SampleKind,
    pub scale_window: Option<(u32, u32)>,
    pub t_grid: Vec<f64>,
    pub family_rule: FamilyRule,
    /// Justification the run is expected to meet; failure exits with the advisory code.
    pub theorem: Option<String>,
    pub subsystem: Option<SubsystemConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_bracket: None,
            n_max: None,
            tol: 1e-6,
            strategy: Strategy::Auto,
            proxy: ProxyKind::TailSlope,
            budget: DEFAULT_BUDGET,
            seed: 0,
            depth: None,
            max_points: 20_000,
            sample: SampleKind::Random,
            scale_window: None,
            t_grid: Vec::new(),
            family_rule: FamilyRule::Finite,
            theorem: None,
            subsystem: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub system: SystemConfig,
    #[serde(default)]
    pub run: RunConfig,
}

/// A loaded configuration with its built system.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub file: ConfigFile,
    pub system: SystemSpec,
}

impl Loaded {
    pub fn n_max(&self) -> usize {
        self.file
            .run
            .n_max
            .unwrap_or(self.system.horizon())
            .min(self.system.horizon())
    }

    pub fn t_bracket(&self) -> (f64, f64) {
        self.file.run.t_bracket.unwrap_or((0.0, self.system.dim() as f64))
    }

    pub fn depth(&self) -> usize {
        self.file.run.depth.unwrap_or(DEFAULT_DEPTH.min(self.system.horizon()))
    }

    pub fn sample_strategy(&self) -> SampleStrategy {
        match self.file.run.sample {
            SampleKind::Exhaustive => SampleStrategy::Exhaustive,
            SampleKind::Random => SampleStrategy::RandomAdmissible {
                seed: self.file.run.seed,
            },
        }
    }

    pub fn theorem(&self) -> Option<Justification> {
        self.file.run.theorem.as_deref().and_then(Justification::from_name)
    }
}

/// Parses configuration text, reporting the failing field path.
pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Parse(format!("{path}: {inner}"))
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Parse(format!(
            "schema_version: expected {SCHEMA_VERSION}, found {}",
            file.schema_version
        )));
    }
    Ok(file)
}

pub fn bundled_text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads a bundled name or a path to a JSON file.
pub fn load_config(source: &str) -> Result<Loaded, CliError> {
    let text = match bundled_text(source) {
        Some(t) => t.to_string(),
        None => {
            let path = Path::new(source);
            if !path.exists() {
                let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
                return Err(CliError::Parse(format!(
                    "`{source}` is neither a bundled system ({}) nor a readable file",
                    names.join(", ")
                )));
            }
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{source}: {e}")))?
        }
    };
    let file = parse_config(&text)?;
    let system = build_system(&file.system)?;
    validate_run(&file.run, system.horizon())?;
    Ok(Loaded { file, system })
}

/// Checks run fields against each other and the system horizon.
pub fn validate_run(run: &RunConfig, horizon: usize) -> Result<(), CliError> {
    if !(run.tol > 0.0) {
        return Err(CliError::Semantic(format!(
            "run.tol: must be positive, got {}",
            run.tol
        )));
    }
    if let Some((a, b)) = run.t_bracket {
        if !(a < b) {
            return Err(CliError::Semantic(format!("run.t_bracket: [{a}, {b}] is empty")));
        }
    }
    if let Some(name) = &run.theorem {
        if Justification::from_name(name).is_none() {
            return Err(CliError::Parse(format!("run.theorem: unknown justification `{name}`")));
        }
    }
    if run.max_points == 0 {
        return Err(CliError::Semantic("run.max_points: must be positive".into()));
    }
    if let Some(d) = run.depth {
        if d == 0 || d > horizon {
            return Err(CliError::Semantic(format!("run.depth: {d} must lie in 1..={horizon}")));
        }
    }
    if let Some(n) = run.n_max {
        if n == 0 || n > horizon {
            return Err(CliError::Semantic(format!("run.n_max: {n} must lie in 1..={horizon}")));
        }
    }
    if let Some((k0, k1)) = run.scale_window {
        if k0 >= k1 {
            return Err(CliError::Semantic(format!("run.scale_window: ({k0}, {k1}) is empty")));
        }
    }
    Ok(())
}

fn expand_incidence(spec: &IncidenceSpec, rows: usize, cols: usize, time: usize) -> Result<Incidence, CliError> {
    let bad = |m: String| CliError::Semantic(format!("incidence at time {time}: {m}"));
    Ok(match spec {
        IncidenceSpec::Named(s) if s == "full" => Incidence::Full,
        IncidenceSpec::Named(s) if s == "identity" => {
            if rows != cols {
                return Err(bad(format!("identity needs square alphabets, got {rows}×{cols}")));
            }
            Incidence::Matrix((0..rows).map(|i| (0..cols).map(|j| i == j).collect()).collect())
        }
        IncidenceSpec::Named(s) => return Err(CliError::Parse(format!("incidence: unknown name `{s}`"))),
        IncidenceSpec::Matrix(m) => {
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(bad(format!("matrix must be {rows}×{cols}")));
            }
            if m.iter().flatten().any(|&x| x > 1) {
                return Err(bad("matrix entries must be 0 or 1".into()));
            }
            Incidence::Matrix(m.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect())
        }
        IncidenceSpec::Rule(rule) => Incidence::Matrix(
            (0..rows)
                .map(|i| {
                    (0..cols)
                        .map(|j| match rule {
                            IncidenceRule::CyclicShift { shift } => j == (i + shift) % cols,
                            IncidenceRule::NoRepeat => i != j,
                            IncidenceRule::GoldenMean => i == 0 || j == 0,
                        })
                        .collect()
                })
                .collect(),
        ),
    })
}

/// Expands periodic incidence specs against alphabet sizes `sizes[n-1] = #I^(n)`.
fn incidence_list(specs: &[IncidenceSpec], sizes: &[usize]) -> Result<Vec<Incidence>, CliError> {
    if specs.is_empty() {
        return Ok(Vec::new());
    }
    (1..sizes.len())
        .map(|n| expand_incidence(&specs[(n - 1) % specs.len()], sizes[n - 1], sizes[n], n))
        .collect()
}

pub fn build_system(cfg: &SystemConfig) -> Result<SystemSpec, CliError> {
    match cfg {
        SystemConfig::Similarity {
            name,
            horizon,
            layers,
            incidence,
        } => {
            if layers.is_empty() {
                return Err(CliError::Semantic("system.layers: at least one layer required".into()));
            }
            let sizes: Vec<usize> = (0..*horizon).map(|n| layers[n % layers.len()].ratios.len()).collect();
            let inc = incidence_list(incidence, &sizes)?;
            Ok(systems::build_similarity_system(name, layers, &inc, *horizon)?)
        }
        SystemConfig::GeometricPacking {
            name,
            horizon,
            count_base,
            ratio_base,
        } => Ok(systems::build_packing_system(name, *count_base, *ratio_base, *horizon)?),
        SystemConfig::ContinuedFraction {
            name,
            horizon,
            digits,
            incidence,
        } => {
            if digits.is_empty() {
                return Err(CliError::Semantic(
                    "system.digits: at least one digit set required".into(),
                ));
            }
            let sizes: Vec<usize> = (0..*horizon).map(|n| digits[n % digits.len()].len()).collect();
            let inc = incidence_list(incidence, &sizes)?;
            Ok(systems::build_cf_system(name, digits, &inc, *horizon)?)
        }
        SystemConfig::Ascending { horizon, .. } => {
            let spec = ascending_spec(cfg)?.expect("ascending builder");
            Ok(systems::build_ascending(&spec, *horizon)?)
        }
        SystemConfig::Graph {
            name,
            horizon,
            initial_vertices,
            layers,
            incidence,
        } => {
            if layers.is_empty() {
                return Err(CliError::Semantic("system.layers: at least one layer required".into()));
            }
            let sizes: Vec<usize> = (0..*horizon).map(|n| layers[n % layers.len()].letters.len()).collect();
            let inc = incidence_list(incidence, &sizes)?;
            Ok(systems::build_graph_system(
                name,
                *initial_vertices,
                layers,
                &inc,
                *horizon,
            )?)
        }
        SystemConfig::EllipticModel {
            name,
            horizon,
            q,
            r_min,
            r_max,
            k,
            t,
        } => {
            let report = systems::elliptic_lower_bound(*q, *r_min, *r_max, *k, &[*t])?;
            match &report.rows[0] {
                systems::EllipticRow::Found { poles, .. } => {
                    let all = systems::lattice_poles(*r_min, *r_max);
                    let s = systems::elliptic_model(*q, &all[..*poles], *horizon)?;
                    Ok(s.with_note(format!("{name}: {poles} poles chosen for t = {t}")))
                }
                other => Err(CliError::Semantic(format!(
                    "system: no model pole set for t = {t}: {other:?}"
                ))),
            }
        }
    }
}

/// The master family and inclusion schedule of an ascending configuration.
pub fn ascending_spec(cfg: &SystemConfig) -> Result<Option<AscendingSpec>, CliError> {
    let SystemConfig::Ascending {
        name,
        letters,
        alphabets,
        ..
    } = cfg
    else {
        return Ok(None);
    };
    let digits = letters.iter().all(|l| matches!(l.map, MapSpec::Digit { .. }));
    let sims = letters.iter().all(|l| matches!(l.map, MapSpec::Similarity { .. }));
    if !(digits || sims) {
        return Err(CliError::Semantic(
            "system.letters: mix of digit and similarity maps".into(),
        ));
    }
    let maps = letters
        .iter()
        .map(|l| match l.map {
            MapSpec::Digit { digit } => ConformalMap::cf(digit),
            MapSpec::Similarity { ratio, offset } => ConformalMap::similarity(ratio, offset),
        })
        .collect();
    let index = |label: &String| {
        letters
            .iter()
            .position(|l| &l.label == label)
            .ok_or_else(|| CliError::Semantic(format!("system.alphabets: unknown letter `{label}`")))
    };
    let alphabets = alphabets
        .iter()
        .map(|a| a.iter().map(index).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(AscendingSpec {
        name: name.clone(),
        region: Region::unit(),
        maps: vec![maps],
        labels: letters.iter().map(|l| l.label.clone()).collect(),
        alphabets,
    }))
}
