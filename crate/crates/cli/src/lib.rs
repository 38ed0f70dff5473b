//! Command layer of the `bowen` tool: loads a configuration, runs the requested
//! computations and writes `summary.json`, `pressure.csv`, `points.csv` and
//! `pressure.svg` into an output directory.

pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use bowen::geometry::{box_counting_dim, sample_limit_set, PointCloud};
use bowen::hypotheses::{check_hypotheses, HypothesisReport, Justification, PRIMITIVITY_P_MAX};
use bowen::systems::{self, EllipticReport};
use bowen::thermo::{
    bowen_dimension_with, certify_primitivity, hausdorff_measure_trend, partition, pressure_estimate, theta_bounds,
    theta_chain_holds, DimensionResult, NormMemo, PressureEstimate, PressureOptions, Strategy,
};
use bowen::{FamilyKind, SystemSpec};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub use config::{load_config, Loaded, RunConfig, SubsystemConfig, SystemConfig};
pub use error::CliError;

/// Scale window used for box counting when the configuration names none.
pub const DEFAULT_SCALE_WINDOW: (u32, u32) = (3, 10);
/// Grid points across the `t` bracket when no grid is configured.
pub const DEFAULT_T_POINTS: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Pressure,
    Dimension,
    Sample,
    Boxdim,
    Subsystem,
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Pressure => "pressure",
            Command::Dimension => "dimension",
            Command::Sample => "sample",
            Command::Boxdim => "boxdim",
            Command::Subsystem => "subsystem",
            Command::Report => "report",
        }
    }
}

/// What a finished command produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: Value,
    /// File names written into the output directory.
    pub files: Vec<String>,
    /// A requested justification failed; results are still written.
    pub advisory: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.advisory {
            4
        } else {
            0
        }
    }
}

struct Session<'a> {
    loaded: &'a Loaded,
    out: PathBuf,
    summary: Map<String, Value>,
    files: Vec<String>,
    hypotheses: Option<HypothesisReport>,
    dimension: Option<DimensionResult>,
    advisory: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl<'a> Session<'a> {
    fn new(loaded: &'a Loaded, out: &Path, command: Command) -> Self {
        let system = &loaded.system;
        let mut summary = Map::new();
        summary.insert("schema_version".into(), json!(config::SCHEMA_VERSION));
        summary.insert("command".into(), json!(command.name()));
        summary.insert("seed".into(), json!(loaded.file.run.seed));
        summary.insert(
            "system".into(),
            json!({
                "name": system.name(),
                "horizon": system.horizon(),
                "dim": system.dim(),
                "kind": to_value(&system.kind()),
                "stationary": system.is_stationary(),
                "note": system.note(),
            }),
        );
        summary.insert("run".into(), to_value(&loaded.file.run));
        Self {
            loaded,
            out: out.to_path_buf(),
            summary,
            files: Vec::new(),
            hypotheses: None,
            dimension: None,
            advisory: false,
        }
    }

    fn system(&self) -> &SystemSpec {
        &self.loaded.system
    }

    fn run(&self) -> &RunConfig {
        &self.loaded.file.run
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::write(self.out.join(name), text).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn pressure_options<'m>(&self, memo: &'m NormMemo) -> PressureOptions<'m> {
        PressureOptions {
            strategy: self.run().strategy,
            proxy: self.run().proxy,
            budget: self.run().budget,
            memo: (self.system().kind() == FamilyKind::Mixed).then_some(memo),
        }
    }

    fn hypotheses(&mut self) -> Result<&HypothesisReport, CliError> {
        if self.hypotheses.is_none() {
            let n = self.loaded.n_max();
            let report = check_hypotheses(self.system(), n)?;
            let mut v = to_value(&report);
            let cited = json!({ "name": report.justification.name(), "statement": report.justification.statement() });
            v["cited"] = cited;
            if let Some(want) = self.loaded.theorem() {
                let holds = report.supports(want);
                let failures = report
                    .checks
                    .iter()
                    .find(|c| c.justification == want)
                    .map(|c| c.failures.clone())
                    .unwrap_or_default();
                v["requested"] = json!({ "name": want.name(), "holds": holds, "failures": failures });
                if !holds {
                    self.advisory = true;
                    self.summary.insert(
                        "advisory".into(),
                        json!(format!("requested `{}` does not hold", want.name())),
                    );
                }
            }
            self.summary.insert("hypotheses".into(), v);
            self.hypotheses = Some(report);
        }
        Ok(self.hypotheses.as_ref().expect("just computed"))
    }

    fn dimension(&mut self) -> Result<(), CliError> {
        let memo = NormMemo::new();
        let opts = self.pressure_options(&memo);
        let res = bowen_dimension_with(
            self.system(),
            self.loaded.t_bracket(),
            self.loaded.n_max(),
            self.run().tol,
            &opts,
        )?;
        let report = self.hypotheses()?.clone();
        let j = report.justification;
        let claim = match j {
            Justification::UpperBoundOnly => format!("upper bound only: HD ≤ {}", res.hi),
            Justification::GrowthRateRatio => match report.rate_ratio() {
                Some(p) => format!("HD = {p} ({}); Bowen bracket [{}, {}]", j.statement(), res.lo, res.hi),
                None => format!("HD ∈ [{}, {}] ({})", res.lo, res.hi, j.statement()),
            },
            _ => format!("HD ∈ [{}, {}] ({})", res.lo, res.hi, j.statement()),
        };
        let mut v = to_value(&res);
        v["justification"] = json!(j.name());
        v["claim"] = json!(claim);
        v["rate_ratio"] = json!(report.rate_ratio());
        self.summary.insert("dimension".into(), v);
        self.dimension = Some(res);
        Ok(())
    }

    fn theta(&mut self) -> Result<(), CliError> {
        let theta = theta_bounds(&self.run().family_rule, self.run().tol)?;
        let mut v = to_value(&theta);
        if let Some(d) = &self.dimension {
            v["chain_holds"] = json!(theta_chain_holds(&theta, d.hi, self.system().dim()));
        }
        self.summary.insert("theta".into(), v);
        Ok(())
    }

    fn measure_trend(&mut self) -> Result<(), CliError> {
        let n = self.loaded.n_max();
        let Some(d) = &self.dimension else { return Ok(()) };
        if n < 2 {
            return Ok(());
        }
        let trend = hausdorff_measure_trend(self.system(), d.midpoint(), (1, n))?;
        self.summary.insert("measure_trend".into(), to_value(&trend));
        Ok(())
    }

    fn t_grid(&self) -> Vec<f64> {
        if !self.run().t_grid.is_empty() {
            return self.run().t_grid.clone();
        }
        let (a, b) = self.loaded.t_bracket();
        let k = DEFAULT_T_POINTS - 1;
        (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect()
    }

    fn pressure(&mut self) -> Result<(), CliError> {
        let memo = NormMemo::new();
        let opts = self.pressure_options(&memo);
        let n = self.loaded.n_max();
        let mut estimates: Vec<PressureEstimate> = Vec::new();
        let mut failure = None;
        for t in self.t_grid() {
            match pressure_estimate(self.system(), t, (1, n), &opts) {
                Ok(e) => estimates.push(e),
                Err(e) => {
                    failure = Some(CliError::from(e));
                    break;
                }
            }
        }
        let csv = output::pressure_csv(&estimates);
        self.write("pressure.csv", &csv)?;
        let svg = output::pressure_svg(&csv, &format!("{}: s_n(t) at n = {n}", self.system().name()));
        self.write("pressure.svg", &svg)?;
        let rows: Vec<Value> = estimates
            .iter()
            .map(|e| {
                json!({
                    "t": e.t, "proxy": [e.proxy.0, e.proxy.1], "lower": e.lower, "upper": e.upper,
                    "period": e.period, "oscillating": e.oscillating, "strategy": to_value(&e.strategy),
                })
            })
            .collect();
        let crossing = output::zero_crossing(&output::curve_from_csv(&csv));
        self.summary.insert(
            "pressure".into(),
            json!({ "n_max": n, "grid": rows, "zero_crossing": crossing }),
        );
        failure.map_or(Ok(()), Err)
    }

    fn sample(&mut self) -> Result<PointCloud, CliError> {
        let depth = self.loaded.depth();
        let cloud = sample_limit_set(
            self.system(),
            depth,
            self.run().max_points,
            self.loaded.sample_strategy(),
        )?;
        let csv = output::points_csv(&cloud, self.system());
        self.write("points.csv", &csv)?;
        self.summary.insert(
            "sample".into(),
            json!({ "points": cloud.points.len(), "depth": depth, "strategy": to_value(&self.loaded.sample_strategy()) }),
        );
        Ok(cloud)
    }

    fn boxdim(&mut self) -> Result<(), CliError> {
        let cloud = self.sample()?;
        let window = self.run().scale_window.unwrap_or(DEFAULT_SCALE_WINDOW);
        let fit = box_counting_dim(&cloud, window)?;
        let mut v = to_value(&fit);
        v["scale_window"] = json!([window.0, window.1]);
        if let Some(d) = &self.dimension {
            v["bowen_midpoint"] = json!(d.midpoint());
            v["difference"] = json!(fit.slope - d.midpoint());
        }
        self.summary.insert("boxdim".into(), v);
        Ok(())
    }

    fn subsystem(&mut self) -> Result<(), CliError> {
        let Some(sub) = self.run().subsystem.clone() else {
            return Err(CliError::Semantic("run.subsystem: no subsystem configured".into()));
        };
        let system = self.system();
        let v = match sub {
            SubsystemConfig::GBounded { ell, t } => {
                let cert = certify_primitivity(system, PRIMITIVITY_P_MAX)?
                    .ok_or_else(|| CliError::Semantic("subsystem: no primitivity certificate".into()))?;
                let s = systems::extract_subsystem_g_bounded(system, &cert, ell, t)?;
                let block = ell + cert.p;
                let mut rows = Vec::new();
                for m in 1..=s.system.horizon() {
                    let zs = partition(&s.system, 1, m, t, Strategy::Auto)?.hi;
                    let zf = partition(system, 1, m * block, t, Strategy::Auto)?.hi;
                    rows.push(json!({ "m": m, "z_sub": zs, "z_full": zf }));
                }
                let mut v = to_value(&s);
                v["kind"] = json!("g-bounded");
                v["comparison"] = json!(rows);
                v["bowen"] = self.sub_dimension(&s.system);
                v
            }
            SubsystemConfig::Pinched { pinch_times } => {
                let s = systems::reblock_pinched(system, &pinch_times)?;
                let mut v = to_value(&s);
                v["kind"] = json!("pinched");
                v["bowen"] = self.sub_dimension(&s.system);
                v
            }
            SubsystemConfig::Reblock => {
                let cert = certify_primitivity(system, PRIMITIVITY_P_MAX)?
                    .ok_or_else(|| CliError::Semantic("subsystem: no primitivity certificate".into()))?;
                let r = systems::reblock_one_primitive(system, &cert)?;
                json!({
                    "kind": "reblock",
                    "p": cert.p,
                    "block": r.block,
                    "dropped_times": r.dropped_times,
                    "horizon": r.system.horizon(),
                    "bowen": self.sub_dimension(&r.system),
                })
            }
            SubsystemConfig::Closure { cap } => {
                let spec = config::ascending_spec(&self.loaded.file.system)?
                    .ok_or_else(|| CliError::Semantic("subsystem: closure needs an ascending system".into()))?;
                let c = systems::autonomous_closure(&spec, system.horizon(), cap, system.horizon())?;
                let mut v = to_value(&c);
                v["kind"] = json!("closure");
                v["bowen"] = self.sub_dimension(&c.system);
                v
            }
        };
        self.summary.insert("subsystem".into(), v);
        Ok(())
    }

    /// Bowen bracket of a derived system, or the reason it is unavailable.
    fn sub_dimension(&self, s: &SystemSpec) -> Value {
        let n = s.horizon().min(self.loaded.n_max());
        let memo = NormMemo::new();
        let opts = self.pressure_options(&memo);
        let bracket = self.loaded.t_bracket();
        match bowen_dimension_with(s, bracket, n, self.run().tol, &opts) {
            Ok(d) => json!({ "lo": d.lo, "hi": d.hi, "horizon": n }),
            Err(e) => json!({ "error": e.to_string() }),
        }
    }

    fn elliptic(&mut self) -> Result<(), CliError> {
        let SystemConfig::EllipticModel {
            q, r_min, r_max, k, t, ..
        } = &self.loaded.file.system
        else {
            return Ok(());
        };
        let grid = if self.run().t_grid.is_empty() {
            vec![*t]
        } else {
            self.run().t_grid.clone()
        };
        let report: EllipticReport = systems::elliptic_lower_bound(*q, *r_min, *r_max, *k, &grid)?;
        let mut v = to_value(&report);
        v["lower_bound"] = json!(report.threshold);
        v["lattice_poles"] = json!(systems::lattice_poles(*r_min, *r_max).len());
        self.summary.insert("elliptic".into(), v);
        Ok(())
    }

    fn finish(mut self, partial: bool) -> Result<Outcome, CliError> {
        self.summary.insert("partial".into(), json!(partial));
        let mut files = self.files.clone();
        files.push("summary.json".into());
        self.summary.insert("files".into(), json!(files));
        let summary = Value::Object(std::mem::take(&mut self.summary));
        let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        self.write("summary.json", &text)?;
        Ok(Outcome {
            summary,
            files,
            advisory: self.advisory,
        })
    }
}

/// Runs `command` on a loaded configuration, writing into `out`.
///
/// A budget overrun still writes every completed output, with `partial: true`
/// in the summary, before returning the error.
pub fn execute(command: Command, loaded: &Loaded, out: &Path) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut s = Session::new(loaded, out, command);
    let res = match command {
        Command::Check => s.hypotheses().map(|_| ()),
        Command::Pressure => s.pressure(),
        Command::Dimension => s.dimension().and_then(|_| s.theta()),
        Command::Sample => s.sample().map(|_| ()),
        Command::Boxdim => s.boxdim(),
        Command::Subsystem => s.subsystem(),
        Command::Report => report(&mut s),
    };
    match res {
        Ok(()) => s.finish(false),
        Err(CliError::Budget(m)) => {
            s.summary.insert("error".into(), json!(format!("budget exceeded: {m}")));
            s.finish(true)?;
            Err(CliError::Budget(m))
        }
        Err(e) => Err(e),
    }
}

fn report(s: &mut Session) -> Result<(), CliError> {
    s.hypotheses()?;
    s.dimension()?;
    s.theta()?;
    s.measure_trend()?;
    s.pressure()?;
    s.boxdim()?;
    if s.run().subsystem.is_some() {
        s.subsystem()?;
    }
    s.elliptic()
}

/// Command-line overrides of run fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n_max: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub strategy: Option<String>,
    pub proxy: Option<String>,
    pub budget: Option<u128>,
    pub depth: Option<usize>,
    pub max_points: Option<usize>,
    pub sample: Option<String>,
    pub t_bracket: Option<(f64, f64)>,
    pub t_grid: Option<Vec<f64>>,
    pub scale_window: Option<(u32, u32)>,
    pub theorem: Option<String>,
}

fn named<T: serde::de::DeserializeOwned>(field: &str, s: &str) -> Result<T, CliError> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| CliError::Parse(format!("--{field}: unknown value `{s}`")))
}

/// Applies overrides and re-validates the run section.
pub fn apply_overrides(loaded: &mut Loaded, o: &Overrides) -> Result<(), CliError> {
    let run = &mut loaded.file.run;
    if let Some(v) = o.n_max {
        run.n_max = Some(v);
    }
    if let Some(v) = o.tol {
        run.tol = v;
    }
    if let Some(v) = o.seed {
        run.seed = v;
    }
    if let Some(v) = &o.strategy {
        run.strategy = named("strategy", v)?;
    }
    if let Some(v) = &o.proxy {
        run.proxy = named("proxy", v)?;
    }
    if let Some(v) = o.budget {
        run.budget = v;
    }
    if let Some(v) = o.depth {
        run.depth = Some(v);
    }
    if let Some(v) = o.max_points {
        run.max_points = v;
    }
    if let Some(v) = &o.sample {
        run.sample = named("sample", v)?;
    }
    if let Some(v) = o.t_bracket {
        run.t_bracket = Some(v);
    }
    if let Some(v) = &o.t_grid {
        run.t_grid = v.clone();
    }
    if let Some(v) = o.scale_window {
        run.scale_window = Some(v);
    }
    if let Some(v) = &o.theorem {
        run.theorem = Some(v.clone());
    }
    config::validate_run(run, loaded.system.horizon())
}
