//! Experiment files, seed and parameter sweeps, per-run records and
//! aggregate tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::boundary_proportion;
use crate::array::Geometry;
use crate::baselines::{content_hash, run_scheme, scenario_hash, Scheme};
use crate::error::{Error, Result};
use crate::metrics::{compose, sensing_gain_on};
use crate::model::{
    Direction, OptimizerParams, Scenario, ScenarioFile, SystemConfig, SystemConfigFile, TraceRecord,
    TriHybridBeamformer,
};
use crate::scenario::{random_scenario, ScenarioTemplate};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Elements,
    RateThreshold,
    SnrDb,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::Elements => "elements",
            SweepVariable::RateThreshold => "rate_threshold",
            SweepVariable::SnrDb => "snr_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// Where scenarios come from: `"random"` (drawn per seed from the
/// template) or an explicit scenario document.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ScenarioSource {
    #[default]
    Random,
    Explicit(ScenarioFile),
}

impl Serialize for ScenarioSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ScenarioSource::Random => s.serialize_str("random"),
            ScenarioSource::Explicit(f) => f.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ScenarioSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) if s == "random" => Ok(ScenarioSource::Random),
            serde_json::Value::String(s) => Err(D::Error::custom(format!(
                "scenario must be \"random\" or an object, got \"{s}\""
            ))),
            other => serde_json::from_value(other)
                .map(ScenarioSource::Explicit)
                .map_err(D::Error::custom),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("isac-out")
}

fn default_resolution() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub system: SystemConfigFile,
    #[serde(default)]
    pub scenario: ScenarioSource,
    #[serde(default)]
    pub template: ScenarioTemplate,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub optimizer: OptimizerParams,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_resolution")]
    pub grid_resolution_deg: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::ValidationError("scheme list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::ValidationError("seed list is empty".into()));
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(Error::ValidationError(format!("sweep over {} has no values", sw.variable.name())));
            }
            if sw.values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::ValidationError(format!(
                    "sweep over {} must be strictly increasing: {:?}",
                    sw.variable.name(),
                    sw.values
                )));
            }
            if sw.variable == SweepVariable::Elements && sw.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(Error::ValidationError("element counts must be positive integers".into()));
            }
        }
        check_resolution(self.grid_resolution_deg)?;
        self.optimizer.validate()?;
        for scheme in &self.schemes {
            scheme.validate()?;
        }
        for v in self.sweep_points() {
            let cfg = self.config_at(v)?;
            if let ScenarioSource::Random = self.scenario {
                if self.template.num_targets() != cfg.num_sense_dirs {
                    return Err(Error::ValidationError(format!(
                        "template has {} targets but the system expects {} sensing directions",
                        self.template.num_targets(),
                        cfg.num_sense_dirs
                    )));
                }
            }
        }
        Ok(())
    }

    /// `[None]` without a sweep, otherwise each swept value.
    pub fn sweep_points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            None => vec![None],
            Some(sw) => sw.values.iter().map(|v| Some(*v)).collect(),
        }
    }

    pub fn system_at(&self, value: Option<f64>) -> SystemConfigFile {
        let mut sys = self.system.clone();
        if let (Some(sw), Some(v)) = (&self.sweep, value) {
            match sw.variable {
                SweepVariable::Elements => sys.elements_per_rhs = v as usize,
                SweepVariable::RateThreshold => sys.rate_threshold = v,
                SweepVariable::SnrDb => sys.snr_db = v,
            }
        }
        sys
    }

    pub fn config_at(&self, value: Option<f64>) -> Result<SystemConfig> {
        self.system_at(value).to_config()
    }

    pub fn scenario_at(&self, cfg: &SystemConfig, seed: u64) -> Result<Scenario> {
        match &self.scenario {
            ScenarioSource::Random => Ok(random_scenario(cfg, &self.template, seed)),
            ScenarioSource::Explicit(f) => {
                let mut scn = f.to_scenario(cfg)?;
                scn.seed = seed;
                Ok(scn)
            }
        }
    }
}

fn check_resolution(res: f64) -> Result<()> {
    let divides = |span: f64| {
        let n = span / res;
        (n - n.round()).abs() < 1e-9
    };
    if !(res > 0.0) || !divides(90.0) || !divides(360.0) {
        return Err(Error::ValidationError(format!(
            "grid resolution {res} deg must divide 90 and 360"
        )));
    }
    Ok(())
}

/// Parses and validates an experiment document.
pub fn parse_experiment(text: &str) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if let Some(rest) = msg.strip_prefix("unknown field `") {
            let key = rest.split('`').next().unwrap_or_default();
            Error::ValidationError(format!("unknown key \"{key}\" at line {} column {}", e.line(), e.column()))
        } else {
            Error::ParseError {
                line: e.line(),
                column: e.column(),
                message: msg,
            }
        }
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_experiment(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub gain: f64,
    pub gain_db: f64,
}

/// Sensing gain of `w_sense` on the full elevation × azimuth grid,
/// elevation-major: θ ∈ [0, 90] inclusive and φ ∈ [0, 360).
pub fn beam_pattern_grid_on(bf: &TriHybridBeamformer, geometry: &Geometry, resolution: f64) -> Result<Vec<PatternRow>> {
    check_resolution(resolution)?;
    let eb = compose(bf);
    let n_el = (90.0 / resolution).round() as usize + 1;
    let n_az = (360.0 / resolution).round() as usize;
    let mut rows = Vec::with_capacity(n_el * n_az);
    for t in 0..n_el {
        for p in 0..n_az {
            let (el, az) = (t as f64 * resolution, p as f64 * resolution);
            let gain = sensing_gain_on(&eb, &geometry.steering(&Direction::from_degrees(el, az)));
            rows.push(PatternRow {
                elevation_deg: el,
                azimuth_deg: az,
                gain,
                gain_db: 10.0 * gain.log10(),
            });
        }
    }
    Ok(rows)
}

pub fn beam_pattern_grid(bf: &TriHybridBeamformer, cfg: &SystemConfig, resolution: f64) -> Result<Vec<PatternRow>> {
    beam_pattern_grid_on(bf, &Geometry::tri_hybrid(cfg), resolution)
}

pub fn pattern_csv(rows: &[PatternRow], header: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("elevation_deg,azimuth_deg,gain_linear,gain_db\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:e},{}", r.elevation_deg, r.azimuth_deg, r.gain, r.gain_db);
    }
    out
}

/// Everything written for one (scheme, seed, sweep value) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub scheme: Scheme,
    pub seed: u64,
    pub sweep_variable: Option<SweepVariable>,
    pub sweep_value: Option<f64>,
    pub config_hash: String,
    pub scenario_hash: String,
    pub system: SystemConfigFile,
    pub desired_gains: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub line_search_failures: usize,
    pub sensing_error: f64,
    pub min_rate: f64,
    pub gains: Vec<f64>,
    pub rates: Vec<f64>,
    pub boundary_proportion: f64,
    pub mu_trajectory: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub beamformer: Option<TriHybridBeamformer>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn file_name(&self) -> String {
        let sweep = match (self.sweep_variable, self.sweep_value) {
            (Some(var), Some(v)) => format!("{}-{v}", var.name()),
            _ => "base".into(),
        };
        format!("{}__{sweep}__seed{}.json", self.scheme, self.seed)
    }

    /// Geometry the beamformer was optimized on.
    pub fn geometry(&self) -> Result<Geometry> {
        let cfg = self.system.to_config()?;
        match self.scheme {
            Scheme::PaHybrid { rows, cols } => Geometry::phased_array(rows, cols, cfg.num_users, cfg.wavelength()),
            _ => Ok(Geometry::tri_hybrid(&cfg)),
        }
    }
}

pub fn config_hash(system: &SystemConfigFile, params: &OptimizerParams) -> String {
    content_hash(&(system, params))
}

/// Runs one cell. Optimizer errors are recorded in the returned record.
pub fn run_cell(spec: &ExperimentSpec, scheme: Scheme, seed: u64, value: Option<f64>) -> Result<RunRecord> {
    let system = spec.system_at(value);
    let cfg = system.to_config()?;
    let scn = spec.scenario_at(&cfg, seed)?;
    let mut record = RunRecord {
        version: VERSION.into(),
        scheme,
        seed,
        sweep_variable: spec.sweep.as_ref().map(|s| s.variable),
        sweep_value: value,
        config_hash: config_hash(&system, &spec.optimizer),
        scenario_hash: scenario_hash(&scn),
        system,
        desired_gains: scn.desired_gains.clone(),
        converged: false,
        iterations: 0,
        line_search_failures: 0,
        sensing_error: f64::NAN,
        min_rate: f64::NAN,
        gains: vec![],
        rates: vec![],
        boundary_proportion: f64::NAN,
        mu_trajectory: vec![],
        trace: vec![],
        beamformer: None,
        error: None,
    };
    match run_scheme(scheme, &cfg, &scn, &spec.optimizer) {
        Ok(run) => {
            let eval = run.problem.evaluate(&run.result.beamformer);
            record.converged = run.result.converged;
            record.iterations = run.result.iterations;
            record.line_search_failures = run.result.line_search_failures;
            record.sensing_error = eval.sensing_error();
            record.min_rate = eval.min_rate();
            record.boundary_proportion = boundary_proportion(&run.result.beamformer.rhs_amplitudes.data, 0.1)?;
            record.gains = eval.gains;
            record.rates = eval.rates;
            record.mu_trajectory = run.mu_trajectory();
            record.trace = run.result.trace;
            record.beamformer = Some(run.result.beamformer);
        }
        Err(e) => {
            log::warn!("{scheme} seed {seed}: {e}");
            record.error = Some(e.to_string());
        }
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scheme: Scheme,
    pub sweep_value: Option<f64>,
    pub runs: usize,
    pub converged: usize,
    pub not_converged: usize,
    pub failed: usize,
    pub mean_sensing_error: f64,
    pub std_sensing_error: f64,
    pub mean_min_rate: f64,
    pub std_min_rate: f64,
    /// Hash over the scenario hashes of the cell's seeds.
    pub scenario_set_hash: String,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Statistics over converged runs only, in the order the records are
/// given.
pub fn aggregate(spec: &ExperimentSpec, records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for value in spec.sweep_points() {
        for &scheme in &spec.schemes {
            let cell: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.scheme == scheme && r.sweep_value == value)
                .collect();
            let ok: Vec<&&RunRecord> = cell.iter().filter(|r| r.converged).collect();
            let failed = cell.iter().filter(|r| r.error.is_some()).count();
            let (me, se) = mean_std(&ok.iter().map(|r| r.sensing_error).collect::<Vec<_>>());
            let (mr, sr) = mean_std(&ok.iter().map(|r| r.min_rate).collect::<Vec<_>>());
            let hashes: Vec<&str> = cell.iter().map(|r| r.scenario_hash.as_str()).collect();
            rows.push(AggregateRow {
                scheme,
                sweep_value: value,
                runs: cell.len(),
                converged: ok.len(),
                not_converged: cell.len() - ok.len() - failed,
                failed,
                mean_sensing_error: me,
                std_sensing_error: se,
                mean_min_rate: mr,
                std_min_rate: sr,
                scenario_set_hash: content_hash(&hashes),
            });
        }
    }
    rows
}

pub fn aggregate_csv(spec: &ExperimentSpec, rows: &[AggregateRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# artifact_version: {VERSION}");
    let _ = writeln!(out, "# config_hash: {}", config_hash(&spec.system, &spec.optimizer));
    let _ = writeln!(out, "# seeds: {:?}", spec.seeds);
    let _ = writeln!(
        out,
        "# desired gains: detection targets kappa={} of M*P_max*sum(w_l^2)/P, suppression targets 0",
        spec.template.kappa
    );
    let var = spec.sweep.as_ref().map_or("none", |s| s.variable.name());
    out.push_str("scheme,sweep_variable,sweep_value,runs,converged,not_converged,failed,mean_sensing_error,std_sensing_error,mean_min_rate,std_min_rate,scenario_set_hash\n");
    for r in rows {
        let value = r.sweep_value.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{var},{value},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.runs,
            r.converged,
            r.not_converged,
            r.failed,
            r.mean_sensing_error,
            r.std_sensing_error,
            r.mean_min_rate,
            r.std_min_rate,
            r.scenario_set_hash
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub records: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub aggregate_path: PathBuf,
    pub run_paths: Vec<PathBuf>,
}

impl ComparisonReport {
    /// Every converged run meets its rate threshold and no run errored.
    pub fn contract_holds(&self) -> bool {
        self.records.iter().all(|r| {
            r.error.is_none() && (!r.converged || r.min_rate >= r.system.rate_threshold)
        })
    }
}

/// All (scheme, seed, sweep value) cells in a fixed order.
pub fn cells(spec: &ExperimentSpec) -> Vec<(Scheme, u64, Option<f64>)> {
    let mut out = Vec::new();
    for value in spec.sweep_points() {
        for &scheme in &spec.schemes {
            for &seed in &spec.seeds {
                out.push((scheme, seed, value));
            }
        }
    }
    out
}

fn run_cells(spec: &ExperimentSpec, workers: usize) -> Result<Vec<RunRecord>> {
    let cells = cells(spec);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Invalid(e.to_string()))?;
        pool.install(|| {
            cells
                .par_iter()
                .map(|&(s, seed, v)| run_cell(spec, s, seed, v))
                .collect()
        })
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        cells.iter().map(|&(s, seed, v)| run_cell(spec, s, seed, v)).collect()
    }
}

/// Runs every cell, writes `runs/<cell>.json` and `aggregate.csv` under the
/// experiment's output directory. `workers = 0` uses every core.
pub fn run_comparison(spec: &ExperimentSpec, workers: usize) -> Result<ComparisonReport> {
    spec.validate()?;
    let records = run_cells(spec, workers)?;
    let run_dir = spec.output_dir.join("runs");
    fs::create_dir_all(&run_dir)?;
    let mut run_paths = Vec::with_capacity(records.len());
    for r in &records {
        let path = run_dir.join(r.file_name());
        let text = serde_json::to_string_pretty(r).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(&path, text)?;
        run_paths.push(path);
    }
    let aggregate = aggregate(spec, &records);
    let aggregate_path = spec.output_dir.join("aggregate.csv");
    fs::write(&aggregate_path, aggregate_csv(spec, &aggregate))?;
    Ok(ComparisonReport {
        records,
        aggregate,
        aggregate_path,
        run_paths,
    })
}

/// Sensing error against the rate threshold; the experiment must sweep
/// `rate_threshold`. Per-run records carry the μ trajectories.
pub fn rate_tradeoff_sweep(spec: &ExperimentSpec, workers: usize) -> Result<ComparisonReport> {
    match &spec.sweep {
        Some(Sweep { variable: SweepVariable::RateThreshold, .. }) => run_comparison(spec, workers),
        _ => Err(Error::ValidationError(
            "rate trade-off sweep needs a rate_threshold sweep".into(),
        )),
    }
}

/// Swaps in seeds shifted by `offset`.
pub fn with_seed_offset(mut spec: ExperimentSpec, offset: u64) -> ExperimentSpec {
    spec.seeds.iter_mut().for_each(|s| *s += offset);
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::sensing_gain;
    use crate::scenario::{initial_for, sub_rng};
    use rand::Rng;

    const MINIMAL: &str = r#"{"schemes": ["tri_hybrid"], "seeds": [1]}"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let spec = parse_experiment(MINIMAL).unwrap();
        assert_eq!(spec.system, SystemConfigFile::default());
        assert_eq!(spec.scenario, ScenarioSource::Random);
        assert_eq!(spec.optimizer, OptimizerParams::default());
        assert_eq!(spec.grid_resolution_deg, 1.0);
        assert!(spec.sweep.is_none());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_experiment(r#"{"schemes": ["tri_hybrid"], "seeds": [1], "foo": 3}"#).unwrap_err();
        match err {
            Error::ValidationError(m) => assert!(m.contains("\"foo\""), "{m}"),
            other => panic!("{other:?}"),
        }
        let nested = parse_experiment(r#"{"schemes": ["tri_hybrid"], "seeds": [1], "optimizer": {"bar": 1}}"#);
        assert!(matches!(nested, Err(Error::ValidationError(m)) if m.contains("\"bar\"")));
    }

    #[test]
    fn decreasing_sweep_is_rejected() {
        let text = r#"{"schemes": ["tri_hybrid"], "seeds": [1], "sweep": {"variable": "elements", "values": [48, 24]}}"#;
        assert!(matches!(parse_experiment(text), Err(Error::ValidationError(_))));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_experiment("{\n  \"schemes\": [\"tri_hybrid\"],\n  \"seeds\": [1,\n}").unwrap_err();
        assert!(matches!(err, Error::ParseError { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn empty_lists_and_bad_schemes_are_rejected() {
        assert!(parse_experiment(r#"{"schemes": [], "seeds": [1]}"#).is_err());
        assert!(parse_experiment(r#"{"schemes": ["tri_hybrid"], "seeds": []}"#).is_err());
        assert!(parse_experiment(r#"{"schemes": ["fancy"], "seeds": [1]}"#).is_err());
        assert!(parse_experiment(r#"{"schemes": ["tri_hybrid"], "seeds": [1], "grid_resolution_deg": 7}"#).is_err());
    }

    #[test]
    fn explicit_scenario_roundtrips() {
        let text = r#"{
            "schemes": ["tri_hybrid"], "seeds": [3],
            "system": {"num_sense_dirs": 1, "num_users": 1, "ps_per_chain": 2, "elements_per_rhs": 4},
            "scenario": {"users": [[{"elevation_deg": 30, "azimuth_deg": 40, "gain": [1, 0]}]],
                         "targets": [{"elevation_deg": 45, "azimuth_deg": 90, "desired_gain": 0.2}]}
        }"#;
        let spec = parse_experiment(text).unwrap();
        let cfg = spec.config_at(None).unwrap();
        let scn = spec.scenario_at(&cfg, 3).unwrap();
        assert_eq!(scn.seed, 3);
        assert_eq!(scn.channels[0].len(), 8);
        let back: ExperimentSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn pattern_grid_shape_and_values() {
        let cfg = SystemConfig::default().with_elements(8);
        let bf = initial_for(&cfg, 2);
        let rows = beam_pattern_grid(&bf, &cfg, 1.0).unwrap();
        assert_eq!(rows.len(), 91 * 360);
        assert_eq!((rows[1].elevation_deg, rows[1].azimuth_deg), (0.0, 1.0));
        assert_eq!((rows[360].elevation_deg, rows[360].azimuth_deg), (1.0, 0.0));
        let eb = compose(&bf);
        let mut rng = sub_rng(9, 0);
        for _ in 0..10 {
            let r = rows[rng.random_range(0..rows.len())];
            let g = sensing_gain(&eb, &Direction::from_degrees(r.elevation_deg, r.azimuth_deg), &cfg);
            assert!((g - r.gain).abs() <= 1e-12 * g.max(1e-30));
            assert!((r.gain_db - 10.0 * g.log10()).abs() < 1e-9);
        }
        let mut zero = bf.clone();
        zero.digital.scale(0.0);
        assert!(beam_pattern_grid(&zero, &cfg, 5.0).unwrap().iter().all(|r| r.gain == 0.0));
        assert!(beam_pattern_grid(&bf, &cfg, 0.7).is_err());
    }

    fn small_spec(dir: &Path) -> ExperimentSpec {
        let text = format!(
            r#"{{"schemes": ["tri_hybrid", "rhs_hybrid"], "seeds": [0, 1, 2],
                "system": {{"elements_per_rhs": 8}},
                "optimizer": {{"max_outer": 3}},
                "sweep": {{"variable": "elements", "values": [6, 8]}},
                "output_dir": {:?}}}"#,
            dir.to_str().unwrap()
        );
        parse_experiment(&text).unwrap()
    }

    #[test]
    fn comparison_writes_every_cell_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(dir.path());
        let report = run_comparison(&spec, 2).unwrap();
        assert_eq!(report.run_paths.len(), 12);
        assert!(report.run_paths.iter().all(|p| p.exists()));
        assert_eq!(report.aggregate.len(), 4);
        let first = fs::read(&report.aggregate_path).unwrap();
        let again = run_comparison(&spec, 1).unwrap();
        assert_eq!(first, fs::read(&again.aggregate_path).unwrap());
        assert!(report.contract_holds());
        // both schemes saw the same scenarios
        for value in [Some(6.0), Some(8.0)] {
            let hashes: Vec<_> = report.aggregate.iter().filter(|r| r.sweep_value == value).map(|r| &r.scenario_set_hash).collect();
            assert_eq!(hashes[0], hashes[1]);
        }
        let rec: RunRecord = serde_json::from_slice(&fs::read(&report.run_paths[0]).unwrap()).unwrap();
        assert_eq!(rec.version, VERSION);
        assert_eq!(rec.mu_trajectory.len(), rec.iterations);
    }

    #[test]
    fn tradeoff_needs_a_rate_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(dir.path());
        assert!(rate_tradeoff_sweep(&spec, 1).is_err());
    }

    #[test]
    fn aggregate_counts_only_converged_runs() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(dir.path());
        let mut records: Vec<RunRecord> = cells(&spec)
            .into_iter()
            .map(|(s, seed, v)| run_cell(&spec, s, seed, v).unwrap())
            .collect();
        for (k, r) in records.iter_mut().enumerate() {
            r.converged = k % 2 == 0;
            r.sensing_error = k as f64;
        }
        let rows = aggregate(&spec, &records);
        let first = &rows[0];
        assert_eq!(first.runs, 3);
        assert_eq!(first.converged + first.not_converged + first.failed, 3);
        assert_eq!(first.converged, 2);
        assert_eq!(first.mean_sensing_error, 1.0);
    }
}
