//! Run settings from flags, a `key = value` file and defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use hubforge_core::analysis::ReportFormat;
use hubforge_core::catalog::{Carrier, DEFAULT_DEMAND_TWH, DEFAULT_HOURS, DEFAULT_WACC, MIN_HOURS};
use hubforge_core::Phase;
use hubforge_lp::SolveOptions;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "scenario",
    "model",
    "phase",
    "horizon",
    "profiles",
    "synth-seed",
    "wacc",
    "demand-twh",
    "out",
    "format",
    "export-lp",
    "feas-tol",
    "opt-tol",
];

/// Options shared by `run` and `compare`.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// File of `key = value` lines using the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hours to optimize, at least 168.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Capacity factor CSV with columns hour, pv_cf, wind_cf.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Use synthetic profiles from this seed.
    #[arg(long)]
    pub synth_seed: Option<u64>,
    #[arg(long)]
    pub wacc: Option<f64>,
    /// Delivered energy per year in TWh HHV.
    #[arg(long)]
    pub demand_twh: Option<f64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json or csv (run), table, json or csv (compare).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub feas_tol: Option<f64>,
    #[arg(long)]
    pub opt_tol: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Bundled scenario: methane, ammonia, hydrogen or methanol.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Path to a `.hub` model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// liquid or gaseous.
    #[arg(long)]
    pub phase: Option<String>,
    /// Also write the LP to this path.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    Scenario(Carrier),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSource {
    Reference,
    File(PathBuf),
    Synthetic(u64),
}

/// Settings after merging. `None` keeps the model file's own value.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub hours: Option<usize>,
    pub profiles: ProfileSource,
    pub wacc: Option<f64>,
    pub demand_twh: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub solver: SolveOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: ModelSource,
    pub phase: Option<Phase>,
    pub export_lp: Option<PathBuf>,
    pub settings: Settings,
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", k + 1));
        };
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key `{key}`", k + 1));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key `{key}`", k + 1));
        }
    }
    Ok(out)
}

fn parsed<T: FromStr>(key: &str, flag: Option<T>, file: &BTreeMap<String, String>) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        Some(v) => v.parse().map(Some).map_err(|_| CliError::User(format!("config: bad value `{v}` for `{key}`"))),
        None => Ok(None),
    }
}

fn load_file(common: &CommonArgs) -> Result<BTreeMap<String, String>, CliError> {
    match &common.config {
        Some(p) => read_config_file(p),
        None => Ok(BTreeMap::new()),
    }
}

fn settings(common: CommonArgs, file: &BTreeMap<String, String>) -> Result<Settings, CliError> {
    let hours = parsed("horizon", common.horizon, file)?;
    if let Some(h) = hours {
        if h < MIN_HOURS {
            return Err(CliError::User(format!("horizon must be at least {MIN_HOURS} hours, got {h}")));
        }
    }
    let profiles_path = parsed::<PathBuf>("profiles", common.profiles, file)?;
    let seed = parsed("synth-seed", common.synth_seed, file)?;
    let profiles = match (profiles_path, seed) {
        (Some(_), Some(_)) => return Err(CliError::User("give either --profiles or --synth-seed, not both".into())),
        (Some(p), None) => ProfileSource::File(p),
        (None, Some(s)) => ProfileSource::Synthetic(s),
        (None, None) => ProfileSource::Reference,
    };
    let defaults = SolveOptions::default();
    let feas_tol = parsed("feas-tol", common.feas_tol, file)?.unwrap_or(defaults.feas_tol);
    let opt_tol = parsed("opt-tol", common.opt_tol, file)?.unwrap_or(defaults.opt_tol);
    for (name, v) in [("feas-tol", feas_tol), ("opt-tol", opt_tol)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(CliError::User(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    Ok(Settings {
        hours,
        profiles,
        wacc: parsed("wacc", common.wacc, file)?,
        demand_twh: parsed("demand-twh", common.demand_twh, file)?,
        out: parsed("out", common.out, file)?,
        format: parsed("format", common.format, file)?,
        solver: SolveOptions { feas_tol, opt_tol, ..defaults },
    })
}

impl Settings {
    /// Scenario defaults for unset horizon, wacc and demand.
    pub fn with_catalog_defaults(mut self) -> Self {
        self.hours.get_or_insert(DEFAULT_HOURS);
        self.wacc.get_or_insert(DEFAULT_WACC);
        self.demand_twh.get_or_insert(DEFAULT_DEMAND_TWH);
        self
    }

    pub fn report_format(&self) -> Result<ReportFormat, CliError> {
        match self.format.as_deref() {
            Some(f) => f.parse().map_err(CliError::User),
            None if self.out.as_ref().and_then(|p| p.extension()).is_some_and(|e| e == "csv") => Ok(ReportFormat::Csv),
            None => Ok(ReportFormat::Json),
        }
    }
}

pub fn run_config(args: RunArgs) -> Result<RunConfig, CliError> {
    let file = load_file(&args.common)?;
    let scenario = parsed::<String>("scenario", args.scenario, &file)?;
    let model = parsed::<PathBuf>("model", args.model, &file)?;
    let source = match (scenario, model) {
        (Some(_), Some(_)) => return Err(CliError::User("give either --scenario or --model, not both".into())),
        (Some(s), None) => ModelSource::Scenario(s.parse().map_err(|e: hubforge_core::catalog::CatalogError| CliError::User(e.to_string()))?),
        (None, Some(p)) => ModelSource::File(p),
        (None, None) => return Err(CliError::User("one of --scenario or --model is required".into())),
    };
    let phase = match parsed::<String>("phase", args.phase, &file)? {
        Some(p) => Some(p.parse().map_err(CliError::User)?),
        None => None,
    };
    let export_lp = parsed("export-lp", args.export_lp, &file)?;
    let mut settings = settings(args.common, &file)?;
    if matches!(source, ModelSource::Scenario(_)) {
        settings = settings.with_catalog_defaults();
    }
    Ok(RunConfig { source, phase, export_lp, settings })
}

pub fn compare_settings(common: CommonArgs) -> Result<Settings, CliError> {
    let file = load_file(&common)?;
    if let Some(key) = ["scenario", "model", "phase", "export-lp"].iter().find(|k| file.contains_key(**k)) {
        return Err(CliError::User(format!("config key `{key}` does not apply to compare")));
    }
    Ok(settings(common, &file)?.with_catalog_defaults())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let m = parse_config("# run\nscenario = ammonia\nfeas_tol=1e-8 # tight\n\n").unwrap();
        assert_eq!(m["scenario"], "ammonia");
        assert_eq!(m["feas-tol"], "1e-8");
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("wacc 0.1").is_err());
        assert!(parse_config("wacc = 0.1\nwacc = 0.2").is_err());
    }

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file = parse_config("horizon = 200\nwacc = 0.05").unwrap();
        let common = CommonArgs { horizon: Some(300), ..Default::default() };
        let s = settings(common, &file).unwrap().with_catalog_defaults();
        assert_eq!(s.hours, Some(300));
        assert_eq!(s.wacc, Some(0.05));
        assert_eq!(s.demand_twh, Some(DEFAULT_DEMAND_TWH));
    }

    #[test]
    fn short_horizon_is_a_user_error() {
        let common = CommonArgs { horizon: Some(24), ..Default::default() };
        assert!(matches!(settings(common, &BTreeMap::new()), Err(CliError::User(_))));
    }

    #[test]
    fn exactly_one_model_source() {
        let args = RunArgs { scenario: Some("methane".into()), model: Some("m.hub".into()), ..Default::default() };
        assert!(matches!(run_config(args), Err(CliError::User(_))));
        assert!(matches!(run_config(RunArgs::default()), Err(CliError::User(_))));
    }

    #[test]
    fn csv_extension_picks_csv() {
        let common = CommonArgs { out: Some("r.csv".into()), ..Default::default() };
        let s = settings(common, &BTreeMap::new()).unwrap();
        assert_eq!(s.report_format().unwrap(), ReportFormat::Csv);
    }
}
