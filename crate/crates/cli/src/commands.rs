use std::io::Write;
use std::path::{Path, PathBuf};

use hubforge_core::analysis::{analyze, emit_report, summarize, Summary};
use hubforge_core::catalog::{
    build_scenario_from, reference_profiles, set_annual_demand, set_delivery_phase, Carrier, CatalogError, ScenarioId,
    ScenarioOptions,
};
use hubforge_core::compile::compile;
use hubforge_core::export::export_lp;
use hubforge_core::profiles::{load_profiles, synth_profiles, ProfileError, ProfileSet, PV_MEAN, WIND_MEAN};
use hubforge_core::run::{run_model, RunError};
use hubforge_core::{format_model, parse_model, validate_model, HubModel, ParseError};
use hubforge_lp::{solve, Solution, Status};
use log::info;
use serde::Serialize;

use crate::config::{ModelSource, ProfileSource, RunConfig, Settings};
use crate::CliError;

pub const SCENARIO_DIR_VAR: &str = "HUBFORGE_SCENARIO_DIR";

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn diagnostics(origin: &str, errors: &[ParseError]) -> CliError {
    for e in errors {
        eprintln!("{origin}:{e}");
    }
    CliError::User(format!("{origin}: {} error(s)", errors.len()))
}

fn catalog_error(origin: &str, e: CatalogError) -> CliError {
    match e {
        CatalogError::Parse(errors) => diagnostics(origin, &errors),
        e => CliError::User(format!("{origin}: {e}")),
    }
}

pub fn check(path: &Path) -> Result<(), CliError> {
    let text = read(path)?;
    let model = parse_model(&text).map_err(|e| diagnostics(&path.display().to_string(), &e))?;
    println!("{}: ok, {} nodes, {} hyperedges", path.display(), model.nodes.len(), model.hyperedges.len());
    Ok(())
}

pub fn format(path: &Path, write: bool) -> Result<(), CliError> {
    let text = read(path)?;
    let model = parse_model(&text).map_err(|e| diagnostics(&path.display().to_string(), &e))?;
    let formatted = format_model(&model);
    if write {
        write_atomic(path, formatted.as_bytes())
    } else {
        print!("{formatted}");
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes every output or none of them.
fn write_all(outputs: &[(&Path, &[u8])]) -> Result<(), CliError> {
    let mut written: Vec<&Path> = Vec::new();
    for (path, bytes) in outputs {
        if let Err(e) = write_atomic(path, bytes) {
            for p in written {
                let _ = std::fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => write_all(&[(p, bytes)]),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn scenario_source(carrier: Carrier) -> Result<(String, String), CliError> {
    match std::env::var_os(SCENARIO_DIR_VAR) {
        Some(dir) => {
            let path = PathBuf::from(dir).join(carrier.file_name());
            Ok((read(&path)?, path.display().to_string()))
        }
        None => Ok((carrier.source().to_string(), carrier.file_name())),
    }
}

fn scenario_model(carrier: Carrier, phase: Option<hubforge_core::Phase>, s: &Settings) -> Result<HubModel, CliError> {
    let (source, origin) = scenario_source(carrier)?;
    let phase = phase.unwrap_or(*carrier.phases().last().expect("every carrier has a phase"));
    let opts = ScenarioOptions {
        hours: s.hours.expect("catalog default"),
        annual_demand_twh: s.demand_twh.expect("catalog default"),
        wacc: s.wacc.expect("catalog default"),
    };
    build_scenario_from(&source, ScenarioId { carrier, phase }, &opts).map_err(|e| catalog_error(&origin, e))
}

fn file_model(path: &Path, phase: Option<hubforge_core::Phase>, s: &Settings) -> Result<HubModel, CliError> {
    let origin = path.display().to_string();
    let mut model = parse_model(&read(path)?).map_err(|e| diagnostics(&origin, &e))?;
    if let Some(h) = s.hours {
        model.horizon.hours = h;
    }
    if let Some(w) = s.wacc {
        if !(0.0..1.0).contains(&w) {
            return Err(CliError::User(format!("wacc must lie in [0, 1), got {w}")));
        }
        model.wacc = w;
    }
    if let Some(p) = phase {
        set_delivery_phase(&mut model, p).map_err(|e| catalog_error(&origin, e))?;
    }
    if let Some(d) = s.demand_twh {
        set_annual_demand(&mut model, d).map_err(|e| catalog_error(&origin, e))?;
    }
    let report = validate_model(&model);
    if !report.is_empty() {
        let text: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::User(format!("{origin}: {}", text.join("; "))));
    }
    Ok(model)
}

fn profile_set(source: &ProfileSource, hours: usize) -> Result<ProfileSet, CliError> {
    let user = |e: ProfileError| CliError::User(e.to_string());
    match source {
        ProfileSource::Reference => reference_profiles(hours).map_err(user),
        ProfileSource::Synthetic(seed) => Ok(synth_profiles(*seed, hours, PV_MEAN, WIND_MEAN)),
        ProfileSource::File(path) => load_profiles(path, hours).map_err(|e| match e {
            ProfileError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
            e => CliError::User(format!("{}: {e}", path.display())),
        }),
    }
}

fn log_solution(name: &str, s: &Solution) {
    let r = s.residuals;
    info!(
        "{name}: {} after {} iterations, objective {:.6} M€, primal_inf {:.2e}, dual_inf {:.2e}, gap {:.2e}",
        s.status, s.stats.iterations, s.objective, r.primal_inf, r.dual_inf, r.duality_gap
    );
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let s = &config.settings;
    let format = s.report_format()?;
    let model = match &config.source {
        ModelSource::Scenario(c) => scenario_model(*c, config.phase, s)?,
        ModelSource::File(p) => file_model(p, config.phase, s)?,
    };
    let profiles = profile_set(&s.profiles, model.horizon.hours)?;
    let compiled = compile(&model, &profiles).map_err(|e| CliError::User(e.to_string()))?;
    info!("{}: {} columns, {} rows", model.name, compiled.lp.num_cols(), compiled.lp.num_rows());
    let lp_text = match &config.export_lp {
        Some(_) => Some(export_lp(&compiled.lp).map_err(|e| CliError::User(e.to_string()))?),
        None => None,
    };
    let solution = solve(&compiled.lp, &s.solver).map_err(|e| CliError::User(e.to_string()))?;
    log_solution(&model.name, &solution);
    if solution.status != Status::Optimal {
        return Err(CliError::Optimization(format!("{}: solver finished {}", model.name, solution.status)));
    }
    let result = analyze(&model, &compiled, &solution).map_err(|e| CliError::Optimization(e.to_string()))?;
    let report = emit_report(&result, format).map_err(|e| CliError::User(e.to_string()))?;
    match (&config.export_lp, &lp_text, &s.out) {
        (Some(lp), Some(text), Some(out)) => write_all(&[(lp, text.as_bytes()), (out, &report)]),
        (Some(lp), Some(text), None) => {
            write_all(&[(lp, text.as_bytes())])?;
            emit(None, &report).inspect_err(|_| {
                let _ = std::fs::remove_file(lp);
            })
        }
        _ => emit(s.out.as_deref(), &report),
    }
}

#[derive(Serialize)]
struct Row {
    carrier: String,
    rank: usize,
    #[serde(flatten)]
    summary: Summary,
}

#[derive(Serialize)]
struct Comparison {
    schema_version: u32,
    hours: usize,
    rows: Vec<Row>,
}

pub fn compare(s: &Settings) -> Result<(), CliError> {
    let hours = s.hours.expect("catalog default");
    let profiles = profile_set(&s.profiles, hours)?;
    let mut rows = Vec::new();
    for carrier in Carrier::ALL {
        for &phase in carrier.phases() {
            let model = scenario_model(carrier, Some(phase), s)?;
            info!("{carrier} ({phase}): solving");
            let run = run_model(model, &profiles, &s.solver).map_err(|e| match e {
                RunError::NotOptimal(_) | RunError::Analysis(_) => {
                    CliError::Optimization(format!("{carrier} ({phase}): {e}"))
                }
                e => CliError::User(format!("{carrier} ({phase}): {e}")),
            })?;
            log_solution(&format!("{carrier} ({phase})"), &run.solution);
            rows.push(Row { carrier: carrier.to_string(), rank: 0, summary: summarize(&run.model, &run.result) });
        }
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].summary.levelized_cost.total_cmp(&rows[b].summary.levelized_cost));
    for (rank, &i) in order.iter().enumerate() {
        rows[i].rank = rank + 1;
    }
    let bytes = match s.format.as_deref() {
        None | Some("table") => table(&rows).into_bytes(),
        Some("json") => {
            let mut v = serde_json::to_vec_pretty(&Comparison { schema_version: 1, hours, rows })
                .map_err(|e| CliError::User(e.to_string()))?;
            v.push(b'\n');
            v
        }
        Some("csv") => comparison_csv(&rows).map_err(|e| CliError::User(e.to_string()))?,
        Some(f) => return Err(CliError::User(format!("unknown compare format `{f}`, expected table, json or csv"))),
    };
    emit(s.out.as_deref(), &bytes)
}

fn comparison_csv(rows: &[Row]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn table(rows: &[Row]) -> String {
    let mut out = format!(
        "{:<9} {:<8} {:>8} {:>4} {:>6} {:>7} {:>7} {:>8} {:>8} {:>9}\n",
        "carrier", "phase", "EUR/MWh", "rank", "eff", "RE GW", "bat GW", "bat GWh", "H2 TWh", "H2 1e3m3"
    );
    for r in rows {
        let s = &r.summary;
        let mark = if r.rank == 1 { "*" } else { " " };
        out.push_str(&format!(
            "{:<9} {:<8} {:>8.2} {:>3}{mark} {:>6.3} {:>7.3} {:>7.3} {:>8.3} {:>8.4} {:>9.1}\n",
            r.carrier,
            s.phase,
            s.levelized_cost,
            r.rank,
            s.efficiency,
            s.renewable_gw,
            s.battery_gw,
            s.battery_gwh,
            s.h2_storage_twh,
            s.h2_storage_km3
        ));
    }
    out
}

pub fn profiles(seed: Option<u64>, hours: usize, out: Option<&Path>) -> Result<(), CliError> {
    if hours == 0 {
        return Err(CliError::User("horizon must be positive".into()));
    }
    let set = match seed {
        Some(s) => synth_profiles(s, hours, PV_MEAN, WIND_MEAN),
        None => reference_profiles(hours).map_err(|e| CliError::User(e.to_string()))?,
    };
    let mut bytes = Vec::new();
    set.write_csv(&mut bytes).map_err(|e| CliError::User(e.to_string()))?;
    emit(out, &bytes)
}

