//! Metrics of an optimal hub design.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use hubforge_lp::{Residuals, Solution, Status};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::CompiledModel;
use crate::model::{HubModel, NodeKind, Phase, Unit};

pub const SCHEMA_VERSION: u32 = 1;

/// Nodes counted as the electricity supply chain.
pub const ELECTRICITY_CHAIN: [&str; 4] = ["pv", "wind", "hvdc", "battery"];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("solution is {0}, not optimal")]
    NotOptimal(Status),
    #[error("solution has {got} columns, the model has {expected}")]
    Shape { expected: usize, got: usize },
    #[error("model delivers no energy")]
    NoDelivery,
    #[error("model generates no renewable energy")]
    NoGeneration,
    #[error("commodity `{0}` has no heating value")]
    NoHeatingValue(String),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report is not valid JSON for this schema: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("report violates an invariant: {0}")]
    Invariant(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeCost {
    /// M€ over the horizon.
    pub cost: f64,
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capacity {
    pub value: f64,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageEntry {
    pub commodity: String,
    /// Stock capacity in the commodity's unit.
    pub stock: f64,
    pub stock_unit: String,
    /// Charge capacity per hour.
    pub flow: f64,
    pub flow_unit: String,
    pub energy_twh: Option<f64>,
    /// Thousands of cubic metres.
    pub volume_km3: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taxonomy {
    pub locations: BTreeSet<String>,
    pub commodities: BTreeSet<String>,
    pub imports: BTreeSet<String>,
    pub exports: BTreeSet<String>,
    pub byproducts: BTreeSet<String>,
    pub local: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSummary {
    pub status: String,
    pub iterations: usize,
    pub primal_inf: f64,
    pub dual_inf: f64,
    pub duality_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioResult {
    pub schema_version: u32,
    pub hub: String,
    pub phase: String,
    pub hours: usize,
    pub wacc: f64,
    /// M€ over the horizon.
    pub total_cost: f64,
    /// €/MWh HHV delivered.
    pub levelized_cost: f64,
    pub delivered_twh: f64,
    pub efficiency: f64,
    pub breakdown: BTreeMap<String, NodeCost>,
    pub capacities: BTreeMap<String, BTreeMap<String, Capacity>>,
    pub storage: BTreeMap<String, StorageEntry>,
    pub taxonomy: Taxonomy,
    pub solver: SolverSummary,
}

fn check(compiled: &CompiledModel, solution: &Solution) -> Result<(), AnalysisError> {
    if solution.status != Status::Optimal {
        return Err(AnalysisError::NotOptimal(solution.status));
    }
    if solution.primal.len() != compiled.vars.len() {
        return Err(AnalysisError::Shape { expected: compiled.vars.len(), got: solution.primal.len() });
    }
    Ok(())
}

/// Cost of every non-demand node and its share of the total.
pub fn cost_breakdown(
    model: &HubModel,
    compiled: &CompiledModel,
    solution: &Solution,
) -> Result<BTreeMap<String, NodeCost>, AnalysisError> {
    check(compiled, solution)?;
    let mut costs: BTreeMap<String, f64> = model
        .nodes
        .iter()
        .filter(|n| !matches!(n.kind, NodeKind::Demand(_)))
        .map(|n| (n.name.clone(), 0.0))
        .collect();
    for (j, key) in compiled.vars.keys().iter().enumerate() {
        *costs.entry(key.node.clone()).or_default() += compiled.lp.obj[j] * solution.primal[j];
    }
    let total: f64 = costs.values().sum();
    Ok(costs
        .into_iter()
        .map(|(n, cost)| {
            let share = if total > 0.0 { cost / total } else { 0.0 };
            (n, NodeCost { cost, share })
        })
        .collect())
}

/// Energy delivered to demand nodes over the horizon, in MWh.
pub fn delivered_mwh(model: &HubModel) -> Result<f64, AnalysisError> {
    let mut total = 0.0;
    for (_, d) in model.demand_nodes() {
        let e = model.energy_per_unit(&d.commodity).ok_or_else(|| AnalysisError::NoHeatingValue(d.commodity.clone()))?;
        total += d.quantity * model.horizon.hours as f64 * e;
    }
    Ok(total)
}

/// Total cost per MWh delivered, in €/MWh.
pub fn levelized_cost(model: &HubModel, compiled: &CompiledModel, solution: &Solution) -> Result<f64, AnalysisError> {
    check(compiled, solution)?;
    let mwh = delivered_mwh(model)?;
    if !(mwh > 0.0) {
        return Err(AnalysisError::NoDelivery);
    }
    Ok(solution.objective * 1e6 / mwh)
}

/// Renewable generation dispatched by source nodes over the horizon, in MWh.
pub fn generation_mwh(model: &HubModel, compiled: &CompiledModel, solution: &Solution) -> Result<f64, AnalysisError> {
    check(compiled, solution)?;
    let mut total = 0.0;
    for node in &model.nodes {
        let NodeKind::Source(s) = &node.kind else { continue };
        let e = model.energy_per_unit(&s.commodity).ok_or_else(|| AnalysisError::NoHeatingValue(s.commodity.clone()))?;
        for t in 0..model.horizon.hours {
            if let Some(j) = compiled.vars.col(&node.name, "gen", Some(t)) {
                total += solution.primal[j] * e;
            }
        }
    }
    Ok(total)
}

/// Delivered energy over renewable generation.
pub fn efficiency(model: &HubModel, compiled: &CompiledModel, solution: &Solution) -> Result<f64, AnalysisError> {
    let generated = generation_mwh(model, compiled, solution)?;
    if !(generated > 0.0) {
        return Err(AnalysisError::NoGeneration);
    }
    Ok(delivered_mwh(model)? / generated)
}

fn rate_unit(unit: Unit) -> &'static str {
    match unit {
        Unit::GWh => "GW",
        Unit::Kt => "kt/h",
    }
}

fn unit_of(model: &HubModel, commodity: &str) -> Unit {
    model.commodity(commodity).map_or(Unit::GWh, |c| c.unit)
}

/// Optimal sizing variables of every node.
pub fn capacities(
    model: &HubModel,
    compiled: &CompiledModel,
    solution: &Solution,
) -> Result<BTreeMap<String, BTreeMap<String, Capacity>>, AnalysisError> {
    check(compiled, solution)?;
    let mut out = BTreeMap::new();
    for node in &model.nodes {
        let sizing: Vec<(&str, String)> = match &node.kind {
            NodeKind::Conversion(c) => vec![("cap", rate_unit(unit_of(model, &c.output)).into())],
            NodeKind::Transport(t) => vec![("cap", rate_unit(unit_of(model, &t.input)).into())],
            NodeKind::Source(s) => vec![("cap", rate_unit(unit_of(model, &s.commodity)).into())],
            NodeKind::Storage(s) => {
                let u = unit_of(model, &s.commodity);
                vec![("flow_cap", rate_unit(u).into()), ("stock_cap", u.as_str().into())]
            }
            NodeKind::Demand(_) => continue,
        };
        let entry: BTreeMap<String, Capacity> = sizing
            .into_iter()
            .filter_map(|(var, unit)| {
                let j = compiled.vars.col(&node.name, var, None)?;
                Some((var.to_string(), Capacity { value: solution.primal[j], unit }))
            })
            .collect();
        out.insert(node.name.clone(), entry);
    }
    Ok(out)
}

/// Sized stock of every storage node with its energy content and, when the
/// node declares a density, its volume.
pub fn storage_report(
    model: &HubModel,
    compiled: &CompiledModel,
    solution: &Solution,
) -> Result<BTreeMap<String, StorageEntry>, AnalysisError> {
    check(compiled, solution)?;
    let mut out = BTreeMap::new();
    for node in &model.nodes {
        let NodeKind::Storage(s) = &node.kind else { continue };
        let value = |var| compiled.vars.col(&node.name, var, None).map_or(0.0, |j| solution.primal[j]);
        let stock = value("stock_cap");
        let unit = unit_of(model, &s.commodity);
        let energy_twh = model.energy_per_unit(&s.commodity).map(|e| stock * e / 1e6);
        let volume_km3 = match (unit, s.density) {
            (Unit::Kt, Some(d)) => Some(stock * 1e3 / d),
            _ => None,
        };
        out.insert(
            node.name.clone(),
            StorageEntry {
                commodity: s.commodity.clone(),
                stock,
                stock_unit: unit.as_str().to_string(),
                flow: value("flow_cap"),
                flow_unit: rate_unit(unit).to_string(),
                energy_twh,
                volume_km3,
            },
        );
    }
    Ok(out)
}

/// Characterizes the hub from its graph alone.
///
/// Commodities exchanged inside the hub exclude those only drawn from import
/// hyperedges.
pub fn taxonomy(model: &HubModel) -> Taxonomy {
    let mut tax = Taxonomy::default();
    tax.locations = model.sites.iter().filter(|s| !s.load_center).map(|s| s.label.clone()).collect();
    let mut produced = BTreeSet::new();
    let mut consumed = BTreeSet::new();
    for e in &model.hyperedges {
        if !e.producers.is_empty() {
            produced.insert(e.commodity.clone());
        }
        if !e.consumers.is_empty() {
            consumed.insert(e.commodity.clone());
        }
        if !e.import {
            tax.commodities.insert(e.commodity.clone());
        }
        if e.free_disposal {
            tax.byproducts.insert(e.commodity.clone());
        }
    }
    tax.imports = consumed.difference(&produced).cloned().collect();
    tax.exports = model.demand_nodes().map(|(_, d)| d.commodity.clone()).collect();
    tax.local = model.commodities.iter().filter(|c| c.local).map(|c| c.name.clone()).collect();
    tax
}

fn demand_phase(model: &HubModel) -> Phase {
    model.demand_nodes().next().map_or(Phase::Gaseous, |(_, d)| d.phase)
}

/// Every metric of one optimal run.
pub fn analyze(model: &HubModel, compiled: &CompiledModel, solution: &Solution) -> Result<ScenarioResult, AnalysisError> {
    let Residuals { primal_inf, dual_inf, duality_gap } = solution.residuals;
    Ok(ScenarioResult {
        schema_version: SCHEMA_VERSION,
        hub: model.name.clone(),
        phase: demand_phase(model).to_string(),
        hours: model.horizon.hours,
        wacc: model.wacc,
        total_cost: solution.objective,
        levelized_cost: levelized_cost(model, compiled, solution)?,
        delivered_twh: delivered_mwh(model)? / 1e6,
        efficiency: efficiency(model, compiled, solution)?,
        breakdown: cost_breakdown(model, compiled, solution)?,
        capacities: capacities(model, compiled, solution)?,
        storage: storage_report(model, compiled, solution)?,
        taxonomy: taxonomy(model),
        solver: SolverSummary {
            status: solution.status.to_string(),
            iterations: solution.stats.iterations,
            primal_inf,
            dual_inf,
            duality_gap,
        },
    })
}

impl ScenarioResult {
    /// Summed share of the named nodes.
    pub fn share_of(&self, nodes: &[&str]) -> f64 {
        nodes.iter().filter_map(|n| self.breakdown.get(*n)).map(|c| c.share).sum()
    }

    /// Sized capacity of all source nodes.
    pub fn renewable_capacity(&self, model: &HubModel) -> f64 {
        model
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Source(_)))
            .filter_map(|n| self.capacities.get(&n.name)?.get("cap"))
            .map(|c| c.value)
            .sum()
    }
}

/// Headline figures of one run, as compared across carriers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub hub: String,
    pub phase: String,
    pub levelized_cost: f64,
    pub efficiency: f64,
    /// GW of renewable sources.
    pub renewable_gw: f64,
    /// GW of electricity storage.
    pub battery_gw: f64,
    pub battery_gwh: f64,
    /// Stored hydrogen in storages with a declared density.
    pub h2_storage_twh: f64,
    pub h2_storage_km3: f64,
}

pub fn summarize(model: &HubModel, r: &ScenarioResult) -> Summary {
    let batteries = r.storage.values().filter(|s| s.commodity == "electricity");
    let gas = r.storage.values().filter(|s| s.commodity == "h2" && s.volume_km3.is_some());
    Summary {
        hub: r.hub.clone(),
        phase: r.phase.clone(),
        levelized_cost: r.levelized_cost,
        efficiency: r.efficiency,
        renewable_gw: r.renewable_capacity(model),
        battery_gw: batteries.clone().map(|s| s.flow).sum(),
        battery_gwh: batteries.map(|s| s.stock).sum(),
        h2_storage_twh: gas.clone().filter_map(|s| s.energy_twh).sum(),
        h2_storage_km3: gas.filter_map(|s| s.volume_km3).sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown report format `{s}`, expected json or csv")),
        }
    }
}

/// Serializes a result. Output depends only on the result.
pub fn emit_report(result: &ScenarioResult, format: ReportFormat) -> Result<Vec<u8>, ReportError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(result)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => emit_csv(result),
    }
}

fn emit_csv(r: &ScenarioResult) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "subject", "value", "unit"])?;
    let mut row = |metric: &str, subject: &str, value: String, unit: &str| w.write_record([metric, subject, &value, unit]);
    row("schema_version", "", r.schema_version.to_string(), "")?;
    row("hub", "", r.hub.clone(), "")?;
    row("phase", "", r.phase.clone(), "")?;
    row("hours", "", r.hours.to_string(), "h")?;
    row("wacc", "", r.wacc.to_string(), "")?;
    row("total_cost", "", r.total_cost.to_string(), "MEUR")?;
    row("levelized_cost", "", r.levelized_cost.to_string(), "EUR/MWh")?;
    row("delivered", "", r.delivered_twh.to_string(), "TWh")?;
    row("efficiency", "", r.efficiency.to_string(), "")?;
    for (n, c) in &r.breakdown {
        row("cost", n, c.cost.to_string(), "MEUR")?;
        row("share", n, c.share.to_string(), "")?;
    }
    for (n, caps) in &r.capacities {
        for (var, c) in caps {
            row(var, n, c.value.to_string(), &c.unit)?;
        }
    }
    for (n, s) in &r.storage {
        if let Some(e) = s.energy_twh {
            row("storage_energy", n, e.to_string(), "TWh")?;
        }
        if let Some(v) = s.volume_km3 {
            row("storage_volume", n, v.to_string(), "1000 m3")?;
        }
    }
    let sets = [
        ("locations", &r.taxonomy.locations),
        ("commodities", &r.taxonomy.commodities),
        ("imports", &r.taxonomy.imports),
        ("exports", &r.taxonomy.exports),
        ("byproducts", &r.taxonomy.byproducts),
        ("local", &r.taxonomy.local),
    ];
    for (name, set) in sets {
        row("taxonomy", name, set.iter().cloned().collect::<Vec<_>>().join(";"), "")?;
    }
    row("solver_status", "", r.solver.status.clone(), "")?;
    row("solver_iterations", "", r.solver.iterations.to_string(), "")?;
    row("primal_inf", "", r.solver.primal_inf.to_string(), "")?;
    row("dual_inf", "", r.solver.dual_inf.to_string(), "")?;
    row("duality_gap", "", r.solver.duality_gap.to_string(), "")?;
    w.flush()?;
    w.into_inner().map_err(|e| ReportError::Io(e.into_error()))
}

/// Parses a JSON report and checks its version and invariants.
pub fn parse_report(json: &[u8]) -> Result<ScenarioResult, ReportError> {
    let value: serde_json::Value = serde_json::from_slice(json)?;
    let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != SCHEMA_VERSION {
        return Err(ReportError::Version(version));
    }
    let r: ScenarioResult = serde_json::from_value(value)?;
    let bad = |m: &str| Err(ReportError::Invariant(m.to_string()));
    let shares: f64 = r.breakdown.values().map(|c| c.share).sum();
    if (shares - 1.0).abs() > 1e-9 {
        return bad("breakdown shares do not sum to 1");
    }
    if r.breakdown.values().any(|c| !(0.0..=1.0).contains(&c.share)) {
        return bad("share outside [0, 1]");
    }
    if !(r.efficiency > 0.0 && r.efficiency <= 1.0) {
        return bad("efficiency outside (0, 1]");
    }
    if !(r.levelized_cost > 0.0) {
        return bad("levelized cost is not positive");
    }
    if r.phase != "liquid" && r.phase != "gaseous" {
        return bad("unknown phase");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_scenario, Carrier, ScenarioId, ScenarioOptions};
    use crate::compile::compile;
    use crate::hubml::parse_model;
    use crate::profiles::ProfileSet;
    use hubforge_lp::{solve, SolveOptions};

    const TOY: &str = r#"
hub toy;
horizon 4;
wacc 0.05;
site a "Field";
site b "Town" load_center;
commodity electricity GWh;
node pv kind source { site = a; commodity = electricity; profile = pv; capex = 100; fom = 2; lifetime = 20; }
node spare kind conversion { site = a; output = electricity; capex = 1000; lifetime = 20; }
node d kind demand { site = b; commodity = electricity; quantity = 1; phase = gaseous; }
hyperedge electricity { from pv.out; from spare.electricity; to d.in; }
"#;

    fn toy() -> (HubModel, CompiledModel, Solution) {
        let m = parse_model(TOY).unwrap();
        let p = ProfileSet { series: [("pv".to_string(), vec![0.5; 4])].into() };
        let c = compile(&m, &p).unwrap();
        let s = solve(&c.lp, &SolveOptions::default()).unwrap();
        (m, c, s)
    }

    #[test]
    fn toy_metrics() {
        let (m, c, s) = toy();
        let r = analyze(&m, &c, &s).unwrap();
        assert!((r.efficiency - 1.0).abs() < 1e-9);
        assert_eq!(r.breakdown["spare"].cost, 0.0);
        assert!((r.breakdown["pv"].share - 1.0).abs() < 1e-12);
        assert!((r.capacities["pv"]["cap"].value - 2.0).abs() < 1e-9);
        assert!((r.levelized_cost - s.objective * 1e6 / 4000.0).abs() < 1e-9);
        assert!(r.taxonomy.byproducts.is_empty());
        assert_eq!(r.taxonomy.locations, BTreeSet::from(["Field".to_string()]));
    }

    #[test]
    fn refuses_non_optimal() {
        let (m, c, mut s) = toy();
        s.status = Status::Infeasible;
        assert!(matches!(analyze(&m, &c, &s), Err(AnalysisError::NotOptimal(_))));
    }

    #[test]
    fn reports_are_stable_and_parse_back() {
        let (m, c, s) = toy();
        let r = analyze(&m, &c, &s).unwrap();
        let a = emit_report(&r, ReportFormat::Json).unwrap();
        assert_eq!(a, emit_report(&r, ReportFormat::Json).unwrap());
        assert_eq!(parse_report(&a).unwrap(), r);
        let csv = String::from_utf8(emit_report(&r, ReportFormat::Csv).unwrap()).unwrap();
        assert!(csv.lines().any(|l| l.starts_with("levelized_cost,,")));
    }

    #[test]
    fn schema_rejects_unknown_version_and_fields() {
        let (m, c, s) = toy();
        let r = analyze(&m, &c, &s).unwrap();
        let mut v = serde_json::to_value(&r).unwrap();
        v["schema_version"] = 7.into();
        assert!(matches!(parse_report(v.to_string().as_bytes()), Err(ReportError::Version(7))));
        let mut v = serde_json::to_value(&r).unwrap();
        v["extra"] = 1.into();
        assert!(parse_report(v.to_string().as_bytes()).is_err());
    }

    #[test]
    fn hydrogen_volume() {
        let mut m = parse_model(TOY).unwrap();
        m.commodities.push(crate::model::Commodity { name: "h2".into(), unit: Unit::Kt, byproduct: false, local: false });
        m.hhv.push(("h2".into(), 39.4));
        let stock_kt = 0.35e6 / 39.4 / 1e3;
        let e = StorageEntry {
            commodity: "h2".into(),
            stock: stock_kt,
            stock_unit: "kt".into(),
            flow: 0.0,
            flow_unit: "kt/h".into(),
            energy_twh: m.energy_per_unit("h2").map(|e| stock_kt * e / 1e6),
            volume_km3: Some(stock_kt * 1e3 / 40.0),
        };
        assert!((e.energy_twh.unwrap() - 0.35).abs() < 1e-12);
        assert!((e.volume_km3.unwrap() - 222.08).abs() < 0.01);
    }

    fn tax(c: Carrier) -> Taxonomy {
        let id = ScenarioId { carrier: c, phase: Phase::Liquid };
        taxonomy(&build_scenario(id, &ScenarioOptions::default()).unwrap())
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn catalog_taxonomy() {
        let places = set(&["Algerian coast", "Sahara desert"]);
        let base = ["electricity", "h2", "h2o", "o2", "heat"];
        let cases = [
            (Carrier::Methane, vec!["co2", "ch4"], "ch4", vec!["heat", "o2"]),
            (Carrier::Ammonia, vec!["n2", "nh3", "ar"], "nh3", vec!["ar", "heat", "o2"]),
            (Carrier::Hydrogen, vec![], "h2", vec!["heat", "o2"]),
            (Carrier::Methanol, vec!["co2", "ch3oh"], "ch3oh", vec!["heat", "o2"]),
        ];
        for (c, extra, export, byproducts) in cases {
            let t = tax(c);
            let mut commodities = set(&base);
            commodities.extend(extra.iter().map(|s| s.to_string()));
            assert_eq!(t.locations, places, "{c}");
            assert_eq!(t.commodities, commodities, "{c}");
            assert_eq!(t.exports, set(&[export]), "{c}");
            assert_eq!(t.byproducts, set(&byproducts), "{c}");
            assert!(t.local.is_empty(), "{c}");
        }
        assert_eq!(tax(Carrier::Methane).imports, set(&["air", "seawater"]));
        assert_eq!(tax(Carrier::Ammonia).imports, set(&["air", "seawater"]));
    }
}
