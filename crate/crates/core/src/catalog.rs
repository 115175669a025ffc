//! The four bundled hubs and their reference weather.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hubml::{parse_model, ParseError};
use crate::model::{validate_model, HubModel, NodeKind, Phase, Unit, Violation};
use crate::profiles::{read_profiles, ProfileError, ProfileSet};

const METHANE: &str = include_str!("../../../scenarios/methane.hub");
const AMMONIA: &str = include_str!("../../../scenarios/ammonia.hub");
const HYDROGEN: &str = include_str!("../../../scenarios/hydrogen.hub");
const METHANOL: &str = include_str!("../../../scenarios/methanol.hub");
const REFERENCE_PROFILES: &str = include_str!("../../../data/reference_profiles.csv");

pub const MIN_HOURS: usize = 168;
pub const DEFAULT_HOURS: usize = 1344;
pub const DEFAULT_DEMAND_TWH: f64 = 10.0;
pub const DEFAULT_WACC: f64 = 0.07;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Carrier {
    Methane,
    Ammonia,
    Hydrogen,
    Methanol,
}

impl Carrier {
    pub const ALL: [Carrier; 4] = [Carrier::Methane, Carrier::Ammonia, Carrier::Hydrogen, Carrier::Methanol];

    pub fn as_str(self) -> &'static str {
        match self {
            Carrier::Methane => "methane",
            Carrier::Ammonia => "ammonia",
            Carrier::Hydrogen => "hydrogen",
            Carrier::Methanol => "methanol",
        }
    }

    /// Bundled `.hub` source.
    pub fn source(self) -> &'static str {
        match self {
            Carrier::Methane => METHANE,
            Carrier::Ammonia => AMMONIA,
            Carrier::Hydrogen => HYDROGEN,
            Carrier::Methanol => METHANOL,
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.hub", self.as_str())
    }

    pub fn phases(self) -> &'static [Phase] {
        match self {
            Carrier::Methanol => &[Phase::Liquid],
            _ => &[Phase::Liquid, Phase::Gaseous],
        }
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Carrier {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Carrier::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CatalogError::UnknownScenario(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScenarioId {
    pub carrier: Carrier,
    pub phase: Phase,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.carrier, self.phase)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOptions {
    pub hours: usize,
    /// Delivered energy per year in TWh HHV.
    pub annual_demand_twh: f64,
    pub wacc: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            hours: DEFAULT_HOURS,
            annual_demand_twh: DEFAULT_DEMAND_TWH,
            wacc: DEFAULT_WACC,
        }
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown scenario `{0}`; expected methane, ammonia, hydrogen or methanol")]
    UnknownScenario(String),
    #[error("{carrier} cannot be delivered in the {phase} phase")]
    UnsupportedPhase { carrier: String, phase: Phase },
    #[error("horizon of {0} hours is shorter than one week")]
    ShortHorizon(usize),
    #[error("annual demand must be positive, got {0}")]
    Demand(f64),
    #[error("wacc must lie in [0, 1), got {0}")]
    Wacc(f64),
    #[error("scenario source does not parse:\n{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Parse(Vec<ParseError>),
    #[error("scenario has no single demand node")]
    NoDemand,
    #[error("scenario became invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Builds a bundled scenario.
pub fn build_scenario(id: ScenarioId, opts: &ScenarioOptions) -> Result<HubModel, CatalogError> {
    build_scenario_from(id.carrier.source(), id, opts)
}

/// Builds a scenario from `.hub` source written for `id.carrier`.
///
/// The horizon, wacc and demand quantity of the source are replaced by the
/// options. Sources deliver in the gaseous phase when the carrier has one; the
/// liquid variant drops the transport node that feeds the demand and connects
/// the demand to that node's input.
pub fn build_scenario_from(source: &str, id: ScenarioId, opts: &ScenarioOptions) -> Result<HubModel, CatalogError> {
    if !id.carrier.phases().contains(&id.phase) {
        return Err(CatalogError::UnsupportedPhase { carrier: id.carrier.to_string(), phase: id.phase });
    }
    if opts.hours < MIN_HOURS {
        return Err(CatalogError::ShortHorizon(opts.hours));
    }
    if !(0.0..1.0).contains(&opts.wacc) {
        return Err(CatalogError::Wacc(opts.wacc));
    }
    let mut model = parse_model(source).map_err(CatalogError::Parse)?;
    model.horizon.hours = opts.hours;
    model.wacc = opts.wacc;
    set_delivery_phase(&mut model, id.phase)?;
    set_annual_demand(&mut model, opts.annual_demand_twh)?;
    let report = validate_model(&model);
    if !report.is_empty() {
        return Err(CatalogError::Invalid(report.violations));
    }
    Ok(model)
}

fn single_demand(model: &HubModel) -> Result<(String, String, Phase), CatalogError> {
    let demands: Vec<(String, String, Phase)> =
        model.demand_nodes().map(|(n, d)| (n.name.clone(), d.commodity.clone(), d.phase)).collect();
    match <[_; 1]>::try_from(demands) {
        Ok([d]) => Ok(d),
        Err(_) => Err(CatalogError::NoDemand),
    }
}

/// Sets the hourly quantity of the single demand node so that it receives
/// `twh` per year.
pub fn set_annual_demand(model: &mut HubModel, twh: f64) -> Result<(), CatalogError> {
    if !(twh > 0.0) || !twh.is_finite() {
        return Err(CatalogError::Demand(twh));
    }
    let (demand, commodity, _) = single_demand(model)?;
    let mwh_per_unit = match model.commodity(&commodity).map(|c| c.unit) {
        Some(Unit::Kt) => model.hhv(&commodity).ok_or(CatalogError::NoDemand)? * 1000.0,
        _ => 1000.0,
    };
    if let Some(NodeKind::Demand(d)) = model.node_mut(&demand).map(|n| &mut n.kind) {
        d.quantity = twh * 1e6 / crate::model::HOURS_PER_YEAR / mwh_per_unit;
    }
    Ok(())
}

/// Switches a gaseous delivery to liquid by removing the transport node that
/// feeds the demand. Requesting the phase the model already delivers is a
/// no-op.
pub fn set_delivery_phase(model: &mut HubModel, phase: Phase) -> Result<(), CatalogError> {
    let (demand, commodity, current) = single_demand(model)?;
    if current == phase {
        return Ok(());
    }
    if current != Phase::Gaseous {
        return Err(CatalogError::UnsupportedPhase { carrier: commodity, phase });
    }
    bypass_feeder(model, &demand)?;
    if let Some(NodeKind::Demand(d)) = model.node_mut(&demand).map(|n| &mut n.kind) {
        d.phase = phase;
    }
    Ok(())
}

/// Removes the transport node whose output feeds `demand` and attaches the
/// demand to the hyperedge that fed that node.
fn bypass_feeder(model: &mut HubModel, demand: &str) -> Result<(), CatalogError> {
    let out_edge = model
        .hyperedges
        .iter()
        .position(|e| e.consumers.iter().any(|c| c.node == demand))
        .ok_or(CatalogError::NoDemand)?;
    let feeder = match model.hyperedges[out_edge].producers.as_slice() {
        [p] if matches!(model.node(&p.node).map(|n| &n.kind), Some(NodeKind::Transport(_))) => p.node.clone(),
        _ => return Err(CatalogError::NoDemand),
    };
    let in_edge = model
        .hyperedges
        .iter()
        .position(|e| e.consumers.iter().any(|c| c.node == feeder && c.port == "in"))
        .ok_or(CatalogError::NoDemand)?;
    let demand_ep = model.hyperedges[out_edge]
        .consumers
        .iter()
        .find(|c| c.node == demand)
        .cloned()
        .expect("found above");
    let edge = &mut model.hyperedges[in_edge];
    edge.consumers.retain(|c| c.node != feeder);
    edge.consumers.push(demand_ep);
    model.hyperedges.remove(out_edge);
    model.nodes.retain(|n| n.name != feeder);
    for e in &mut model.hyperedges {
        e.producers.retain(|p| p.node != feeder);
        e.consumers.retain(|c| c.node != feeder);
    }
    Ok(())
}

/// The bundled reference year, truncated to `hours`.
pub fn reference_profiles(hours: usize) -> Result<ProfileSet, ProfileError> {
    read_profiles(REFERENCE_PROFILES.as_bytes(), hours)
}
