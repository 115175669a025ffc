//! In-memory graph of a hub: typed technology nodes joined by commodity hyperedges.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Unit {
    GWh,
    Kt,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::GWh => "GWh",
            Unit::Kt => "kt",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Commodity {
    pub name: String,
    pub unit: Unit,
    /// Output that may be discarded for free.
    pub byproduct: bool,
    /// Serves a demand local to the hub.
    pub local: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Horizon {
    pub hours: usize,
}

impl Horizon {
    pub fn years(&self) -> f64 {
        self.hours as f64 / HOURS_PER_YEAR
    }
}

/// Cost parameters of one sizing variable. Capex and fom are per unit of
/// capacity, vom per unit of flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Economics {
    pub capex: f64,
    pub fom: f64,
    pub vom: f64,
    pub lifetime: f64,
}

impl Economics {
    pub const FREE: Economics = Economics {
        capex: 0.0,
        fom: 0.0,
        vom: 0.0,
        lifetime: 30.0,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

/// Flow of `commodity` per unit of a node's reference flow.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub commodity: String,
    pub direction: Direction,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConversionNode {
    pub output: String,
    pub factors: Vec<Factor>,
    pub min_level: f64,
    pub ramp: f64,
    pub economics: Economics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageNode {
    pub commodity: String,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    pub self_discharge: f64,
    pub d2c_ratio: f64,
    pub min_inventory: f64,
    /// Stored mass per volume in kg/m³, for volume reporting only.
    pub density: Option<f64>,
    /// Auxiliary input per unit charged.
    pub aux: Option<(String, f64)>,
    pub flow_economics: Economics,
    pub stock_economics: Economics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceNode {
    pub commodity: String,
    pub profile: String,
    pub economics: Economics,
}

/// Moves or transforms one commodity. Capacity and vom apply to the input side.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportNode {
    pub input: String,
    pub output: String,
    pub efficiency: f64,
    pub min_level: f64,
    pub ramp: f64,
    pub factors: Vec<Factor>,
    pub economics: Economics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Liquid,
    Gaseous,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Liquid => "liquid",
            Phase::Gaseous => "gaseous",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "liquid" => Ok(Phase::Liquid),
            "gaseous" => Ok(Phase::Gaseous),
            _ => Err(format!("unknown phase `{s}`, expected liquid or gaseous")),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandNode {
    pub commodity: String,
    /// Constant hourly quantity in the commodity's unit.
    pub quantity: f64,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Conversion(ConversionNode),
    Storage(StorageNode),
    Source(SourceNode),
    Transport(TransportNode),
    Demand(DemandNode),
}

impl NodeKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            NodeKind::Conversion(_) => "conversion",
            NodeKind::Storage(_) => "storage",
            NodeKind::Source(_) => "source",
            NodeKind::Transport(_) => "transport",
            NodeKind::Demand(_) => "demand",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub name: String,
    pub site: Option<String>,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub commodity: String,
    pub direction: Direction,
}

impl Node {
    /// Attachment points of the node. Conversion and auxiliary ports are named
    /// after their commodity; the main ports of storage, transport, source and
    /// demand nodes are `in` and `out`.
    pub fn ports(&self) -> Vec<Port> {
        let port = |name: &str, commodity: &str, direction| Port {
            name: name.to_string(),
            commodity: commodity.to_string(),
            direction,
        };
        let mut ports = Vec::new();
        match &self.kind {
            NodeKind::Conversion(c) => {
                ports.push(port(&c.output, &c.output, Direction::Out));
                for f in &c.factors {
                    ports.push(port(&f.commodity, &f.commodity, f.direction));
                }
            }
            NodeKind::Storage(s) => {
                ports.push(port("in", &s.commodity, Direction::In));
                ports.push(port("out", &s.commodity, Direction::Out));
                if let Some((c, _)) = &s.aux {
                    ports.push(port(c, c, Direction::In));
                }
            }
            NodeKind::Source(s) => ports.push(port("out", &s.commodity, Direction::Out)),
            NodeKind::Transport(t) => {
                ports.push(port("in", &t.input, Direction::In));
                ports.push(port("out", &t.output, Direction::Out));
                for f in &t.factors {
                    ports.push(port(&f.commodity, &f.commodity, f.direction));
                }
            }
            NodeKind::Demand(d) => ports.push(port("in", &d.commodity, Direction::In)),
        }
        ports
    }

    pub fn port(&self, name: &str) -> Option<Port> {
        self.ports().into_iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub node: String,
    pub port: String,
}

impl Endpoint {
    pub fn new(node: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            node: node.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.node, self.port)
    }
}

/// Conservation of one commodity at every hour.
///
/// An import hyperedge has no producers and no balance row: its consumers draw
/// from outside the hub for free.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperedge {
    pub name: String,
    pub commodity: String,
    pub producers: Vec<Endpoint>,
    pub consumers: Vec<Endpoint>,
    pub free_disposal: bool,
    pub import: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub name: String,
    pub label: String,
    pub load_center: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HubModel {
    pub name: String,
    pub horizon: Horizon,
    pub wacc: f64,
    pub sites: Vec<Site>,
    pub commodities: Vec<Commodity>,
    /// Higher heating value in MWh/t, per mass commodity.
    pub hhv: Vec<(String, f64)>,
    pub nodes: Vec<Node>,
    pub hyperedges: Vec<Hyperedge>,
}

impl HubModel {
    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn node_mut(&mut self, name: &str) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| n.name == name)
    }

    pub fn commodity(&self, name: &str) -> Option<&Commodity> {
        self.commodities.iter().find(|c| c.name == name)
    }

    pub fn hyperedge(&self, name: &str) -> Option<&Hyperedge> {
        self.hyperedges.iter().find(|h| h.name == name)
    }

    pub fn hhv(&self, commodity: &str) -> Option<f64> {
        self.hhv.iter().find(|(c, _)| c == commodity).map(|(_, v)| *v)
    }

    /// Energy content in MWh of one native unit (kt or GWh) of `commodity`.
    pub fn energy_per_unit(&self, commodity: &str) -> Option<f64> {
        match self.commodity(commodity)?.unit {
            Unit::GWh => Some(1000.0),
            Unit::Kt => self.hhv(commodity).map(|h| h * 1000.0),
        }
    }

    pub fn demand_nodes(&self) -> impl Iterator<Item = (&Node, &DemandNode)> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Demand(d) => Some((n, d)),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("lifetime must be positive, got {0}")]
    Lifetime(f64),
    #[error("wacc must lie in [0, 1), got {0}")]
    Wacc(f64),
    #[error("capacity must be nonnegative, got {0}")]
    Capacity(f64),
}

/// Capital recovery factor `wacc / (1 - (1 + wacc)^-lifetime)`.
pub fn annuity_factor(wacc: f64, lifetime: f64) -> Result<f64, DomainError> {
    if !(lifetime > 0.0) || !lifetime.is_finite() {
        return Err(DomainError::Lifetime(lifetime));
    }
    if !(0.0..1.0).contains(&wacc) {
        return Err(DomainError::Wacc(wacc));
    }
    if wacc == 0.0 {
        return Ok(1.0 / lifetime);
    }
    Ok(wacc / -(-lifetime * wacc.ln_1p()).exp_m1())
}

/// Yearly fixed cost `(annuity · capex + fom) · capacity`.
pub fn annualized_fixed_cost(econ: &Economics, wacc: f64, capacity: f64) -> Result<f64, DomainError> {
    if !(capacity >= 0.0) {
        return Err(DomainError::Capacity(capacity));
    }
    Ok((annuity_factor(wacc, econ.lifetime)? * econ.capex + econ.fom) * capacity)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    /// The model cannot be compiled.
    Structural,
    /// The model compiles but cannot meet its demand.
    Feasibility,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Model,
    Commodity(String),
    Site(String),
    Node(String),
    Hyperedge(String),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Model => f.write_str("model"),
            Subject::Commodity(n) => write!(f, "commodity {n}"),
            Subject::Site(n) => write!(f, "site {n}"),
            Subject::Node(n) => write!(f, "node {n}"),
            Subject::Hyperedge(n) => write!(f, "hyperedge {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Violation {
    pub severity: Severity,
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_structural(&self) -> bool {
        self.violations.iter().any(|v| v.severity == Severity::Structural)
    }

    pub fn structural(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Structural)
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, severity: Severity, subject: Subject, message: String) {
        self.out.push(Violation { severity, subject, message });
    }

    fn structural(&mut self, subject: &Subject, message: impl Into<String>) {
        self.push(Severity::Structural, subject.clone(), message.into());
    }

    fn range(&mut self, subject: &Subject, key: &str, v: f64, lo: f64, hi: f64, lo_open: bool, hi_open: bool) {
        let ok = v.is_finite()
            && if lo_open { v > lo } else { v >= lo }
            && if hi_open { v < hi } else { v <= hi };
        if !ok {
            let l = if lo_open { '(' } else { '[' };
            let h = if hi_open { ')' } else { ']' };
            let hi_txt = if hi.is_infinite() { "inf".to_string() } else { hi.to_string() };
            self.structural(subject, format!("{key} outside {l}{lo},{hi_txt}{h}"));
        }
    }

    fn economics(&mut self, subject: &Subject, prefix: &str, e: &Economics) {
        let inf = f64::INFINITY;
        self.range(subject, &format!("{prefix}capex"), e.capex, 0.0, inf, false, true);
        self.range(subject, &format!("{prefix}fom"), e.fom, 0.0, inf, false, true);
        self.range(subject, &format!("{prefix}vom"), e.vom, 0.0, inf, false, true);
        self.range(subject, &format!("{prefix}lifetime"), e.lifetime, 0.0, inf, true, true);
    }
}

/// Checks every model invariant and lists the violations.
pub fn validate_model(model: &HubModel) -> ValidationReport {
    let mut ck = Checker { out: Vec::new() };
    let inf = f64::INFINITY;
    let m = Subject::Model;
    if model.horizon.hours == 0 {
        ck.structural(&m, "horizon must be at least one hour");
    }
    ck.range(&m, "wacc", model.wacc, 0.0, 1.0, false, true);

    let mut seen = HashSet::new();
    for c in &model.commodities {
        if !seen.insert(c.name.as_str()) {
            ck.structural(&Subject::Commodity(c.name.clone()), "duplicate commodity");
        }
    }
    let commodities: HashMap<&str, &Commodity> = model.commodities.iter().map(|c| (c.name.as_str(), c)).collect();
    let mut seen = HashSet::new();
    for s in &model.sites {
        if !seen.insert(s.name.as_str()) {
            ck.structural(&Subject::Site(s.name.clone()), "duplicate site");
        }
    }
    let sites: HashSet<&str> = model.sites.iter().map(|s| s.name.as_str()).collect();
    let mut seen = HashSet::new();
    for (c, v) in &model.hhv {
        let subj = Subject::Commodity(c.clone());
        if !seen.insert(c.as_str()) {
            ck.structural(&subj, "duplicate hhv entry");
        }
        match commodities.get(c.as_str()) {
            None => ck.structural(&subj, "hhv for unknown commodity"),
            Some(cm) if cm.unit != Unit::Kt => ck.structural(&subj, "hhv given for an energy commodity"),
            _ => {}
        }
        ck.range(&subj, "hhv", *v, 0.0, inf, true, true);
    }

    let mut seen = HashSet::new();
    for node in &model.nodes {
        let subj = Subject::Node(node.name.clone());
        if !seen.insert(node.name.as_str()) {
            ck.structural(&subj, "duplicate node");
        }
        if let Some(site) = &node.site {
            if !sites.contains(site.as_str()) {
                ck.structural(&subj, format!("unknown site {site}"));
            }
        }
        let mut names = HashSet::new();
        for p in node.ports() {
            if !names.insert(p.name.clone()) {
                ck.structural(&subj, format!("port {} declared twice", p.name));
            }
            if !commodities.contains_key(p.commodity.as_str()) {
                ck.structural(&subj, format!("unknown commodity {}", p.commodity));
            }
        }
        let factors = |ck: &mut Checker, fs: &[Factor]| {
            for f in fs {
                ck.range(&subj, &format!("factor {}", f.commodity), f.coef, 0.0, inf, true, true);
            }
        };
        match &node.kind {
            NodeKind::Conversion(c) => {
                factors(&mut ck, &c.factors);
                ck.range(&subj, "min_level", c.min_level, 0.0, 1.0, false, false);
                ck.range(&subj, "ramp", c.ramp, 0.0, 1.0, false, false);
                ck.economics(&subj, "", &c.economics);
            }
            NodeKind::Storage(s) => {
                ck.range(&subj, "charge_eff", s.charge_eff, 0.0, 1.0, true, false);
                ck.range(&subj, "discharge_eff", s.discharge_eff, 0.0, 1.0, true, false);
                ck.range(&subj, "self_discharge", s.self_discharge, 0.0, 1.0, false, true);
                ck.range(&subj, "d2c_ratio", s.d2c_ratio, 0.0, inf, true, true);
                ck.range(&subj, "min_inventory", s.min_inventory, 0.0, 1.0, false, true);
                if let Some(d) = s.density {
                    ck.range(&subj, "density", d, 0.0, inf, true, true);
                }
                if let Some((c, v)) = &s.aux {
                    ck.range(&subj, &format!("aux {c}"), *v, 0.0, inf, true, true);
                }
                ck.economics(&subj, "flow_", &s.flow_economics);
                ck.economics(&subj, "stock_", &s.stock_economics);
            }
            NodeKind::Source(s) => ck.economics(&subj, "", &s.economics),
            NodeKind::Transport(t) => {
                factors(&mut ck, &t.factors);
                ck.range(&subj, "efficiency", t.efficiency, 0.0, 1.0, true, false);
                ck.range(&subj, "min_level", t.min_level, 0.0, 1.0, false, false);
                ck.range(&subj, "ramp", t.ramp, 0.0, 1.0, false, false);
                ck.economics(&subj, "", &t.economics);
                if let (Some(a), Some(b)) = (commodities.get(t.input.as_str()), commodities.get(t.output.as_str())) {
                    if a.unit != b.unit {
                        ck.structural(&subj, "unit mismatch between input and output");
                    }
                }
            }
            NodeKind::Demand(d) => {
                ck.range(&subj, "quantity", d.quantity, 0.0, inf, true, true);
                if commodities.get(d.commodity.as_str()).is_some_and(|c| c.unit == Unit::Kt) && model.hhv(&d.commodity).is_none() {
                    ck.structural(&subj, format!("no hhv for delivered commodity {}", d.commodity));
                }
            }
        }
    }

    let nodes: HashMap<&str, &Node> = model.nodes.iter().map(|n| (n.name.as_str(), n)).collect();
    let mut attached: BTreeMap<Endpoint, usize> = BTreeMap::new();
    let mut seen = HashSet::new();
    for e in &model.hyperedges {
        let subj = Subject::Hyperedge(e.name.clone());
        if !seen.insert(e.name.as_str()) {
            ck.structural(&subj, "duplicate hyperedge");
        }
        let commodity = commodities.get(e.commodity.as_str());
        if commodity.is_none() {
            ck.structural(&subj, format!("unknown commodity {}", e.commodity));
        }
        if e.free_disposal && !commodity.is_some_and(|c| c.byproduct) {
            ck.structural(&subj, "free disposal on a commodity that is not a byproduct");
        }
        if e.import && !e.producers.is_empty() {
            ck.structural(&subj, "import hyperedge with producers");
        }
        if e.import && e.free_disposal {
            ck.structural(&subj, "import hyperedge cannot also dispose");
        }
        for (ep, want) in e
            .producers
            .iter()
            .map(|p| (p, Direction::Out))
            .chain(e.consumers.iter().map(|c| (c, Direction::In)))
        {
            *attached.entry(ep.clone()).or_default() += 1;
            let Some(node) = nodes.get(ep.node.as_str()) else {
                ck.structural(&subj, format!("unknown node {}", ep.node));
                continue;
            };
            let Some(port) = node.port(&ep.port) else {
                ck.structural(&subj, format!("node {} has no port {}", ep.node, ep.port));
                continue;
            };
            if port.direction != want {
                let role = if want == Direction::Out { "producer" } else { "consumer" };
                ck.structural(&subj, format!("{ep} is an {} port used as a {role}", port.direction.as_str()));
            }
            if port.commodity != e.commodity {
                let units = (commodities.get(port.commodity.as_str()).map(|c| c.unit), commodity.map(|c| c.unit));
                match units {
                    (Some(a), Some(b)) if a != b => {
                        ck.structural(&subj, format!("unit mismatch: {ep} carries {a}, hyperedge carries {b}"))
                    }
                    _ => ck.structural(&subj, format!("commodity mismatch: {ep} carries {}", port.commodity)),
                }
            }
        }
    }
    for node in &model.nodes {
        for p in node.ports() {
            let ep = Endpoint::new(&node.name, &p.name);
            match attached.get(&ep).copied().unwrap_or(0) {
                0 => ck.structural(&Subject::Node(node.name.clone()), format!("port {} unattached", p.name)),
                1 => {}
                k => ck.structural(&Subject::Node(node.name.clone()), format!("port {} attached {k} times", p.name)),
            }
        }
    }

    if !ck.out.iter().any(|v| v.severity == Severity::Structural) {
        feasibility(model, &mut ck);
    }
    ck.out.sort();
    ck.out.dedup();
    ValidationReport { violations: ck.out }
}

/// Supply checks on a structurally sound model.
fn feasibility(model: &HubModel, ck: &mut Checker) {
    for e in &model.hyperedges {
        if !e.import && e.producers.is_empty() && !e.consumers.is_empty() {
            ck.push(
                Severity::Feasibility,
                Subject::Hyperedge(e.name.clone()),
                format!("{} is consumed but never produced or imported", e.commodity),
            );
        }
    }
    // A node can run once every input edge is imported or has a running producer.
    let feeds: HashMap<Endpoint, &Hyperedge> = model
        .hyperedges
        .iter()
        .flat_map(|e| e.consumers.iter().map(move |c| (c.clone(), e)))
        .collect();
    let mut live: BTreeSet<&str> = BTreeSet::new();
    let mut changed = true;
    while changed {
        changed = false;
        for node in &model.nodes {
            if live.contains(node.name.as_str()) {
                continue;
            }
            let ok = node.ports().iter().filter(|p| p.direction == Direction::In).all(|p| {
                feeds.get(&Endpoint::new(&node.name, &p.name)).is_some_and(|e| {
                    e.import || e.producers.iter().any(|q| q.node != node.name && live.contains(q.node.as_str()))
                })
            });
            if ok {
                live.insert(node.name.as_str());
                changed = true;
            }
        }
    }
    for (node, _) in model.demand_nodes() {
        if !live.contains(node.name.as_str()) {
            ck.push(
                Severity::Feasibility,
                Subject::Node(node.name.clone()),
                "demand is not reachable from any source".to_string(),
            );
        }
    }
}
