//! Flattening a hub model over its horizon into a linear program.

use std::collections::HashMap;
use std::fmt;

use hubforge_lp::{LinearProgram, Sense};
use thiserror::Error;

use crate::model::{annuity_factor, validate_model, Economics, HubModel, Node, NodeKind, Violation};
use crate::profiles::ProfileSet;

/// Identity of an LP column: a node variable at hour `t`, or a sizing
/// variable when `t` is `None`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub node: String,
    pub var: String,
    pub t: Option<usize>,
}

impl VarKey {
    /// Column name `n_<node>_<var>_<t>` or `n_<node>_<var>`.
    pub fn lp_name(&self) -> String {
        match self.t {
            Some(t) => format!("n_{}_{}_{t}", self.node, self.var),
            None => format!("n_{}_{}", self.node, self.var),
        }
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.t {
            Some(t) => write!(f, "{}.{}[{t}]", self.node, self.var),
            None => write!(f, "{}.{}", self.node, self.var),
        }
    }
}

/// Bijection between [`VarKey`]s and column indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariableMap {
    keys: Vec<VarKey>,
    index: HashMap<VarKey, usize>,
}

impl VariableMap {
    fn insert(&mut self, key: VarKey) -> usize {
        let j = self.keys.len();
        self.index.insert(key.clone(), j);
        self.keys.push(key);
        j
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, col: usize) -> &VarKey {
        &self.keys[col]
    }

    pub fn keys(&self) -> &[VarKey] {
        &self.keys
    }

    pub fn col(&self, node: &str, var: &str, t: Option<usize>) -> Option<usize> {
        self.index.get(&VarKey { node: node.to_string(), var: var.to_string(), t }).copied()
    }
}

/// Balance row of one hyperedge at one hour.
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceRow {
    pub edge: String,
    pub t: usize,
    pub row: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledModel {
    pub lp: LinearProgram,
    pub vars: VariableMap,
    pub balances: Vec<BalanceRow>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CompileError {
    #[error("model is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),
    #[error("node {node} uses profile `{profile}` which is not loaded")]
    MissingProfile { node: String, profile: String },
    #[error("profile `{profile}` has {len} hours, horizon needs {hours}")]
    ShortProfile { profile: String, len: usize, hours: usize },
    #[error("profile `{profile}` value {value} at hour {t} is outside [0, 1]")]
    ProfileRange { profile: String, t: usize, value: f64 },
}

/// The flow a port contributes to a balance row at hour `t`.
pub(crate) enum PortFlow {
    Column(usize, f64),
    Constant(f64),
}

/// Which column and coefficient carry each port of `node`.
pub(crate) fn port_flow(node: &Node, port: &str, vars: &VariableMap, t: usize) -> Option<PortFlow> {
    let col = |var: &str| vars.col(&node.name, var, Some(t));
    let flow = match &node.kind {
        NodeKind::Conversion(c) => {
            let out = col("out")?;
            if port == c.output {
                PortFlow::Column(out, 1.0)
            } else {
                let f = c.factors.iter().find(|f| f.commodity == port)?;
                PortFlow::Column(out, f.coef)
            }
        }
        NodeKind::Transport(tr) => {
            let flow = col("flow")?;
            match port {
                "in" => PortFlow::Column(flow, 1.0),
                "out" => PortFlow::Column(flow, tr.efficiency),
                _ => PortFlow::Column(flow, tr.factors.iter().find(|f| f.commodity == port)?.coef),
            }
        }
        NodeKind::Storage(s) => match port {
            "in" => PortFlow::Column(col("charge")?, 1.0),
            "out" => PortFlow::Column(col("discharge")?, 1.0),
            _ => {
                let (c, v) = s.aux.as_ref()?;
                if c != port {
                    return None;
                }
                PortFlow::Column(col("charge")?, *v)
            }
        },
        NodeKind::Source(_) => PortFlow::Column(col("gen")?, 1.0),
        NodeKind::Demand(d) => PortFlow::Constant(d.quantity),
    };
    Some(flow)
}

/// Sorts terms by column, merges repeats and drops zeros.
fn merged(mut terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (j, a) in terms {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

struct Builder {
    lp: LinearProgram,
    vars: VariableMap,
}

impl Builder {
    fn col(&mut self, node: &str, var: &str, t: Option<usize>, cost: f64) -> usize {
        let key = VarKey { node: node.to_string(), var: var.to_string(), t };
        let name = key.lp_name();
        let j = self.vars.insert(key);
        self.lp.add_col(name, cost, 0.0, f64::INFINITY);
        j
    }

    fn series(&mut self, node: &str, var: &str, hours: usize, cost: f64) -> Vec<usize> {
        (0..hours).map(|t| self.col(node, var, Some(t), cost)).collect()
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.lp.add_row(name, merged(terms), sense, rhs)
    }

    /// Capacity, minimum level and ramping rows of a conversion or transport node.
    fn operating_rows(&mut self, node: &str, flow: &[usize], cap: usize, min_level: f64, ramp: f64) {
        let hours = flow.len();
        for t in 0..hours {
            if min_level >= 1.0 {
                self.row(format!("{node}_level_{t}"), vec![(flow[t], 1.0), (cap, -1.0)], Sense::Eq, 0.0);
                continue;
            }
            self.row(format!("{node}_cap_{t}"), vec![(flow[t], 1.0), (cap, -1.0)], Sense::Le, 0.0);
            if min_level > 0.0 {
                self.row(format!("{node}_min_{t}"), vec![(flow[t], 1.0), (cap, -min_level)], Sense::Ge, 0.0);
            }
        }
        if min_level >= 1.0 || ramp >= 1.0 || hours < 2 {
            return;
        }
        for t in 0..hours {
            let next = flow[(t + 1) % hours];
            let terms = vec![(next, 1.0), (flow[t], -1.0), (cap, -ramp)];
            self.row(format!("{node}_up_{t}"), terms, Sense::Le, 0.0);
            let terms = vec![(next, 1.0), (flow[t], -1.0), (cap, ramp)];
            self.row(format!("{node}_down_{t}"), terms, Sense::Ge, 0.0);
        }
    }
}

/// Horizon-weighted yearly fixed cost of one unit of capacity.
pub fn capacity_cost(model: &HubModel, econ: &Economics) -> f64 {
    let annuity = annuity_factor(model.wacc, econ.lifetime).unwrap_or(0.0);
    model.horizon.years() * (annuity * econ.capex + econ.fom)
}

/// Builds the LP of `model` over its horizon.
///
/// Columns are emitted node by node, sizing variables first. Balance rows come
/// first, one per non-import hyperedge and hour, followed by the node rows.
pub fn compile(model: &HubModel, profiles: &ProfileSet) -> Result<CompiledModel, CompileError> {
    let report = validate_model(model);
    if report.has_structural() {
        return Err(CompileError::InvalidModel(report.structural().cloned().collect()));
    }
    let hours = model.horizon.hours;
    for node in &model.nodes {
        if let NodeKind::Source(s) = &node.kind {
            let series = profiles.get(&s.profile).ok_or_else(|| CompileError::MissingProfile {
                node: node.name.clone(),
                profile: s.profile.clone(),
            })?;
            if series.len() < hours {
                return Err(CompileError::ShortProfile { profile: s.profile.clone(), len: series.len(), hours });
            }
            if let Some((t, v)) = series[..hours].iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(CompileError::ProfileRange { profile: s.profile.clone(), t, value: *v });
            }
        }
    }

    let mut b = Builder { lp: LinearProgram::new(), vars: VariableMap::default() };
    let mut node_cols: Vec<Vec<(String, Vec<usize>)>> = Vec::new();
    let mut sizing: Vec<Vec<usize>> = Vec::new();
    for node in &model.nodes {
        let n = node.name.as_str();
        let (caps, series) = match &node.kind {
            NodeKind::Conversion(c) => {
                let cap = b.col(n, "cap", None, capacity_cost(model, &c.economics));
                (vec![cap], vec![("out".to_string(), b.series(n, "out", hours, c.economics.vom))])
            }
            NodeKind::Transport(tr) => {
                let cap = b.col(n, "cap", None, capacity_cost(model, &tr.economics));
                (vec![cap], vec![("flow".to_string(), b.series(n, "flow", hours, tr.economics.vom))])
            }
            NodeKind::Source(s) => {
                let cap = b.col(n, "cap", None, capacity_cost(model, &s.economics));
                (vec![cap], vec![("gen".to_string(), b.series(n, "gen", hours, s.economics.vom))])
            }
            NodeKind::Storage(s) => {
                let f = b.col(n, "flow_cap", None, capacity_cost(model, &s.flow_economics));
                let st = b.col(n, "stock_cap", None, capacity_cost(model, &s.stock_economics));
                let ch = b.series(n, "charge", hours, s.flow_economics.vom);
                let dis = b.series(n, "discharge", hours, s.stock_economics.vom);
                let inv = b.series(n, "inventory", hours, 0.0);
                (vec![f, st], vec![("charge".into(), ch), ("discharge".into(), dis), ("inventory".into(), inv)])
            }
            NodeKind::Demand(_) => (vec![], vec![]),
        };
        sizing.push(caps);
        node_cols.push(series);
    }

    let nodes: HashMap<&str, &Node> = model.nodes.iter().map(|n| (n.name.as_str(), n)).collect();
    let mut balances = Vec::new();
    for e in model.hyperedges.iter().filter(|e| !e.import) {
        let sense = if e.free_disposal { Sense::Ge } else { Sense::Eq };
        for t in 0..hours {
            let mut terms = Vec::new();
            let mut rhs = 0.0;
            for (eps, sign) in [(&e.producers, 1.0), (&e.consumers, -1.0)] {
                for ep in eps {
                    match port_flow(nodes[ep.node.as_str()], &ep.port, &b.vars, t) {
                        Some(PortFlow::Column(j, a)) => terms.push((j, sign * a)),
                        Some(PortFlow::Constant(q)) => rhs -= sign * q,
                        None => unreachable!("validated port {ep}"),
                    }
                }
            }
            let row = b.row(format!("b_{}_{t}", e.name), terms, sense, rhs);
            balances.push(BalanceRow { edge: e.name.clone(), t, row });
        }
    }

    for (k, node) in model.nodes.iter().enumerate() {
        let n = node.name.as_str();
        let cols = &node_cols[k];
        match &node.kind {
            NodeKind::Conversion(c) => b.operating_rows(n, &cols[0].1, sizing[k][0], c.min_level, c.ramp),
            NodeKind::Transport(tr) => b.operating_rows(n, &cols[0].1, sizing[k][0], tr.min_level, tr.ramp),
            NodeKind::Source(s) => {
                let cf = profiles.get(&s.profile).expect("checked above");
                for t in 0..hours {
                    let terms = vec![(cols[0].1[t], 1.0), (sizing[k][0], -cf[t])];
                    b.row(format!("{n}_avail_{t}"), terms, Sense::Le, 0.0);
                }
            }
            NodeKind::Storage(s) => {
                let (fcap, scap) = (sizing[k][0], sizing[k][1]);
                let (ch, dis, inv) = (&cols[0].1, &cols[1].1, &cols[2].1);
                for t in 0..hours {
                    let terms = vec![
                        (inv[(t + 1) % hours], 1.0),
                        (inv[t], -(1.0 - s.self_discharge)),
                        (ch[t], -s.charge_eff),
                        (dis[t], 1.0 / s.discharge_eff),
                    ];
                    b.row(format!("{n}_dyn_{t}"), terms, Sense::Eq, 0.0);
                    b.row(format!("{n}_charge_{t}"), vec![(ch[t], 1.0), (fcap, -1.0)], Sense::Le, 0.0);
                    b.row(format!("{n}_discharge_{t}"), vec![(dis[t], 1.0), (fcap, -s.d2c_ratio)], Sense::Le, 0.0);
                    b.row(format!("{n}_stock_{t}"), vec![(inv[t], 1.0), (scap, -1.0)], Sense::Le, 0.0);
                    if s.min_inventory > 0.0 {
                        let terms = vec![(inv[t], 1.0), (scap, -s.min_inventory)];
                        b.row(format!("{n}_floor_{t}"), terms, Sense::Ge, 0.0);
                    }
                }
            }
            NodeKind::Demand(_) => {}
        }
    }
    Ok(CompiledModel { lp: b.lp, vars: b.vars, balances })
}
