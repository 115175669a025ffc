use std::fmt::Write;

use crate::model::{Economics, Factor, HubModel, NodeKind};

/// Shortest text that parses back to the same bits.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn econ(out: &mut String, prefix: &str, e: &Economics) {
    let _ = writeln!(out, "    {prefix}capex = {};", num(e.capex));
    let _ = writeln!(out, "    {prefix}fom = {};", num(e.fom));
    let _ = writeln!(out, "    {prefix}vom = {};", num(e.vom));
    let _ = writeln!(out, "    {prefix}lifetime = {};", num(e.lifetime));
}

fn factors(out: &mut String, fs: &[Factor]) {
    for f in fs {
        let _ = writeln!(out, "    factor {} {} {};", f.commodity, f.direction.as_str(), num(f.coef));
    }
}

/// Canonical source text for `model`. Every key is written out, so defaults
/// never matter when the text is read back.
pub fn format_model(model: &HubModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "hub {};", model.name);
    let _ = writeln!(out, "horizon {};", model.horizon.hours);
    let _ = writeln!(out, "wacc {};", num(model.wacc));
    if !model.sites.is_empty() {
        out.push('\n');
    }
    for s in &model.sites {
        let flag = if s.load_center { " load_center" } else { "" };
        let _ = writeln!(out, "site {} \"{}\"{flag};", s.name, s.label);
    }
    if !model.commodities.is_empty() {
        out.push('\n');
    }
    for c in &model.commodities {
        let mut flags = String::new();
        if c.byproduct {
            flags.push_str(" byproduct");
        }
        if c.local {
            flags.push_str(" local");
        }
        let _ = writeln!(out, "commodity {} {}{flags};", c.name, c.unit);
    }
    if !model.hhv.is_empty() {
        out.push('\n');
    }
    for (c, v) in &model.hhv {
        let _ = writeln!(out, "hhv {c} {};", num(*v));
    }
    for node in &model.nodes {
        let _ = writeln!(out, "\nnode {} kind {} {{", node.name, node.kind.keyword());
        if let Some(site) = &node.site {
            let _ = writeln!(out, "    site = {site};");
        }
        match &node.kind {
            NodeKind::Conversion(c) => {
                let _ = writeln!(out, "    output = {};", c.output);
                factors(&mut out, &c.factors);
                let _ = writeln!(out, "    min_level = {};", num(c.min_level));
                let _ = writeln!(out, "    ramp = {};", num(c.ramp));
                econ(&mut out, "", &c.economics);
            }
            NodeKind::Storage(s) => {
                let _ = writeln!(out, "    commodity = {};", s.commodity);
                let _ = writeln!(out, "    charge_eff = {};", num(s.charge_eff));
                let _ = writeln!(out, "    discharge_eff = {};", num(s.discharge_eff));
                let _ = writeln!(out, "    self_discharge = {};", num(s.self_discharge));
                let _ = writeln!(out, "    d2c_ratio = {};", num(s.d2c_ratio));
                let _ = writeln!(out, "    min_inventory = {};", num(s.min_inventory));
                if let Some(d) = s.density {
                    let _ = writeln!(out, "    density = {};", num(d));
                }
                if let Some((c, v)) = &s.aux {
                    let _ = writeln!(out, "    aux {c} {};", num(*v));
                }
                econ(&mut out, "flow_", &s.flow_economics);
                econ(&mut out, "stock_", &s.stock_economics);
            }
            NodeKind::Source(s) => {
                let _ = writeln!(out, "    commodity = {};", s.commodity);
                let _ = writeln!(out, "    profile = {};", s.profile);
                econ(&mut out, "", &s.economics);
            }
            NodeKind::Transport(t) => {
                let _ = writeln!(out, "    input = {};", t.input);
                let _ = writeln!(out, "    output = {};", t.output);
                let _ = writeln!(out, "    efficiency = {};", num(t.efficiency));
                factors(&mut out, &t.factors);
                let _ = writeln!(out, "    min_level = {};", num(t.min_level));
                let _ = writeln!(out, "    ramp = {};", num(t.ramp));
                econ(&mut out, "", &t.economics);
            }
            NodeKind::Demand(d) => {
                let _ = writeln!(out, "    commodity = {};", d.commodity);
                let _ = writeln!(out, "    quantity = {};", num(d.quantity));
                let _ = writeln!(out, "    phase = {};", d.phase);
            }
        }
        out.push_str("}\n");
    }
    for e in &model.hyperedges {
        if e.name == e.commodity {
            let _ = writeln!(out, "\nhyperedge {} {{", e.commodity);
        } else {
            let _ = writeln!(out, "\nhyperedge {} as {} {{", e.commodity, e.name);
        }
        for p in &e.producers {
            let _ = writeln!(out, "    from {p};");
        }
        for c in &e.consumers {
            let _ = writeln!(out, "    to {c};");
        }
        if e.free_disposal {
            out.push_str("    free_disposal;\n");
        }
        if e.import {
            out.push_str("    import;\n");
        }
        out.push_str("}\n");
    }
    out
}
