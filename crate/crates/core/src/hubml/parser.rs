use std::collections::{BTreeMap, HashMap};

use super::lexer::{lex, Tok, Token};
use super::{ErrorKind, ParseError, SourceSpan};
use crate::model::{
    validate_model, Commodity, ConversionNode, DemandNode, Direction, Economics, Endpoint, Factor, Horizon, HubModel,
    Hyperedge, Node, NodeKind, Phase, Site, SourceNode, StorageNode, Subject, TransportNode, Unit,
};

const TOP_KEYWORDS: &[&str] = &["hub", "horizon", "wacc", "site", "commodity", "hhv", "node", "hyperedge"];

#[derive(Clone, Debug)]
enum Value {
    Num(f64),
    Ident(String),
}

#[derive(Clone, Debug)]
enum Item {
    Assign {
        key: String,
        key_span: SourceSpan,
        value: Value,
        value_span: SourceSpan,
    },
    Factor {
        factor: Factor,
        span: SourceSpan,
    },
    Aux {
        commodity: String,
        coef: f64,
        span: SourceSpan,
    },
}

struct NodeDecl {
    name: String,
    name_span: SourceSpan,
    kind: String,
    kind_span: SourceSpan,
    items: Vec<Item>,
}

struct EdgeDecl {
    edge: Hyperedge,
    span: SourceSpan,
    flags: Vec<(String, SourceSpan)>,
}

type Fail = ();

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&mut self, span: SourceSpan, msg: impl Into<String>) {
        self.errors.push(ParseError::new(span, ErrorKind::Syntactic, msg));
    }

    fn unexpected(&mut self, what: &str) -> Fail {
        let t = self.peek().clone();
        self.syntax(t.span, format!("expected {what}, found {}", t.tok.describe()));
    }

    fn ident(&mut self, what: &str) -> Result<(String, SourceSpan), Fail> {
        if let Tok::Ident(s) = &self.peek().tok {
            let s = s.clone();
            let span = self.bump().span;
            return Ok((s, span));
        }
        Err(self.unexpected(what))
    }

    fn keyword(&mut self, kw: &str) -> Result<SourceSpan, Fail> {
        if matches!(&self.peek().tok, Tok::Ident(s) if s == kw) {
            return Ok(self.bump().span);
        }
        Err(self.unexpected(&format!("`{kw}`")))
    }

    fn number(&mut self, what: &str) -> Result<(f64, SourceSpan), Fail> {
        if let Tok::Number(v) = self.peek().tok {
            let span = self.bump().span;
            return Ok((v, span));
        }
        Err(self.unexpected(what))
    }

    fn punct(&mut self, tok: Tok) -> Result<SourceSpan, Fail> {
        if self.peek().tok == tok {
            return Ok(self.bump().span);
        }
        Err(self.unexpected(&tok.describe()))
    }

    fn at_ident(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    /// Skips to the end of the current top-level declaration.
    fn sync_top(&mut self) {
        let mut depth = 0usize;
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth <= 1 {
                        self.bump();
                        return;
                    }
                    depth -= 1;
                }
                Tok::Ident(s) if depth == 0 && TOP_KEYWORDS.contains(&s.as_str()) => return,
                _ => {}
            }
            self.bump();
        }
    }

    /// Skips to the end of the current statement inside a block.
    fn sync_item(&mut self) {
        loop {
            match self.peek().tok {
                Tok::Eof | Tok::RBrace => return,
                Tok::Semi => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn block<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, Fail>) -> Result<Vec<T>, Fail> {
        self.punct(Tok::LBrace)?;
        let mut out = Vec::new();
        loop {
            match self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    return Ok(out);
                }
                Tok::Eof => {
                    let span = self.peek().span;
                    self.syntax(span, "unclosed block, expected `}`");
                    return Ok(out);
                }
                _ => match item(self) {
                    Ok(v) => out.push(v),
                    Err(()) => self.sync_item(),
                },
            }
        }
    }

    fn node_item(&mut self) -> Result<Item, Fail> {
        let (word, span) = self.ident("a key, `factor` or `aux`")?;
        match word.as_str() {
            "factor" => {
                let (commodity, _) = self.ident("a commodity name")?;
                let (dir, dir_span) = self.ident("`in` or `out`")?;
                let direction = match dir.as_str() {
                    "in" => Direction::In,
                    "out" => Direction::Out,
                    _ => {
                        self.syntax(dir_span, format!("expected `in` or `out`, found `{dir}`"));
                        return Err(());
                    }
                };
                let (coef, _) = self.number("a coefficient")?;
                self.punct(Tok::Semi)?;
                Ok(Item::Factor { factor: Factor { commodity, direction, coef }, span })
            }
            "aux" => {
                let (commodity, _) = self.ident("a commodity name")?;
                let (coef, _) = self.number("a coefficient")?;
                self.punct(Tok::Semi)?;
                Ok(Item::Aux { commodity, coef, span })
            }
            _ => {
                self.punct(Tok::Eq)?;
                let t = self.bump();
                let value = match t.tok {
                    Tok::Number(v) => Value::Num(v),
                    Tok::Ident(s) => Value::Ident(s),
                    other => {
                        self.syntax(t.span, format!("expected a value, found {}", other.describe()));
                        return Err(());
                    }
                };
                self.punct(Tok::Semi)?;
                Ok(Item::Assign { key: word, key_span: span, value, value_span: t.span })
            }
        }
    }

    fn endpoint(&mut self) -> Result<Endpoint, Fail> {
        let (node, _) = self.ident("a node name")?;
        self.punct(Tok::Dot)?;
        let (port, _) = self.ident("a port name")?;
        Ok(Endpoint { node, port })
    }

    fn edge_item(&mut self) -> Result<(String, Option<Endpoint>, SourceSpan), Fail> {
        let (word, span) = self.ident("`from`, `to`, `free_disposal` or `import`")?;
        let ep = match word.as_str() {
            "from" | "to" => Some(self.endpoint()?),
            "free_disposal" | "import" => None,
            _ => {
                self.syntax(span, format!("unknown hyperedge statement `{word}`"));
                return Err(());
            }
        };
        self.punct(Tok::Semi)?;
        Ok((word, ep, span))
    }
}

#[derive(Default)]
struct Raw {
    name: Option<(String, SourceSpan)>,
    horizon: Option<(f64, SourceSpan)>,
    wacc: Option<(f64, SourceSpan)>,
    sites: Vec<(Site, SourceSpan)>,
    commodities: Vec<(Commodity, SourceSpan)>,
    hhv: Vec<(String, f64, SourceSpan)>,
    nodes: Vec<NodeDecl>,
    edges: Vec<EdgeDecl>,
}

fn parse_raw(p: &mut Parser) -> Raw {
    let mut raw = Raw::default();
    loop {
        let start = p.peek().clone();
        let res: Result<(), Fail> = match &start.tok {
            Tok::Eof => break,
            Tok::Ident(kw) => {
                let kw = kw.clone();
                p.bump();
                match kw.as_str() {
                    "hub" => header(p, &mut raw.name, start.span, |p| p.ident("a hub name")),
                    "horizon" => header(p, &mut raw.horizon, start.span, |p| p.number("an hour count")),
                    "wacc" => header(p, &mut raw.wacc, start.span, |p| p.number("a rate")),
                    "site" => (|| {
                        let (name, span) = p.ident("a site name")?;
                        let label = match p.bump() {
                            Token { tok: Tok::Str(s), .. } => s,
                            t => {
                                p.syntax(t.span, format!("expected a quoted label, found {}", t.tok.describe()));
                                return Err(());
                            }
                        };
                        let load_center = p.at_ident("load_center");
                        if load_center {
                            p.bump();
                        }
                        p.punct(Tok::Semi)?;
                        raw.sites.push((Site { name, label, load_center }, span));
                        Ok(())
                    })(),
                    "commodity" => (|| {
                        let (name, span) = p.ident("a commodity name")?;
                        let (unit, uspan) = p.ident("a unit (`GWh` or `kt`)")?;
                        let unit = match unit.as_str() {
                            "GWh" => Unit::GWh,
                            "kt" => Unit::Kt,
                            _ => {
                                p.syntax(uspan, format!("unknown unit `{unit}`, expected `GWh` or `kt`"));
                                return Err(());
                            }
                        };
                        let mut c = Commodity { name, unit, byproduct: false, local: false };
                        while let Tok::Ident(flag) = &p.peek().tok {
                            let flag = flag.clone();
                            let fspan = p.bump().span;
                            let slot = match flag.as_str() {
                                "byproduct" => &mut c.byproduct,
                                "local" => &mut c.local,
                                _ => {
                                    p.syntax(fspan, format!("unknown commodity flag `{flag}`"));
                                    return Err(());
                                }
                            };
                            if *slot {
                                p.errors.push(ParseError::new(fspan, ErrorKind::Semantic, format!("duplicate flag `{flag}`")));
                            }
                            *slot = true;
                        }
                        p.punct(Tok::Semi)?;
                        raw.commodities.push((c, span));
                        Ok(())
                    })(),
                    "hhv" => (|| {
                        let (name, span) = p.ident("a commodity name")?;
                        let (v, _) = p.number("a heating value")?;
                        p.punct(Tok::Semi)?;
                        raw.hhv.push((name, v, span));
                        Ok(())
                    })(),
                    "node" => (|| {
                        let (name, name_span) = p.ident("a node name")?;
                        p.keyword("kind")?;
                        let (kind, kind_span) = p.ident("a node kind")?;
                        let items = p.block(Parser::node_item)?;
                        raw.nodes.push(NodeDecl { name, name_span, kind, kind_span, items });
                        Ok(())
                    })(),
                    "hyperedge" => (|| {
                        let (commodity, span) = p.ident("a commodity name")?;
                        let name = if p.at_ident("as") {
                            p.bump();
                            p.ident("a hyperedge name")?.0
                        } else {
                            commodity.clone()
                        };
                        let items = p.block(Parser::edge_item)?;
                        let mut edge = Hyperedge {
                            name,
                            commodity,
                            producers: vec![],
                            consumers: vec![],
                            free_disposal: false,
                            import: false,
                        };
                        let mut flags = Vec::new();
                        for (word, ep, s) in items {
                            match (word.as_str(), ep) {
                                ("from", Some(ep)) => edge.producers.push(ep),
                                ("to", Some(ep)) => edge.consumers.push(ep),
                                _ => flags.push((word, s)),
                            }
                        }
                        raw.edges.push(EdgeDecl { edge, span, flags });
                        Ok(())
                    })(),
                    _ => {
                        p.syntax(start.span, format!("expected a declaration, found `{kw}`"));
                        Err(())
                    }
                }
            }
            _ => {
                p.unexpected("a declaration");
                p.bump();
                Err(())
            }
        };
        if res.is_err() {
            p.sync_top();
        }
    }
    raw
}

fn header<T>(
    p: &mut Parser,
    slot: &mut Option<(T, SourceSpan)>,
    span: SourceSpan,
    value: impl FnOnce(&mut Parser) -> Result<(T, SourceSpan), Fail>,
) -> Result<(), Fail> {
    let v = value(p)?;
    p.punct(Tok::Semi)?;
    if slot.is_some() {
        p.errors.push(ParseError::new(span, ErrorKind::Semantic, "duplicate header statement"));
    } else {
        *slot = Some(v);
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum KeyType {
    Num { lo: f64, hi: f64, lo_open: bool, hi_open: bool },
    Ident,
}

const NONNEG: KeyType = KeyType::Num { lo: 0.0, hi: f64::INFINITY, lo_open: false, hi_open: true };
const POSITIVE: KeyType = KeyType::Num { lo: 0.0, hi: f64::INFINITY, lo_open: true, hi_open: true };
const UNIT: KeyType = KeyType::Num { lo: 0.0, hi: 1.0, lo_open: false, hi_open: false };
const UNIT_OPEN_LO: KeyType = KeyType::Num { lo: 0.0, hi: 1.0, lo_open: true, hi_open: false };
const UNIT_OPEN_HI: KeyType = KeyType::Num { lo: 0.0, hi: 1.0, lo_open: false, hi_open: true };

fn econ_keys(prefix: &'static str) -> [(String, KeyType); 4] {
    [
        (format!("{prefix}capex"), NONNEG),
        (format!("{prefix}fom"), NONNEG),
        (format!("{prefix}vom"), NONNEG),
        (format!("{prefix}lifetime"), POSITIVE),
    ]
}

fn key_table(kind: &str) -> Option<Vec<(String, KeyType)>> {
    let mut keys: Vec<(String, KeyType)> = vec![("site".into(), KeyType::Ident)];
    let mut add = |list: &[(&str, KeyType)]| keys.extend(list.iter().map(|(k, t)| (k.to_string(), *t)));
    match kind {
        "conversion" => {
            add(&[("output", KeyType::Ident), ("min_level", UNIT), ("ramp", UNIT)]);
            keys.extend(econ_keys(""));
        }
        "storage" => {
            add(&[
                ("commodity", KeyType::Ident),
                ("charge_eff", UNIT_OPEN_LO),
                ("discharge_eff", UNIT_OPEN_LO),
                ("self_discharge", UNIT_OPEN_HI),
                ("d2c_ratio", POSITIVE),
                ("min_inventory", UNIT_OPEN_HI),
                ("density", POSITIVE),
            ]);
            keys.extend(econ_keys("flow_"));
            keys.extend(econ_keys("stock_"));
        }
        "source" => {
            add(&[("commodity", KeyType::Ident), ("profile", KeyType::Ident)]);
            keys.extend(econ_keys(""));
        }
        "transport" => {
            add(&[
                ("input", KeyType::Ident),
                ("output", KeyType::Ident),
                ("efficiency", UNIT_OPEN_LO),
                ("min_level", UNIT),
                ("ramp", UNIT),
            ]);
            keys.extend(econ_keys(""));
        }
        "demand" => add(&[("commodity", KeyType::Ident), ("quantity", POSITIVE), ("phase", KeyType::Ident)]),
        _ => return None,
    }
    Some(keys)
}

fn range_text(t: KeyType) -> String {
    match t {
        KeyType::Num { lo, hi, lo_open, hi_open } => {
            let hi = if hi.is_infinite() { "inf".to_string() } else { hi.to_string() };
            format!("{}{lo},{hi}{}", if lo_open { '(' } else { '[' }, if hi_open { ')' } else { ']' })
        }
        KeyType::Ident => String::new(),
    }
}

fn in_range(v: f64, t: KeyType) -> bool {
    match t {
        KeyType::Num { lo, hi, lo_open, hi_open } => {
            (if lo_open { v > lo } else { v >= lo }) && (if hi_open { v < hi } else { v <= hi })
        }
        KeyType::Ident => true,
    }
}

/// Key/value assignments of one node block after type and range checks.
struct Fields {
    nums: HashMap<String, f64>,
    idents: HashMap<String, String>,
    missing_span: SourceSpan,
}

impl Fields {
    fn num(&self, key: &str, default: f64) -> f64 {
        self.nums.get(key).copied().unwrap_or(default)
    }

    fn econ(&self, prefix: &str) -> Economics {
        let d = Economics::FREE;
        Economics {
            capex: self.num(&format!("{prefix}capex"), d.capex),
            fom: self.num(&format!("{prefix}fom"), d.fom),
            vom: self.num(&format!("{prefix}vom"), d.vom),
            lifetime: self.num(&format!("{prefix}lifetime"), d.lifetime),
        }
    }

    fn req_ident(&self, key: &str, errors: &mut Vec<ParseError>) -> String {
        match self.idents.get(key) {
            Some(v) => v.clone(),
            None => {
                errors.push(ParseError::new(self.missing_span, ErrorKind::Semantic, format!("missing required key `{key}`")));
                String::new()
            }
        }
    }

    fn req_num(&self, key: &str, errors: &mut Vec<ParseError>) -> f64 {
        match self.nums.get(key) {
            Some(v) => *v,
            None => {
                errors.push(ParseError::new(self.missing_span, ErrorKind::Semantic, format!("missing required key `{key}`")));
                1.0
            }
        }
    }
}

fn build_node(decl: &NodeDecl, errors: &mut Vec<ParseError>) -> Option<Node> {
    let sem = |span, msg: String| ParseError::new(span, ErrorKind::Semantic, msg);
    let Some(table) = key_table(&decl.kind) else {
        errors.push(sem(
            decl.kind_span,
            format!("unknown node kind `{}`, expected conversion, storage, source, transport or demand", decl.kind),
        ));
        return None;
    };
    let mut fields = Fields { nums: HashMap::new(), idents: HashMap::new(), missing_span: decl.name_span };
    let mut seen: BTreeMap<String, SourceSpan> = BTreeMap::new();
    let mut factors = Vec::new();
    let mut aux: Option<(String, f64)> = None;
    for item in &decl.items {
        match item {
            Item::Assign { key, key_span, value, value_span } => {
                let Some((_, ty)) = table.iter().find(|(k, _)| k == key) else {
                    errors.push(sem(*key_span, format!("unknown key `{key}` for a {} node", decl.kind)));
                    continue;
                };
                if seen.insert(key.clone(), *key_span).is_some() {
                    errors.push(sem(*key_span, format!("duplicate key `{key}`")));
                    continue;
                }
                match (ty, value) {
                    (KeyType::Ident, Value::Ident(s)) => {
                        fields.idents.insert(key.clone(), s.clone());
                    }
                    (KeyType::Num { .. }, Value::Num(v)) => {
                        if !in_range(*v, *ty) {
                            errors.push(sem(*value_span, format!("{key} outside {}", range_text(*ty))));
                        }
                        fields.nums.insert(key.clone(), *v);
                    }
                    (KeyType::Ident, Value::Num(_)) => errors.push(sem(*value_span, format!("`{key}` expects a name"))),
                    (KeyType::Num { .. }, Value::Ident(_)) => {
                        errors.push(sem(*value_span, format!("`{key}` expects a number")))
                    }
                }
            }
            Item::Factor { factor, span } => {
                if !matches!(decl.kind.as_str(), "conversion" | "transport") {
                    errors.push(sem(*span, format!("a {} node takes no factors", decl.kind)));
                    continue;
                }
                if !(factor.coef > 0.0) {
                    errors.push(sem(*span, format!("factor {} outside (0,inf)", factor.commodity)));
                }
                if factors.iter().any(|f: &Factor| f.commodity == factor.commodity) {
                    errors.push(sem(*span, format!("duplicate factor for `{}`", factor.commodity)));
                    continue;
                }
                factors.push(factor.clone());
            }
            Item::Aux { commodity, coef, span } => {
                if decl.kind != "storage" {
                    errors.push(sem(*span, format!("a {} node takes no aux input", decl.kind)));
                    continue;
                }
                if aux.is_some() {
                    errors.push(sem(*span, "duplicate aux input".to_string()));
                    continue;
                }
                if !(*coef > 0.0) {
                    errors.push(sem(*span, format!("aux {commodity} outside (0,inf)")));
                }
                aux = Some((commodity.clone(), *coef));
            }
        }
    }
    let before = errors.len();
    let kind = match decl.kind.as_str() {
        "conversion" => NodeKind::Conversion(ConversionNode {
            output: fields.req_ident("output", errors),
            factors,
            min_level: fields.num("min_level", 0.0),
            ramp: fields.num("ramp", 1.0),
            economics: fields.econ(""),
        }),
        "storage" => NodeKind::Storage(StorageNode {
            commodity: fields.req_ident("commodity", errors),
            charge_eff: fields.num("charge_eff", 1.0),
            discharge_eff: fields.num("discharge_eff", 1.0),
            self_discharge: fields.num("self_discharge", 0.0),
            d2c_ratio: fields.num("d2c_ratio", 1.0),
            min_inventory: fields.num("min_inventory", 0.0),
            density: fields.nums.get("density").copied(),
            aux,
            flow_economics: fields.econ("flow_"),
            stock_economics: fields.econ("stock_"),
        }),
        "source" => NodeKind::Source(SourceNode {
            commodity: fields.req_ident("commodity", errors),
            profile: fields.req_ident("profile", errors),
            economics: fields.econ(""),
        }),
        "transport" => NodeKind::Transport(TransportNode {
            input: fields.req_ident("input", errors),
            output: fields.req_ident("output", errors),
            efficiency: fields.num("efficiency", 1.0),
            min_level: fields.num("min_level", 0.0),
            ramp: fields.num("ramp", 1.0),
            factors,
            economics: fields.econ(""),
        }),
        _ => {
            let quantity = fields.req_num("quantity", errors);
            let phase = match fields.idents.get("phase").map(String::as_str) {
                Some("liquid") => Phase::Liquid,
                Some("gaseous") => Phase::Gaseous,
                Some(other) => {
                    let span = seen.get("phase").copied().unwrap_or(decl.name_span);
                    errors.push(sem(span, format!("unknown phase `{other}`, expected liquid or gaseous")));
                    Phase::Liquid
                }
                None => {
                    errors.push(sem(decl.name_span, "missing required key `phase`".to_string()));
                    Phase::Liquid
                }
            };
            NodeKind::Demand(DemandNode { commodity: fields.req_ident("commodity", errors), quantity, phase })
        }
    };
    (errors.len() == before).then(|| Node { name: decl.name.clone(), site: fields.idents.get("site").cloned(), kind })
}

/// Parses `.hub` source into a validated model, or returns every independent
/// error found.
pub fn parse_model(text: &str) -> Result<HubModel, Vec<ParseError>> {
    let (toks, lex_errors) = lex(text);
    let mut p = Parser { toks, pos: 0, errors: lex_errors };
    let raw = parse_raw(&mut p);
    let mut errors = p.errors;
    let sem = |span, msg: String| ParseError::new(span, ErrorKind::Semantic, msg);
    let top = SourceSpan { line: 1, column: 1, length: 1 };

    let name = match &raw.name {
        Some((n, _)) => n.clone(),
        None => {
            errors.push(sem(top, "missing `hub` declaration".into()));
            String::new()
        }
    };
    let hours = match raw.horizon {
        Some((h, span)) => {
            if h < 1.0 || h.fract() != 0.0 || h > 1e9 {
                errors.push(sem(span, "horizon must be a positive whole number of hours".into()));
                1
            } else {
                h as usize
            }
        }
        None => {
            errors.push(sem(top, "missing `horizon` declaration".into()));
            1
        }
    };
    let wacc = match raw.wacc {
        Some((w, span)) => {
            if !(0.0..1.0).contains(&w) {
                errors.push(sem(span, "wacc outside [0,1)".into()));
            }
            w
        }
        None => 0.07,
    };
    for (c, v, span) in &raw.hhv {
        if !(*v > 0.0) {
            errors.push(sem(*span, format!("hhv of {c} outside (0,inf)")));
        }
    }
    let mut nodes = Vec::new();
    for decl in &raw.nodes {
        if let Some(n) = build_node(decl, &mut errors) {
            nodes.push(n);
        }
    }
    for e in &raw.edges {
        let mut seen = Vec::new();
        for (flag, span) in &e.flags {
            if seen.contains(flag) {
                errors.push(sem(*span, format!("duplicate `{flag}`")));
            }
            seen.push(flag.clone());
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.span);
        return Err(errors);
    }

    let model = HubModel {
        name,
        horizon: Horizon { hours },
        wacc,
        sites: raw.sites.iter().map(|(s, _)| s.clone()).collect(),
        commodities: raw.commodities.iter().map(|(c, _)| c.clone()).collect(),
        hhv: raw.hhv.iter().map(|(c, v, _)| (c.clone(), *v)).collect(),
        nodes,
        hyperedges: raw
            .edges
            .iter()
            .map(|e| {
                let mut edge = e.edge.clone();
                edge.free_disposal = e.flags.iter().any(|(f, _)| f == "free_disposal");
                edge.import = e.flags.iter().any(|(f, _)| f == "import");
                edge
            })
            .collect(),
    };
    let report = validate_model(&model);
    if report.is_empty() {
        return Ok(model);
    }
    let span_of = |s: &Subject| -> SourceSpan {
        let found = match s {
            Subject::Model => raw.name.as_ref().map(|n| n.1),
            Subject::Commodity(c) => raw
                .commodities
                .iter()
                .find(|(x, _)| &x.name == c)
                .map(|x| x.1)
                .or_else(|| raw.hhv.iter().find(|(x, _, _)| x == c).map(|x| x.2)),
            Subject::Site(n) => raw.sites.iter().find(|(x, _)| &x.name == n).map(|x| x.1),
            Subject::Node(n) => raw.nodes.iter().find(|d| &d.name == n).map(|d| d.name_span),
            Subject::Hyperedge(n) => raw.edges.iter().find(|d| &d.edge.name == n).map(|d| d.span),
        };
        found.unwrap_or(top)
    };
    let mut errors: Vec<ParseError> =
        report.violations.iter().map(|v| sem(span_of(&v.subject), v.to_string())).collect();
    errors.sort_by_key(|e| e.span);
    Err(errors)
}
