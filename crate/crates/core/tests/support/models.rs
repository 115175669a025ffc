//! Seeded generators of valid hub models and of corrupted source text.

use hubforge_core::{
    Commodity, ConversionNode, DemandNode, Direction, Economics, Endpoint, Factor, Horizon, HubModel, Hyperedge, Node,
    NodeKind, Phase, Site, SourceNode, StorageNode, TransportNode, Unit,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 8] = ["Sahara", "coast", "North Sea", "Oran", "plateau", "Ghent", "port", "dune field"];

/// Mostly full-precision values so formatting has to round-trip every bit.
fn value(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    match rng.gen_range(0..6) {
        0 => lo + (hi - lo) * 0.5,
        1 => (rng.gen_range(lo..hi) * 100.0).round() / 100.0,
        _ => rng.gen_range(lo..hi),
    }
    .clamp(lo, hi)
}

fn positive(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    let v = match rng.gen_range(0..4) {
        0 => rng.gen_range(1e-9..1e-3),
        _ => value(rng, 1e-6, hi),
    };
    if v > 0.0 { v } else { hi / 2.0 }
}

fn unit_closed(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..5) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen_range(0.0..1.0),
    }
}

fn economics(rng: &mut ChaCha8Rng) -> Economics {
    Economics {
        capex: if rng.gen_bool(0.1) { 0.0 } else { value(rng, 0.0, 6e4) },
        fom: value(rng, 0.0, 500.0),
        vom: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.1) },
        lifetime: positive(rng, 60.0),
    }
}

fn factor(commodity: &str, direction: Direction, coef: f64) -> Factor {
    Factor { commodity: commodity.to_string(), direction, coef }
}

fn node(name: &str, site: Option<&String>, kind: NodeKind) -> Node {
    Node { name: name.to_string(), site: site.cloned(), kind }
}

fn edge(name: &str, commodity: &str, from: &[(&str, &str)], to: &[(&str, &str)]) -> Hyperedge {
    Hyperedge {
        name: name.to_string(),
        commodity: commodity.to_string(),
        producers: from.iter().map(|(n, p)| Endpoint::new(*n, *p)).collect(),
        consumers: to.iter().map(|(n, p)| Endpoint::new(*n, *p)).collect(),
        free_disposal: false,
        import: false,
    }
}

/// A valid chain hub: electricity feeds one to three mass conversions whose
/// last product is optionally stored, shipped and then delivered.
pub fn random_model(seed: u64) -> HubModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<Site> = (0..rng.gen_range(1..=3))
        .map(|i| Site {
            name: format!("s{i}"),
            label: WORDS[rng.gen_range(0..WORDS.len())].to_string(),
            load_center: rng.gen_bool(0.4),
        })
        .collect();
    let site = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.15) { None } else { Some(&sites[rng.gen_range(0..sites.len())].name) }
    };

    let k = rng.gen_range(1..=3);
    let heat = rng.gen_bool(0.5);
    let mut commodities = vec![Commodity { name: "electricity".into(), unit: Unit::GWh, byproduct: false, local: false }];
    for i in 0..k {
        commodities.push(Commodity { name: format!("m{i}"), unit: Unit::Kt, byproduct: false, local: rng.gen_bool(0.1) });
    }
    if heat {
        commodities.push(Commodity { name: "heat".into(), unit: Unit::GWh, byproduct: true, local: false });
    }
    let mut hhv = Vec::new();
    for i in 0..k {
        if i == k - 1 || rng.gen_bool(0.3) {
            hhv.push((format!("m{i}"), positive(&mut rng, 40.0)));
        }
    }
    let last = format!("m{}", k - 1);

    let mut nodes = vec![node(
        "pv",
        site(&mut rng),
        NodeKind::Source(SourceNode {
            commodity: "electricity".into(),
            profile: if rng.gen_bool(0.5) { "pv".into() } else { "wind".into() },
            economics: economics(&mut rng),
        }),
    )];
    let mut electricity = edge("electricity", "electricity", &[("pv", "out")], &[]);
    let storage = |rng: &mut ChaCha8Rng, commodity: &str, aux: Option<(String, f64)>| StorageNode {
        commodity: commodity.to_string(),
        charge_eff: positive(rng, 1.0),
        discharge_eff: positive(rng, 1.0),
        self_discharge: rng.gen_range(0.0..0.01),
        d2c_ratio: positive(rng, 10.0),
        min_inventory: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.5) },
        density: if rng.gen_bool(0.3) { Some(positive(rng, 1000.0)) } else { None },
        aux,
        flow_economics: economics(rng),
        stock_economics: economics(rng),
    };
    if rng.gen_bool(0.5) {
        nodes.push(node("battery", site(&mut rng), NodeKind::Storage(storage(&mut rng, "electricity", None))));
        electricity.producers.push(Endpoint::new("battery", "out"));
        electricity.consumers.push(Endpoint::new("battery", "in"));
    }

    let mut hyperedges = Vec::new();
    for i in 0..k {
        let name = format!("conv{i}");
        let mut factors = vec![factor("electricity", Direction::In, positive(&mut rng, 60.0))];
        if i > 0 {
            factors.push(factor(&format!("m{}", i - 1), Direction::In, positive(&mut rng, 5.0)));
            hyperedges.push(edge(&format!("m{}", i - 1), &format!("m{}", i - 1), &[(&format!("conv{}", i - 1), &format!("m{}", i - 1))], &[(&name, &format!("m{}", i - 1))]));
        }
        if heat && i == 0 {
            factors.push(factor("heat", Direction::Out, positive(&mut rng, 10.0)));
        }
        if rng.gen_bool(0.5) {
            factors.reverse();
        }
        nodes.push(node(
            &name,
            site(&mut rng),
            NodeKind::Conversion(ConversionNode {
                output: format!("m{i}"),
                factors,
                min_level: unit_closed(&mut rng),
                ramp: unit_closed(&mut rng),
                economics: economics(&mut rng),
            }),
        ));
        electricity.consumers.push(Endpoint::new(&name, "electricity"));
    }

    let producer = format!("conv{}", k - 1);
    let mut product = edge(&last, &last, &[(&producer, &last)], &[]);
    if rng.gen_bool(0.5) {
        let aux = rng.gen_bool(0.5).then(|| ("electricity".to_string(), positive(&mut rng, 2.0)));
        if aux.is_some() {
            electricity.consumers.push(Endpoint::new("tank", "electricity"));
        }
        nodes.push(node("tank", site(&mut rng), NodeKind::Storage(storage(&mut rng, &last, aux))));
        product.producers.push(Endpoint::new("tank", "out"));
        product.consumers.push(Endpoint::new("tank", "in"));
    }
    let demand_port = if rng.gen_bool(0.5) {
        let factors = if rng.gen_bool(0.5) {
            electricity.consumers.push(Endpoint::new("ship", "electricity"));
            vec![factor("electricity", Direction::In, positive(&mut rng, 1.0))]
        } else {
            Vec::new()
        };
        nodes.push(node(
            "ship",
            site(&mut rng),
            NodeKind::Transport(TransportNode {
                input: last.clone(),
                output: last.clone(),
                efficiency: positive(&mut rng, 1.0),
                min_level: unit_closed(&mut rng),
                ramp: unit_closed(&mut rng),
                factors,
                economics: economics(&mut rng),
            }),
        ));
        product.consumers.push(Endpoint::new("ship", "in"));
        let mut delivered = edge("delivered", &last, &[("ship", "out")], &[]);
        delivered.consumers.push(Endpoint::new("demand", "in"));
        Some(delivered)
    } else {
        product.consumers.push(Endpoint::new("demand", "in"));
        None
    };
    nodes.push(node(
        "demand",
        site(&mut rng),
        NodeKind::Demand(DemandNode {
            commodity: last.clone(),
            quantity: positive(&mut rng, 5.0),
            phase: if rng.gen_bool(0.5) { Phase::Liquid } else { Phase::Gaseous },
        }),
    ));

    hyperedges.insert(0, electricity);
    hyperedges.push(product);
    hyperedges.extend(demand_port);
    if heat {
        let mut e = edge("heat", "heat", &[("conv0", "heat")], &[]);
        e.free_disposal = true;
        hyperedges.push(e);
    }

    HubModel {
        name: format!("fuzz{seed}"),
        horizon: Horizon { hours: rng.gen_range(1..=9000) },
        wacc: if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..0.3) },
        sites,
        commodities,
        hhv,
        nodes,
        hyperedges,
    }
}

const NOISE: &[u8] = b"{};=.\"#/-+e0123456789abcxyz_ \n\t\xc3\xa9";

/// One to four byte-level edits: deletions, insertions, duplications and swaps.
pub fn mutate(text: &str, rng: &mut ChaCha8Rng) -> String {
    let mut bytes = text.as_bytes().to_vec();
    for _ in 0..rng.gen_range(1..=4) {
        let n = bytes.len();
        if n == 0 {
            bytes.push(NOISE[rng.gen_range(0..NOISE.len())]);
            continue;
        }
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..=16)).min(n);
        match rng.gen_range(0..5) {
            0 => {
                bytes.drain(a..b);
            }
            1 => {
                for _ in 0..rng.gen_range(1..=3) {
                    bytes.insert(a, NOISE[rng.gen_range(0..NOISE.len())]);
                }
            }
            2 => {
                let chunk = bytes[a..b].to_vec();
                let at = rng.gen_range(0..=n);
                bytes.splice(at..at, chunk);
            }
            3 => bytes[a] = NOISE[rng.gen_range(0..NOISE.len())],
            _ => {
                let c = rng.gen_range(0..n);
                bytes.swap(a, c);
            }
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}
