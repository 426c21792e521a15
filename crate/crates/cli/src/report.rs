//! Report assembly: one JSON value and one text rendering per command.

use std::fmt::Write as _;

use conexa_core::density::{DensityReport, TotalOrder};
use conexa_core::devices::{
    Device, DeviceJson, DeviceOrder, DomanialStructures, LocalityProfile, TensorialStructures,
    TENSORIAL_NAMES,
};
use conexa_core::disentangle::{DisentanglementReport, PoolConfig, STRUCTURE_NAMES};
use conexa_core::randvars::{FiniteJointDistribution, RvStructure};
use conexa_core::{ConnectiveStructure, GroundSet, Subset};
use serde_json::{json, Map, Value};

use crate::input::Source;

pub struct Report {
    pub json: Value,
    pub text: String,
}

/// Fields shared by every report.
pub struct Header<'a> {
    pub command: &'a str,
    pub source: Option<&'a Source>,
    pub seed: Option<u64>,
    pub tol: f64,
}

impl Header<'_> {
    fn into_map(self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), json!("conexa"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        if let Some(s) = self.source {
            m.insert("input".into(), s.to_json());
        }
        m.insert("seed".into(), self.seed.map_or(Value::Null, |s| json!(s)));
        m.insert("tolerances".into(), json!({ "numeric": self.tol }));
        m
    }
}

fn labels(ground: &GroundSet, s: Subset) -> Value {
    json!(ground.labels_of(s))
}

fn subset_text(ground: &GroundSet, s: Subset) -> String {
    format!("{{{}}}", ground.labels_of(s).join(","))
}

/// The serialized tag of a unit enum, such as `POOL_LIMITED`.
fn tag<T: serde::Serialize>(t: &T) -> String {
    serde_json::to_value(t)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn big(n: u128) -> Value {
    u64::try_from(n).map_or_else(|_| json!(n.to_string()), |v| json!(v))
}

/// Parses a comma-separated selection against the known names.
pub fn selection(spec: Option<&str>, known: &[&str]) -> conexa_core::Result<Vec<String>> {
    match spec {
        None => Ok(known.iter().map(|s| s.to_string()).collect()),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                known
                    .iter()
                    .find(|k| k.eq_ignore_ascii_case(s))
                    .map(|k| k.to_string())
                    .ok_or_else(|| {
                        conexa_core::Error::domain(format!(
                            "unknown structure '{s}' (known: {})",
                            known.join(", ")
                        ))
                    })
            })
            .collect(),
    }
}

fn structure_block(
    out: &mut String,
    json: &mut Map<String, Value>,
    name: &str,
    s: &ConnectiveStructure,
) {
    json.insert(name.to_string(), serde_json::to_value(s).expect("structures serialize"));
    let _ = writeln!(out, "  κ_{name:<5} {s}  (order {})", s.connective_order());
}

pub fn state(
    header: Header,
    dims: &[usize],
    config: &PoolConfig,
    orders: &TotalOrder,
    selected: &[String],
) -> Report {
    let d: &DisentanglementReport = &orders.disentanglement;
    let ground = d.structures[0].ground().clone();
    let mut json = header.into_map();
    let mut text = String::new();
    let _ = writeln!(text, "state on {} sites, dims {:?}", dims.len(), dims);
    json.insert("dims".into(), json!(dims));
    json.insert(
        "pool".into(),
        json!({
            "structured_bases": ["computational", "hadamard", "fourier"],
            "random_bases": config.n_random,
            "seed": config.seed,
        }),
    );
    let _ = writeln!(text, "classes:");
    let classes: Vec<Value> = d
        .classes
        .iter()
        .map(|c| {
            let _ = writeln!(
                text,
                "  {:<10} {:<32} {}",
                subset_text(&ground, c.subset),
                c.class.name(),
                tag(&c.confidence)
            );
            json!({
                "subset": labels(&ground, c.subset),
                "class": c.class,
                "confidence": c.confidence,
                "experiments": c.experiments,
            })
        })
        .collect();
    json.insert("classes".into(), Value::Array(classes));
    let _ = writeln!(text, "disentanglement structures:");
    let mut structures = Map::new();
    for (name, s) in STRUCTURE_NAMES.iter().zip(&d.structures) {
        if selected.iter().any(|x| x == name) {
            structure_block(&mut text, &mut structures, name, s);
        }
    }
    json.insert("structures".into(), Value::Object(structures));
    json.insert("chains_hold".into(), json!(d.chains_hold()));
    let (density_json, density_text) = density_parts(&orders.density, selected);
    json.insert("density".into(), density_json);
    text.push_str(&density_text);
    json.insert(
        "orders".into(),
        json!({ "omega_c": orders.omega_c, "omega_f": orders.omega_f, "omega": orders.omega }),
    );
    let _ = writeln!(
        text,
        "order: Ω_c = {}, Ω_f = {}, Ω = {}",
        orders.omega_c, orders.omega_f, orders.omega
    );
    Report {
        json: Value::Object(json),
        text,
    }
}

fn density_parts(r: &DensityReport, selected: &[String]) -> (Value, String) {
    let ground = r.corr.ground().clone();
    let mut text = String::from("density subsets:\n");
    let subsets: Vec<Value> = r
        .subsets
        .iter()
        .map(|f| {
            let _ = writeln!(
                text,
                "  {:<10} correlated={} partially_correlated={} entangled={} ({})",
                subset_text(&ground, f.subset),
                f.completely_correlated,
                f.partially_correlated,
                f.completely_entangled,
                tag(&f.quality)
            );
            json!({
                "subset": labels(&ground, f.subset),
                "completely_correlated": f.completely_correlated,
                "partially_correlated": f.partially_correlated,
                "completely_entangled": f.completely_entangled,
                "quality": f.quality,
            })
        })
        .collect();
    let _ = writeln!(text, "density structures:");
    let mut structures = Map::new();
    for (name, s) in [("corr", &r.corr), ("S", &r.sugita)] {
        if selected.iter().any(|x| x == name) {
            structure_block(&mut text, &mut structures, name, s);
        }
    }
    (
        json!({ "subsets": subsets, "structures": structures, "omega_f": r.order() }),
        text,
    )
}

pub fn density(header: Header, dims: &[usize], r: &DensityReport, selected: &[String]) -> Report {
    let mut json = header.into_map();
    json.insert("dims".into(), json!(dims));
    let (d, mut text) = density_parts(r, selected);
    if let Value::Object(m) = d {
        json.extend(m);
    }
    let _ = writeln!(text, "order: Ω_f = {}", r.order());
    Report {
        json: Value::Object(json),
        text,
    }
}

fn profile_json(ground: &GroundSet, device: &Device, p: &LocalityProfile) -> Value {
    let cut = |c: &Option<(Subset, Subset)>| {
        c.map_or(Value::Null, |(a, b)| json!([labels(ground, a), labels(ground, b)]))
    };
    let mut flags = Map::new();
    for (name, f) in p.flags() {
        flags.insert(name.to_string(), json!(f));
    }
    let local = p.local_witness.as_ref().map_or(Value::Null, |g| {
        Value::Array(
            g.iter()
                .enumerate()
                .map(|(site, table)| {
                    let m: Map<String, Value> = table
                        .iter()
                        .enumerate()
                        .map(|(q, &r)| {
                            (
                                device.questions()[site][q].clone(),
                                json!(device.results()[site][r]),
                            )
                        })
                        .collect();
                    Value::Object(m)
                })
                .collect(),
        )
    });
    json!({
        "flags": flags,
        "witnesses": {
            "separable_cut": cut(&p.separable_cut),
            "quasi_separable_cut": cut(&p.quasi_separable_cut),
            "partially_separable_cut": cut(&p.partially_separable_cut),
            "local_functions": local,
        },
        "implications_hold": p.implications_hold(),
    })
}

pub const DOMANIAL_NAMES: [&str; 2] = ["do", "dp"];

pub fn device(
    header: Header,
    device: &Device,
    profile: &LocalityProfile,
    tensorial: &TensorialStructures,
    domanial: Option<&DomanialStructures>,
    selected: &[String],
    cap: u128,
) -> Report {
    let ground = device.ground();
    let mut json = header.into_map();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "device with {} sites, {} question tuples, {} deterministic realizations",
        device.num_sites(),
        device.num_questions(),
        device.realization_count()
    );
    json.insert(
        "device".into(),
        json!({
            "sites": device.num_sites(),
            "question_tuples": device.num_questions(),
            "realizations": big(device.realization_count()),
        }),
    );
    json.insert("cap".into(), big(cap));
    json.insert("profile".into(), profile_json(&ground, device, profile));
    let _ = writeln!(text, "profile:");
    for (name, f) in profile.flags() {
        let _ = writeln!(text, "  {name:<20} {f}");
    }
    let _ = writeln!(text, "tensorial structures:");
    let mut tens = Map::new();
    for (name, s) in TENSORIAL_NAMES.iter().zip(&tensorial.structures) {
        if selected.iter().any(|x| x == name) {
            structure_block(&mut text, &mut tens, name, s);
        }
    }
    json.insert("tensorial".into(), Value::Object(tens));
    json.insert("chains_hold".into(), json!(tensorial.chains_hold()));
    let tensorial_order = tensorial.order();
    let orders = match domanial {
        Some(d) => {
            let _ = writeln!(text, "domanial structures:");
            let mut dom = Map::new();
            for (name, s) in [("do", &d.domanial), ("dp", &d.pointed)] {
                if selected.iter().any(|x| x == name) {
                    structure_block(&mut text, &mut dom, name, s);
                }
            }
            dom.insert("realizations".into(), big(d.realizations));
            dom.insert("visited".into(), big(d.visited));
            json.insert("domanial".into(), Value::Object(dom));
            let o = DeviceOrder::from_structures(tensorial, d);
            json!({ "tensorial": o.tensorial, "domanial": o.domanial, "overall": o.overall, "ludic": "excluded" })
        }
        None => {
            json.insert("domanial".into(), Value::Null);
            json!({ "tensorial": tensorial_order, "domanial": Value::Null, "overall": Value::Null, "ludic": "excluded" })
        }
    };
    let _ = writeln!(
        text,
        "order: tensorial = {}, domanial = {}, overall = {} (ludic order excluded)",
        orders["tensorial"], orders["domanial"], orders["overall"]
    );
    json.insert("orders".into(), orders);
    Report {
        json: Value::Object(json),
        text,
    }
}

pub fn rvs(header: Header, dist: &FiniteJointDistribution, r: &RvStructure) -> Report {
    let ground = r.structure.ground().clone();
    let mut json = header.into_map();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{} variables, support {} ({})",
        dist.num_variables(),
        dist.support_size(),
        if dist.is_exact() { "exact" } else { "floating" }
    );
    json.insert("variables".into(), json!(dist.num_variables()));
    json.insert("exact".into(), json!(dist.is_exact()));
    let ns: Vec<Value> = r.non_separable.iter().map(|&s| labels(&ground, s)).collect();
    let _ = writeln!(
        text,
        "non-separable: {}",
        r.non_separable
            .iter()
            .map(|&s| subset_text(&ground, s))
            .collect::<Vec<_>>()
            .join(" ")
    );
    json.insert("non_separable".into(), Value::Array(ns));
    json.insert("raw_closed".into(), json!(r.raw_closed));
    let _ = writeln!(text, "raw family already closed: {}", r.raw_closed);
    let mut m = Map::new();
    structure_block(&mut text, &mut m, "rv", &r.structure);
    json.insert("structure".into(), m.remove("rv").expect("inserted"));
    let order = r.structure.connective_order();
    json.insert("order".into(), json!(order));
    let _ = writeln!(text, "order: {order}");
    Report {
        json: Value::Object(json),
        text,
    }
}

pub fn derived(header: Header, menus: Vec<Vec<String>>, recode: &str, device: &Device) -> Report {
    let mut json = header.into_map();
    json.insert("menus".into(), json!(menus));
    json.insert("recode".into(), json!(recode));
    let dj = DeviceJson::from(device);
    json.insert("device".into(), serde_json::to_value(&dj).expect("devices serialize"));
    let mut text = format!("derived device ({recode} labels)\n");
    for (q, rs) in &dj.relation {
        let _ = writeln!(text, "  D({q}) = {{{}}}", rs.join(","));
    }
    Report {
        json: Value::Object(json),
        text,
    }
}

pub fn order(header: Header, kind: &str, orders: Value) -> Report {
    let mut json = header.into_map();
    json.insert("kind".into(), json!(kind));
    let text = format!(
        "order ({kind}): {}\n",
        orders
            .as_object()
            .expect("orders are an object")
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    json.insert("orders".into(), orders);
    Report {
        json: Value::Object(json),
        text,
    }
}

pub fn builtin(header: Header, kind: &str, name: &str, object: Value) -> Report {
    let mut json = header.into_map();
    json.insert("kind".into(), json!(kind));
    json.insert("name".into(), json!(name));
    let text = format!(
        "builtin {kind} {name}\n{}\n",
        serde_json::to_string_pretty(&object).expect("values serialize")
    );
    json.insert("object".into(), object);
    Report {
        json: Value::Object(json),
        text,
    }
}

pub fn builtin_list(header: Header, states: &[&str], devices: &[&str], distributions: &[&str]) -> Report {
    let mut json = header.into_map();
    json.insert(
        "available".into(),
        json!({ "states": states, "devices": devices, "distributions": distributions }),
    );
    let text = format!(
        "states: {}\ndevices: {}\ndistributions: {}\n",
        states.join(", "),
        devices.join(", "),
        distributions.join(", ")
    );
    Report {
        json: Value::Object(json),
        text,
    }
}
