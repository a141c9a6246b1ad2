use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelError, Sense};

/// A network bus. Ids are free-form non-empty strings and must be unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
}

/// A dispatchable generator at a bus.
///
/// Production cost is `a*P + q/2*P^2`, so the marginal cost at output `P` is
/// `a + q*P`. Bounds are `pmin <= P <= pmax` with `pmax` possibly infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub a: f64,
    pub q: f64,
    pub pmin: f64,
    pub pmax: f64,
}

/// A price-responsive load with benefit `b` per unit consumed and bounds
/// `pmin <= P <= pmax` (`pmax` possibly infinite).
#[derive(Debug, Clone, PartialEq)]
pub struct FlexibleLoad {
    pub id: String,
    pub bus: String,
    pub benefit: f64,
    pub pmin: f64,
    pub pmax: f64,
}

/// A load that consumes exactly `demand` regardless of price. Folded into the
/// balance right-hand side at compile time rather than becoming a variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLoad {
    pub id: String,
    pub bus: String,
    pub demand: f64,
}

/// A DC branch: flow is `susceptance * (theta_from - theta_to)`, limited to
/// `|flow| <= limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    pub susceptance: f64,
    pub limit: f64,
}

/// A requested price cap: the marginal price at `bus` may not exceed `price`.
#[derive(Debug, Clone, PartialEq)]
pub struct BusCap {
    pub bus: String,
    pub price: f64,
}

/// A dispatch problem in domain terms: buses, generators, loads, DC lines,
/// and optional price caps.
///
/// `sense` declares how the case reads: `Maximize` (the default for files)
/// means welfare maximization and objective values are reported negated;
/// either way the compiled program minimizes cost minus benefit. Units are
/// documented as kW and $/kWh in the file schema but treated as opaque
/// consistent units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchCase {
    pub sense: Sense,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub loads: Vec<FlexibleLoad>,
    pub fixed_loads: Vec<FixedLoad>,
    pub lines: Vec<Line>,
    pub caps: Vec<BusCap>,
}

impl DispatchCase {
    /// An empty case: zero buses, compiles to the zero-variable program.
    pub fn empty() -> Self {
        DispatchCase {
            sense: Sense::Maximize,
            buses: Vec::new(),
            generators: Vec::new(),
            loads: Vec::new(),
            fixed_loads: Vec::new(),
            lines: Vec::new(),
            caps: Vec::new(),
        }
    }

    /// Total fixed demand at `bus`.
    pub fn fixed_demand_at(&self, bus: &str) -> f64 {
        self.fixed_loads
            .iter()
            .filter(|l| l.bus == bus)
            .map(|l| l.demand)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// File schema. Kept separate from the domain types so the domain can use
// plain f64 bounds (infinity for "absent") while the file stays valid JSON.
// Unknown fields are rejected.
// ---------------------------------------------------------------------------

fn is_false(v: &bool) -> bool {
    !*v
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn default_sense() -> Sense {
    Sense::Maximize
}

fn is_max(s: &Sense) -> bool {
    *s == Sense::Maximize
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    #[serde(default = "default_sense", skip_serializing_if = "is_max")]
    sense: Sense,
    buses: Vec<RawBus>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    generators: Vec<RawGenerator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    loads: Vec<RawLoad>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lines: Vec<RawLine>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    caps: Vec<RawCap>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBus {
    id: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    id: String,
    bus: String,
    a: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    q: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pmin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pmax: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoad {
    id: String,
    bus: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    benefit: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pmin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pmax: Option<f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    fixed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    id: String,
    from: String,
    to: String,
    susceptance: f64,
    limit: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCap {
    bus: String,
    price: f64,
}

fn schema(path: String, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        path,
        message: message.into(),
    }
}

/// Read and validate a dispatch case from a JSON file.
///
/// Schema violations are reported with the path of the offending field
/// (e.g. `loads[0].pmin`); malformed JSON and unknown fields surface as parse
/// errors with line and column. Loads with `"fixed": true` must have
/// `pmin == pmax` and become [`FixedLoad`]s with that demand.
pub fn load_case(path: impl AsRef<Path>) -> Result<DispatchCase, ModelError> {
    let text = std::fs::read_to_string(path)?;
    parse_case(&text)
}

/// [`load_case`] on an in-memory string.
pub fn parse_case(text: &str) -> Result<DispatchCase, ModelError> {
    let raw: RawCase = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate_raw(&raw)?;

    let mut case = DispatchCase::empty();
    case.sense = raw.sense;
    case.buses = raw.buses.into_iter().map(|b| Bus { id: b.id }).collect();
    for g in raw.generators {
        case.generators.push(Generator {
            id: g.id,
            bus: g.bus,
            a: g.a,
            q: g.q,
            pmin: g.pmin,
            pmax: g.pmax.unwrap_or(f64::INFINITY),
        });
    }
    for l in raw.loads {
        if l.fixed {
            case.fixed_loads.push(FixedLoad {
                id: l.id,
                bus: l.bus,
                demand: l.pmin,
            });
        } else {
            case.loads.push(FlexibleLoad {
                id: l.id,
                bus: l.bus,
                benefit: l.benefit,
                pmin: l.pmin,
                pmax: l.pmax.unwrap_or(f64::INFINITY),
            });
        }
    }
    for l in raw.lines {
        case.lines.push(Line {
            id: l.id,
            from: l.from,
            to: l.to,
            susceptance: l.susceptance,
            limit: l.limit,
        });
    }
    for c in raw.caps {
        case.caps.push(BusCap {
            bus: c.bus,
            price: c.price,
        });
    }
    Ok(case)
}

/// Write a case back to JSON. Inverse of [`load_case`]: reading the result
/// reproduces the case exactly, field for field.
pub fn write_case(case: &DispatchCase, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let mut text = serde_json::to_string_pretty(&to_raw(case)).expect("case serialization");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn to_raw(case: &DispatchCase) -> RawCase {
    let mut loads: Vec<RawLoad> = case
        .loads
        .iter()
        .map(|l| RawLoad {
            id: l.id.clone(),
            bus: l.bus.clone(),
            benefit: l.benefit,
            pmin: l.pmin,
            pmax: if l.pmax.is_finite() {
                Some(l.pmax)
            } else {
                None
            },
            fixed: false,
        })
        .collect();
    loads.extend(case.fixed_loads.iter().map(|l| RawLoad {
        id: l.id.clone(),
        bus: l.bus.clone(),
        benefit: 0.0,
        pmin: l.demand,
        pmax: Some(l.demand),
        fixed: true,
    }));
    RawCase {
        sense: case.sense,
        buses: case
            .buses
            .iter()
            .map(|b| RawBus { id: b.id.clone() })
            .collect(),
        generators: case
            .generators
            .iter()
            .map(|g| RawGenerator {
                id: g.id.clone(),
                bus: g.bus.clone(),
                a: g.a,
                q: g.q,
                pmin: g.pmin,
                pmax: if g.pmax.is_finite() {
                    Some(g.pmax)
                } else {
                    None
                },
            })
            .collect(),
        loads,
        lines: case
            .lines
            .iter()
            .map(|l| RawLine {
                id: l.id.clone(),
                from: l.from.clone(),
                to: l.to.clone(),
                susceptance: l.susceptance,
                limit: l.limit,
            })
            .collect(),
        caps: case
            .caps
            .iter()
            .map(|c| RawCap {
                bus: c.bus.clone(),
                price: c.price,
            })
            .collect(),
    }
}

fn validate_raw(raw: &RawCase) -> Result<(), ModelError> {
    let mut bus_ids = std::collections::HashSet::new();
    for (i, bus) in raw.buses.iter().enumerate() {
        if bus.id.is_empty() {
            return Err(schema(format!("buses[{i}].id"), "bus id must be non-empty"));
        }
        if !bus_ids.insert(bus.id.as_str()) {
            return Err(schema(
                format!("buses[{i}].id"),
                format!("duplicate bus id {:?}", bus.id),
            ));
        }
    }
    let known_bus = |id: &str| bus_ids.contains(id);

    let mut gen_ids = std::collections::HashSet::new();
    for (i, g) in raw.generators.iter().enumerate() {
        if g.id.is_empty() {
            return Err(schema(format!("generators[{i}].id"), "id must be non-empty"));
        }
        if !gen_ids.insert(g.id.as_str()) {
            return Err(schema(
                format!("generators[{i}].id"),
                format!("duplicate generator id {:?}", g.id),
            ));
        }
        if !known_bus(&g.bus) {
            return Err(schema(
                format!("generators[{i}].bus"),
                format!("unknown bus {:?}", g.bus),
            ));
        }
        if g.q < 0.0 {
            return Err(schema(
                format!("generators[{i}].q"),
                "quadratic cost must be nonnegative",
            ));
        }
        let pmax = g.pmax.unwrap_or(f64::INFINITY);
        if g.pmin > pmax {
            return Err(schema(
                format!("generators[{i}].pmin"),
                format!("pmin {} exceeds pmax {}", g.pmin, pmax),
            ));
        }
    }

    let mut load_ids = std::collections::HashSet::new();
    for (i, l) in raw.loads.iter().enumerate() {
        if l.id.is_empty() {
            return Err(schema(format!("loads[{i}].id"), "id must be non-empty"));
        }
        if !load_ids.insert(l.id.as_str()) {
            return Err(schema(
                format!("loads[{i}].id"),
                format!("duplicate load id {:?}", l.id),
            ));
        }
        if !known_bus(&l.bus) {
            return Err(schema(
                format!("loads[{i}].bus"),
                format!("unknown bus {:?}", l.bus),
            ));
        }
        let pmax = l.pmax.unwrap_or(f64::INFINITY);
        if l.pmin > pmax {
            return Err(schema(
                format!("loads[{i}].pmin"),
                format!("pmin {} exceeds pmax {}", l.pmin, pmax),
            ));
        }
        if l.fixed && l.pmin != pmax {
            return Err(schema(
                format!("loads[{i}].fixed"),
                "a fixed load must have pmin == pmax (its demand)",
            ));
        }
    }

    let mut line_ids = std::collections::HashSet::new();
    for (i, l) in raw.lines.iter().enumerate() {
        if l.id.is_empty() {
            return Err(schema(format!("lines[{i}].id"), "id must be non-empty"));
        }
        if !line_ids.insert(l.id.as_str()) {
            return Err(schema(
                format!("lines[{i}].id"),
                format!("duplicate line id {:?}", l.id),
            ));
        }
        for (field, bus) in [("from", &l.from), ("to", &l.to)] {
            if !known_bus(bus) {
                return Err(schema(
                    format!("lines[{i}].{field}"),
                    format!("unknown bus {:?}", bus),
                ));
            }
        }
        if l.from == l.to {
            return Err(schema(
                format!("lines[{i}].to"),
                "line endpoints must differ",
            ));
        }
        if !(l.susceptance > 0.0) {
            return Err(schema(
                format!("lines[{i}].susceptance"),
                "susceptance must be positive",
            ));
        }
        if !(l.limit > 0.0) {
            return Err(schema(format!("lines[{i}].limit"), "limit must be positive"));
        }
    }

    for (i, c) in raw.caps.iter().enumerate() {
        if !known_bus(&c.bus) {
            return Err(schema(
                format!("caps[{i}].bus"),
                format!("unknown bus {:?}", c.bus),
            ));
        }
        if !c.price.is_finite() {
            return Err(schema(format!("caps[{i}].price"), "price must be finite"));
        }
    }
    Ok(())
}
