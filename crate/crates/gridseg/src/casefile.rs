//! JSON case files.
//!
//! Network data is per unit on the system base unless a branch carries its
//! own `base_mva`, in which case it is rebased on load. Lines may be given
//! as `per_km` rates plus `length_km`. Machine parameters are on the machine
//! rating and stay there; the analysis rebases them when it builds the model.

use gridseg_core::case::{
    branch_km_expand, rebase_admittance, rebase_impedance, Branch, BranchId, Bus, BusId, BusKind, Case, Exciter,
    Injection, Load, LoadModel, Machine, MachineId, PerKm,
};
use gridseg_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub system: SystemDto,
    pub buses: Vec<BusDto>,
    pub branches: Vec<BranchDto>,
    pub machines: Vec<MachineDto>,
    #[serde(default)]
    pub loads: Vec<LoadDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub injections: Vec<InjectionDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDto {
    pub base_mva: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindDto {
    Slack,
    Pv,
    Pq,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusDto {
    pub id: u32,
    pub kind: KindDto,
    #[serde(default = "one")]
    pub v_setpoint: f64,
    #[serde(default)]
    pub p_set: f64,
    #[serde(default)]
    pub q_set: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerKmDto {
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b_shunt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDto {
    pub id: String,
    pub from_bus: u32,
    pub to_bus: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_shunt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_km: Option<PerKmDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
    /// MVA base of the explicit impedance when it is not the system base.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_mva: Option<f64>,
    #[serde(default = "one")]
    pub tap_ratio: f64,
    pub rating_mva: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub circuits: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ExciterDto {
    pub Tr: f64,
    pub Ka: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct MachineDto {
    pub id: String,
    pub bus: u32,
    pub rating_mva: f64,
    pub H: f64,
    pub D: f64,
    pub Ra: f64,
    pub Xd: f64,
    pub Xq: f64,
    pub Xd_p: f64,
    pub Xq_p: f64,
    pub Xd_pp: f64,
    pub Xq_pp: f64,
    pub Xl: f64,
    pub Td0_p: f64,
    pub Td0_pp: f64,
    pub Tq0_p: f64,
    pub Tq0_pp: f64,
    pub exciter: ExciterDto,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LoadModelDto {
    ConstantImpedance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadDto {
    pub bus: u32,
    pub p: f64,
    pub q: f64,
    #[serde(default = "constant_impedance")]
    pub model: LoadModelDto,
}

fn constant_impedance() -> LoadModelDto {
    LoadModelDto::ConstantImpedance
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionDto {
    pub label: String,
    pub bus: u32,
    pub p: f64,
    #[serde(default)]
    pub q: f64,
}

/// A parsed case plus notes on every unit conversion applied while loading.
#[derive(Debug, Clone)]
pub struct ParsedCase {
    pub case: Case,
    pub provenance: Vec<String>,
}

fn schema(path: String, message: impl Into<String>) -> Error {
    Error::Schema { path, message: message.into() }
}

/// Parses and validates a JSON case.
pub fn parse_case(text: &str) -> Result<ParsedCase, Error> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: CaseFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "$".into() } else { path }, e.inner().to_string())
    })?;
    let parsed = from_file(&file)?;
    parsed.case.validate()?;
    Ok(parsed)
}

fn branch_impedance(
    i: usize,
    b: &BranchDto,
    system_mva: f64,
    notes: &mut Vec<String>,
) -> Result<(f64, f64, f64), Error> {
    let path = |f: &str| format!("branches[{i}].{f}");
    match (b.per_km, b.length_km) {
        (Some(per_km), Some(len)) => {
            if b.r.is_some() || b.x.is_some() || b.b_shunt.is_some() || b.base_mva.is_some() {
                return Err(schema(path("per_km"), "per_km lines take no explicit r, x, b_shunt or base_mva"));
            }
            let (r, x, bs) = branch_km_expand(len, PerKm { r: per_km.r, x: per_km.x, b_shunt: per_km.b_shunt })
                .map_err(|_| schema(path("length_km"), format!("line length must be positive, got {len}")))?;
            notes.push(format!("branch {}: {len} km at per-km rates", b.id));
            Ok((r, x, bs))
        }
        (Some(_), None) => Err(schema(path("length_km"), "per_km requires length_km")),
        (None, Some(_)) => Err(schema(path("per_km"), "length_km requires per_km")),
        (None, None) => {
            let x = b.x.ok_or_else(|| schema(path("x"), "missing series reactance"))?;
            let (mut r, mut x, mut bs) = (b.r.unwrap_or(0.0), x, b.b_shunt.unwrap_or(0.0));
            if let Some(base) = b.base_mva {
                if !(base > 0.0) {
                    return Err(Error::NonPositiveBase { path: path("base_mva") });
                }
                if base != system_mva {
                    r = rebase_impedance(r, base, system_mva);
                    x = rebase_impedance(x, base, system_mva);
                    bs = rebase_admittance(bs, base, system_mva);
                    notes.push(format!("branch {}: impedance rebased from {base} MVA to {system_mva} MVA", b.id));
                }
            }
            Ok((r, x, bs))
        }
    }
}

/// Converts the file representation into a [`Case`] without validating it.
pub fn from_file(file: &CaseFile) -> Result<ParsedCase, Error> {
    let mut notes = Vec::new();
    let base = file.system.base_mva;
    if !(base > 0.0) {
        return Err(Error::NonPositiveBase { path: "system.base_mva".into() });
    }
    if file.buses.is_empty() {
        return Err(schema("buses".into(), "at least one bus is required"));
    }
    let buses = file
        .buses
        .iter()
        .map(|b| Bus {
            id: BusId(b.id),
            kind: match b.kind {
                KindDto::Slack => BusKind::Slack,
                KindDto::Pv => BusKind::Pv,
                KindDto::Pq => BusKind::Pq,
            },
            v_setpoint: b.v_setpoint,
            p_set: b.p_set,
            q_set: b.q_set,
        })
        .collect();
    let mut branches = Vec::with_capacity(file.branches.len());
    for (i, b) in file.branches.iter().enumerate() {
        let (r, x, b_shunt) = branch_impedance(i, b, base, &mut notes)?;
        branches.push(Branch {
            id: BranchId(b.id.clone()),
            from_bus: BusId(b.from_bus),
            to_bus: BusId(b.to_bus),
            r,
            x,
            b_shunt,
            tap_ratio: b.tap_ratio,
            rating_mva: b.rating_mva,
            circuits: b.circuits.iter().map(|c| BranchId(c.clone())).collect(),
        });
    }
    let machines = file
        .machines
        .iter()
        .map(|m| {
            if m.rating_mva != base {
                notes.push(format!(
                    "machine {}: parameters on its {} MVA rating, rebased to {base} MVA for analysis",
                    m.id, m.rating_mva
                ));
            }
            Machine {
                id: MachineId(m.id.clone()),
                bus: BusId(m.bus),
                rating_mva: m.rating_mva,
                h: m.H,
                d: m.D,
                ra: m.Ra,
                xd: m.Xd,
                xq: m.Xq,
                xd_p: m.Xd_p,
                xq_p: m.Xq_p,
                xd_pp: m.Xd_pp,
                xq_pp: m.Xq_pp,
                xl: m.Xl,
                td0_p: m.Td0_p,
                td0_pp: m.Td0_pp,
                tq0_p: m.Tq0_p,
                tq0_pp: m.Tq0_pp,
                exciter: Exciter { tr: m.exciter.Tr, ka: m.exciter.Ka },
                units: m.units.iter().map(|u| MachineId(u.clone())).collect(),
            }
        })
        .collect();
    let loads = file
        .loads
        .iter()
        .map(|l| Load { bus: BusId(l.bus), p: l.p, q: l.q, model: LoadModel::ConstantImpedance })
        .collect();
    let injections = file
        .injections
        .iter()
        .map(|j| Injection { label: j.label.clone(), bus: BusId(j.bus), p: j.p, q: j.q })
        .collect();
    Ok(ParsedCase {
        case: Case {
            system_base_mva: base,
            frequency_hz: file.system.frequency_hz,
            buses,
            branches,
            machines,
            loads,
            injections,
        },
        provenance: notes,
    })
}

/// File representation with explicit system-base impedances.
pub fn to_file(case: &Case) -> CaseFile {
    CaseFile {
        system: SystemDto { base_mva: case.system_base_mva, frequency_hz: case.frequency_hz },
        buses: case
            .buses
            .iter()
            .map(|b| BusDto {
                id: b.id.0,
                kind: match b.kind {
                    BusKind::Slack => KindDto::Slack,
                    BusKind::Pv => KindDto::Pv,
                    BusKind::Pq => KindDto::Pq,
                },
                v_setpoint: b.v_setpoint,
                p_set: b.p_set,
                q_set: b.q_set,
            })
            .collect(),
        branches: case
            .branches
            .iter()
            .map(|b| BranchDto {
                id: b.id.0.clone(),
                from_bus: b.from_bus.0,
                to_bus: b.to_bus.0,
                r: Some(b.r),
                x: Some(b.x),
                b_shunt: Some(b.b_shunt),
                per_km: None,
                length_km: None,
                base_mva: None,
                tap_ratio: b.tap_ratio,
                rating_mva: b.rating_mva,
                circuits: b.circuits.iter().map(|c| c.0.clone()).collect(),
            })
            .collect(),
        machines: case
            .machines
            .iter()
            .map(|m| MachineDto {
                id: m.id.0.clone(),
                bus: m.bus.0,
                rating_mva: m.rating_mva,
                H: m.h,
                D: m.d,
                Ra: m.ra,
                Xd: m.xd,
                Xq: m.xq,
                Xd_p: m.xd_p,
                Xq_p: m.xq_p,
                Xd_pp: m.xd_pp,
                Xq_pp: m.xq_pp,
                Xl: m.xl,
                Td0_p: m.td0_p,
                Td0_pp: m.td0_pp,
                Tq0_p: m.tq0_p,
                Tq0_pp: m.tq0_pp,
                exciter: ExciterDto { Tr: m.exciter.tr, Ka: m.exciter.ka },
                units: m.units.iter().map(|u| u.0.clone()).collect(),
            })
            .collect(),
        loads: case
            .loads
            .iter()
            .map(|l| LoadDto { bus: l.bus.0, p: l.p, q: l.q, model: LoadModelDto::ConstantImpedance })
            .collect(),
        injections: case
            .injections
            .iter()
            .map(|j| InjectionDto { label: j.label.clone(), bus: j.bus.0, p: j.p, q: j.q })
            .collect(),
    }
}

/// Pretty-printed JSON for a case.
pub fn serialize_case(case: &Case) -> String {
    let mut s = serde_json::to_string_pretty(&to_file(case)).expect("case DTOs always serialize");
    s.push('\n');
    s
}
