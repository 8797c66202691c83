//! Per-unit network data model.
//!
//! Component vectors are public and freely mutable; status changes made by
//! preprocessing and scenario application are plain flag writes. Derived
//! incidence information is recomputed on demand by [`Network::adjacency`], so
//! it can never go stale.

mod fixture;
mod parse;
mod write;

pub use fixture::five_bus_fixture;
pub use parse::parse_case;
pub use write::write_case;

use num_complex::Complex64;
use std::collections::HashMap;
use thiserror::Error;

pub type Complex = Complex64;

/// Default and limiting angle-difference bound in radians.
pub const ANGLE_LIMIT: f64 = 1.0472;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("branch {0} has zero series impedance")]
    ZeroImpedance(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    /// Case-file bus type (1 PQ, 2 PV, 3 reference, 4 isolated).
    pub kind: u8,
    pub v_min: f64,
    pub v_max: f64,
    pub in_service: bool,
    pub area: f64,
    pub vm: f64,
    /// Voltage angle from the file, degrees.
    pub va_deg: f64,
    pub base_kv: f64,
    pub zone: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cost_c0: f64,
    pub cost_c1: f64,
    pub cost_c2: f64,
    pub in_service: bool,
    /// Dispatch and voltage setpoint exactly as written in the file.
    pub pg_mw: f64,
    pub qg_mvar: f64,
    pub vg: f64,
    pub mbase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub id: usize,
    pub bus: usize,
    pub demand: Complex,
    pub priority: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shunt {
    pub id: usize,
    pub bus: usize,
    pub admittance: Complex,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub series_admittance: Complex,
    pub charge_from: Complex,
    pub charge_to: Complex,
    pub tap: Complex,
    /// Apparent-power limit in p.u.; `None` means unlimited.
    pub rating: Option<f64>,
    pub angmin: f64,
    pub angmax: f64,
    pub in_service: bool,
    /// Raw π-model data from which the fields above are derived.
    pub r: f64,
    pub x: f64,
    pub b: f64,
    pub tap_ratio: f64,
    pub shift_deg: f64,
    pub angmin_deg: f64,
    pub angmax_deg: f64,
    pub rate_b: f64,
    pub rate_c: f64,
}

impl Branch {
    /// Build a branch from case-file quantities.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        id: usize,
        from_bus: usize,
        to_bus: usize,
        r: f64,
        x: f64,
        b: f64,
        rating: Option<f64>,
        tap_ratio: f64,
        shift_deg: f64,
        angmin_deg: f64,
        angmax_deg: f64,
    ) -> Result<Self, NetworkError> {
        let series_admittance = series_admittance(r, x).map_err(|_| NetworkError::ZeroImpedance(id))?;
        let charge = Complex::new(0.0, b / 2.0);
        let t = if tap_ratio == 0.0 { 1.0 } else { tap_ratio };
        let (angmin, angmax) = angle_bounds(angmin_deg, angmax_deg);
        Ok(Branch {
            id,
            from_bus,
            to_bus,
            series_admittance,
            charge_from: charge,
            charge_to: charge,
            tap: Complex::from_polar(t, shift_deg.to_radians()),
            rating,
            angmin,
            angmax,
            in_service: true,
            r,
            x,
            b,
            tap_ratio,
            shift_deg,
            angmin_deg,
            angmax_deg,
            rate_b: 0.0,
            rate_c: 0.0,
        })
    }
}

/// Both bounds zero, or a bound beyond ±360°, means unconstrained on that side.
fn angle_bounds(min_deg: f64, max_deg: f64) -> (f64, f64) {
    if min_deg == 0.0 && max_deg == 0.0 {
        return (-ANGLE_LIMIT, ANGLE_LIMIT);
    }
    let lo = if min_deg <= -360.0 { -ANGLE_LIMIT } else { min_deg.to_radians().clamp(-ANGLE_LIMIT, ANGLE_LIMIT) };
    let hi = if max_deg >= 360.0 { ANGLE_LIMIT } else { max_deg.to_radians().clamp(-ANGLE_LIMIT, ANGLE_LIMIT) };
    (lo, hi)
}

/// `1 / (r + jx)`.
pub fn series_admittance(r: f64, x: f64) -> Result<Complex, NetworkError> {
    if r == 0.0 && x == 0.0 {
        return Err(NetworkError::Validation("zero series impedance".into()));
    }
    Ok(Complex::new(r, x).inv())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    pub shunts: Vec<Shunt>,
}

/// Incidence lists indexed by bus position. Entries are positions into the
/// corresponding component vector and include out-of-service components.
#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    index: HashMap<usize, usize>,
    pub generators: Vec<Vec<usize>>,
    pub loads: Vec<Vec<usize>>,
    pub shunts: Vec<Vec<usize>>,
    /// Branches leaving the bus (`E_i`).
    pub outgoing: Vec<Vec<usize>>,
    /// Branches entering the bus (`E^R_i`).
    pub incoming: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn position(&self, bus_id: usize) -> Option<usize> {
        self.index.get(&bus_id).copied()
    }

    pub fn pos(&self, bus_id: usize) -> usize {
        self.index[&bus_id]
    }
}

impl Network {
    pub fn adjacency(&self) -> Adjacency {
        let n = self.buses.len();
        let index: HashMap<usize, usize> = self.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
        let mut adj = Adjacency {
            generators: vec![Vec::new(); n],
            loads: vec![Vec::new(); n],
            shunts: vec![Vec::new(); n],
            outgoing: vec![Vec::new(); n],
            incoming: vec![Vec::new(); n],
            index,
        };
        for (k, g) in self.generators.iter().enumerate() {
            if let Some(&p) = adj.index.get(&g.bus) {
                adj.generators[p].push(k);
            }
        }
        for (k, l) in self.loads.iter().enumerate() {
            if let Some(&p) = adj.index.get(&l.bus) {
                adj.loads[p].push(k);
            }
        }
        for (k, s) in self.shunts.iter().enumerate() {
            if let Some(&p) = adj.index.get(&s.bus) {
                adj.shunts[p].push(k);
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            if let Some(&p) = adj.index.get(&br.from_bus) {
                adj.outgoing[p].push(k);
            }
            if let Some(&p) = adj.index.get(&br.to_bus) {
                adj.incoming[p].push(k);
            }
        }
        adj
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let invalid = |m: String| Err(NetworkError::Validation(m));
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return invalid(format!("baseMVA must be positive, got {}", self.base_mva));
        }
        let mut ids = std::collections::HashSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return invalid(format!("duplicate bus id {}", b.id));
            }
            if !(b.v_min >= 0.0 && b.v_min <= b.v_max) {
                return invalid(format!("bus {}: voltage bounds [{}, {}]", b.id, b.v_min, b.v_max));
            }
        }
        let known = |bus: usize| ids.contains(&bus);
        for g in &self.generators {
            if !known(g.bus) {
                return invalid(format!("generator {} references missing bus {}", g.id, g.bus));
            }
            if g.p_min > g.p_max || g.q_min > g.q_max || g.p_min.is_nan() || g.q_min.is_nan() {
                return invalid(format!("generator {}: inconsistent bounds", g.id));
            }
        }
        for l in &self.loads {
            if !known(l.bus) {
                return invalid(format!("load {} references missing bus {}", l.id, l.bus));
            }
            if !(l.priority >= 0.0) || !l.demand.re.is_finite() || !l.demand.im.is_finite() {
                return invalid(format!("load {}: bad demand or priority", l.id));
            }
        }
        for s in &self.shunts {
            if !known(s.bus) {
                return invalid(format!("shunt {} references missing bus {}", s.id, s.bus));
            }
            if s.in_service && s.admittance == Complex::new(0.0, 0.0) {
                return invalid(format!("shunt {} has zero admittance", s.id));
            }
        }
        for br in &self.branches {
            if !known(br.from_bus) || !known(br.to_bus) {
                return invalid(format!("branch {} references a missing bus", br.id));
            }
            if br.from_bus == br.to_bus {
                return invalid(format!("branch {} is a self-loop", br.id));
            }
            if br.tap.norm() == 0.0 || !br.tap.norm().is_finite() {
                return invalid(format!("branch {} has a degenerate tap", br.id));
            }
            if br.angmin > br.angmax {
                return invalid(format!("branch {}: angmin exceeds angmax", br.id));
            }
        }
        for (what, list) in [
            ("generator", self.generators.iter().map(|g| g.id).collect::<Vec<_>>()),
            ("load", self.loads.iter().map(|l| l.id).collect()),
            ("shunt", self.shunts.iter().map(|s| s.id).collect()),
            ("branch", self.branches.iter().map(|b| b.id).collect()),
        ] {
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = list.into_iter().find(|id| !seen.insert(*id)) {
                return invalid(format!("duplicate {what} id {dup}"));
            }
        }
        Ok(())
    }

    pub fn bus(&self, id: usize) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn branch_position(&self, id: usize) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    /// Total in-service active demand in p.u.
    pub fn active_demand(&self) -> f64 {
        self.loads.iter().filter(|l| l.in_service).map(|l| l.demand.re).sum()
    }

    pub fn in_service_buses(&self) -> usize {
        self.buses.iter().filter(|b| b.in_service).count()
    }
}
