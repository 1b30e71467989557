use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator active-power overrides keyed by generator bus id (MW).
pub type Dispatch = BTreeMap<u32, f64>;

/// Relative tolerance on the per-machine damping ratio D/(2H).
const UNIFORM_DAMPING_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (pu); ignored on PQ buses.
    #[serde(default = "one")]
    pub v_setpoint: f64,
    #[serde(default)]
    pub p_load_mw: f64,
    #[serde(default)]
    pub q_load_mvar: f64,
    /// Shunt conductance (pu on system base).
    #[serde(default)]
    pub g_shunt: f64,
    /// Shunt susceptance (pu on system base).
    #[serde(default)]
    pub b_shunt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance (pu).
    #[serde(default)]
    pub b: f64,
    /// Off-nominal turns ratio on the `from` side.
    #[serde(default = "one")]
    pub tap: f64,
    /// Accepted only as zero; phase shifters are not modelled.
    #[serde(default)]
    pub shift_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: u32,
    /// Scheduled active power (MW). Recomputed by the power flow at the slack.
    pub p_mw: f64,
    /// Inertia constant (s, machine base).
    pub h: f64,
    /// Damping (pu torque / pu speed, machine base).
    #[serde(default)]
    pub d: f64,
    /// Transient reactance (pu, machine base).
    pub xd_prime: f64,
    /// Machine MVA base; defaults to the system base.
    #[serde(default)]
    pub mva_base: Option<f64>,
}

impl Generator {
    fn base_ratio(&self, system_mva: f64) -> f64 {
        self.mva_base.unwrap_or(system_mva) / system_mva
    }

    /// Inertia on the system base (s).
    pub fn h_sys(&self, system_mva: f64) -> f64 {
        self.h * self.base_ratio(system_mva)
    }

    pub fn d_sys(&self, system_mva: f64) -> f64 {
        self.d * self.base_ratio(system_mva)
    }

    pub fn xd_sys(&self, system_mva: f64) -> f64 {
        self.xd_prime / self.base_ratio(system_mva)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSystemCase {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    pub base_mva: f64,
    pub f_nominal_hz: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// Parses and validates a JSON case document.
pub fn parse_case(text: &str) -> Result<PowerSystemCase> {
    let case: PowerSystemCase =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    case.validate()?;
    Ok(case)
}

impl PowerSystemCase {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_case(&text)
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    /// Bus id → position in `buses`.
    pub fn bus_index(&self) -> HashMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    /// Bus position of every generator terminal, in generator order.
    pub fn generator_buses(&self) -> Vec<usize> {
        let idx = self.bus_index();
        self.generators.iter().map(|g| idx[&g.bus]).collect()
    }

    pub fn slack_bus(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Position of the generator sitting on the slack bus.
    pub fn slack_generator(&self) -> usize {
        let id = self.buses[self.slack_bus()].id;
        self.generators
            .iter()
            .position(|g| g.bus == id)
            .expect("validated case has a slack generator")
    }

    pub fn generator_by_bus(&self, bus_id: u32) -> Option<usize> {
        self.generators.iter().position(|g| g.bus == bus_id)
    }

    pub fn omega_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_nominal_hz
    }

    /// Scheduled generator MW with `dispatch` applied.
    pub fn scheduled_mw(&self, dispatch: &Dispatch) -> Result<Vec<f64>> {
        let mut p: Vec<f64> = self.generators.iter().map(|g| g.p_mw).collect();
        let slack = self.slack_generator();
        for (&bus, &mw) in dispatch {
            let k = self.generator_by_bus(bus).ok_or_else(|| {
                Error::Dispatch(format!("bus {bus} carries no generator"))
            })?;
            if k == slack {
                return Err(Error::Dispatch(format!(
                    "generator at bus {bus} is the slack machine and cannot be dispatched"
                )));
            }
            if !mw.is_finite() {
                return Err(Error::Dispatch(format!("non-finite MW for bus {bus}")));
            }
            p[k] = mw;
        }
        Ok(p)
    }

    /// Checks every structural and parameter invariant of the case.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(Error::invariant("base_mva", "must be positive"));
        }
        if !(self.f_nominal_hz.is_finite() && self.f_nominal_hz > 0.0) {
            return Err(Error::invariant("f_nominal_hz", "must be positive"));
        }
        if self.buses.is_empty() {
            return Err(Error::invariant("buses", "case has no buses"));
        }
        let mut ids = HashSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(Error::invariant(format!("bus {}", b.id), "duplicate id"));
            }
            let fields = [b.v_setpoint, b.p_load_mw, b.q_load_mvar, b.g_shunt, b.b_shunt];
            if fields.iter().any(|v| !v.is_finite()) {
                return Err(Error::invariant(format!("bus {}", b.id), "non-finite field"));
            }
            if b.kind != BusKind::Pq && b.v_setpoint <= 0.0 {
                return Err(Error::invariant(
                    format!("bus {}", b.id),
                    "voltage setpoint must be positive",
                ));
            }
        }
        let slacks: Vec<u32> = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        if slacks.len() != 1 {
            return Err(Error::invariant(
                "buses",
                format!("exactly one slack bus required, found {} ({slacks:?})", slacks.len()),
            ));
        }

        for (k, br) in self.branches.iter().enumerate() {
            let name = format!("branch {k} ({}-{})", br.from, br.to);
            if !ids.contains(&br.from) || !ids.contains(&br.to) {
                return Err(Error::invariant(name, "references an unknown bus"));
            }
            if br.from == br.to {
                return Err(Error::invariant(name, "connects a bus to itself"));
            }
            if [br.r, br.x, br.b, br.tap, br.shift_deg].iter().any(|v| !v.is_finite()) {
                return Err(Error::invariant(name, "non-finite field"));
            }
            if br.r < 0.0 {
                return Err(Error::invariant(name, "negative series resistance"));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::invariant(name, "zero series impedance"));
            }
            if br.tap <= 0.0 {
                return Err(Error::invariant(name, "tap ratio must be positive"));
            }
            if br.shift_deg != 0.0 {
                return Err(Error::invariant(name, "phase-shifting transformers are not supported"));
            }
        }

        if self.generators.is_empty() {
            return Err(Error::invariant("generators", "case has no generators"));
        }
        let kind_of: HashMap<u32, BusKind> = self.buses.iter().map(|b| (b.id, b.kind)).collect();
        let mut gen_buses = HashSet::new();
        for (k, g) in self.generators.iter().enumerate() {
            let name = format!("generator {k} (bus {})", g.bus);
            let Some(kind) = kind_of.get(&g.bus) else {
                return Err(Error::invariant(name, "references an unknown bus"));
            };
            if *kind == BusKind::Pq {
                return Err(Error::invariant(name, "sits on a PQ bus; must be slack or PV"));
            }
            if !gen_buses.insert(g.bus) {
                return Err(Error::invariant(name, "more than one generator on the bus"));
            }
            if !(g.h.is_finite() && g.h > 0.0) {
                return Err(Error::invariant(name, "inertia H must be positive"));
            }
            if !(g.xd_prime.is_finite() && g.xd_prime > 0.0) {
                return Err(Error::invariant(name, "x'd must be positive"));
            }
            if !(g.d.is_finite() && g.d >= 0.0) {
                return Err(Error::invariant(name, "damping must be non-negative"));
            }
            if !g.p_mw.is_finite() {
                return Err(Error::invariant(name, "non-finite dispatch"));
            }
            if let Some(m) = g.mva_base {
                if !(m.is_finite() && m > 0.0) {
                    return Err(Error::invariant(name, "mva_base must be positive"));
                }
            }
        }
        for b in &self.buses {
            if b.kind != BusKind::Pq && !gen_buses.contains(&b.id) {
                return Err(Error::invariant(
                    format!("bus {}", b.id),
                    "slack/PV bus without a generator",
                ));
            }
        }

        let ratio = |g: &Generator| g.d / (2.0 * g.h);
        let r0 = ratio(&self.generators[0]);
        for (k, g) in self.generators.iter().enumerate().skip(1) {
            let r = ratio(g);
            let scale = r0.abs().max(r.abs());
            if (r - r0).abs() > UNIFORM_DAMPING_RTOL * scale {
                return Err(Error::invariant(
                    format!("generator {k} (bus {})", g.bus),
                    format!("non-uniform damping: D/(2H) = {r} vs {r0} at generator 0"),
                ));
            }
        }

        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let idx = self.bus_index();
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (idx[&br.from], idx[&br.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::invariant(
                format!("bus {}", self.buses[k].id),
                "not connected to the rest of the network",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "base_mva": 100, "f_nominal_hz": 60,
        "buses": [
            {"id": 1, "kind": "slack", "v_setpoint": 1.0},
            {"id": 2, "kind": "pq", "p_load_mw": 50, "q_load_mvar": 10}
        ],
        "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1}],
        "generators": [{"bus": 1, "p_mw": 0, "h": 5, "d": 1, "xd_prime": 0.2}]
    }"#;

    #[test]
    fn minimal_two_bus_case_is_valid() {
        let c = parse_case(TWO_BUS).unwrap();
        assert_eq!(c.n_buses(), 2);
        assert_eq!(c.n_generators(), 1);
        assert_eq!(c.branches[0].tap, 1.0);
        assert_eq!(c.slack_generator(), 0);
    }

    #[test]
    fn two_slack_buses_rejected() {
        let text = TWO_BUS.replace(r#""kind": "pq""#, r#""kind": "slack""#);
        let err = parse_case(&text).unwrap_err();
        assert!(matches!(err, Error::Invariant { .. }), "{err}");
        assert!(err.to_string().contains("exactly one slack"));
    }

    #[test]
    fn unknown_field_is_schema_error() {
        let text = TWO_BUS.replace(r#""p_load_mw": 50"#, r#""p_lod_mw": 50"#);
        assert!(matches!(parse_case(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn non_uniform_damping_names_generator() {
        let text = r#"{
            "base_mva": 100, "f_nominal_hz": 60,
            "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "pv"}],
            "branches": [{"from": 1, "to": 2, "r": 0, "x": 0.1}],
            "generators": [
                {"bus": 1, "p_mw": 0, "h": 5, "d": 1, "xd_prime": 0.2},
                {"bus": 2, "p_mw": 10, "h": 5, "d": 2, "xd_prime": 0.2}
            ]
        }"#;
        let err = parse_case(text).unwrap_err();
        assert!(err.to_string().contains("generator 1 (bus 2)"), "{err}");
        assert!(err.to_string().contains("non-uniform damping"));
    }

    #[test]
    fn disconnected_and_bad_parameters_rejected() {
        let islanded = TWO_BUS.replace(
            r#"{"id": 2, "kind": "pq", "p_load_mw": 50, "q_load_mvar": 10}"#,
            r#"{"id": 2, "kind": "pq", "p_load_mw": 50, "q_load_mvar": 10}, {"id": 3, "kind": "pq"}"#,
        );
        assert!(parse_case(&islanded).unwrap_err().to_string().contains("bus 3"));
        let neg_r = TWO_BUS.replace(r#""r": 0.01"#, r#""r": -0.01"#);
        assert!(parse_case(&neg_r).is_err());
        let zero_h = TWO_BUS.replace(r#""h": 5"#, r#""h": 0"#);
        assert!(parse_case(&zero_h).is_err());
        let shifter = TWO_BUS.replace(r#""x": 0.1}"#, r#""x": 0.1, "shift_deg": 5}"#);
        assert!(parse_case(&shifter).unwrap_err().to_string().contains("phase-shifting"));
    }

    #[test]
    fn dispatch_cannot_touch_slack() {
        let c = parse_case(TWO_BUS).unwrap();
        let d = Dispatch::from([(1, 20.0)]);
        assert!(matches!(c.scheduled_mw(&d), Err(Error::Dispatch(_))));
        let d = Dispatch::from([(2, 20.0)]);
        assert!(matches!(c.scheduled_mw(&d), Err(Error::Dispatch(_))));
    }

    #[test]
    fn machine_base_conversion() {
        let g = Generator {
            bus: 1,
            p_mw: 0.0,
            h: 4.0,
            d: 2.0,
            xd_prime: 0.3,
            mva_base: Some(200.0),
        };
        assert_eq!(g.h_sys(100.0), 8.0);
        assert_eq!(g.d_sys(100.0), 4.0);
        assert!((g.xd_sys(100.0) - 0.15).abs() < 1e-15);
    }
}
