//! Brute-force stability boundaries by ray scanning in dispatch space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::jacobian_at_origin;
use crate::error::{Error, Result};
use crate::modal::relative_spectrum;
use crate::netmodel::{augment_and_reduce, Dispatch, PowerSystemCase};
use crate::options::AnalysisOptions;
use crate::powerflow::{init_classic_model, solve_power_flow, PfSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityFlags {
    pub pf_converged: bool,
    /// No real eigenvalue above the instability threshold.
    pub aperiodic_stable: bool,
    /// No eigenvalue of any kind above the instability threshold.
    pub small_signal_stable: bool,
}

impl StabilityFlags {
    const UNSOLVED: Self = Self { pf_converged: false, aperiodic_stable: false, small_signal_stable: false };

    pub fn passes(&self, kind: CheckKind) -> bool {
        match kind {
            CheckKind::Vs => self.pf_converged,
            CheckKind::As => self.aperiodic_stable,
            CheckKind::Sss => self.small_signal_stable,
        }
    }
}

/// Boundary type: static voltage (power-flow solvability), aperiodic and
/// small-signal stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Vs,
    As,
    Sss,
}

impl CheckKind {
    pub const ALL: [CheckKind; 3] = [CheckKind::Vs, CheckKind::As, CheckKind::Sss];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Vs => "vs",
            CheckKind::As => "as",
            CheckKind::Sss => "sss",
        }
    }
}

impl std::fmt::Display for CheckKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CheckKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "vs" => Ok(CheckKind::Vs),
            "as" => Ok(CheckKind::As),
            "sss" => Ok(CheckKind::Sss),
            other => Err(format!("unknown check {other:?} (expected vs, as or sss)")),
        }
    }
}

/// Classification together with the solved equilibrium, when there is one.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub flags: StabilityFlags,
    pub pf: Option<PfSolution>,
    /// Internal-voltage angles (rad), generator order.
    pub machine_angles: Vec<f64>,
}

pub fn evaluate(case: &PowerSystemCase, dispatch: &Dispatch, opts: &AnalysisOptions) -> Evaluation {
    let unsolved = || Evaluation { flags: StabilityFlags::UNSOLVED, pf: None, machine_angles: Vec::new() };
    let Ok(pf) = solve_power_flow(case, dispatch, &opts.power_flow) else {
        return unsolved();
    };
    let mut flags = StabilityFlags { pf_converged: true, aperiodic_stable: false, small_signal_stable: false };
    let Ok(net) = augment_and_reduce(case, &pf) else {
        return Evaluation { flags, pf: Some(pf), machine_angles: Vec::new() };
    };
    let model = init_classic_model(case, &pf, &net);
    let machine_angles = model.delta_s.clone();
    if let Ok(spectrum) = relative_spectrum(&jacobian_at_origin(&model)) {
        let thr = opts.eigen.instability_threshold;
        let real_tol = opts.eigen.real_tol;
        flags.aperiodic_stable = !spectrum.iter().any(|z| z.im.abs() <= real_tol && z.re > thr);
        flags.small_signal_stable = flags.aperiodic_stable && !spectrum.iter().any(|z| z.re > thr);
    }
    Evaluation { flags, pf: Some(pf), machine_angles }
}

/// Power-flow convergence plus the eigenvalues of the swing-model Jacobian
/// at the solved equilibrium. Never fails: non-convergence is a result.
pub fn classify(case: &PowerSystemCase, dispatch: &Dispatch, opts: &AnalysisOptions) -> StabilityFlags {
    evaluate(case, dispatch, opts).flags
}

/// Last stable point found along one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayLimit {
    pub kind: CheckKind,
    /// Distance from the base dispatch along the unit direction (MW).
    pub distance_mw: f64,
    /// Dispatch at the limit (base overrides plus the ray offset).
    pub dispatch: Dispatch,
    /// Every generator's MW at the limit, slack included.
    pub p_mw: Vec<f64>,
    pub machine_angles: Vec<f64>,
    /// Stability evaluations performed.
    pub evaluations: usize,
}

/// Unit-length version of `direction` (L2 over its components).
pub fn unit_direction(direction: &Dispatch) -> Result<Dispatch> {
    let norm = direction.values().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    Ok(direction.iter().map(|(&k, &v)| (k, v / norm)).collect())
}

/// Dispatch at distance `t` (MW) from `base` along unit direction `n`.
pub fn dispatch_along(case: &PowerSystemCase, base: &Dispatch, n: &Dispatch, t: f64) -> Result<Dispatch> {
    let sched = case.scheduled_mw(base)?;
    let mut out = base.clone();
    for (&bus, &c) in n {
        let k = case
            .generator_by_bus(bus)
            .ok_or_else(|| Error::Dispatch(format!("bus {bus} carries no generator")))?;
        out.insert(bus, sched[k] + t * c);
    }
    case.scheduled_mw(&out)?;
    Ok(out)
}

/// Steps along `direction` from `base` with the initial step, halving on
/// every failed step, until the step falls to the resolution. Returns the
/// last dispatch that passed `kind`.
pub fn scan_ray(
    case: &PowerSystemCase,
    base: &Dispatch,
    direction: &Dispatch,
    kind: CheckKind,
    opts: &AnalysisOptions,
) -> Result<RayLimit> {
    let n = unit_direction(direction)?;
    // Rejects directions touching the slack or non-generator buses.
    dispatch_along(case, base, &n, 0.0)?;
    let first = evaluate(case, base, opts);
    if !first.flags.passes(kind) {
        return Err(Error::UnstableBase(format!("base dispatch fails the {kind} check")));
    }
    let mut last = first;
    let mut t = 0.0;
    let mut step = opts.scan.initial_step_mw;
    let mut evaluations = 1;
    while evaluations < opts.scan.max_steps {
        let trial = t + step;
        let e = evaluate(case, &dispatch_along(case, base, &n, trial)?, opts);
        evaluations += 1;
        if e.flags.passes(kind) {
            t = trial;
            last = e;
        } else if step <= opts.scan.resolution_mw {
            break;
        } else {
            step *= 0.5;
        }
    }
    if evaluations >= opts.scan.max_steps {
        log::warn!("ray scan hit the step cap at {t:.3} MW");
    }
    let p_mw = last.pf.as_ref().map(|pf| pf.gen_p_mw()).unwrap_or_default();
    Ok(RayLimit {
        kind,
        distance_mw: t,
        dispatch: dispatch_along(case, base, &n, t)?,
        p_mw,
        machine_angles: last.machine_angles,
        evaluations,
    })
}

/// One scanned direction of a two-generator atlas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayRecord {
    pub angle_deg: f64,
    pub kind: CheckKind,
    pub limit: Option<RayLimit>,
    pub error: Option<String>,
}

/// Stability boundaries in the plane of two generators' MW outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAtlas {
    pub gen_a: u32,
    pub gen_b: u32,
    /// Machine whose angle is the reference for the angle-space points.
    pub reference_gen: u32,
    pub resolution_deg: f64,
    pub resolution_mw: f64,
    pub base_mw: (f64, f64),
    pub rays: Vec<RayRecord>,
}

impl BoundaryAtlas {
    pub fn n_directions(&self) -> usize {
        let kinds: std::collections::BTreeSet<_> = self.rays.iter().map(|r| r.kind).collect();
        if kinds.is_empty() {
            0
        } else {
            self.rays.len() / kinds.len()
        }
    }

    pub fn polyline(&self, kind: CheckKind) -> Vec<&RayRecord> {
        self.rays.iter().filter(|r| r.kind == kind).collect()
    }

    pub fn limit(&self, kind: CheckKind, angle_deg: f64) -> Option<&RayLimit> {
        self.rays
            .iter()
            .find(|r| r.kind == kind && (r.angle_deg - angle_deg).abs() < 1e-9)
            .and_then(|r| r.limit.as_ref())
    }

    /// Directions where the SSS ≤ AS ≤ VS distance ordering is violated by
    /// more than `tol` MW. Only directions with all compared kinds present
    /// are examined.
    pub fn nesting_violations(&self, tol: f64) -> Vec<f64> {
        let mut angles: Vec<f64> = self.rays.iter().map(|r| r.angle_deg).collect();
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        angles
            .into_iter()
            .filter(|&a| {
                let d = |k| self.limit(k, a).map(|l| l.distance_mw);
                let (vs, as_, sss) = (d(CheckKind::Vs), d(CheckKind::As), d(CheckKind::Sss));
                let bad = |lo: Option<f64>, hi: Option<f64>| matches!((lo, hi), (Some(l), Some(h)) if l > h + tol);
                bad(sss, as_) || bad(as_, vs)
            })
            .collect()
    }

    /// `(P_a, P_b, δ_a − δ_ref, δ_b − δ_ref)` at a limit.
    pub fn coordinates(&self, case: &PowerSystemCase, limit: &RayLimit) -> Option<(f64, f64, f64, f64)> {
        let a = case.generator_by_bus(self.gen_a)?;
        let b = case.generator_by_bus(self.gen_b)?;
        let r = case.generator_by_bus(self.reference_gen)?;
        let ang = &limit.machine_angles;
        if ang.len() <= a.max(b).max(r) {
            return None;
        }
        Some((limit.p_mw[a], limit.p_mw[b], ang[a] - ang[r], ang[b] - ang[r]))
    }
}

/// Scans every direction in the `(gen_a, gen_b)` MW plane at `res_deg`
/// spacing, for each requested check. Rays run in parallel.
pub fn scan_boundary(
    case: &PowerSystemCase,
    base: &Dispatch,
    gens: (u32, u32),
    res_deg: f64,
    kinds: &[CheckKind],
    opts: &AnalysisOptions,
) -> Result<BoundaryAtlas> {
    if !(res_deg.is_finite() && res_deg > 0.0 && res_deg <= 360.0) {
        return Err(Error::Config { name: "res_deg".into(), reason: format!("must lie in (0, 360], got {res_deg}") });
    }
    if gens.0 == gens.1 {
        return Err(Error::Config { name: "gens".into(), reason: "scan generators must differ".into() });
    }
    let sched = case.scheduled_mw(base)?;
    let probe: Dispatch = [(gens.0, 1.0), (gens.1, 1.0)].into_iter().collect();
    dispatch_along(case, base, &probe, 0.0)?;

    let count = (360.0 / res_deg).round().max(1.0) as usize;
    let jobs: Vec<(f64, CheckKind)> = (0..count)
        .flat_map(|k| kinds.iter().map(move |&kind| (k as f64 * res_deg, kind)))
        .collect();
    let rays = jobs
        .par_iter()
        .map(|&(angle_deg, kind)| {
            let th = angle_deg.to_radians();
            let dir: Dispatch = [(gens.0, th.cos()), (gens.1, th.sin())].into_iter().collect();
            match scan_ray(case, base, &dir, kind, opts) {
                Ok(l) => RayRecord { angle_deg, kind, limit: Some(l), error: None },
                Err(e) => RayRecord { angle_deg, kind, limit: None, error: Some(e.to_string()) },
            }
        })
        .collect();

    let a = case.generator_by_bus(gens.0).expect("checked above");
    let b = case.generator_by_bus(gens.1).expect("checked above");
    Ok(BoundaryAtlas {
        gen_a: gens.0,
        gen_b: gens.1,
        reference_gen: case.generators[case.slack_generator()].bus,
        resolution_deg: res_deg,
        resolution_mw: opts.scan.resolution_mw,
        base_mw: (sched[a], sched[b]),
        rays,
    })
}
