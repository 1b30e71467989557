//! End-to-end analysis of one operating condition and of a monitoring
//! scenario.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::jacobian_at_origin;
use crate::error::Result;
use crate::limits::{compute_margins, reconstruct, MarginReport, PointFailure, SteadyStateAtLimit, Variant};
use crate::modal::{decompose, find_limit_angle, GeneralizedCurve, LimitPoint, ModalDecomposition, Side};
use crate::netmodel::{augment_and_reduce, AugmentedNetwork, Dispatch, PowerSystemCase};
use crate::options::AnalysisOptions;
use crate::powerflow::{init_classic_model, solve_power_flow, PfSolution, ReducedClassicModel};

/// Power flow, reduced network, swing model and modal decomposition of one
/// dispatch.
#[derive(Debug, Clone)]
pub struct BaseCondition {
    pub pf: PfSolution,
    pub net: AugmentedNetwork,
    pub model: ReducedClassicModel,
    pub jacobian: DMatrix<f64>,
    pub dec: ModalDecomposition,
    /// Base-case load power per bus (pu), bus order.
    pub load_power: Vec<Complex64>,
}

impl BaseCondition {
    pub fn p_mw(&self) -> Vec<f64> {
        self.pf.gen_p_mw()
    }

    pub fn curve(&self, mode: usize, realness_tol: f64) -> GeneralizedCurve<'_> {
        GeneralizedCurve::new(&self.dec, &self.model, mode, realness_tol)
    }
}

pub fn prepare(case: &PowerSystemCase, dispatch: &Dispatch, opts: &AnalysisOptions) -> Result<BaseCondition> {
    let pf = solve_power_flow(case, dispatch, &opts.power_flow)?;
    let net = augment_and_reduce(case, &pf)?;
    let model = init_classic_model(case, &pf, &net);
    let jacobian = jacobian_at_origin(&model);
    let dec = decompose(&jacobian, &opts.eigen)?;
    let load_power = pf
        .voltage
        .iter()
        .zip(&net.load_admittance)
        .map(|(v, y)| v.norm_sqr() * y.conj())
        .collect();
    Ok(BaseCondition { pf, net, model, jacobian, dec, load_power })
}

/// Limit points and reconstructed steady states of one condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionAnalysis {
    pub case: String,
    pub p_mw: Vec<f64>,
    pub generator_buses: Vec<u32>,
    pub frequencies_hz: Vec<f64>,
    pub limits: Vec<LimitPoint>,
    pub points: Vec<SteadyStateAtLimit>,
    pub failures: Vec<PointFailure>,
}

impl ConditionAnalysis {
    pub fn points_of(&self, variant: Variant) -> Vec<SteadyStateAtLimit> {
        self.points.iter().filter(|p| p.variant == variant).cloned().collect()
    }

    /// One margin report per requested variant. Failures of that variant
    /// (and limit-search failures, which affect every variant) are listed.
    pub fn margins(&self, label: &str, variants: &[Variant]) -> Result<Vec<MarginReport>> {
        variants
            .iter()
            .map(|&v| {
                let mut r = compute_margins(format!("{label} {v}"), &self.p_mw, &self.points_of(v))?;
                r.failures = self
                    .failures
                    .iter()
                    .filter(|f| f.variant.is_none() || f.variant == Some(v))
                    .cloned()
                    .collect();
                Ok(r)
            })
            .collect()
    }
}

/// Runs the modal pipeline on an already prepared condition. Limit searches
/// and reconstructions run in parallel; a failing point is recorded and
/// the rest proceed.
pub fn analyze_condition(
    case: &PowerSystemCase,
    base: &BaseCondition,
    variants: &[Variant],
    opts: &AnalysisOptions,
) -> ConditionAnalysis {
    let tol = opts.search.realness_tol;
    let jobs: Vec<(usize, Side)> = (0..base.dec.n_modes())
        .flat_map(|m| Side::BOTH.into_iter().map(move |s| (m, s)))
        .collect();

    let searched: Vec<(usize, Side, Result<LimitPoint>)> = jobs
        .par_iter()
        .map(|&(mode, side)| {
            let curve = base.curve(mode, tol);
            let f = |d: f64| curve.eval(d);
            (mode, side, find_limit_angle(mode, side, &f, &opts.search))
        })
        .collect();

    let mut limits = Vec::new();
    let mut failures = Vec::new();
    for (mode, side, r) in searched {
        match r {
            Ok(p) => limits.push(p),
            Err(e) => {
                log::warn!("mode {mode} side {side}: {e}");
                failures.push(PointFailure { variant: None, mode, side: Some(side), error: e.to_string() })
            }
        }
    }

    let recon_jobs: Vec<(LimitPoint, Variant)> = limits
        .iter()
        .flat_map(|l| variants.iter().map(move |&v| (*l, v)))
        .collect();
    let rebuilt: Vec<(LimitPoint, Variant, Result<SteadyStateAtLimit>)> = recon_jobs
        .par_iter()
        .map(|&(l, v)| {
            let r = reconstruct(
                v,
                &base.dec,
                &base.model,
                &base.net,
                l.mode,
                l.side,
                l.delta_g,
                &base.pf,
                &base.load_power,
                case.base_mva,
                opts,
            );
            (l, v, r)
        })
        .collect();

    let mut points = Vec::new();
    for (l, v, r) in rebuilt {
        match r {
            Ok(p) => points.push(p),
            Err(e) => {
                log::warn!("{v} mode {} side {}: {e}", l.mode, l.side);
                failures.push(PointFailure { variant: Some(v), mode: l.mode, side: Some(l.side), error: e.to_string() })
            }
        }
    }

    ConditionAnalysis {
        case: case.name.clone(),
        p_mw: base.p_mw(),
        generator_buses: case.generators.iter().map(|g| g.bus).collect(),
        frequencies_hz: base.dec.frequencies_hz(),
        limits,
        points,
        failures,
    }
}

/// Power flow through reconstruction for one dispatch.
pub fn analyze(
    case: &PowerSystemCase,
    dispatch: &Dispatch,
    variants: &[Variant],
    opts: &AnalysisOptions,
) -> Result<ConditionAnalysis> {
    let base = prepare(case, dispatch, opts)?;
    Ok(analyze_condition(case, &base, variants, opts))
}

/// Result of one monitoring step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorStep {
    pub step: usize,
    pub dispatch: Dispatch,
    pub p_mw: Vec<f64>,
    pub reports: Vec<MarginReport>,
    /// Set when the step could not be analysed at all.
    pub error: Option<String>,
}

impl MonitorStep {
    /// Smallest margin over every variant of this step.
    pub fn min_margin(&self) -> Option<f64> {
        self.reports
            .iter()
            .filter_map(|r| r.min.as_ref().map(|m| m.margin_mw))
            .min_by(f64::total_cmp)
    }
}

/// Re-runs the full pipeline for every scenario step. Each step's dispatch
/// overrides the case schedule; failures are recorded inline.
pub fn monitor(
    case: &PowerSystemCase,
    scenario: &[Dispatch],
    variants: &[Variant],
    opts: &AnalysisOptions,
) -> Vec<MonitorStep> {
    scenario
        .iter()
        .enumerate()
        .map(|(step, dispatch)| {
            let outcome = analyze(case, dispatch, variants, opts)
                .and_then(|a| Ok((a.p_mw.clone(), a.margins(&format!("step {step}"), variants)?)));
            match outcome {
                Ok((p_mw, reports)) => MonitorStep { step, dispatch: dispatch.clone(), p_mw, reports, error: None },
                Err(e) => {
                    log::warn!("step {step}: {e}");
                    MonitorStep { step, dispatch: dispatch.clone(), p_mw: Vec::new(), reports: Vec::new(), error: Some(e.to_string()) }
                }
            }
        })
        .collect()
}
