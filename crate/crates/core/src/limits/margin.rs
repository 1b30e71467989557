use serde::{Deserialize, Serialize};

use super::reconstruct::{SteadyStateAtLimit, Variant};
use crate::error::{Error, Result};
use crate::modal::Side;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginEntry {
    pub variant: Variant,
    pub mode: usize,
    pub side: Side,
    pub margin_mw: f64,
}

/// A limit point that could not be produced; listed, never used for the
/// minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub variant: Option<Variant>,
    pub mode: usize,
    pub side: Option<Side>,
    pub error: String,
}

/// MW margins of one operating condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub label: String,
    pub entries: Vec<MarginEntry>,
    pub failures: Vec<PointFailure>,
    pub min: Option<MarginEntry>,
}

/// L2 distance (MW) between the current generator vector and each point.
pub fn compute_margins(
    label: impl Into<String>,
    current_mw: &[f64],
    points: &[SteadyStateAtLimit],
) -> Result<MarginReport> {
    let mut entries = Vec::with_capacity(points.len());
    for p in points {
        if p.p_mw.len() != current_mw.len() {
            return Err(Error::Dimension { expected: current_mw.len(), got: p.p_mw.len() });
        }
        let margin_mw = current_mw
            .iter()
            .zip(&p.p_mw)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        entries.push(MarginEntry { variant: p.variant, mode: p.mode, side: p.side, margin_mw });
    }
    let min = entries
        .iter()
        .filter(|e| e.margin_mw.is_finite())
        .min_by(|a, b| a.margin_mw.total_cmp(&b.margin_mw))
        .cloned();
    Ok(MarginReport { label: label.into(), entries, failures: Vec::new(), min })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(p_mw: Vec<f64>, side: Side) -> SteadyStateAtLimit {
        SteadyStateAtLimit {
            variant: Variant::Ms2,
            mode: 0,
            side,
            delta_g: 0.0,
            machine_angles: vec![],
            internal_voltage: vec![],
            terminal_voltage: vec![],
            non_gen_voltage: vec![],
            bus_voltage: vec![],
            terminal_current: vec![],
            gen_power: vec![],
            load_current: vec![],
            load_power: vec![],
            p_mw,
            kcl_residual: 0.0,
            iterations: None,
        }
    }

    #[test]
    fn identical_vectors_have_zero_margin() {
        let r = compute_margins("x", &[10.0, 20.0], &[point(vec![10.0, 20.0], Side::Negative)]).unwrap();
        assert_eq!(r.entries[0].margin_mw, 0.0);
    }

    #[test]
    fn single_component_difference() {
        let pts = [point(vec![100.0, 50.0, 80.0], Side::Negative), point(vec![100.0, 80.0, 80.0], Side::Positive)];
        let r = compute_margins("x", &[100.0, 50.0, 50.0], &pts).unwrap();
        assert!((r.entries[0].margin_mw - 30.0).abs() < 1e-12);
        let expected = (30.0f64 * 30.0 + 30.0 * 30.0).sqrt();
        assert!((r.entries[1].margin_mw - expected).abs() < 1e-12);
        assert_eq!(r.min.unwrap().side, Side::Negative);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            compute_margins("x", &[1.0], &[point(vec![1.0, 2.0], Side::Negative)]),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
    }
}
