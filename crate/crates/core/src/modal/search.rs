use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::options::SearchOptions;

/// Which side of the origin a limit lies on (`k = 1` negative, `k = 2`
/// positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Side {
    Negative,
    Positive,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Negative, Side::Positive];

    pub fn index(self) -> u8 {
        match self {
            Side::Negative => 1,
            Side::Positive => 2,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Side::Negative => -1.0,
            Side::Positive => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Side::Negative => "negative",
            Side::Positive => "positive",
        }
    }
}

impl From<Side> for u8 {
    fn from(s: Side) -> u8 {
        s.index()
    }
}

impl TryFrom<u8> for Side {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Side::Negative),
            2 => Ok(Side::Positive),
            _ => Err(format!("side must be 1 or 2, got {v}")),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub mode: usize,
    pub side: Side,
    /// Generalized angle of the extremum (rad).
    pub delta_g: f64,
    /// Curve value at the extremum.
    pub h: f64,
}

/// The two extrema of a mode's curve nearest the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitAngles {
    pub mode: usize,
    pub negative: LimitPoint,
    pub positive: LimitPoint,
}

fn derivative<F>(curve: &F, x: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok((curve(x + step)? - curve(x - step)?) / (2.0 * step))
}

/// Nearest extremum of `curve` on one side of the origin: march outward
/// until the central-difference slope changes sign, then bisect the slope.
pub fn find_limit_angle<F>(mode: usize, side: Side, curve: &F, opts: &SearchOptions) -> Result<LimitPoint>
where
    F: Fn(f64) -> Result<f64>,
{
    let slope0 = derivative(curve, 0.0, opts.fd_step)?;
    // Written negated so a NaN slope is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(slope0 < 0.0) {
        return Err(Error::CurveSlope { mode, slope: slope0 });
    }
    let s = side.sign();
    let mut lo = 0.0;
    let mut k = 1usize;
    let hi = loop {
        let mag = (k as f64 * opts.march_step).min(opts.range_cap);
        let x = s * mag;
        let d = derivative(curve, x, opts.fd_step)?;
        if d >= 0.0 {
            break x;
        }
        if mag >= opts.range_cap {
            return Err(Error::NoExtremum { mode, side: side.name(), cap: opts.range_cap });
        }
        lo = x;
        k += 1;
    };

    // Invariant: slope < 0 at lo, >= 0 at hi.
    let (mut lo, mut hi) = (lo, hi);
    while (hi - lo).abs() > opts.bisection_tol {
        let mid = 0.5 * (lo + hi);
        if derivative(curve, mid, opts.fd_step)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta_g = 0.5 * (lo + hi);
    Ok(LimitPoint { mode, side, delta_g, h: curve(delta_g)? })
}

pub fn find_limit_angles<F>(mode: usize, curve: &F, opts: &SearchOptions) -> Result<LimitAngles>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok(LimitAngles {
        mode,
        negative: find_limit_angle(mode, Side::Negative, curve, opts)?,
        positive: find_limit_angle(mode, Side::Positive, curve, opts)?,
    })
}
