//! Converter from MATPOWER-style `mpc.*` tables.
//!
//! Only `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch` are read.
//! MATPOWER carries no machine dynamics, so H, D and x'd come in alongside
//! as one [`GenDynamics`] per in-service generator, in table order.

use super::case::{Branch, Bus, BusKind, Generator, PowerSystemCase};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenDynamics {
    pub h: f64,
    pub d: f64,
    pub xd_prime: f64,
    pub mva_base: Option<f64>,
}

fn table(text: &str, name: &str) -> Result<Vec<Vec<f64>>> {
    let key = format!("mpc.{name}");
    let start = text
        .find(&key)
        .ok_or_else(|| Error::Schema(format!("missing {key}")))?;
    let rest = &text[start..];
    let open = rest
        .find('[')
        .ok_or_else(|| Error::Schema(format!("{key}: missing '['")))?;
    let close = rest
        .find(']')
        .ok_or_else(|| Error::Schema(format!("{key}: missing ']'")))?;
    let body = &rest[open + 1..close];
    let mut rows = Vec::new();
    for line in body.split([';', '\n']) {
        let line = line.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Schema(format!("{key}: bad number {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn scalar(text: &str, name: &str) -> Result<f64> {
    let key = format!("mpc.{name}");
    let start = text
        .find(&key)
        .ok_or_else(|| Error::Schema(format!("missing {key}")))?;
    let rest = &text[start + key.len()..];
    let value = rest
        .trim_start()
        .strip_prefix('=')
        .and_then(|r| r.split(';').next())
        .ok_or_else(|| Error::Schema(format!("{key}: expected '= value;'")))?;
    value
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("{key}: bad number")))
}

fn need(row: &[f64], n: usize, what: &str) -> Result<()> {
    if row.len() < n {
        return Err(Error::Schema(format!("{what} row has {} columns, need {n}", row.len())));
    }
    Ok(())
}

/// Builds a validated case from MATPOWER tables plus machine dynamics.
pub fn from_matpower(text: &str, dynamics: &[GenDynamics], f_nominal_hz: f64) -> Result<PowerSystemCase> {
    let base_mva = scalar(text, "baseMVA")?;
    let gens: Vec<Vec<f64>> = table(text, "gen")?
        .into_iter()
        .filter(|r| r.get(7).is_none_or(|s| *s > 0.0))
        .collect();
    let mut buses = Vec::new();
    for r in table(text, "bus")? {
        need(&r, 8, "bus")?;
        let id = r[0] as u32;
        let kind = match r[1] as i64 {
            1 => BusKind::Pq,
            2 => BusKind::Pv,
            3 => BusKind::Slack,
            other => return Err(Error::Schema(format!("bus {id}: unsupported type {other}"))),
        };
        let v_setpoint = gens
            .iter()
            .find(|g| g[0] as u32 == id)
            .and_then(|g| g.get(5).copied())
            .unwrap_or(r[7]);
        buses.push(Bus {
            id,
            kind,
            v_setpoint,
            p_load_mw: r[2],
            q_load_mvar: r[3],
            g_shunt: r[4] / base_mva,
            b_shunt: r[5] / base_mva,
        });
    }
    let mut branches = Vec::new();
    for r in table(text, "branch")? {
        need(&r, 5, "branch")?;
        if r.get(10).is_some_and(|s| *s <= 0.0) {
            continue;
        }
        let tap = r.get(8).copied().filter(|t| *t != 0.0).unwrap_or(1.0);
        branches.push(Branch {
            from: r[0] as u32,
            to: r[1] as u32,
            r: r[2],
            x: r[3],
            b: r[4],
            tap,
            shift_deg: r.get(9).copied().unwrap_or(0.0),
        });
    }
    if gens.len() != dynamics.len() {
        return Err(Error::Schema(format!(
            "{} in-service generators but {} dynamic records",
            gens.len(),
            dynamics.len()
        )));
    }
    let generators = gens
        .iter()
        .zip(dynamics)
        .map(|(g, dy)| {
            need(g, 2, "gen")?;
            Ok(Generator {
                bus: g[0] as u32,
                p_mw: g[1],
                h: dy.h,
                d: dy.d,
                xd_prime: dy.xd_prime,
                mva_base: dy.mva_base,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let case = PowerSystemCase {
        name: String::new(),
        provenance: Some("converted from MATPOWER tables".into()),
        base_mva,
        f_nominal_hz,
        buses,
        branches,
        generators,
    };
    case.validate()?;
    Ok(case)
}
