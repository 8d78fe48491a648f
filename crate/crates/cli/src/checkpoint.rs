//! Checkpoint files: one JSON header line, then a raw little-endian `f64` payload.
//!
//! Every float needed to continue a run lives in the payload, so a round trip
//! is bit-exact; the header repeats a few of them for people reading the file.

use std::io::Write;
use std::path::Path;

use horoflow_core::flow::{FlowState, PotentialField};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT: &str = "horoflow-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    State,
    Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub kind: Kind,
    pub scenario_hash: String,
    pub t: f64,
    pub c_t: f64,
    pub x_t: Vec<f64>,
    pub grid: GridHeader,
    pub steps: usize,
    pub rejected: usize,
    /// Trace rows written up to and including this state.
    pub trace_rows: usize,
    pub samples: usize,
    pub window: usize,
    pub payload_len: usize,
}

fn write_file(path: &Path, header: &Header, payload: &[f64]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let tmp = path.with_extension("tmp");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp).map_err(io)?);
    serde_json::to_writer(&mut f, header).map_err(|e| CliError::Io(e.to_string()))?;
    f.write_all(b"\n").map_err(io)?;
    for x in payload {
        f.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    f.into_inner().map_err(|e| io(e.into_error()))?.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

pub fn read_file(path: &Path) -> Result<(Header, Vec<f64>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |msg: &str| CliError::Checkpoint(format!("{}: {msg}", path.display()));
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line"))?;
    let header: Header = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(&e.to_string()))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(bad("unknown format or version"));
    }
    let body = &bytes[nl + 1..];
    if body.len() != 8 * header.payload_len {
        return Err(bad("payload length does not match the header"));
    }
    let payload = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((header, payload))
}

/// Header fields that describe the run rather than the payload.
pub struct Context<'a> {
    pub scenario_hash: &'a str,
    pub grid: GridHeader,
    pub c_t: f64,
    pub x_t: Vec<f64>,
    pub trace_rows: usize,
}

pub fn save_state(path: &Path, ctx: Context<'_>, state: &FlowState<f64>) -> Result<(), CliError> {
    let r = ctx.grid.dim;
    let mut payload = vec![state.t, state.dt, state.k_energy, state.dissipation];
    payload.extend_from_slice(&state.psi);
    for s in &state.samples {
        payload.extend_from_slice(s);
    }
    for (t, x) in &state.window {
        payload.push(*t);
        payload.extend_from_slice(x);
    }
    debug_assert!(state.samples.iter().chain(state.window.iter().map(|w| &w.1)).all(|x| x.len() == r));
    let header = Header {
        format: FORMAT.to_string(),
        version: VERSION,
        kind: Kind::State,
        scenario_hash: ctx.scenario_hash.to_string(),
        t: state.t,
        c_t: ctx.c_t,
        x_t: ctx.x_t,
        grid: ctx.grid,
        steps: state.steps,
        rejected: state.rejected,
        trace_rows: ctx.trace_rows,
        samples: state.samples.len(),
        window: state.window.len(),
        payload_len: payload.len(),
    };
    write_file(path, &header, &payload)
}

pub fn load_state(path: &Path) -> Result<(Header, FlowState<f64>), CliError> {
    let (h, p) = read_file(path)?;
    if h.kind != Kind::State {
        return Err(CliError::Checkpoint(format!("{}: not a state checkpoint", path.display())));
    }
    let r = h.grid.dim;
    let n = h.grid.points_per_axis.pow(r as u32);
    if p.len() != 4 + n + h.samples * r + h.window * (r + 1) {
        return Err(CliError::Checkpoint(format!("{}: payload layout does not match the grid", path.display())));
    }
    let mut at = 4;
    let mut take = |k: usize| {
        let out = p[at..at + k].to_vec();
        at += k;
        out
    };
    let psi = take(n);
    let samples = (0..h.samples).map(|_| take(r)).collect();
    let window = (0..h.window)
        .map(|_| {
            let w = take(r + 1);
            (w[0], w[1..].to_vec())
        })
        .collect();
    let state =
        FlowState { t: p[0], dt: p[1], k_energy: p[2], dissipation: p[3], steps: h.steps, rejected: h.rejected, psi, samples, window };
    Ok((h, state))
}

pub fn save_potential(path: &Path, ctx: Context<'_>, t: f64, steps: usize, field: &PotentialField<f64>) -> Result<(), CliError> {
    let header = Header {
        format: FORMAT.to_string(),
        version: VERSION,
        kind: Kind::Potential,
        scenario_hash: ctx.scenario_hash.to_string(),
        t,
        c_t: ctx.c_t,
        x_t: ctx.x_t,
        grid: ctx.grid,
        steps,
        rejected: 0,
        trace_rows: ctx.trace_rows,
        samples: 0,
        window: 0,
        payload_len: field.values.len(),
    };
    write_file(path, &header, &field.values)
}
