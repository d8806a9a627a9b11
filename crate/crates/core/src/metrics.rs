//! Encoding and power metrics.
//!
//! * UNS: cubes whose gating system has no solution.
//! * SCA: fraction of chains enabled by a decoded gating vector.
//! * SCAE: encoded cubes whose SCA exceeds the limit.
//! * UE = UNS + SCAE.
//!
//! Also the per-cycle shift transition rate and the total testing-cycle
//! model `((CBC + D) / C_in + cells) × patterns`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::seed::{derive, rng_from};
use crate::testcubes::CubeSet;
use crate::xornet::{EncodeStatus, XorNet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeOutcome {
    pub status: EncodeStatus,
    pub sca: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub uns: usize,
    pub scae: usize,
    pub ue: usize,
    pub mean_sca: f64,
    pub encoded_count: usize,
    pub sca_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_cube: Option<Vec<CubeOutcome>>,
}

impl EvalReport {
    pub fn total_cubes(&self) -> usize {
        self.uns + self.encoded_count
    }

    pub fn write_per_cube_csv(&self, mut w: impl Write) -> Result<()> {
        let per_cube = self
            .per_cube
            .as_ref()
            .ok_or_else(|| Error::invalid("report was built without per-cube outcomes"))?;
        writeln!(w, "cube_index,status,sca")?;
        for (i, o) in per_cube.iter().enumerate() {
            match (o.status, o.sca) {
                (EncodeStatus::Encoded, Some(s)) => writeln!(w, "{i},encoded,{s}")?,
                _ => writeln!(w, "{i},unsolvable,")?,
            }
        }
        Ok(())
    }
}

/// Encodes every cube and tallies UNS, SCAE, UE and mean SCA.
///
/// Cube `k` fills free control bits from its own stream seeded with
/// `derive(seed, k)`, so the result does not depend on evaluation order.
/// Mean SCA averages over encoded cubes only (0 when none encode).
pub fn evaluate_xornet(
    net: &XorNet,
    cubes: &CubeSet,
    sca_limit: f64,
    seed: u64,
    keep_per_cube: bool,
) -> Result<EvalReport> {
    Error::check_dim("cube set chain count", net.n_chains(), cubes.n_chains())?;
    if !(sca_limit > 0.0 && sca_limit <= 1.0) {
        return Err(Error::invalid(format!(
            "sca_limit must be in (0, 1], got {sca_limit}"
        )));
    }
    let outcomes = cubes
        .cubes()
        .par_iter()
        .enumerate()
        .map(|(k, cube)| {
            let r = net.encode(cube, &mut rng_from(derive(seed, k as u64)))?;
            Ok(CubeOutcome {
                status: r.status,
                sca: r.sca,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut uns = 0;
    let mut scae = 0;
    let mut encoded = 0;
    let mut sca_sum = 0.0;
    for o in &outcomes {
        match o.sca {
            None => uns += 1,
            Some(s) => {
                encoded += 1;
                sca_sum += s;
                if s > sca_limit {
                    scae += 1;
                }
            }
        }
    }
    Ok(EvalReport {
        uns,
        scae,
        ue: uns + scae,
        mean_sca: if encoded == 0 {
            0.0
        } else {
            sca_sum / encoded as f64
        },
        encoded_count: encoded,
        sca_limit,
        per_cube: keep_per_cube.then_some(outcomes),
    })
}

fn check_shapes(a: &[Vec<bool>], b: &[Vec<bool>]) -> Result<()> {
    Error::check_dim("chain count", a.len(), b.len())?;
    for (x, y) in a.iter().zip(b) {
        Error::check_dim("chain length", x.len(), y.len())?;
    }
    Ok(())
}

/// Fraction of scan cells whose value differs between two register states.
pub fn transition_rate(prev: &[Vec<bool>], next: &[Vec<bool>]) -> Result<f64> {
    check_shapes(prev, next)?;
    let total: usize = prev.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::invalid("register has no cells"));
    }
    let toggles: usize = prev
        .iter()
        .zip(next)
        .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count())
        .sum();
    Ok(toggles as f64 / total as f64)
}

/// Shift simulation over one load.
///
/// Each cycle every chain shifts one position toward cell 0 and takes a new
/// value at its last cell: the next load bit when its gating signal is 1,
/// otherwise `fill`. Load sequences are consumed front to back. Element `t`
/// of the result is the transition rate between the register state before
/// and after cycle `t`. All chains must share one length.
pub fn shift_transition_trace(
    chain_states: &[Vec<bool>],
    load_values: &[Vec<bool>],
    gating: &BitVec,
    fill: bool,
) -> Result<Vec<f64>> {
    check_shapes(chain_states, load_values)?;
    Error::check_dim("gating length", chain_states.len(), gating.len())?;
    let len = chain_states.first().map_or(0, Vec::len);
    for c in chain_states {
        Error::check_dim("uniform chain length", len, c.len())?;
    }
    let mut state = chain_states.to_vec();
    let mut trace = Vec::with_capacity(len);
    #[allow(clippy::needless_range_loop)]
    for t in 0..len {
        let mut next = state.clone();
        for (i, chain) in next.iter_mut().enumerate() {
            chain.rotate_left(1);
            let incoming = if gating.get(i) {
                load_values[i][t]
            } else {
                fill
            };
            *chain.last_mut().expect("non-empty chain") = incoming;
        }
        trace.push(transition_rate(&state, &next)?);
        state = next;
    }
    Ok(trace)
}

/// A load is high-power when any cycle exceeds the transition cap.
pub fn is_high_power(trace: &[f64], max_rate: f64) -> bool {
    trace.iter().any(|&r| r > max_rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleModel {
    /// Control bit count.
    pub cbc: u64,
    /// Decompressor configuration bits.
    pub d: u64,
    /// Input channels.
    pub c_in: u64,
    /// Longest chain length.
    pub n_cell: u64,
    pub pattern_count: u64,
}

/// `(ceil((cbc + d) / c_in) + n_cell) * pattern_count`.
pub fn total_cycles(model: &CycleModel) -> Result<u64> {
    if model.c_in == 0 {
        return Err(Error::invalid("c_in must be at least 1"));
    }
    let per_pattern = (model.cbc + model.d).div_ceil(model.c_in) + model.n_cell;
    per_pattern
        .checked_mul(model.pattern_count)
        .ok_or_else(|| Error::invalid("cycle count overflows u64"))
}
