//! Incremental merging of test cubes into test patterns.
//!
//! Greedy first-fit in cube order at chain granularity: a cube joins the
//! first open pattern whose OR-ed usage still encodes within the SCA limit;
//! otherwise it opens a new pattern, or is dropped when it cannot be
//! encoded within the limit on its own. Every candidate is encoded from
//! scratch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::testcubes::CubeSet;
use crate::xornet::XorNet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub members: Vec<usize>,
    pub usage: BitVec,
    pub control_word: BitVec,
    pub sca: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    pub pattern_count: usize,
    pub sca_limit: f64,
    pub patterns: Vec<Pattern>,
    pub dropped: Vec<usize>,
}

/// Encodes `usage` and accepts the result only within the SCA limit.
fn try_encode<R: Rng + ?Sized>(
    net: &XorNet,
    usage: &BitVec,
    sca_limit: f64,
    rng: &mut R,
) -> Result<Option<(BitVec, f64)>> {
    let r = net.encode_usage(usage, rng)?;
    Ok(match (r.control_word, r.sca) {
        (Some(z), Some(sca)) if sca <= sca_limit => Some((z, sca)),
        _ => None,
    })
}

pub fn incremental_merge<R: Rng + ?Sized>(
    net: &XorNet,
    cubes: &CubeSet,
    sca_limit: f64,
    rng: &mut R,
) -> Result<MergeReport> {
    Error::check_dim("cube set chain count", net.n_chains(), cubes.n_chains())?;
    if !(sca_limit > 0.0 && sca_limit <= 1.0) {
        return Err(Error::invalid(format!(
            "sca_limit must be in (0, 1], got {sca_limit}"
        )));
    }
    let mut patterns: Vec<Pattern> = Vec::new();
    let mut dropped = Vec::new();

    'cubes: for (k, cube) in cubes.iter().enumerate() {
        for p in patterns.iter_mut() {
            let merged = &p.usage | cube.usage();
            if let Some((z, sca)) = try_encode(net, &merged, sca_limit, rng)? {
                p.members.push(k);
                p.usage = merged;
                p.control_word = z;
                p.sca = sca;
                continue 'cubes;
            }
        }
        match try_encode(net, cube.usage(), sca_limit, rng)? {
            Some((z, sca)) => patterns.push(Pattern {
                members: vec![k],
                usage: cube.usage().clone(),
                control_word: z,
                sca,
            }),
            None => dropped.push(k),
        }
    }

    Ok(MergeReport {
        pattern_count: patterns.len(),
        sca_limit,
        patterns,
        dropped,
    })
}
