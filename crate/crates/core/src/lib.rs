//! Synthesis of XOR-network low-power scan-test controllers.
//!
//! A controller expands `M` control bits into `N` per-chain gating signals
//! through a binary matrix over GF(2). This crate provides the packed GF(2)
//! solver, the controller model and its encoder, test-cube workloads,
//! encoding/power metrics, a genetic search over controller matrices, and an
//! incremental cube-merging simulator.
//!
//! ```
//! use xornet_core::{evaluate_xornet, generate_cubes, seed, UsageProfile, XorNet};
//!
//! let profile = UsageProfile::skewed(32, 200, &[4, 5], 0.3, 0.03).unwrap();
//! let cubes = generate_cubes(&profile, &mut seed::rng_from(1)).unwrap();
//! let net = XorNet::conventional(32, 8, 3).unwrap();
//! let report = evaluate_xornet(&net, &cubes, 0.5, 7, false).unwrap();
//! assert_eq!(report.ue, report.uns + report.scae);
//! ```

pub mod error;
pub mod ga;
pub mod gf2;
pub mod mergesim;
pub mod metrics;
pub mod seed;
pub mod testcubes;
pub mod xornet;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use ga::{
    crossover, fitness, init_population, mutate, rank_population, run_ga, select_parents, Fitness,
    GaConfig, GaOutcome, GaTrace, GenerationRecord, Individual,
};
pub use gf2::{gf2_solve, matvec_gf2, BitMatrix, BitVec, Gf2Solution, SolveStatus};
pub use mergesim::{incremental_merge, MergeReport, Pattern};
pub use metrics::{
    evaluate_xornet, is_high_power, shift_transition_trace, total_cycles, transition_rate,
    CubeOutcome, CycleModel, EvalReport,
};
pub use testcubes::{
    generate_cubes, profile_from_cubes, Cell, CubeSet, CubeSource, TestCube, UsageProfile,
};
pub use xornet::{
    conventional_andnet, random_tap_matrix, EncodeResult, EncodeStatus, XorNet, XorNetFile,
    DEFAULT_TAPS,
};

/// Identifies the experiment configuration and seed an output came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}
