//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use xornet_cli::{cmd_sweep_cbc, ExperimentConfig};
use xornet_core::seed::{derive, named, rng_from, STREAM_CUBE_GEN};
use xornet_core::{
    evaluate_xornet, generate_cubes, gf2_solve, incremental_merge, run_ga, total_cycles, BitMatrix,
    BitVec, CubeSet, CycleModel, EncodeStatus, GaConfig, GaOutcome, TestCube, UsageProfile, XorNet,
};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const N_CHAINS: usize = 64;
const N_CONTROL: usize = 12;
const SCA_LIMIT: f64 = 0.5;
const SEEDS: u64 = 10;

fn workload_profile() -> UsageProfile {
    UsageProfile::skewed(N_CHAINS, 2000, &[22, 23], 0.8, 0.055).unwrap()
}

fn workload(seed: u64) -> CubeSet {
    generate_cubes(
        &workload_profile(),
        &mut rng_from(named(seed, STREAM_CUBE_GEN)),
    )
    .unwrap()
}

fn ga_config(seed: u64) -> GaConfig {
    GaConfig {
        size_pop: 40,
        size_parents: 5,
        size_children: 25,
        size_gen: 20,
        mutation_ratio: 0.05,
        lambda: 100.0,
        sca_limit: SCA_LIMIT,
        stall_window: 20,
        master_seed: seed,
        ..GaConfig::default()
    }
}

struct SeedRun {
    seed: u64,
    cubes: CubeSet,
    ga: GaOutcome,
}

/// One GA run per seed, shared by criteria 6-8.
fn seed_runs() -> &'static [SeedRun] {
    static RUNS: OnceLock<Vec<SeedRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        (0..SEEDS)
            .into_par_iter()
            .map(|seed| {
                let cubes = workload(seed);
                let ga = run_ga(&cubes, N_CONTROL, &ga_config(seed), None).unwrap();
                SeedRun { seed, cubes, ga }
            })
            .collect()
    })
}

fn baseline_net() -> XorNet {
    XorNet::conventional(N_CHAINS, N_CONTROL, 3).unwrap()
}

// Plain-bool reference arithmetic, independent of the packed implementation.

fn random_bools<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<bool> {
    (0..n).map(|_| rng.random_bool(p)).collect()
}

/// Bits with a per-call density drawn from `lo..=hi`.
fn mixed<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<bool> {
    let p = rng.random_range(lo..=hi);
    random_bools(rng, n, p)
}

fn parity(row: &[bool], z: u32) -> bool {
    row.iter()
        .enumerate()
        .filter(|&(j, &b)| b && (z >> j) & 1 == 1)
        .count()
        % 2
        == 1
}

fn gating_ref(a: &[Vec<bool>], b: Option<&[Vec<bool>]>, z: u32) -> Vec<bool> {
    (0..a.len())
        .map(|i| parity(&a[i], z) && b.is_none_or(|b| parity(&b[i], z)))
        .collect()
}

fn word_bits(w: &BitVec) -> u32 {
    w.iter_ones().fold(0, |acc, j| acc | 1 << j)
}

fn to_matrix(rows: &[Vec<bool>]) -> BitMatrix {
    BitMatrix::from_rows(
        rows[0].len(),
        rows.iter().map(|r| BitVec::from_bools(r)).collect(),
    )
    .unwrap()
}

fn random_nonzero_rows<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|_| loop {
            let r = mixed(rng, m, 0.1, 0.9);
            if r.iter().any(|&b| b) {
                break r;
            }
        })
        .collect()
}

fn c1_transition_rate() -> Outcome {
    let b = |s: &str| s.chars().map(|c| c == '1').collect::<Vec<bool>>();
    let r =
        xornet_core::transition_rate(&[b("00110")], &[b("01101")]).map_err(|e| e.to_string())?;
    ensure!(r == 0.6, "rate {r}");
    Ok(format!("rate = {r}"))
}

/// Control bits, pattern count, cycles.
type Row = (u64, u64, u64);

/// (id, cells, one row per power limit).
const BASELINE_ROWS: [(&str, u64, [Row; 2]); 10] = [
    ("C1", 328, [(9, 1263, 440_787), (16, 1323, 470_988)]),
    ("C2", 358, [(11, 2260, 861_060), (23, 2539, 997_827)]),
    ("C3", 329, [(20, 10893, 3_954_159), (40, 13426, 5_142_158)]),
    ("C4", 360, [(25, 5171, 2_073_571), (50, 2027, 863_502)]),
    ("C5", 328, [(25, 1393, 526_554), (64, 1154, 481_218)]),
    ("C6", 40, [(76, 3850, 739_200), (190, 3876, 1_186_056)]),
    ("C7", 31, [(80, 2471, 471_961), (200, 2540, 789_940)]),
    ("C8", 330, [(82, 661, 327_195), (82, 656, 324_720)]),
    ("C9", 25, [(100, 2451, 551_475), (250, 2558, 959_250)]),
    ("C10", 20, [(114, 3952, 980_096), (152, 3952, 1_130_272)]),
];

fn c2_cycle_table() -> Outcome {
    let mut checked = 0;
    for (id, cells, rows) in BASELINE_ROWS {
        for (cbc, pc, cycles) in rows {
            ensure!(cycles % pc == 0, "{id}: {cycles} not divisible by {pc}");
            let per = cycles / pc;
            ensure!(per >= cells + cbc, "{id}: negative D");
            let d = per - cells - cbc;
            let model = CycleModel {
                cbc,
                d,
                c_in: 1,
                n_cell: cells,
                pattern_count: pc,
            };
            let got = total_cycles(&model).map_err(|e| e.to_string())?;
            ensure!(got == cycles, "{id}: {got} != {cycles}");
            checked += 1;
        }
    }
    Ok(format!("{checked} baseline rows reproduced"))
}

fn c3_solver_oracle() -> Outcome {
    let mut rng = rng_from(3);
    let (mut consistent, mut inconsistent) = (0, 0);
    for case in 0..1000 {
        let m = rng.random_range(1..=12usize);
        let rows = rng.random_range(1..=16usize);
        let a: Vec<Vec<bool>> = (0..rows).map(|_| random_bools(&mut rng, m, 0.5)).collect();
        let b = random_bools(&mut rng, rows, 0.5);
        let oracle = (0..1u32 << m)
            .filter(|&z| (0..rows).all(|i| parity(&a[i], z) == b[i]))
            .count();
        let sol = gf2_solve(&to_matrix(&a), &BitVec::from_bools(&b), &mut rng_from(case))
            .map_err(|e| e.to_string())?;
        ensure!(
            sol.is_consistent() == (oracle > 0),
            "case {case}: solvability mismatch"
        );
        if let Some(x) = &sol.assignment {
            let z = word_bits(x);
            ensure!(
                (0..rows).all(|i| parity(&a[i], z) == b[i]),
                "case {case}: bad assignment"
            );
            ensure!(
                oracle == 1 << sol.free_var_count,
                "case {case}: solution count"
            );
            consistent += 1;
        } else {
            inconsistent += 1;
        }
    }
    Ok(format!(
        "1000 systems ({consistent} consistent, {inconsistent} inconsistent)"
    ))
}

fn c4_encode_oracle() -> Outcome {
    let mut rng = rng_from(4);
    let (mut encoded, mut unsolvable) = (0, 0);
    for case in 0..500 {
        let n = rng.random_range(2..=24usize);
        let m = rng.random_range(1..=12usize);
        let a = random_nonzero_rows(&mut rng, n, m);
        let b = (case % 4 == 0).then(|| random_nonzero_rows(&mut rng, n, m));
        let net =
            XorNet::new(to_matrix(&a), b.as_deref().map(to_matrix)).map_err(|e| e.to_string())?;
        let usage = mixed(&mut rng, n, 0.05, 0.6);
        let need: Vec<usize> = (0..n).filter(|&i| usage[i]).collect();
        let solvable = (0..1u32 << m).any(|z| {
            let g = gating_ref(&a, b.as_deref(), z);
            need.iter().all(|&i| g[i])
        });
        let r = net
            .encode(
                &TestCube::from_usage(BitVec::from_bools(&usage)),
                &mut rng_from(case),
            )
            .map_err(|e| e.to_string())?;
        ensure!(
            (r.status == EncodeStatus::Unsolvable) == !solvable,
            "case {case}: verdict mismatch"
        );
        if r.status == EncodeStatus::Encoded {
            let z = word_bits(r.control_word.as_ref().unwrap());
            let g = gating_ref(&a, b.as_deref(), z);
            ensure!(need.iter().all(|&i| g[i]), "case {case}: chain not covered");
            let sca = g.iter().filter(|&&x| x).count() as f64 / n as f64;
            ensure!(r.sca == Some(sca), "case {case}: sca");
            encoded += 1;
        } else {
            unsolvable += 1;
        }
    }
    Ok(format!(
        "500 pairs ({encoded} encoded, {unsolvable} unsolvable)"
    ))
}

fn c5_odd_weight_nets() -> Outcome {
    let mut rng = rng_from(5);
    let mut cubes_checked = 0;
    for case in 0..200u64 {
        let n = rng.random_range(2..=80usize);
        let m = rng.random_range(1..=16usize);
        let rows: Vec<Vec<bool>> = (0..n)
            .map(|_| loop {
                let r = mixed(&mut rng, m, 0.1, 0.9);
                if r.iter().filter(|&&x| x).count() % 2 == 1 {
                    break r;
                }
            })
            .collect();
        let net = XorNet::new(to_matrix(&rows), None).map_err(|e| e.to_string())?;
        let k = rng.random_range(1..=40usize);
        let usages = (0..k)
            .map(|_| BitVec::from_bools(&mixed(&mut rng, n, 0.0, 1.0)))
            .collect();
        let cubes = CubeSet::from_usages(usages).map_err(|e| e.to_string())?;
        let r = evaluate_xornet(&net, &cubes, 1.0, case, false).map_err(|e| e.to_string())?;
        ensure!(r.uns == 0, "case {case}: uns = {}", r.uns);
        cubes_checked += k;
    }
    Ok(format!("200 nets, {cubes_checked} cubes, uns = 0"))
}

fn c6_ga_invariants() -> Outcome {
    let run = &seed_runs()[0];
    let records = &run.ga.trace.records;
    ensure!(
        records.len() >= 2,
        "only {} generations recorded",
        records.len()
    );
    let best = run.ga.trace.best_fitness();
    ensure!(
        best.windows(2).all(|w| w[1] <= w[0]),
        "best fitness increased: {best:?}"
    );
    for r in records {
        ensure!(
            r.fitness.len() == 40 && r.ue.len() == 40 && r.mean_sca.len() == 40,
            "generation {} has population {}",
            r.generation,
            r.fitness.len()
        );
    }
    let again =
        run_ga(&run.cubes, N_CONTROL, &ga_config(run.seed), None).map_err(|e| e.to_string())?;
    ensure!(again.trace == run.ga.trace, "trace differs on rerun");
    ensure!(again.best == run.ga.best, "best net differs on rerun");
    ensure!(
        again.best_fitness == run.ga.best_fitness,
        "best fitness differs on rerun"
    );
    Ok(format!(
        "{} generations, best {:.3} -> {:.3}, population 40, reproducible",
        records.len(),
        best[0],
        best[best.len() - 1]
    ))
}

fn c7_ga_beats_baseline() -> Outcome {
    let base = baseline_net();
    let rows: Vec<(usize, usize)> = seed_runs()
        .par_iter()
        .map(|run| {
            let eval_seed = named(run.seed, "acceptance-eval");
            let g = evaluate_xornet(&run.ga.best, &run.cubes, SCA_LIMIT, eval_seed, false).unwrap();
            let b = evaluate_xornet(&base, &run.cubes, SCA_LIMIT, eval_seed, false).unwrap();
            (g.ue, b.ue)
        })
        .collect();
    let wins = rows.iter().filter(|(g, b)| g <= b).count();
    let mean = |f: fn(&(usize, usize)) -> usize| {
        rows.iter().map(f).sum::<usize>() as f64 / rows.len() as f64
    };
    let (mg, mb) = (mean(|r| r.0), mean(|r| r.1));
    let detail = format!("GA <= baseline in {wins}/10 seeds, mean UE {mg:.1} vs {mb:.1}; per seed (ga, base) {rows:?}");
    ensure!(wins >= 9 && mg < mb, "{detail}");
    Ok(detail)
}

fn c8_merge_improvement() -> Outcome {
    let base = baseline_net();
    let rows: Vec<(usize, usize)> = seed_runs()
        .par_iter()
        .map(|run| {
            let merge_seed = named(run.seed, "acceptance-merge");
            let g = incremental_merge(
                &run.ga.best,
                &run.cubes,
                SCA_LIMIT,
                &mut rng_from(merge_seed),
            )
            .unwrap();
            let b =
                incremental_merge(&base, &run.cubes, SCA_LIMIT, &mut rng_from(merge_seed)).unwrap();
            (g.pattern_count, b.pattern_count)
        })
        .collect();
    let wins = rows.iter().filter(|(g, b)| g <= b).count();
    let detail = format!("GA <= baseline in {wins}/10 seeds; pattern counts (ga, base) {rows:?}");
    ensure!(wins >= 8, "{detail}");
    Ok(detail)
}

fn c9_ue_identity() -> Outcome {
    let failures: Vec<String> = (0..10_000u64)
        .into_par_iter()
        .filter_map(|case| {
            let mut rng = rng_from(derive(9, case));
            let n = rng.random_range(1..=48usize);
            let m = rng.random_range(1..=14usize);
            let a = random_nonzero_rows(&mut rng, n, m);
            let b = rng
                .random_bool(0.25)
                .then(|| random_nonzero_rows(&mut rng, n, m));
            let net = XorNet::new(to_matrix(&a), b.as_deref().map(to_matrix)).unwrap();
            let k = rng.random_range(1..=16usize);
            let usages = (0..k)
                .map(|_| BitVec::from_bools(&mixed(&mut rng, n, 0.0, 1.0)))
                .collect();
            let cubes = CubeSet::from_usages(usages).unwrap();
            let limit = 1.0 - rng.random_range(0.0..1.0);
            let r = evaluate_xornet(&net, &cubes, limit, rng.random(), true).unwrap();
            let per = r.per_cube.as_ref().unwrap();
            let uns = per
                .iter()
                .filter(|o| o.status == EncodeStatus::Unsolvable)
                .count();
            let scae = per
                .iter()
                .filter(|o| o.sca.is_some_and(|s| s > limit))
                .count();
            (r.ue != r.uns + r.scae || r.uns != uns || r.scae != scae)
                .then(|| format!("case {case}: ue {} uns {} scae {}", r.ue, r.uns, r.scae))
        })
        .collect();
    ensure!(
        failures.is_empty(),
        "{} failures, first: {}",
        failures.len(),
        failures[0]
    );
    Ok("10000 evaluations, ue == uns + scae".into())
}

fn c10_cbc_sweep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cubes_path = dir.path().join("cubes.txt");
    workload(0)
        .save(&cubes_path, &[])
        .map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig {
        n_control: N_CONTROL,
        sca_limit: SCA_LIMIT,
        ga: ga_config(0),
        master_seed: 0,
        out_dir: dir.path().join("out"),
        ..ExperimentConfig::default()
    };
    cfg.cycle.d = 12;
    cfg.cycle.c_in = 1;
    cfg.cycle.n_cell = 328;
    cfg.workload.cubes = Some(cubes_path);
    let list = [8usize, 10, 12, 16, 20];
    let out = cmd_sweep_cbc(&cfg, &list).map_err(|e| format!("{e:#}"))?;

    let csv = std::fs::read_to_string(&out.csv).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<u64>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    ensure!(rows.len() == list.len(), "{} rows", rows.len());
    let mut shape = Vec::new();
    for (row, &cbc) in rows.iter().zip(&list) {
        let (c, pc, cycles) = (row[0], row[2], row[3]);
        ensure!(c == cbc as u64, "row order: {c} != {cbc}");
        let expected = ((c + 12).div_ceil(1) + 328) * pc;
        ensure!(cycles == expected, "cbc {c}: {cycles} != {expected}");
        shape.push(format!("{c}:{pc}/{cycles}"));
    }
    Ok(format!("cbc:pc/cycles {}", shape.join(" ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("transition rate worked example", c1_transition_rate),
        ("cycle model reproduces baseline table", c2_cycle_table),
        ("solver agrees with enumeration", c3_solver_oracle),
        ("encoder agrees with brute force", c4_encode_oracle),
        ("odd row weights encode every cube", c5_odd_weight_nets),
        ("GA invariants", c6_ga_invariants),
        ("GA UE vs conventional net", c7_ga_beats_baseline),
        (
            "merged pattern count vs conventional net",
            c8_merge_improvement,
        ),
        ("ue == uns + scae under fuzzing", c9_ue_identity),
        ("CBC sweep cycles recomputation", c10_cbc_sweep),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
