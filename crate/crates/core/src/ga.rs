//! Genetic search over level-1 XOR-network matrices.
//!
//! Each generation: evaluate fitness `UE + λ·mean_SCA` for every individual,
//! keep the `size_parents` lowest as the mating pool, breed `size_children`
//! children by row-wise crossover of two distinct pool members followed by
//! bit-flip mutation, and form the next population from the pool, the
//! children, and (when `size_pop` exceeds the two) the next-ranked
//! survivors. Parents are carried unmodified, so the best fitness never
//! increases.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::metrics::evaluate_xornet;
use crate::seed::{derive, named, rng_from, STREAM_ENCODE_FILL, STREAM_GA};
use crate::testcubes::CubeSet;
use crate::xornet::{random_tap_matrix, XorNet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub size_pop: usize,
    pub size_parents: usize,
    pub size_children: usize,
    pub size_gen: usize,
    pub mutation_ratio: f64,
    pub lambda: f64,
    pub sca_limit: f64,
    pub taps_init: usize,
    pub stall_window: usize,
    pub master_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            size_pop: 40,
            size_parents: 5,
            size_children: 25,
            size_gen: 20,
            mutation_ratio: 0.05,
            lambda: 100.0,
            sca_limit: 0.5,
            taps_init: 3,
            stall_window: 5,
            master_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size_parents == 0 {
            return Err(Error::invalid("size_parents must be at least 1"));
        }
        if self.size_children > 0 && self.size_parents < 2 {
            return Err(Error::invalid("breeding children needs at least 2 parents"));
        }
        if self.size_parents + self.size_children > self.size_pop {
            return Err(Error::invalid(format!(
                "size_parents + size_children ({}) exceeds size_pop ({})",
                self.size_parents + self.size_children,
                self.size_pop
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_ratio) {
            return Err(Error::invalid("mutation_ratio must be in [0, 1]"));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::invalid("lambda must be positive"));
        }
        if !(self.sca_limit > 0.0 && self.sca_limit <= 1.0) {
            return Err(Error::invalid("sca_limit must be in (0, 1]"));
        }
        if self.size_gen == 0 {
            return Err(Error::invalid("size_gen must be at least 1"));
        }
        if self.stall_window == 0 {
            return Err(Error::invalid("stall_window must be at least 1"));
        }
        if self.taps_init == 0 {
            return Err(Error::invalid("taps_init must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub ue: usize,
    pub mean_sca: f64,
    pub value: f64,
}

impl Fitness {
    pub fn new(ue: usize, mean_sca: f64, lambda: f64) -> Self {
        Self {
            ue,
            mean_sca,
            value: ue as f64 + lambda * mean_sca,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub level1: BitMatrix,
    pub fitness: Option<Fitness>,
}

impl Individual {
    pub fn new(level1: BitMatrix) -> Self {
        Self {
            level1,
            fitness: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_ue: usize,
    pub best_mean_sca: f64,
    /// Fitness of every individual, in population order.
    pub fitness: Vec<f64>,
    pub ue: Vec<usize>,
    pub mean_sca: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaTrace {
    pub records: Vec<GenerationRecord>,
}

impl GaTrace {
    pub fn best_fitness(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }

    /// `generation,best_fitness,best_ue,best_mean_sca,fit_0,...` with one
    /// row per generation.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let width = self
            .records
            .iter()
            .map(|r| r.fitness.len())
            .max()
            .unwrap_or(0);
        write!(w, "generation,best_fitness,best_ue,best_mean_sca")?;
        for i in 0..width {
            write!(w, ",fit_{i}")?;
        }
        writeln!(w)?;
        for r in &self.records {
            write!(
                w,
                "{},{},{},{}",
                r.generation, r.best_fitness, r.best_ue, r.best_mean_sca
            )?;
            for f in &r.fitness {
                write!(w, ",{f}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GaOutcome {
    pub best: XorNet,
    pub best_fitness: Fitness,
    pub trace: GaTrace,
}

pub fn init_population<R: Rng + ?Sized>(
    n_chains: usize,
    n_control: usize,
    cfg: &GaConfig,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    if cfg.taps_init > n_control {
        return Err(Error::invalid(format!(
            "taps_init {} exceeds n_control {n_control}",
            cfg.taps_init
        )));
    }
    (0..cfg.size_pop)
        .map(|_| random_tap_matrix(n_chains, n_control, cfg.taps_init, rng).map(Individual::new))
        .collect()
}

/// Seed for the fill streams of one matrix: derived from the evaluation
/// seed and the matrix contents, so equal matrices always score equally.
fn fitness_seed(eval_seed: u64, level1: &BitMatrix) -> u64 {
    derive(eval_seed, level1.content_hash())
}

/// Evaluates one matrix (with the fixed AND-side net when given).
pub fn fitness(
    level1: &BitMatrix,
    cubes: &CubeSet,
    cfg: &GaConfig,
    andnet: Option<&BitMatrix>,
    eval_seed: u64,
) -> Result<Fitness> {
    let net = XorNet::new(level1.clone(), andnet.cloned())?;
    let report = evaluate_xornet(
        &net,
        cubes,
        cfg.sca_limit,
        fitness_seed(eval_seed, level1),
        false,
    )?;
    Ok(Fitness::new(report.ue, report.mean_sca, cfg.lambda))
}

/// Population indices sorted by ascending fitness; ties keep index order.
pub fn rank_population(pop: &[Individual]) -> Result<Vec<usize>> {
    let values = pop
        .iter()
        .enumerate()
        .map(|(i, ind)| {
            ind.fitness
                .map(|f| f.value)
                .ok_or_else(|| Error::invalid(format!("individual {i} has no fitness")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(order)
}

/// The `k` lowest-fitness individuals, best first.
pub fn select_parents(pop: &[Individual], k: usize) -> Result<Vec<Individual>> {
    if k > pop.len() {
        return Err(Error::invalid(format!(
            "cannot select {k} parents from {} individuals",
            pop.len()
        )));
    }
    let order = rank_population(pop)?;
    Ok(order[..k].iter().map(|&i| pop[i].clone()).collect())
}

/// Row-wise uniform crossover: each child row is copied whole from one
/// parent chosen by a fair coin.
pub fn crossover<R: Rng + ?Sized>(
    p1: &Individual,
    p2: &Individual,
    rng: &mut R,
) -> Result<Individual> {
    let (a, b) = (&p1.level1, &p2.level1);
    Error::check_dim("crossover rows", a.n_rows(), b.n_rows())?;
    Error::check_dim("crossover columns", a.n_cols(), b.n_cols())?;
    let rows = (0..a.n_rows())
        .map(|i| {
            if rng.random::<bool>() {
                a.row(i)
            } else {
                b.row(i)
            }
            .clone()
        })
        .collect();
    Ok(Individual::new(BitMatrix::from_rows(a.n_cols(), rows)?))
}

/// Flips each bit independently with probability `ratio`, then gives any
/// all-zero row a single uniformly placed tap.
pub fn mutate<R: Rng + ?Sized>(ind: &Individual, ratio: f64, rng: &mut R) -> Result<Individual> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::invalid("mutation ratio must be in [0, 1]"));
    }
    let mut m = ind.level1.clone();
    let cols = m.n_cols();
    for i in 0..m.n_rows() {
        for j in 0..cols {
            if rng.random_bool(ratio) {
                m.flip(i, j);
            }
        }
        if cols > 0 && m.row_weight(i) == 0 {
            let j = rng.random_range(0..cols);
            m.set(i, j, true);
        }
    }
    let fitness = if m == ind.level1 { ind.fitness } else { None };
    Ok(Individual { level1: m, fitness })
}

fn evaluate_population(
    pop: &mut [Individual],
    cache: &mut HashMap<BitMatrix, Fitness>,
    cubes: &CubeSet,
    cfg: &GaConfig,
    andnet: Option<&BitMatrix>,
    eval_seed: u64,
) -> Result<()> {
    for ind in pop.iter_mut() {
        if ind.fitness.is_none() {
            ind.fitness = cache.get(&ind.level1).copied();
        }
    }
    let mut pending: Vec<BitMatrix> = Vec::new();
    for ind in pop.iter().filter(|i| i.fitness.is_none()) {
        if !pending.contains(&ind.level1) {
            pending.push(ind.level1.clone());
        }
    }
    let scored = pending
        .into_par_iter()
        .map(|m| fitness(&m, cubes, cfg, andnet, eval_seed).map(|f| (m, f)))
        .collect::<Result<Vec<_>>>()?;
    cache.extend(scored);
    for ind in pop.iter_mut() {
        if ind.fitness.is_none() {
            ind.fitness = cache.get(&ind.level1).copied();
        }
    }
    Ok(())
}

/// Runs the search on `cubes` for a controller with `n_control` bits.
///
/// All randomness derives from `cfg.master_seed`: the `ga` stream drives
/// initialization and breeding, the `encode-fill` stream seeds fitness
/// evaluation. Stops after `size_gen` evaluated generations, or earlier
/// once the best fitness has not improved for `stall_window` consecutive
/// generations.
pub fn run_ga(
    cubes: &CubeSet,
    n_control: usize,
    cfg: &GaConfig,
    fixed_andnet: Option<&BitMatrix>,
) -> Result<GaOutcome> {
    cfg.validate()?;
    if cubes.is_empty() {
        return Err(Error::NoCubes);
    }
    let n_chains = cubes.n_chains();
    if let Some(b) = fixed_andnet {
        Error::check_dim("AND-net rows", n_chains, b.n_rows())?;
        Error::check_dim("AND-net columns", n_control, b.n_cols())?;
    }
    let mut rng = rng_from(named(cfg.master_seed, STREAM_GA));
    let eval_seed = named(cfg.master_seed, STREAM_ENCODE_FILL);

    let mut cache = HashMap::new();
    let mut pop = init_population(n_chains, n_control, cfg, &mut rng)?;
    let mut trace = GaTrace::default();
    let mut stall = 0;

    for generation in 0..cfg.size_gen {
        evaluate_population(&mut pop, &mut cache, cubes, cfg, fixed_andnet, eval_seed)?;
        let order = rank_population(&pop)?;
        let best = pop[order[0]].fitness.expect("evaluated");
        let fits: Vec<Fitness> = pop.iter().map(|i| i.fitness.expect("evaluated")).collect();

        if let Some(prev) = trace.records.last() {
            if best.value < prev.best_fitness {
                stall = 0;
            } else {
                stall += 1;
            }
        }
        trace.records.push(GenerationRecord {
            generation,
            best_fitness: best.value,
            best_ue: best.ue,
            best_mean_sca: best.mean_sca,
            fitness: fits.iter().map(|f| f.value).collect(),
            ue: fits.iter().map(|f| f.ue).collect(),
            mean_sca: fits.iter().map(|f| f.mean_sca).collect(),
        });
        if stall >= cfg.stall_window || generation + 1 == cfg.size_gen {
            break;
        }

        let parents: Vec<Individual> = order[..cfg.size_parents]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        let survivors = order[cfg.size_parents..cfg.size_pop - cfg.size_children]
            .iter()
            .map(|&i| pop[i].clone());
        let mut next = parents.clone();
        next.extend(survivors);
        for _ in 0..cfg.size_children {
            let a = rng.random_range(0..parents.len());
            let mut b = rng.random_range(0..parents.len() - 1);
            if b >= a {
                b += 1;
            }
            let child = crossover(&parents[a], &parents[b], &mut rng)?;
            next.push(mutate(&child, cfg.mutation_ratio, &mut rng)?);
        }
        pop = next;
    }

    let order = rank_population(&pop)?;
    let winner = pop.swap_remove(order[0]);
    Ok(GaOutcome {
        best_fitness: winner.fitness.expect("evaluated"),
        best: XorNet::new(winner.level1, fixed_andnet.cloned())?,
        trace,
    })
}
