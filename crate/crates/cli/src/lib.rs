//! Experiment driver behind the `xornet` binary.
//!
//! Every command reads one [`ExperimentConfig`] (optionally from JSON, with
//! command-line overrides applied on top) and writes its outputs into the
//! configured output directory. All randomness derives from
//! `master_seed` through named streams, so a config file fully determines
//! every output byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xornet_core::seed::{self, STREAM_CUBE_GEN, STREAM_ENCODE_FILL};
use xornet_core::{
    conventional_andnet, evaluate_xornet, generate_cubes, incremental_merge, run_ga, total_cycles,
    CubeSet, CycleModel, EvalReport, GaConfig, Provenance, UsageProfile, XorNet,
};

/// Stream used by the merge simulator.
pub const STREAM_MERGE: &str = "merge";
/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "XORNET_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CycleParams {
    pub d: u64,
    pub c_in: u64,
    pub n_cell: u64,
}

impl Default for CycleParams {
    fn default() -> Self {
        Self {
            d: 0,
            c_in: 1,
            n_cell: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Workload {
    /// Usage profile JSON used to synthesize cubes.
    pub profile: Option<PathBuf>,
    /// Cube text file; takes precedence over `profile` when both are set.
    pub cubes: Option<PathBuf>,
    /// Overrides the profile's own `cube_count`.
    pub cube_count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Required by `baseline`; otherwise taken from the workload.
    pub n_chains: Option<usize>,
    pub n_control: usize,
    pub taps: usize,
    pub levels: u8,
    pub sca_limit: f64,
    pub cycle: CycleParams,
    pub ga: GaConfig,
    pub workload: Workload,
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_chains: None,
            n_control: 12,
            taps: xornet_core::DEFAULT_TAPS,
            levels: 1,
            sca_limit: 0.5,
            cycle: CycleParams::default(),
            ga: GaConfig::default(),
            workload: Workload::default(),
            master_seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub levels: Option<u8>,
    pub sca_limit: Option<f64>,
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("config not found: {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.workload.profile.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.workload.cubes.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.out_dir);
        Ok(cfg)
    }

    /// Flags win over the environment, which wins over the file.
    pub fn apply(&mut self, o: &Overrides, env_out: Option<PathBuf>) {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(l) = o.levels {
            self.levels = l;
        }
        if let Some(l) = o.sca_limit {
            self.sca_limit = l;
        }
        if let Some(out) = o.out.clone().or(env_out) {
            self.out_dir = out;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.levels, 1 | 2) {
            bail!("levels must be 1 or 2, got {}", self.levels);
        }
        if self.n_control == 0 {
            bail!("n_control must be at least 1");
        }
        if self.taps == 0 || self.taps > self.n_control {
            bail!("taps ({}) must be in 1..={}", self.taps, self.n_control);
        }
        if !(self.sca_limit > 0.0 && self.sca_limit <= 1.0) {
            bail!("sca_limit must be in (0, 1], got {}", self.sca_limit);
        }
        if self.cycle.c_in == 0 {
            bail!("cycle.c_in must be at least 1");
        }
        if self.workload.cube_count == Some(0) {
            bail!("cube_count must be at least 1");
        }
        if let Some(p) = &self.workload.profile {
            if !p.exists() {
                bail!("profile not found: {}", p.display());
            }
        }
        if let Some(p) = &self.workload.cubes {
            if !p.exists() {
                bail!("cube file not found: {}", p.display());
            }
        }
        self.ga_config().validate()?;
        Ok(())
    }

    /// GA settings with the experiment-wide seed and limit applied.
    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            master_seed: self.master_seed,
            sca_limit: self.sca_limit,
            ..self.ga.clone()
        }
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form. The
    /// output directory is left out.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            config_hash: self.hash(),
            seed: self.master_seed,
        }
    }

    fn provenance_line(&self) -> String {
        format!("config_hash={} seed={}", self.hash(), self.master_seed)
    }

    fn prepare_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create output directory {}", self.out_dir.display()))
    }

    fn load_profile(&self) -> Result<UsageProfile> {
        let path = self
            .workload
            .profile
            .as_ref()
            .context("workload.profile is not set")?;
        if !path.exists() {
            bail!("profile not found: {}", path.display());
        }
        let mut profile: UsageProfile = serde_json::from_str(&fs::read_to_string(path)?)
            .with_context(|| format!("invalid profile {}", path.display()))?;
        if let Some(k) = self.workload.cube_count {
            profile.cube_count = k;
        }
        profile.validate()?;
        Ok(profile)
    }

    /// The cube workload: the cube file when given, else synthesized from
    /// the profile with the `cube-gen` stream.
    pub fn load_cubes(&self) -> Result<CubeSet> {
        let cubes = if let Some(path) = &self.workload.cubes {
            CubeSet::load(path).with_context(|| format!("reading cubes {}", path.display()))?
        } else {
            let profile = self.load_profile()?;
            generate_cubes(
                &profile,
                &mut seed::rng_from(seed::named(self.master_seed, STREAM_CUBE_GEN)),
            )?
        };
        if let Some(n) = self.n_chains {
            if n != cubes.n_chains() {
                bail!(
                    "config n_chains = {n} but the workload has {} chains",
                    cubes.n_chains()
                );
            }
        }
        Ok(cubes)
    }

    fn cycle_model(&self, cbc: usize, pattern_count: usize) -> CycleModel {
        CycleModel {
            cbc: cbc as u64,
            d: self.cycle.d,
            c_in: self.cycle.c_in,
            n_cell: self.cycle.n_cell,
            pattern_count: pattern_count as u64,
        }
    }
}

/// `gen-cubes`: synthesize the workload and write `cubes.txt`.
pub fn cmd_gen_cubes(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let profile = cfg.load_profile()?;
    let cubes = generate_cubes(
        &profile,
        &mut seed::rng_from(seed::named(cfg.master_seed, STREAM_CUBE_GEN)),
    )?;
    cfg.prepare_out_dir()?;
    let path = cfg.out_dir.join("cubes.txt");
    cubes.save(&path, &[cfg.provenance_line()])?;
    Ok(path)
}

fn build_baseline(cfg: &ExperimentConfig, n_chains: usize) -> Result<XorNet> {
    Ok(match cfg.levels {
        1 => XorNet::conventional(n_chains, cfg.n_control, cfg.taps)?,
        _ => XorNet::conventional_two_level(n_chains, cfg.n_control, cfg.taps)?,
    })
}

/// `baseline`: the conventional net for the configured size.
pub fn cmd_baseline(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let n_chains = match cfg.n_chains {
        Some(n) => n,
        None => cfg
            .load_cubes()
            .context("n_chains is not set and no workload is available")?
            .n_chains(),
    };
    let net = build_baseline(cfg, n_chains)?;
    cfg.prepare_out_dir()?;
    let path = cfg.out_dir.join("baseline_xornet.json");
    net.save(&path, Some(cfg.provenance()))?;
    Ok(path)
}

pub struct SearchOutput {
    pub xornet: PathBuf,
    pub trace: PathBuf,
}

fn search_net(cfg: &ExperimentConfig, cubes: &CubeSet) -> Result<xornet_core::GaOutcome> {
    let andnet = match cfg.levels {
        1 => None,
        _ => Some(conventional_andnet(
            cubes.n_chains(),
            cfg.n_control,
            cfg.taps,
        )?),
    };
    Ok(run_ga(
        cubes,
        cfg.n_control,
        &cfg.ga_config(),
        andnet.as_ref(),
    )?)
}

fn write_trace(cfg: &ExperimentConfig, trace: &xornet_core::GaTrace, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# {}", cfg.provenance_line())?;
    trace.write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

/// `search`: run the genetic search, write the best net and the trace.
pub fn cmd_search(cfg: &ExperimentConfig) -> Result<SearchOutput> {
    cfg.validate()?;
    let cubes = cfg.load_cubes()?;
    let out = search_net(cfg, &cubes)?;
    cfg.prepare_out_dir()?;
    let xornet = cfg.out_dir.join("search_xornet.json");
    out.best.save(&xornet, Some(cfg.provenance()))?;
    let trace = cfg.out_dir.join("trace.csv");
    write_trace(cfg, &out.trace, &trace)?;
    Ok(SearchOutput { xornet, trace })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub provenance: Provenance,
    pub n_chains: usize,
    pub n_control: usize,
    pub levels: u8,
    #[serde(flatten)]
    pub report: EvalReport,
    pub pattern_count: usize,
    pub dropped_count: usize,
    pub cycle_model: CycleModel,
    pub total_cycles: u64,
}

/// Metrics, merge and cycle count for one net on one workload.
pub fn evaluate(
    cfg: &ExperimentConfig,
    net: &XorNet,
    cubes: &CubeSet,
    per_cube: bool,
) -> Result<EvaluationSummary> {
    let report = evaluate_xornet(
        net,
        cubes,
        cfg.sca_limit,
        seed::named(cfg.master_seed, STREAM_ENCODE_FILL),
        per_cube,
    )?;
    let merge = incremental_merge(
        net,
        cubes,
        cfg.sca_limit,
        &mut seed::rng_from(seed::named(cfg.master_seed, STREAM_MERGE)),
    )?;
    let model = cfg.cycle_model(net.n_control(), merge.pattern_count);
    Ok(EvaluationSummary {
        provenance: cfg.provenance(),
        n_chains: net.n_chains(),
        n_control: net.n_control(),
        levels: net.levels(),
        report,
        pattern_count: merge.pattern_count,
        dropped_count: merge.dropped.len(),
        cycle_model: model,
        total_cycles: total_cycles(&model)?,
    })
}

pub struct EvaluateOutput {
    pub report: PathBuf,
    pub per_cube: Option<PathBuf>,
    pub summary: EvaluationSummary,
}

/// `evaluate`: writes `<net stem>_report.json` and, on request,
/// `<net stem>_per_cube.csv`.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    xornet: &Path,
    cubes: Option<&Path>,
    per_cube: bool,
) -> Result<EvaluateOutput> {
    let mut cfg = cfg.clone();
    if let Some(c) = cubes {
        cfg.workload.cubes = Some(c.to_path_buf());
    }
    cfg.validate()?;
    let net =
        XorNet::load(xornet).with_context(|| format!("reading XORNet {}", xornet.display()))?;
    let cubes = cfg.load_cubes()?;
    let summary = evaluate(&cfg, &net, &cubes, per_cube)?;

    cfg.prepare_out_dir()?;
    let stem = xornet
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "xornet".into());
    let report = cfg.out_dir.join(format!("{stem}_report.json"));
    let mut body = summary.clone();
    let per_cube_path = if per_cube {
        let p = cfg.out_dir.join(format!("{stem}_per_cube.csv"));
        let mut f = std::io::BufWriter::new(fs::File::create(&p)?);
        writeln!(f, "# {}", cfg.provenance_line())?;
        summary.report.write_per_cube_csv(&mut f)?;
        f.flush()?;
        body.report.per_cube = None;
        Some(p)
    } else {
        None
    };
    fs::write(&report, serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(EvaluateOutput {
        report,
        per_cube: per_cube_path,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cbc: usize,
    pub ue: usize,
    pub pattern_count: usize,
    pub total_cycles: u64,
}

/// Search and evaluate one controller width per entry of `cbc_list`.
///
/// Point `k` runs with master seed `derive(master_seed, k)`, so points are
/// independent of each other and of scheduling.
pub fn sweep_cbc(
    cfg: &ExperimentConfig,
    cubes: &CubeSet,
    cbc_list: &[usize],
) -> Result<Vec<(SweepRow, XorNet, xornet_core::GaTrace)>> {
    if cbc_list.is_empty() {
        bail!("cbc list is empty");
    }
    cbc_list
        .par_iter()
        .map(|&cbc| {
            let mut point = cfg.clone();
            point.n_control = cbc;
            point.master_seed = seed::derive(cfg.master_seed, cbc as u64);
            point.validate()?;
            let out = search_net(&point, cubes)?;
            let summary = evaluate(&point, &out.best, cubes, false)?;
            Ok((
                SweepRow {
                    cbc,
                    ue: summary.report.ue,
                    pattern_count: summary.pattern_count,
                    total_cycles: summary.total_cycles,
                },
                out.best,
                out.trace,
            ))
        })
        .collect()
}

pub struct SweepOutput {
    pub csv: PathBuf,
    pub rows: Vec<SweepRow>,
}

/// `sweep-cbc`: writes `sweep_cbc.csv` plus `sweep/cbc_<k>_xornet.json` and
/// `sweep/cbc_<k>_trace.csv` per point.
pub fn cmd_sweep_cbc(cfg: &ExperimentConfig, cbc_list: &[usize]) -> Result<SweepOutput> {
    cfg.validate()?;
    let cubes = cfg.load_cubes()?;
    let points = sweep_cbc(cfg, &cubes, cbc_list)?;

    let point_dir = cfg.out_dir.join("sweep");
    fs::create_dir_all(&point_dir)?;
    for (row, net, trace) in &points {
        let mut point = cfg.clone();
        point.n_control = row.cbc;
        point.master_seed = seed::derive(cfg.master_seed, row.cbc as u64);
        net.save(
            point_dir.join(format!("cbc_{}_xornet.json", row.cbc)),
            Some(point.provenance()),
        )?;
        write_trace(
            &point,
            trace,
            &point_dir.join(format!("cbc_{}_trace.csv", row.cbc)),
        )?;
    }

    let csv = cfg.out_dir.join("sweep_cbc.csv");
    let mut f = std::io::BufWriter::new(fs::File::create(&csv)?);
    writeln!(f, "# {}", cfg.provenance_line())?;
    writeln!(f, "cbc,ue,pattern_count,total_cycles")?;
    for (r, _, _) in &points {
        writeln!(
            f,
            "{},{},{},{}",
            r.cbc, r.ue, r.pattern_count, r.total_cycles
        )?;
    }
    f.flush()?;
    Ok(SweepOutput {
        csv,
        rows: points.into_iter().map(|(r, _, _)| r).collect(),
    })
}

/// Parses `8,10,12`.
pub fn parse_cbc_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>()
                .with_context(|| format!("invalid control bit count {t:?}"))
        })
        .collect()
}
