//! Test-cube workloads: synthetic generation from per-chain usage
//! probabilities, usage profiles, and the line-oriented cube file format.
//!
//! Cube file format, one cube per line:
//!
//! ```text
//! # comment lines and blank lines are ignored
//! 0110
//! 0110|XXX,01X,1XX,XXX
//! ```
//!
//! The part before `|` is the usage bitstring (index 0 = chain 0). The
//! optional part after `|` lists one cell string over `{0,1,X}` per chain.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Zero,
    One,
    X,
}

impl Cell {
    fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Cell::Zero),
            '1' => Some(Cell::One),
            'X' | 'x' => Some(Cell::X),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Cell::Zero => '0',
            Cell::One => '1',
            Cell::X => 'X',
        }
    }

    pub fn is_specified(self) -> bool {
        self != Cell::X
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCube {
    usage: BitVec,
    cells: Option<Vec<Vec<Cell>>>,
}

impl TestCube {
    pub fn from_usage(usage: BitVec) -> Self {
        Self { usage, cells: None }
    }

    /// Builds a cube from per-chain cell values; usage is derived from them.
    pub fn from_cells(cells: Vec<Vec<Cell>>) -> Self {
        let usage = BitVec::from_bools(
            &cells
                .iter()
                .map(|chain| chain.iter().any(|c| c.is_specified()))
                .collect::<Vec<_>>(),
        );
        Self {
            usage,
            cells: Some(cells),
        }
    }

    pub fn n_chains(&self) -> usize {
        self.usage.len()
    }

    pub fn usage(&self) -> &BitVec {
        &self.usage
    }

    pub fn cells(&self) -> Option<&[Vec<Cell>]> {
        self.cells.as_deref()
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let (usage_str, cells_str) = match line.split_once('|') {
            Some((u, c)) => (u.trim(), Some(c.trim())),
            None => (line.trim(), None),
        };
        if usage_str.is_empty() {
            return Err("empty usage vector".into());
        }
        let usage: BitVec = usage_str.parse().map_err(|e: Error| e.to_string())?;
        let Some(cells_str) = cells_str else {
            return Ok(Self::from_usage(usage));
        };
        let chains: Vec<&str> = cells_str.split(',').collect();
        if chains.len() != usage.len() {
            return Err(format!(
                "expected {} cell strings, found {}",
                usage.len(),
                chains.len()
            ));
        }
        let mut cells = Vec::with_capacity(chains.len());
        for (i, chain) in chains.iter().enumerate() {
            let parsed = chain
                .trim()
                .chars()
                .map(|c| {
                    Cell::from_char(c)
                        .ok_or_else(|| format!("invalid cell value {c:?} in chain {i}"))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let specified = parsed.iter().any(|c| c.is_specified());
            if specified != usage.get(i) {
                return Err(format!(
                    "chain {i}: usage bit {} disagrees with its cell values",
                    u8::from(usage.get(i))
                ));
            }
            cells.push(parsed);
        }
        Ok(Self {
            usage,
            cells: Some(cells),
        })
    }
}

impl fmt::Display for TestCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.usage)?;
        if let Some(cells) = &self.cells {
            f.write_str("|")?;
            for (i, chain) in cells.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                for c in chain {
                    write!(f, "{}", c.as_char())?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubeSource {
    Synthetic,
    File,
}

/// An ordered pool of cubes sharing one chain count. Equality compares the
/// cubes only; `source` is a descriptive tag.
#[derive(Clone, Debug)]
pub struct CubeSet {
    n_chains: usize,
    cubes: Vec<TestCube>,
    source: CubeSource,
}

impl PartialEq for CubeSet {
    fn eq(&self, other: &Self) -> bool {
        self.n_chains == other.n_chains && self.cubes == other.cubes
    }
}

impl CubeSet {
    pub fn new(cubes: Vec<TestCube>, source: CubeSource) -> Result<Self> {
        let first = cubes.first().ok_or(Error::NoCubes)?;
        let n_chains = first.n_chains();
        for c in &cubes {
            Error::check_dim("cube chain count", n_chains, c.n_chains())?;
        }
        Ok(Self {
            n_chains,
            cubes,
            source,
        })
    }

    pub fn from_usages(usages: Vec<BitVec>) -> Result<Self> {
        Self::new(
            usages.into_iter().map(TestCube::from_usage).collect(),
            CubeSource::Synthetic,
        )
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn cubes(&self) -> &[TestCube] {
        &self.cubes
    }

    pub fn source(&self) -> CubeSource {
        self.source
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TestCube> {
        self.cubes.iter()
    }

    /// Writes the cube file. `header` lines are emitted as `#` comments.
    pub fn save(&self, path: impl AsRef<Path>, header: &[String]) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for h in header {
            writeln!(w, "# {h}")?;
        }
        for c in &self.cubes {
            writeln!(w, "{c}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(std::fs::File::open(path)?))
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut cubes: Vec<TestCube> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cube = TestCube::parse_line(trimmed).map_err(|message| Error::Parse {
                line: lineno,
                message,
            })?;
            if let Some(first) = cubes.first() {
                if first.n_chains() != cube.n_chains() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!(
                            "inconsistent chain count: expected {}, found {}",
                            first.n_chains(),
                            cube.n_chains()
                        ),
                    });
                }
            }
            cubes.push(cube);
        }
        Self::new(cubes, CubeSource::File)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsageProfile {
    pub per_chain_prob: Vec<f64>,
    pub cube_count: usize,
}

impl UsageProfile {
    pub fn new(per_chain_prob: Vec<f64>, cube_count: usize) -> Result<Self> {
        let p = Self {
            per_chain_prob,
            cube_count,
        };
        p.validate()?;
        Ok(p)
    }

    /// A few hot chains over a uniform cold background.
    pub fn skewed(
        n_chains: usize,
        cube_count: usize,
        hot_chains: &[usize],
        hot_prob: f64,
        cold_prob: f64,
    ) -> Result<Self> {
        let mut probs = vec![cold_prob; n_chains];
        for &h in hot_chains {
            if h >= n_chains {
                return Err(Error::invalid(format!(
                    "hot chain {h} out of range {n_chains}"
                )));
            }
            probs[h] = hot_prob;
        }
        Self::new(probs, cube_count)
    }

    pub fn n_chains(&self) -> usize {
        self.per_chain_prob.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_chain_prob.is_empty() {
            return Err(Error::invalid("profile has no chains"));
        }
        if let Some((i, p)) = self
            .per_chain_prob
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::invalid(format!(
                "chain {i} probability {p} outside [0, 1]"
            )));
        }
        if self.per_chain_prob.iter().all(|&p| p == 0.0) {
            return Err(Error::invalid(
                "all chain probabilities are zero; no non-empty cube can be drawn",
            ));
        }
        if self.cube_count == 0 {
            return Err(Error::invalid("cube_count must be at least 1"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Draws `cube_count` cubes, each chain specified independently with its
/// profile probability. All-zero draws are discarded and redrawn.
pub fn generate_cubes<R: Rng + ?Sized>(profile: &UsageProfile, rng: &mut R) -> Result<CubeSet> {
    profile.validate()?;
    let n = profile.n_chains();
    let mut cubes = Vec::with_capacity(profile.cube_count);
    while cubes.len() < profile.cube_count {
        let mut usage = BitVec::zeros(n);
        for (i, &p) in profile.per_chain_prob.iter().enumerate() {
            if rng.random_bool(p) {
                usage.set(i, true);
            }
        }
        if !usage.is_zero() {
            cubes.push(TestCube::from_usage(usage));
        }
    }
    CubeSet::new(cubes, CubeSource::Synthetic)
}

/// Empirical per-chain specification frequency.
pub fn profile_from_cubes(cubes: &CubeSet) -> Result<UsageProfile> {
    if cubes.is_empty() {
        return Err(Error::NoCubes);
    }
    let mut counts = vec![0usize; cubes.n_chains()];
    for c in cubes.iter() {
        for i in c.usage().iter_ones() {
            counts[i] += 1;
        }
    }
    let k = cubes.len() as f64;
    Ok(UsageProfile {
        per_chain_prob: counts.into_iter().map(|c| c as f64 / k).collect(),
        cube_count: cubes.len(),
    })
}
