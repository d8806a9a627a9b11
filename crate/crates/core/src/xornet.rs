//! XOR-network gating controller.
//!
//! An [`XorNet`] maps `M` control bits to `N` per-chain gating signals. Row
//! `i` of the level-1 matrix lists the control bits XOR-ed for chain `i`.
//! With a level-2 matrix the gating signal is the AND of both XOR outputs.

use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{gf2_solve, matvec_gf2, BitMatrix, BitVec};
use crate::seed::rng_from;
use crate::testcubes::TestCube;
use crate::Provenance;

/// Default XOR fan-in per chain for conventional nets.
pub const DEFAULT_TAPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorNet {
    level1: BitMatrix,
    level2: Option<BitMatrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodeStatus {
    Encoded,
    Unsolvable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodeResult {
    pub status: EncodeStatus,
    pub control_word: Option<BitVec>,
    pub gating: Option<BitVec>,
    /// Fraction of chains enabled by `gating`.
    pub sca: Option<f64>,
}

impl EncodeResult {
    fn unsolvable() -> Self {
        Self {
            status: EncodeStatus::Unsolvable,
            control_word: None,
            gating: None,
            sca: None,
        }
    }

    pub fn is_encoded(&self) -> bool {
        self.status == EncodeStatus::Encoded
    }
}

/// An `rows × cols` matrix with exactly `taps` distinct ones per row, drawn
/// uniformly without replacement and independently per row.
pub fn random_tap_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    taps: usize,
    rng: &mut R,
) -> Result<BitMatrix> {
    if taps == 0 || taps > cols {
        return Err(Error::invalid(format!(
            "taps per chain must be in 1..={cols}, got {taps}"
        )));
    }
    let mut m = BitMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in index::sample(rng, cols, taps) {
            m.set(i, j, true);
        }
    }
    Ok(m)
}

impl XorNet {
    pub fn new(level1: BitMatrix, level2: Option<BitMatrix>) -> Result<Self> {
        if level1.n_cols() == 0 || level1.n_rows() == 0 {
            return Err(Error::invalid(
                "XORNet needs at least one chain and one control bit",
            ));
        }
        if let Some(i) = (0..level1.n_rows()).find(|&i| level1.row_weight(i) == 0) {
            return Err(Error::invalid(format!(
                "chain {i} has no control taps and could never be enabled"
            )));
        }
        if let Some(b) = &level2 {
            Error::check_dim("level-2 rows", level1.n_rows(), b.n_rows())?;
            Error::check_dim("level-2 columns", level1.n_cols(), b.n_cols())?;
        }
        Ok(Self { level1, level2 })
    }

    /// The conventional evenly random net: `taps` control bits per chain,
    /// seeded with the chain count so equal-sized designs share one net.
    pub fn conventional(n_chains: usize, n_control: usize, taps: usize) -> Result<Self> {
        let a = random_tap_matrix(n_chains, n_control, taps, &mut rng_from(n_chains as u64))?;
        Self::new(a, None)
    }

    /// Conventional two-level net; the AND-side matrix is drawn the same way
    /// with seed `n_chains + 1`.
    pub fn conventional_two_level(n_chains: usize, n_control: usize, taps: usize) -> Result<Self> {
        let a = random_tap_matrix(n_chains, n_control, taps, &mut rng_from(n_chains as u64))?;
        let b = conventional_andnet(n_chains, n_control, taps)?;
        Self::new(a, Some(b))
    }

    pub fn n_chains(&self) -> usize {
        self.level1.n_rows()
    }

    pub fn n_control(&self) -> usize {
        self.level1.n_cols()
    }

    pub fn levels(&self) -> u8 {
        if self.level2.is_some() {
            2
        } else {
            1
        }
    }

    pub fn level1(&self) -> &BitMatrix {
        &self.level1
    }

    pub fn level2(&self) -> Option<&BitMatrix> {
        self.level2.as_ref()
    }

    pub fn into_level1(self) -> BitMatrix {
        self.level1
    }

    pub fn decode(&self, control_word: &BitVec) -> Result<BitVec> {
        Error::check_dim("control word length", self.n_control(), control_word.len())?;
        let x = matvec_gf2(&self.level1, control_word)?;
        match &self.level2 {
            None => Ok(x),
            Some(b) => Ok(&x & &matvec_gf2(b, control_word)?),
        }
    }

    /// Finds a control word enabling every chain in `usage`.
    ///
    /// Only chains that must be enabled contribute equations (`row · z = 1`).
    /// In two-level mode both the XOR row and the AND-side row of a
    /// specified chain must evaluate to 1; identical pairs contribute one
    /// equation.
    pub fn encode_usage<R: Rng + ?Sized>(
        &self,
        usage: &BitVec,
        rng: &mut R,
    ) -> Result<EncodeResult> {
        Error::check_dim("cube chain count", self.n_chains(), usage.len())?;
        let mut rows = Vec::with_capacity(usage.count_ones() * self.levels() as usize);
        for i in usage.iter_ones() {
            let a = self.level1.row(i);
            rows.push(a.clone());
            if let Some(b) = &self.level2 {
                let b = b.row(i);
                if b != a {
                    rows.push(b.clone());
                }
            }
        }
        let n_eq = rows.len();
        let system = BitMatrix::from_rows(self.n_control(), rows)?;
        let solution = gf2_solve(&system, &BitVec::ones(n_eq), rng)?;
        let Some(z) = solution.assignment else {
            return Ok(EncodeResult::unsolvable());
        };
        let gating = self.decode(&z)?;
        let sca = gating.count_ones() as f64 / self.n_chains() as f64;
        Ok(EncodeResult {
            status: EncodeStatus::Encoded,
            control_word: Some(z),
            gating: Some(gating),
            sca: Some(sca),
        })
    }

    pub fn encode<R: Rng + ?Sized>(&self, cube: &TestCube, rng: &mut R) -> Result<EncodeResult> {
        self.encode_usage(cube.usage(), rng)
    }

    pub fn to_file(&self, provenance: Option<Provenance>) -> XorNetFile {
        XorNetFile {
            n_chains: self.n_chains(),
            n_control: self.n_control(),
            levels: self.levels(),
            level1: self.level1.to_bitstrings(),
            level2: self.level2.as_ref().map(BitMatrix::to_bitstrings),
            provenance,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, provenance: Option<Provenance>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_file(provenance))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: XorNetFile = serde_json::from_str(&text)?;
        file.into_net()
    }
}

/// The fixed AND-side matrix used by two-level nets.
pub fn conventional_andnet(n_chains: usize, n_control: usize, taps: usize) -> Result<BitMatrix> {
    random_tap_matrix(
        n_chains,
        n_control,
        taps,
        &mut rng_from(n_chains as u64 + 1),
    )
}

/// On-disk JSON form. Row `i` is chain `i`; character `j` of a row is `1`
/// when control bit `j` is a tap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XorNetFile {
    pub n_chains: usize,
    pub n_control: usize,
    pub levels: u8,
    pub level1: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level2: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl XorNetFile {
    pub fn into_net(self) -> Result<XorNet> {
        let a = BitMatrix::from_bitstrings(&self.level1)?;
        Error::check_dim("level1 rows vs n_chains", self.n_chains, a.n_rows())?;
        Error::check_dim("level1 columns vs n_control", self.n_control, a.n_cols())?;
        let b = match (self.levels, self.level2) {
            (1, None) => None,
            (2, Some(rows)) => {
                let b = BitMatrix::from_bitstrings(&rows)?;
                Error::check_dim("level2 rows vs n_chains", self.n_chains, b.n_rows())?;
                Error::check_dim("level2 columns vs n_control", self.n_control, b.n_cols())?;
                Some(b)
            }
            (1, Some(_)) => return Err(Error::invalid("levels = 1 but level2 is present")),
            (2, None) => return Err(Error::invalid("levels = 2 but level2 is missing")),
            (l, _) => return Err(Error::invalid(format!("levels must be 1 or 2, got {l}"))),
        };
        XorNet::new(a, b)
    }
}
