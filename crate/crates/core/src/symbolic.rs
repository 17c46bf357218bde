//! Shift spaces of finite type and locally constant potentials.
//!
//! Symbols are `0..n`. A potential with window `w` reads the first `w`
//! coordinates `x_0 … x_{w-1}`; its value table is indexed by the base-`n`
//! value of that word, most significant symbol first.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest alphabet stored as an explicit table.
pub const MAX_ALPHABET: usize = 1 << 16;
/// Largest value table (`n^w`) stored explicitly.
pub const MAX_TABLE: usize = 1 << 26;

/// Alphabet size plus optional 0/1 transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubshiftSpec {
    n: usize,
    transition: Option<Vec<Vec<bool>>>,
    irreducible: bool,
}

impl SubshiftSpec {
    pub fn full(n: usize) -> Result<Self> {
        check_alphabet(n)?;
        Ok(Self { n, transition: None, irreducible: true })
    }

    /// A subshift given by `transition[i][j] == 1` when `j` may follow `i`.
    pub fn with_transition(transition: Vec<Vec<u8>>) -> Result<Self> {
        let n = transition.len();
        check_alphabet(n)?;
        let mut matrix = Vec::with_capacity(n);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Domain(format!("transition row {i} has length {}, expected {n}", row.len())));
            }
            let mut bits = Vec::with_capacity(n);
            for &entry in row {
                match entry {
                    0 => bits.push(false),
                    1 => bits.push(true),
                    other => return Err(Error::Domain(format!("transition entry {other} in row {i} is not 0 or 1"))),
                }
            }
            if !bits.iter().any(|&b| b) {
                return Err(Error::Domain(format!("symbol {i} has no successor")));
            }
            matrix.push(bits);
        }
        for j in 0..n {
            if !matrix.iter().any(|row| row[j]) {
                return Err(Error::Domain(format!("symbol {j} has no predecessor")));
            }
        }
        let irreducible = strongly_connected(n, |i| (0..n).filter(|&j| matrix[i][j]).collect());
        Ok(Self { n, transition: Some(matrix), irreducible })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_full(&self) -> bool {
        self.transition.is_none()
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Whether `j` may follow `i`.
    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.transition.as_ref().is_none_or(|m| m[i][j])
    }

    pub fn transition(&self) -> Option<&[Vec<bool>]> {
        self.transition.as_deref()
    }
}

fn check_alphabet(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("alphabet size must be at least 2, got {n}")));
    }
    if n > MAX_ALPHABET {
        return Err(Error::SizeLimit(format!("alphabet size {n} exceeds {MAX_ALPHABET}")));
    }
    Ok(())
}

/// Strong connectivity of a directed graph on `0..n` given by successor lists.
pub(crate) fn strongly_connected(n: usize, successors: impl Fn(usize) -> Vec<usize>) -> bool {
    let adj: Vec<Vec<usize>> = (0..n).map(&successors).collect();
    let mut rev = vec![Vec::new(); n];
    for (i, succ) in adj.iter().enumerate() {
        for &j in succ {
            rev[j].push(i);
        }
    }
    reaches_all(&adj) && reaches_all(&rev)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}

/// Base-`n` value of `word`.
pub fn word_index(word: &[usize], n: usize) -> Result<usize> {
    let mut index: usize = 0;
    for &s in word {
        if s >= n {
            return Err(Error::Domain(format!("symbol {s} outside alphabet 0..{n}")));
        }
        index = index
            .checked_mul(n)
            .and_then(|v| v.checked_add(s))
            .ok_or_else(|| Error::Overflow(format!("word of length {} over {n} symbols", word.len())))?;
    }
    Ok(index)
}

/// Inverse of [`word_index`] for words of length `len`.
pub fn index_to_word(mut index: usize, n: usize, len: usize) -> Vec<usize> {
    let mut word = vec![0; len];
    for slot in word.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    word
}

/// A locally constant potential reading a window of `w` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialFile", into = "PotentialFile")]
pub struct CylinderPotential {
    space: SubshiftSpec,
    window: usize,
    values: Vec<f64>,
}

impl CylinderPotential {
    pub fn new(space: SubshiftSpec, window: usize, values: Vec<f64>) -> Result<Self> {
        if window == 0 {
            return Err(Error::Domain("window must be at least 1".into()));
        }
        let expected = table_len(space.n(), window)?;
        if values.len() != expected {
            return Err(Error::Domain(format!("value table has {} entries, expected n^w = {expected}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("value {i} is not finite")));
        }
        Ok(Self { space, window, values })
    }

    /// Window-1 potential on the full shift over `values.len()` symbols.
    pub fn full_shift(values: Vec<f64>) -> Result<Self> {
        Self::new(SubshiftSpec::full(values.len())?, 1, values)
    }

    pub fn space(&self) -> &SubshiftSpec {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, word: &[usize]) -> Result<f64> {
        if word.len() != self.window {
            return Err(Error::Domain(format!("word length {} differs from window {}", word.len(), self.window)));
        }
        Ok(self.values[word_index(word, self.n())?])
    }

    /// True when every entry equals the first one.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    /// Adds `b` to every value.
    pub fn shifted(&self, b: f64) -> Self {
        Self { space: self.space.clone(), window: self.window, values: self.values.iter().map(|v| v + b).collect() }
    }

    pub(crate) fn require_level_zero_full(&self, what: &str) -> Result<()> {
        if !self.space.is_full() {
            return Err(Error::Unsupported(format!("{what} requires the full shift")));
        }
        if self.window != 1 {
            return Err(Error::Unsupported(format!("{what} requires window 1, got {}", self.window)));
        }
        Ok(())
    }
}

pub(crate) fn table_len(n: usize, window: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..window {
        len = len
            .checked_mul(n)
            .filter(|&l| l <= MAX_TABLE)
            .ok_or_else(|| Error::SizeLimit(format!("n^w = {n}^{window} exceeds {MAX_TABLE}")))?;
    }
    Ok(len)
}

/// On-disk form: `{"n", "window", "values", "transition"?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialFile {
    pub n: usize,
    pub window: usize,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<u8>>>,
}

impl TryFrom<PotentialFile> for CylinderPotential {
    type Error = Error;

    fn try_from(file: PotentialFile) -> Result<Self> {
        let space = match file.transition {
            Some(t) => {
                let space = SubshiftSpec::with_transition(t)?;
                if space.n() != file.n {
                    return Err(Error::Domain(format!("transition matrix is {0}x{0} but n = {1}", space.n(), file.n)));
                }
                space
            }
            None => SubshiftSpec::full(file.n)?,
        };
        CylinderPotential::new(space, file.window, file.values)
    }
}

impl From<CylinderPotential> for PotentialFile {
    fn from(p: CylinderPotential) -> Self {
        let transition =
            p.space.transition().map(|m| m.iter().map(|row| row.iter().map(|&b| u8::from(b)).collect()).collect());
        PotentialFile { n: p.n(), window: p.window, values: p.values, transition }
    }
}

/// Bernoulli (product) measure on the full shift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernoulliWeights {
    probabilities: Vec<f64>,
}

impl BernoulliWeights {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Domain("probabilities must be positive and finite".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `Σ p_i f(c_i)`.
    pub fn expect(&self, values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        self.probabilities.iter().zip(values).map(|(p, &c)| p * f(c)).sum()
    }
}

/// Softmax weights `p_i ∝ e^{t c_i}`: the equilibrium state of `tφ` for a
/// window-1 potential on the full shift.
pub fn equilibrium_weights(potential: &CylinderPotential, t: f64) -> Result<BernoulliWeights> {
    potential.require_level_zero_full("equilibrium weights")?;
    Ok(BernoulliWeights { probabilities: softmax(potential.values(), t) })
}

pub(crate) fn softmax(values: &[f64], t: f64) -> Vec<f64> {
    let top = values.iter().map(|c| t * c).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = values.iter().map(|c| (t * c - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}
