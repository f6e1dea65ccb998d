//! Partition sets over qudits, the induced hidden-layer partition, and the
//! weight masks that make an RBM factorise accordingly.
//!
//! Qudit and hidden-unit indices are 0-based in memory; the text grammar
//! (`"1,2|2,3"`) is 1-based.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::Basis;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    Disjoint,
    NonDisjoint,
}

/// A collection of qudit subsets `{k_1 | ... | k_K}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionSet {
    pub blocks: Vec<Vec<usize>>,
    pub n: usize,
    pub mode: PartitionMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    EmptyBlock { block: usize },
    OutOfRange { block: usize, qudit: usize },
    Uncovered { qudit: usize },
    Overlap { first: usize, second: usize, qudit: usize },
    Duplicate { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyBlock { block } => write!(f, "block {} is empty", block + 1),
            Violation::OutOfRange { block, qudit } => write!(f, "block {} names qudit {} which does not exist", block + 1, qudit + 1),
            Violation::Uncovered { qudit } => write!(f, "qudit {} is not covered by any block", qudit + 1),
            Violation::Overlap { first, second, qudit } => {
                write!(f, "blocks {} and {} share qudit {}", first + 1, second + 1, qudit + 1)
            }
            Violation::Duplicate { first, second } => write!(f, "blocks {} and {} are identical", first + 1, second + 1),
        }
    }
}

impl PartitionSet {
    /// Builds and validates; blocks are sorted internally.
    pub fn new(blocks: Vec<Vec<usize>>, n: usize, mode: PartitionMode) -> Result<Self> {
        let set = Self::unchecked(blocks, n, mode);
        let violations = set.validate();
        if violations.is_empty() {
            Ok(set)
        } else {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidPartition(text.join("; ")))
        }
    }

    pub fn unchecked(blocks: Vec<Vec<usize>>, n: usize, mode: PartitionMode) -> Self {
        let blocks = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        PartitionSet { blocks, n, mode }
    }

    /// Every qudit in its own block.
    pub fn fully_separable(n: usize) -> Self {
        PartitionSet { blocks: (0..n).map(|q| vec![q]).collect(), n, mode: PartitionMode::Disjoint }
    }

    /// A single block covering every qudit: no restriction at all.
    pub fn single_block(n: usize) -> Self {
        PartitionSet { blocks: vec![(0..n).collect()], n, mode: PartitionMode::Disjoint }
    }

    /// Parses `"1,2|3"` (1-based indices).
    pub fn parse(text: &str, n: usize, mode: PartitionMode) -> Result<Self> {
        Self::new(parse_blocks(text)?, n, mode)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Every violated invariant, in a fixed order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (l, b) in self.blocks.iter().enumerate() {
            if b.is_empty() {
                out.push(Violation::EmptyBlock { block: l });
            }
            for &q in b {
                if q >= self.n {
                    out.push(Violation::OutOfRange { block: l, qudit: q });
                }
            }
        }
        let covered: BTreeSet<usize> = self.blocks.iter().flatten().copied().collect();
        for q in 0..self.n {
            if !covered.contains(&q) {
                out.push(Violation::Uncovered { qudit: q });
            }
        }
        for a in 0..self.blocks.len() {
            for b in (a + 1)..self.blocks.len() {
                if !self.blocks[a].is_empty() && self.blocks[a] == self.blocks[b] {
                    out.push(Violation::Duplicate { first: a, second: b });
                } else if self.mode == PartitionMode::Disjoint {
                    if let Some(&q) = self.blocks[a].iter().find(|q| self.blocks[b].contains(q)) {
                        out.push(Violation::Overlap { first: a, second: b, qudit: q });
                    }
                }
            }
        }
        out
    }

    /// True when every block of `self` lies inside some block of `coarser`.
    pub fn refines(&self, coarser: &PartitionSet) -> bool {
        self.blocks.iter().all(|b| coarser.blocks.iter().any(|c| b.iter().all(|q| c.contains(q))))
    }
}

impl fmt::Display for PartitionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|q| (q + 1).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        f.write_str(&parts.join("|"))
    }
}

impl FromStr for PartitionSet {
    type Err = Error;

    /// Infers `n` from the largest index and picks disjoint mode when the
    /// blocks do not overlap.
    fn from_str(s: &str) -> Result<Self> {
        let blocks = parse_blocks(s)?;
        let n = blocks.iter().flatten().max().map_or(0, |q| q + 1);
        let disjoint = PartitionSet::unchecked(blocks.clone(), n, PartitionMode::Disjoint);
        if disjoint.validate().is_empty() {
            return Ok(disjoint);
        }
        PartitionSet::new(blocks, n, PartitionMode::NonDisjoint)
    }
}

fn parse_blocks(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut blocks = Vec::new();
    for (l, part) in text.split('|').enumerate() {
        let mut block = Vec::new();
        for tok in part.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let q: usize = tok
                .parse()
                .map_err(|_| Error::InvalidPartition(format!("block {}: '{tok}' is not a qudit index", l + 1)))?;
            if q == 0 {
                return Err(Error::InvalidPartition(format!("block {}: qudit indices start at 1", l + 1)));
            }
            block.push(q - 1);
        }
        blocks.push(block);
    }
    Ok(blocks)
}

/// Named partition families for three qudits.
pub mod presets {
    use super::{PartitionMode, PartitionSet};

    /// `{1|2|3}`.
    pub fn fully_separable() -> PartitionSet {
        PartitionSet::fully_separable(3)
    }

    /// `{i,j|k}` for each choice of the lone qudit `k`.
    pub fn bi_separable() -> Vec<PartitionSet> {
        (0..3)
            .map(|k| {
                let pair: Vec<usize> = (0..3).filter(|&q| q != k).collect();
                PartitionSet::unchecked(vec![pair, vec![k]], 3, PartitionMode::Disjoint)
            })
            .collect()
    }

    /// `{i,j|i,k}` for each choice of the shared qudit `i`.
    pub fn ghz() -> Vec<PartitionSet> {
        (0..3)
            .map(|i| {
                let others: Vec<usize> = (0..3).filter(|&q| q != i).collect();
                PartitionSet::unchecked(vec![vec![i, others[0]], vec![i, others[1]]], 3, PartitionMode::NonDisjoint)
            })
            .collect()
    }

    /// `{1,2|2,3|1,3}`.
    pub fn w() -> PartitionSet {
        PartitionSet::unchecked(vec![vec![0, 1], vec![1, 2], vec![0, 2]], 3, PartitionMode::NonDisjoint)
    }

    /// Looks up `fs`, `bs`, `ghz` or `w` (case-insensitive).
    pub fn family(name: &str) -> Option<Vec<PartitionSet>> {
        match name.to_ascii_lowercase().as_str() {
            "fs" => Some(vec![fully_separable()]),
            "bs" | "gen" => Some(bi_separable()),
            "ghz" => Some(ghz()),
            "w" => Some(vec![w()]),
            _ => None,
        }
    }
}

/// Hidden-unit blocks `h_l`, one per block of the partition set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenPartition {
    pub blocks: Vec<Vec<usize>>,
    pub n_hidden: usize,
}

impl HiddenPartition {
    /// Splits `n_hidden` proportionally to the block sizes of `k`, remainder
    /// to the largest block (first one on ties).
    pub fn proportional(k: &PartitionSet, n_hidden: usize) -> Result<Self> {
        let sizes: Vec<usize> = k.blocks.iter().map(Vec::len).collect();
        Self::with_sizes(k, &allocate(&sizes, n_hidden))
    }

    /// Consecutive hidden-unit blocks with the given sizes.
    pub fn with_sizes(k: &PartitionSet, sizes: &[usize]) -> Result<Self> {
        if sizes.len() != k.len() {
            return Err(Error::InconsistentPartitions { visible: k.len(), hidden: sizes.len() });
        }
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut next = 0;
        for &s in sizes {
            blocks.push((next..next + s).collect());
            next += s;
        }
        let h = HiddenPartition { blocks, n_hidden: next };
        h.check(k)?;
        Ok(h)
    }

    pub fn check(&self, k: &PartitionSet) -> Result<()> {
        if self.blocks.len() != k.len() {
            return Err(Error::InconsistentPartitions { visible: k.len(), hidden: self.blocks.len() });
        }
        let mut seen = vec![false; self.n_hidden];
        for b in &self.blocks {
            for &j in b {
                if j >= self.n_hidden || seen[j] {
                    return Err(Error::InvalidPartition(format!("hidden unit {} is out of range or repeated", j + 1)));
                }
                seen[j] = true;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("hidden unit {} belongs to no block", j + 1)));
        }
        for (l, (kb, hb)) in k.blocks.iter().zip(&self.blocks).enumerate() {
            if kb.len() >= 2 && hb.is_empty() {
                return Err(Error::InvalidPartition(format!("block {} spans several qudits but has no hidden units", l + 1)));
            }
        }
        Ok(())
    }
}

fn allocate(sizes: &[usize], n_hidden: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut out: Vec<usize> = sizes.iter().map(|s| n_hidden * s / total).collect();
    let rest = n_hidden - out.iter().sum::<usize>();
    let largest = (0..sizes.len()).fold(0, |best, l| if sizes[l] > sizes[best] { l } else { best });
    out[largest] += rest;
    out
}

/// `allowed[i * n_hidden + j]`: may visible unit `i` couple to hidden unit `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightMask {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub allowed: Vec<bool>,
}

impl WeightMask {
    pub fn full(n_visible: usize, n_hidden: usize) -> Self {
        WeightMask { n_visible, n_hidden, allowed: vec![true; n_visible * n_hidden] }
    }

    #[inline]
    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n_hidden + j]
    }

    pub fn n_blocked(&self) -> usize {
        self.allowed.iter().filter(|a| !**a).count()
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.allowed.chunks(self.n_hidden.max(1)).map(<[bool]>::to_vec).take(self.n_visible).collect()
    }
}

/// `W_ij` survives iff some block `l` holds both the qudit of unit `i` and
/// hidden unit `j`. All units of one qudit are treated together.
pub fn build_mask(k: &PartitionSet, h: &HiddenPartition, basis: &Basis) -> Result<WeightMask> {
    let violations = k.validate();
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidPartition(text.join("; ")));
    }
    if k.n != basis.n_qudits() {
        return Err(Error::ShapeMismatch { what: "partition qudit count", expected: basis.n_qudits(), got: k.n });
    }
    h.check(k)?;
    let (nv, nh) = (basis.n_visible(), h.n_hidden);
    let mut allowed = vec![false; nv * nh];
    for (kb, hb) in k.blocks.iter().zip(&h.blocks) {
        for i in 0..nv {
            if kb.contains(&basis.qudit_of_unit(i)) {
                for &j in hb {
                    allowed[i * nh + j] = true;
                }
            }
        }
    }
    Ok(WeightMask { n_visible: nv, n_hidden: nh, allowed })
}

/// Mask from a partition set using the default proportional hidden split.
pub fn default_mask(k: &PartitionSet, basis: &Basis, n_hidden: usize) -> Result<WeightMask> {
    let h = HiddenPartition::proportional(k, n_hidden)?;
    build_mask(k, &h, basis)
}
