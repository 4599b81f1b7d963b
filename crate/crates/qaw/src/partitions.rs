//! Exact combinatorics of pair partitions, set partitions, inversions and
//! multi-index kernels.
//!
//! Ground sets are `[d] = {1, ..., d}` (1-based) and all values are
//! immutable after construction, so everything here is safe to share
//! across threads.

use serde::{Deserialize, Serialize};

use crate::error::{QawError, Result};

/// A perfect matching of `[d]`: disjoint pairs `(r, t)` with `r < t`
/// covering the ground set, stored sorted by the opener `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct PairPartition {
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Builds a pair partition of `[d]` where `d = 2 * pairs.len()`,
    /// validating disjointness and coverage.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let d = 2 * pairs.len();
        let mut seen = vec![false; d + 1];
        for &(r, t) in &pairs {
            if r == 0 || t == 0 || r > d || t > d {
                return Err(QawError::InvalidArgument(format!(
                    "pair ({r}, {t}) out of range for ground set [{d}]"
                )));
            }
            if r >= t {
                return Err(QawError::InvalidArgument(format!(
                    "pair ({r}, {t}) must be stored with r < t"
                )));
            }
            for x in [r, t] {
                if seen[x] {
                    return Err(QawError::InvalidArgument(format!(
                        "element {x} appears in more than one pair"
                    )));
                }
                seen[x] = true;
            }
        }
        let mut pairs = pairs;
        pairs.sort_unstable();
        Ok(Self { pairs })
    }

    /// Ground-set size `d`.
    pub fn ground_size(&self) -> usize {
        2 * self.pairs.len()
    }

    /// The pairs, sorted by opener.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// View as a set partition with two-element blocks.
    pub fn to_set_partition(&self) -> SetPartition {
        SetPartition::new(
            self.ground_size(),
            self.pairs.iter().map(|&(r, t)| vec![r, t]).collect(),
        )
        .expect("pair partition is a valid set partition")
    }
}

/// A partition of `[d]` into disjoint nonempty blocks, canonicalized so
/// that blocks are sorted internally and ordered by their minima.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct SetPartition {
    #[serde(skip)]
    d: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Builds a partition of `[d]`, validating coverage and disjointness.
    pub fn new(d: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if d == 0 {
            return Err(QawError::InvalidArgument(
                "ground set must be nonempty".into(),
            ));
        }
        let mut seen = vec![false; d + 1];
        let mut count = 0usize;
        for block in &blocks {
            if block.is_empty() {
                return Err(QawError::InvalidArgument("empty block".into()));
            }
            for &x in block {
                if x == 0 || x > d {
                    return Err(QawError::InvalidArgument(format!(
                        "element {x} out of range for ground set [{d}]"
                    )));
                }
                if seen[x] {
                    return Err(QawError::InvalidArgument(format!(
                        "element {x} appears in more than one block"
                    )));
                }
                seen[x] = true;
                count += 1;
            }
        }
        if count != d {
            return Err(QawError::InvalidArgument(format!(
                "blocks cover {count} of {d} elements"
            )));
        }
        let mut blocks = blocks;
        for block in &mut blocks {
            block.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { d, blocks })
    }

    /// The discrete partition (every element its own block).
    pub fn discrete(d: usize) -> Result<Self> {
        Self::new(d, (1..=d).map(|x| vec![x]).collect())
    }

    /// Ground-set size.
    pub fn ground_size(&self) -> usize {
        self.d
    }

    /// Number of blocks, written `|sigma|`.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// The blocks in canonical order.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block label per element: `labels()[x - 1]` identifies the block
    /// containing `x`.
    fn labels(&self) -> Vec<usize> {
        let mut lab = vec![0usize; self.d];
        for (i, block) in self.blocks.iter().enumerate() {
            for &x in block {
                lab[x - 1] = i;
            }
        }
        lab
    }
}

impl<'de> Deserialize<'de> for SetPartition {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let blocks = Vec::<Vec<usize>>::deserialize(deserializer)?;
        let d = blocks.iter().map(|b| b.len()).sum();
        SetPartition::new(d, blocks).map_err(serde::de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for PairPartition {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let pairs = Vec::<(usize, usize)>::deserialize(deserializer)?;
        PairPartition::new(pairs).map_err(serde::de::Error::custom)
    }
}

/// An ordered splitting of `[n]` into a left part `I1` and its complement
/// `I2`, both strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndex {
    n: usize,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl SplitIndex {
    /// Builds the split of `[n]` with `I1 = left`; `I2` is the complement.
    pub fn new(n: usize, left: Vec<usize>) -> Result<Self> {
        let mut in_left = vec![false; n + 1];
        for &i in &left {
            if i == 0 || i > n {
                return Err(QawError::InvalidArgument(format!(
                    "index {i} out of range for [{n}]"
                )));
            }
            if in_left[i] {
                return Err(QawError::InvalidArgument(format!("index {i} repeated")));
            }
            in_left[i] = true;
        }
        let mut left = left;
        left.sort_unstable();
        let right = (1..=n).filter(|&i| !in_left[i]).collect();
        Ok(Self { n, left, right })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The increasing left part `I1`.
    pub fn left(&self) -> &[usize] {
        &self.left
    }

    /// The increasing complement `I2`.
    pub fn right(&self) -> &[usize] {
        &self.right
    }
}

/// All perfect matchings of `[d]`, empty for odd `d`.
///
/// Enumeration pairs the smallest free element with each larger candidate
/// in ascending order and recurses, so the output order is deterministic:
/// partitions sorted by the partner of the smallest free element.
pub fn enumerate_pair_partitions(d: usize) -> Vec<PairPartition> {
    if d % 2 != 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut free: Vec<usize> = (1..=d).collect();
    let mut acc: Vec<(usize, usize)> = Vec::with_capacity(d / 2);
    fn recurse(
        free: &mut Vec<usize>,
        acc: &mut Vec<(usize, usize)>,
        out: &mut Vec<PairPartition>,
    ) {
        if free.is_empty() {
            out.push(PairPartition {
                pairs: acc.clone(),
            });
            return;
        }
        let first = free[0];
        for idx in 1..free.len() {
            let partner = free[idx];
            let mut rest: Vec<usize> = free[1..].to_vec();
            rest.remove(idx - 1);
            acc.push((first, partner));
            recurse(&mut rest, acc, out);
            acc.pop();
        }
    }
    if d == 0 {
        out.push(PairPartition { pairs: Vec::new() });
        return out;
    }
    recurse(&mut free, &mut acc, &mut out);
    out
}

/// Number of crossings of a pair partition: pairs `(a,b)`, `(c,e)` with
/// `a < c < b < e`.
pub fn crossings(sigma: &PairPartition) -> usize {
    let p = sigma.pairs();
    let mut count = 0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let (a, b) = p[i];
            let (c, e) = p[j];
            if (a < c && c < b && b < e) || (c < a && a < e && e < b) {
                count += 1;
            }
        }
    }
    count
}

/// Number of inversions of a permutation given as the image list
/// `(sigma(1), ..., sigma(n))` with 1-based values.
pub fn inversions(sigma: &[usize]) -> usize {
    let mut count = 0;
    for i in 0..sigma.len() {
        for j in (i + 1)..sigma.len() {
            if sigma[i] > sigma[j] {
                count += 1;
            }
        }
    }
    count
}

/// The inversion weight of a split: `sum_l (i_l - l)` over
/// `I1 = {i_1 < ... < i_{n-k}}`.
pub fn split_inversions(split: &SplitIndex) -> usize {
    split
        .left()
        .iter()
        .enumerate()
        .map(|(idx, &i)| i - (idx + 1))
        .sum()
}

/// Lattice join: the finest partition coarser than both arguments.
/// Computed with union-find over the ground set.
pub fn join(sigma: &SetPartition, tau: &SetPartition) -> Result<SetPartition> {
    if sigma.ground_size() != tau.ground_size() {
        return Err(QawError::InvalidArgument(format!(
            "ground sets differ: {} vs {}",
            sigma.ground_size(),
            tau.ground_size()
        )));
    }
    let d = sigma.ground_size();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for part in [sigma, tau] {
        for block in part.blocks() {
            for w in block.windows(2) {
                union(&mut parent, w[0] - 1, w[1] - 1);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for x in 0..d {
        let root = find(&mut parent, x);
        groups.entry(root).or_default().push(x + 1);
    }
    SetPartition::new(d, groups.into_values().collect())
}

/// The kernel of a multi-index: `r` and `s` share a block iff
/// `k[r-1] == k[s-1]`.
pub fn kernel(k: &[usize]) -> Result<SetPartition> {
    if k.is_empty() {
        return Err(QawError::InvalidArgument(
            "multi-index must be nonempty".into(),
        ));
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (pos, &v) in k.iter().enumerate() {
        groups.entry(v).or_default().push(pos + 1);
    }
    SetPartition::new(k.len(), groups.into_values().collect())
}

/// Refinement order: true iff every block of `sigma` is contained in a
/// block of `pi`, i.e. `sigma <= pi`.
pub fn refines(sigma: &SetPartition, pi: &SetPartition) -> Result<bool> {
    if sigma.ground_size() != pi.ground_size() {
        return Err(QawError::InvalidArgument(format!(
            "ground sets differ: {} vs {}",
            sigma.ground_size(),
            pi.ground_size()
        )));
    }
    let labels = pi.labels();
    Ok(sigma
        .blocks()
        .iter()
        .all(|block| block.iter().all(|&x| labels[x - 1] == labels[block[0] - 1])))
}

/// `(d-1)!! = d! / (2^{d/2} (d/2)!)` for even `d`, the count of perfect
/// matchings.
pub fn double_factorial_odd(d: usize) -> usize {
    if d == 0 {
        return 1;
    }
    let mut acc = 1usize;
    let mut k = d - 1;
    loop {
        acc *= k;
        if k <= 2 {
            break;
        }
        k -= 2;
    }
    acc
}
