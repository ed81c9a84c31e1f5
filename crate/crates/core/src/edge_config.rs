use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::EdgeId;

/// An open/closed assignment over the edges of a graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EdgeConfig {
    open: Vec<bool>,
}

impl EdgeConfig {
    pub fn all_closed(n_edges: usize) -> Self {
        EdgeConfig {
            open: vec![false; n_edges],
        }
    }

    pub fn all_open(n_edges: usize) -> Self {
        EdgeConfig {
            open: vec![true; n_edges],
        }
    }

    pub fn from_bools(open: Vec<bool>) -> Self {
        EdgeConfig { open }
    }

    /// Bit `i` of `mask` is the state of edge `i`.
    pub fn from_mask(mask: u64, n_edges: usize) -> Self {
        assert!(n_edges <= 64, "mask encoding needs at most 64 edges");
        EdgeConfig {
            open: (0..n_edges).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn to_mask(&self) -> u64 {
        assert!(self.open.len() <= 64, "mask encoding needs at most 64 edges");
        self.open
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &o)| m | (u64::from(o) << i))
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?} in edge bits"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(EdgeConfig::from_bools)
    }

    pub fn to_bit_string(&self) -> String {
        self.open.iter().map(|&o| if o { '1' } else { '0' }).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.open.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    #[inline]
    pub fn is_open(&self, e: EdgeId) -> bool {
        self.open[e.index()]
    }

    #[inline]
    pub fn set(&mut self, e: EdgeId, open: bool) {
        self.open[e.index()] = open;
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    pub fn open_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.open
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| EdgeId(i as u32))
    }

    pub fn closed_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.open
            .iter()
            .enumerate()
            .filter(|(_, &o)| !o)
            .map(|(i, _)| EdgeId(i as u32))
    }

    /// `self(e) >= other(e)` for every edge.
    pub fn dominates(&self, other: &EdgeConfig) -> bool {
        self.open.len() == other.open.len()
            && self.open.iter().zip(&other.open).all(|(&a, &b)| a || !b)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.open
    }
}

impl fmt::Debug for EdgeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EdgeConfig({})", self.to_bit_string())
    }
}
