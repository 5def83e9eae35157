//! Geometric labels for target structures: flat, flying, diagonal, tall and
//! tricky (hidden blocks). Labels are not mutually exclusive.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::voxel::{BlockGrid, Coord};

/// Lowest block y a ground-standing builder cannot reach.
pub const DEFAULT_TALL_THRESHOLD: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("structure has no blocks")]
    EmptyStructure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct TaxonomyConfig {
    pub tall_threshold: i32,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        TaxonomyConfig {
            tall_threshold: DEFAULT_TALL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructureLabels {
    pub flat: bool,
    pub flying: bool,
    pub diagonal: bool,
    pub tricky: bool,
    pub tall: bool,
}

impl StructureLabels {
    pub const NAMES: [&'static str; 5] = ["flat", "flying", "diagonal", "tricky", "tall"];

    pub fn names(&self) -> Vec<&'static str> {
        let flags = [self.flat, self.flying, self.diagonal, self.tricky, self.tall];
        Self::NAMES
            .iter()
            .zip(flags)
            .filter(|(_, on)| *on)
            .map(|(n, _)| *n)
            .collect()
    }
}

fn non_empty(g: &BlockGrid) -> Result<(), TaxonomyError> {
    if g.is_empty() {
        Err(TaxonomyError::EmptyStructure)
    } else {
        Ok(())
    }
}

pub fn is_flat(g: &BlockGrid) -> Result<bool, TaxonomyError> {
    non_empty(g)?;
    Ok(g.coords().all(|c| c.y == 0))
}

/// Face-connected components of the block set.
fn components(g: &BlockGrid) -> Vec<Vec<Coord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for start in g.coords() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in c.face_neighbors() {
                if g.contains(n) && seen.insert(n) {
                    comp.push(n);
                    queue.push_back(n);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Some face-connected component never touches the ground, so it cannot be
/// built add-only without scaffolding.
pub fn is_flying(g: &BlockGrid) -> Result<bool, TaxonomyError> {
    non_empty(g)?;
    Ok(components(g)
        .iter()
        .any(|comp| comp.iter().all(|c| c.y != 0)))
}

fn chebyshev_neighbors(c: Coord) -> impl Iterator<Item = Coord> {
    (-1..=1).flat_map(move |dx| {
        (-1..=1).flat_map(move |dy| {
            (-1..=1)
                .filter(move |&dz| (dx, dy, dz) != (0, 0, 0))
                .map(move |dz| c.shifted(dx, dy, dz))
        })
    })
}

/// Some block touches the rest only along an edge or corner.
pub fn is_diagonal(g: &BlockGrid) -> Result<bool, TaxonomyError> {
    non_empty(g)?;
    Ok(g.coords().any(|c| {
        !c.face_neighbors().iter().any(|n| g.contains(*n))
            && chebyshev_neighbors(c).any(|n| g.contains(n))
    }))
}

pub fn is_tall(g: &BlockGrid, config: &TaxonomyConfig) -> Result<bool, TaxonomyError> {
    non_empty(g)?;
    Ok(g.coords().map(|c| c.y).max().unwrap_or(0) >= config.tall_threshold)
}

/// Some block is enclosed on all six faces; the ground covers the downward face at y = 0.
pub fn has_hidden_blocks(g: &BlockGrid) -> Result<bool, TaxonomyError> {
    non_empty(g)?;
    Ok(g.coords().any(|c| {
        c.face_neighbors()
            .iter()
            .all(|n| n.y < 0 || g.contains(*n))
    }))
}

pub fn classify(g: &BlockGrid, config: &TaxonomyConfig) -> Result<StructureLabels, TaxonomyError> {
    Ok(StructureLabels {
        flat: is_flat(g)?,
        flying: is_flying(g)?,
        diagonal: is_diagonal(g)?,
        tricky: has_hidden_blocks(g)?,
        tall: is_tall(g, config)?,
    })
}

/// Number of structures carrying each label, keyed by label name.
pub fn label_counts<'a>(labels: impl IntoIterator<Item = &'a StructureLabels>) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> =
        StructureLabels::NAMES.iter().map(|n| (*n, 0)).collect();
    for l in labels {
        for n in l.names() {
            *counts.entry(n).or_default() += 1;
        }
    }
    counts
}
