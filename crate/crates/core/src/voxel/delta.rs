use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BlockGrid, BlockId, Coord};

/// One signed cell modification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "op", content = "blockId", rename_all = "lowercase")]
pub enum Change {
    Add(BlockId),
    Remove(BlockId),
}

impl Change {
    pub fn block(self) -> BlockId {
        match self {
            Change::Add(b) | Change::Remove(b) => b,
        }
    }
}

/// Signed set of additions and removals, at most one per coordinate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GridDelta {
    entries: BTreeMap<Coord, Change>,
}

impl GridDelta {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entry, replacing any previous entry at the same coordinate.
    pub fn insert(&mut self, c: Coord, change: Change) -> Option<Change> {
        self.entries.insert(c, change)
    }

    pub fn get(&self, c: Coord) -> Option<Change> {
        self.entries.get(&c).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coord, Change)> + '_ {
        self.entries.iter().map(|(c, ch)| (*c, *ch))
    }

    /// Applies the delta to `base`. Cells that would leave the region are dropped.
    pub fn apply(&self, base: &BlockGrid) -> BlockGrid {
        let mut out = base.clone();
        for (c, change) in self.iter() {
            match change {
                Change::Add(b) => {
                    let _ = out.set(c, b);
                }
                Change::Remove(_) => {
                    out.remove(c);
                }
            }
        }
        out
    }
}

impl FromIterator<(Coord, Change)> for GridDelta {
    fn from_iter<T: IntoIterator<Item = (Coord, Change)>>(iter: T) -> Self {
        GridDelta {
            entries: iter.into_iter().collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DeltaEntry {
    x: i32,
    y: i32,
    z: i32,
    #[serde(flatten)]
    change: Change,
}

impl Serialize for GridDelta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<DeltaEntry> = self
            .iter()
            .map(|(c, change)| DeltaEntry {
                x: c.x,
                y: c.y,
                z: c.z,
                change,
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridDelta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<DeltaEntry>::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|r| (Coord::new(r.x, r.y, r.z), r.change))
            .collect())
    }
}

/// Modifications that turn `g0` into `g`: `Add` for new or recolored cells,
/// `Remove` (carrying the old id) for cleared cells.
pub fn diff(g0: &BlockGrid, g: &BlockGrid) -> GridDelta {
    let mut delta = GridDelta::new();
    for (c, b) in g.iter() {
        if g0.get(c) != Some(b) {
            delta.insert(c, Change::Add(b));
        }
    }
    for (c, b) in g0.iter() {
        if !g.contains(c) {
            delta.insert(c, Change::Remove(b));
        }
    }
    delta
}
