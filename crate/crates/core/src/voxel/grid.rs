use std::collections::BTreeMap;
use std::fmt;
use std::num::NonZeroU16;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Lowest/highest build-frame coordinates of the 11×11×9 build region.
pub const REGION_X: (i32, i32) = (-5, 5);
pub const REGION_Y: (i32, i32) = (0, 8);
pub const REGION_Z: (i32, i32) = (-5, 5);

/// World-frame y of the build region's ground layer. Build-frame y is world y minus this.
pub const WORLD_GROUND_Y: i32 = 63;

/// A solid block type. Air is represented by absence, so the id is never 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(NonZeroU16);

impl BlockId {
    pub fn new(id: u16) -> Option<Self> {
        NonZeroU16::new(id).map(BlockId)
    }

    pub fn get(self) -> u16 {
        self.0.get()
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for BlockId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u16(self.get())
    }
}

impl<'de> Deserialize<'de> for BlockId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = u16::deserialize(d)?;
        BlockId::new(raw).ok_or_else(|| serde::de::Error::custom("block id 0 is air"))
    }
}

/// Integer cell coordinate in the build frame (x east, y up, z south).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Coord { x, y, z }
    }

    pub fn from_world(x: i32, y: i32, z: i32) -> Self {
        Coord::new(x, y - WORLD_GROUND_Y, z)
    }

    pub fn to_world(self) -> (i32, i32, i32) {
        (self.x, self.y + WORLD_GROUND_Y, self.z)
    }

    pub fn shifted(self, dx: i32, dy: i32, dz: i32) -> Self {
        Coord::new(self.x + dx, self.y + dy, self.z + dz)
    }

    /// The six face-adjacent cells.
    pub fn face_neighbors(self) -> [Coord; 6] {
        [
            self.shifted(1, 0, 0),
            self.shifted(-1, 0, 0),
            self.shifted(0, 1, 0),
            self.shifted(0, -1, 0),
            self.shifted(0, 0, 1),
            self.shifted(0, 0, -1),
        ]
    }

    pub fn distance_to(self, p: [f64; 3]) -> f64 {
        let dx = self.x as f64 - p[0];
        let dy = self.y as f64 - p[1];
        let dz = self.z as f64 - p[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// True iff `c` lies inside the 11×11×9 build region.
pub fn in_bounds(c: Coord) -> bool {
    (REGION_X.0..=REGION_X.1).contains(&c.x)
        && (REGION_Y.0..=REGION_Y.1).contains(&c.y)
        && (REGION_Z.0..=REGION_Z.1).contains(&c.z)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("cell {0} is outside the build region")]
    OutOfBounds(Coord),
    #[error("block id 0 cannot be stored (air is absence)")]
    ZeroBlock,
}

/// Sparse occupancy of the build region.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BlockGrid {
    cells: BTreeMap<Coord, BlockId>,
}

impl BlockGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, c: Coord) -> Option<BlockId> {
        self.cells.get(&c).copied()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.cells.contains_key(&c)
    }

    /// Stores `id` at `c`, replacing whatever was there.
    pub fn set(&mut self, c: Coord, id: BlockId) -> Result<Option<BlockId>, GridError> {
        if !in_bounds(c) {
            return Err(GridError::OutOfBounds(c));
        }
        Ok(self.cells.insert(c, id))
    }

    /// Like [`BlockGrid::set`] for raw ids; 0 is rejected.
    pub fn set_raw(&mut self, c: Coord, id: u16) -> Result<Option<BlockId>, GridError> {
        let id = BlockId::new(id).ok_or(GridError::ZeroBlock)?;
        self.set(c, id)
    }

    pub fn remove(&mut self, c: Coord) -> Option<BlockId> {
        self.cells.remove(&c)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coord, BlockId)> + '_ {
        self.cells.iter().map(|(c, b)| (*c, *b))
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        self.cells.keys().copied()
    }

    /// Builds a grid from build-frame `(coord, id)` pairs.
    pub fn from_cells<I>(cells: I) -> Result<Self, GridError>
    where
        I: IntoIterator<Item = (Coord, u16)>,
    {
        let mut grid = BlockGrid::new();
        for (c, id) in cells {
            grid.set_raw(c, id)?;
        }
        Ok(grid)
    }

    /// Parses world-frame `[x, y, z, blockId]` quadruples.
    pub fn from_world_blocks(blocks: &[[i32; 4]]) -> Result<Self, GridError> {
        let mut grid = BlockGrid::new();
        for [x, y, z, id] in blocks.iter().copied() {
            let id = u16::try_from(id).map_err(|_| GridError::ZeroBlock)?;
            grid.set_raw(Coord::from_world(x, y, z), id)?;
        }
        Ok(grid)
    }

    pub fn to_world_blocks(&self) -> Vec<[i32; 4]> {
        self.iter()
            .map(|(c, b)| {
                let (x, y, z) = c.to_world();
                [x, y, z, b.get() as i32]
            })
            .collect()
    }

    /// Highest occupied y in the column at (x, z).
    pub fn column_top(&self, x: i32, z: i32) -> Option<i32> {
        // BTreeMap order is (x, y, z), so scan the x slice.
        self.cells
            .range(Coord::new(x, i32::MIN, i32::MIN)..=Coord::new(x, i32::MAX, i32::MAX))
            .filter(|(c, _)| c.z == z)
            .map(|(c, _)| c.y)
            .max()
    }

    /// Cells present in exactly one grid or with differing ids.
    pub fn mismatches(&self, other: &BlockGrid) -> Vec<Coord> {
        let mut out: Vec<Coord> = self
            .iter()
            .filter(|(c, b)| other.get(*c) != Some(*b))
            .map(|(c, _)| c)
            .collect();
        out.extend(other.coords().filter(|c| !self.contains(*c)));
        out.sort();
        out
    }
}

impl FromIterator<(Coord, BlockId)> for BlockGrid {
    /// Out-of-bounds cells are dropped.
    fn from_iter<T: IntoIterator<Item = (Coord, BlockId)>>(iter: T) -> Self {
        BlockGrid {
            cells: iter.into_iter().filter(|(c, _)| in_bounds(*c)).collect(),
        }
    }
}

/// Serialized as the world-frame `[[x, y, z, blockId], ...]` array used by recorded data.
impl Serialize for BlockGrid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_world_blocks().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let blocks = Vec::<[i32; 4]>::deserialize(d)?;
        BlockGrid::from_world_blocks(&blocks).map_err(serde::de::Error::custom)
    }
}
