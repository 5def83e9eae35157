//! Deterministic voxel world: the 11×11×9 build region, the builder avatar and
//! the place/remove/move rules every other module replays or scores against.
//!
//! All values are immutable; operations return new states.

mod delta;
mod grid;
mod palette;
mod world;

pub use delta::{diff, Change, GridDelta};
pub use grid::{
    in_bounds, BlockGrid, BlockId, Coord, GridError, REGION_X, REGION_Y, REGION_Z, WORLD_GROUND_Y,
};
pub use palette::{Palette, PaletteError};
pub use world::{
    normalize_yaw, ActionError, Avatar, BuildAction, MoveDir, Rules, WorldState, WALK_XZ, WALK_Y,
};
