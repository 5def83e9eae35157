use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{in_bounds, BlockGrid, BlockId, Coord, Palette};

/// Horizontal walkable extent: the build footprint plus a 2-cell margin.
pub const WALK_XZ: (f64, f64) = (-7.0, 7.0);
/// Vertical extent of avatar feet positions (top of a full column plus a jump).
pub const WALK_Y: (f64, f64) = (0.0, 10.0);

const EPS: f64 = 1e-9;

/// Maps `yaw` into [-180, 180). In-range values pass through bit-exact.
pub fn normalize_yaw(yaw: f64) -> f64 {
    if (-180.0..180.0).contains(&yaw) {
        yaw
    } else {
        (yaw + 180.0).rem_euclid(360.0) - 180.0
    }
}

/// Builder avatar. `pos` is the center of the avatar's feet cell in build-frame
/// units, so an avatar standing on empty ground has `pos[1] == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Avatar {
    pub pos: [f64; 3],
    pub pitch: f64,
    pub yaw: f64,
}

impl Default for Avatar {
    /// Spawn point north of the build region (z = -6), facing south.
    fn default() -> Self {
        Avatar {
            pos: [0.0, 0.0, -6.0],
            pitch: 0.0,
            yaw: 0.0,
        }
    }
}

impl Avatar {
    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Avatar {
            pos: [x, y, z],
            ..Avatar::default()
        }
    }

    /// Cell containing the avatar's feet.
    pub fn cell(&self) -> Coord {
        let r = |v: f64| (v + 0.5).floor() as i32;
        Coord::new(r(self.pos[0]), r(self.pos[1]), r(self.pos[2]))
    }

    pub fn is_valid(&self) -> bool {
        let [x, y, z] = self.pos;
        let xz = WALK_XZ.0..=WALK_XZ.1;
        self.pos.iter().all(|v| v.is_finite())
            && xz.contains(&x)
            && xz.contains(&z)
            && (WALK_Y.0..=WALK_Y.1).contains(&y)
            && (-90.0..=90.0).contains(&self.pitch)
            && (-180.0..180.0).contains(&self.yaw)
    }

    fn forward(&self) -> (f64, f64) {
        let r = self.yaw.to_radians();
        (-r.sin(), r.cos())
    }

    fn left(&self) -> (f64, f64) {
        let r = self.yaw.to_radians();
        (r.cos(), r.sin())
    }
}

/// Step directions relative to the avatar's yaw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveDir {
    Forward,
    Backward,
    Left,
    Right,
    ForwardLeft,
    ForwardRight,
    BackwardLeft,
    BackwardRight,
}

impl MoveDir {
    pub const ALL: [MoveDir; 8] = [
        MoveDir::Forward,
        MoveDir::Backward,
        MoveDir::Left,
        MoveDir::Right,
        MoveDir::ForwardLeft,
        MoveDir::ForwardRight,
        MoveDir::BackwardLeft,
        MoveDir::BackwardRight,
    ];

    /// Tape action name, e.g. `step_backward`.
    pub fn action_name(self) -> &'static str {
        match self {
            MoveDir::Forward => "step_forward",
            MoveDir::Backward => "step_backward",
            MoveDir::Left => "step_left",
            MoveDir::Right => "step_right",
            MoveDir::ForwardLeft => "step_forward_left",
            MoveDir::ForwardRight => "step_forward_right",
            MoveDir::BackwardLeft => "step_backward_left",
            MoveDir::BackwardRight => "step_backward_right",
        }
    }

    pub fn from_action_name(name: &str) -> Option<Self> {
        MoveDir::ALL.into_iter().find(|d| d.action_name() == name)
    }

    /// (forward, left) weights.
    fn weights(self) -> (f64, f64) {
        let d = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            MoveDir::Forward => (1.0, 0.0),
            MoveDir::Backward => (-1.0, 0.0),
            MoveDir::Left => (0.0, 1.0),
            MoveDir::Right => (0.0, -1.0),
            MoveDir::ForwardLeft => (d, d),
            MoveDir::ForwardRight => (d, -d),
            MoveDir::BackwardLeft => (-d, d),
            MoveDir::BackwardRight => (-d, -d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum BuildAction {
    Move { dir: MoveDir },
    SetLook { pitch: f64, yaw: f64 },
    Jump,
    PlaceBlock { coord: Coord, block: BlockId },
    BreakBlock { coord: Coord },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub grid: BlockGrid,
    pub avatar: Avatar,
}

impl WorldState {
    pub fn new(grid: BlockGrid, avatar: Avatar) -> Self {
        WorldState { grid, avatar }
    }

    /// Empty world with the default avatar.
    pub fn with_grid(grid: BlockGrid) -> Self {
        WorldState {
            grid,
            avatar: Avatar::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error("cell {0} is outside the build region")]
    OutOfBounds(Coord),
    #[error("cell {0} is already occupied")]
    Occupied(Coord),
    #[error("cell {0} is empty")]
    NotPresent(Coord),
    #[error("cell {coord} is {distance:.3} away, beyond reach")]
    OutOfReach { coord: Coord, distance: f64 },
    #[error("block id {0} is not in the palette")]
    UnknownBlock(u16),
    #[error("the avatar stands in cell {0}; jump first to place beneath it")]
    BlockedByAvatar(Coord),
}

/// World rules: palette, reach radius and movement step length.
#[derive(Debug, Clone, PartialEq)]
pub struct Rules {
    pub palette: Palette,
    pub reach: f64,
    pub step: f64,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            palette: Palette::default(),
            reach: 3.0,
            step: 0.5,
        }
    }
}

impl Rules {
    pub fn with_palette(palette: Palette) -> Self {
        Rules {
            palette,
            ..Rules::default()
        }
    }

    /// Standing height on the column at (x, z): one above its highest block, 0 if empty.
    pub fn column_height(grid: &BlockGrid, x: i32, z: i32) -> f64 {
        grid.column_top(x, z).map_or(0.0, |top| (top + 1) as f64)
    }

    /// Drops (or lifts) the avatar onto the column it stands in.
    pub fn settle(grid: &BlockGrid, avatar: Avatar) -> Avatar {
        let cell = avatar.cell();
        let mut out = avatar;
        out.pos[1] = Self::column_height(grid, cell.x, cell.z).min(WALK_Y.1);
        out
    }

    pub fn is_airborne(grid: &BlockGrid, avatar: &Avatar) -> bool {
        let cell = avatar.cell();
        avatar.pos[1] > Self::column_height(grid, cell.x, cell.z) + EPS
    }

    /// Point reach is measured from: the avatar's standing position, ignoring any jump.
    pub fn reach_origin(grid: &BlockGrid, avatar: &Avatar) -> [f64; 3] {
        if Self::is_airborne(grid, avatar) {
            Self::settle(grid, *avatar).pos
        } else {
            avatar.pos
        }
    }

    pub fn place_block(
        &self,
        s: &WorldState,
        c: Coord,
        b: BlockId,
    ) -> Result<WorldState, ActionError> {
        if !in_bounds(c) {
            return Err(ActionError::OutOfBounds(c));
        }
        if !self.palette.contains(b) {
            return Err(ActionError::UnknownBlock(b.get()));
        }
        if s.grid.contains(c) {
            return Err(ActionError::Occupied(c));
        }
        let origin = Self::reach_origin(&s.grid, &s.avatar);
        let standing = Avatar { pos: origin, ..s.avatar };
        if standing.cell() == c && !Self::is_airborne(&s.grid, &s.avatar) {
            return Err(ActionError::BlockedByAvatar(c));
        }
        self.check_reach(c, origin)?;
        let mut grid = s.grid.clone();
        grid.set(c, b).map_err(|_| ActionError::OutOfBounds(c))?;
        let avatar = Self::settle(&grid, s.avatar);
        Ok(WorldState { grid, avatar })
    }

    pub fn remove_block(&self, s: &WorldState, c: Coord) -> Result<WorldState, ActionError> {
        if !in_bounds(c) {
            return Err(ActionError::OutOfBounds(c));
        }
        if !s.grid.contains(c) {
            return Err(ActionError::NotPresent(c));
        }
        self.check_reach(c, Self::reach_origin(&s.grid, &s.avatar))?;
        let mut grid = s.grid.clone();
        grid.remove(c);
        let avatar = Self::settle(&grid, s.avatar);
        Ok(WorldState { grid, avatar })
    }

    fn check_reach(&self, c: Coord, origin: [f64; 3]) -> Result<(), ActionError> {
        let distance = c.distance_to(origin);
        if distance > self.reach + EPS {
            return Err(ActionError::OutOfReach { coord: c, distance });
        }
        Ok(())
    }

    /// Deterministic successor of `s` under `a`. Moves clamp to the walkable
    /// volume instead of failing; block edits propagate their errors.
    pub fn apply_action(&self, s: &WorldState, a: &BuildAction) -> Result<WorldState, ActionError> {
        match *a {
            BuildAction::Move { dir } => {
                let (fw, lw) = dir.weights();
                let (fx, fz) = s.avatar.forward();
                let (lx, lz) = s.avatar.left();
                let mut avatar = s.avatar;
                let clamp = |v: f64| v.clamp(WALK_XZ.0, WALK_XZ.1);
                avatar.pos[0] = clamp(avatar.pos[0] + self.step * (fw * fx + lw * lx));
                avatar.pos[2] = clamp(avatar.pos[2] + self.step * (fw * fz + lw * lz));
                Ok(WorldState {
                    grid: s.grid.clone(),
                    avatar: Self::settle(&s.grid, avatar),
                })
            }
            BuildAction::SetLook { pitch, yaw } => {
                let mut avatar = Self::settle(&s.grid, s.avatar);
                avatar.pitch = if pitch.is_finite() { pitch.clamp(-90.0, 90.0) } else { 0.0 };
                avatar.yaw = if yaw.is_finite() { normalize_yaw(yaw) } else { 0.0 };
                Ok(WorldState {
                    grid: s.grid.clone(),
                    avatar,
                })
            }
            BuildAction::Jump => {
                let mut avatar = Self::settle(&s.grid, s.avatar);
                avatar.pos[1] = (avatar.pos[1] + 1.0).min(WALK_Y.1);
                Ok(WorldState {
                    grid: s.grid.clone(),
                    avatar,
                })
            }
            BuildAction::PlaceBlock { coord, block } => self.place_block(s, coord, block),
            BuildAction::BreakBlock { coord } => self.remove_block(s, coord),
        }
    }
}
