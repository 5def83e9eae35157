//! Turns block edits into a legal action sequence: axis-aligned walking to a
//! standing column within reach, then the edit itself.

use builderkit_core::voxel::{ActionError, BlockId, BuildAction, Coord, MoveDir, Rules, WorldState, WALK_XZ};
use thiserror::Error;

/// Walking allowance per edit before the planner gives up.
pub const MAX_PATH_MOVES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Edit {
    Place(Coord, BlockId),
    Remove(Coord),
}

impl Edit {
    pub fn coord(&self) -> Coord {
        match *self {
            Edit::Place(c, _) | Edit::Remove(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no standing spot within {MAX_PATH_MOVES} moves reaches {0}")]
    Unreachable(Coord),
    #[error(transparent)]
    Action(#[from] ActionError),
}

fn moves_between(from: f64, to: f64) -> usize {
    ((to - from).abs() / 0.5).round() as usize
}

/// Standing column for reaching `c`: fewest moves first, then lowest (x, z).
fn stand_for(rules: &Rules, s: &WorldState, c: Coord) -> Option<(i32, i32)> {
    let [ax, _, az] = s.avatar.pos;
    let lo = WALK_XZ.0 as i32;
    let hi = WALK_XZ.1 as i32;
    let mut best: Option<(usize, i32, i32)> = None;
    for x in lo..=hi {
        for z in lo..=hi {
            let h = Rules::column_height(&s.grid, x, z);
            if Coord::new(x, h as i32, z) == c {
                continue;
            }
            if c.distance_to([x as f64, h, z as f64]) > rules.reach + 1e-9 {
                continue;
            }
            let cost = moves_between(ax, x as f64) + moves_between(az, z as f64);
            if cost <= MAX_PATH_MOVES && best.is_none_or(|b| (cost, x, z) < b) {
                best = Some((cost, x, z));
            }
        }
    }
    best.map(|(_, x, z)| (x, z))
}

/// Moves (with yaw 0: forward is +z, left is +x) from the avatar to column (x, z).
fn walk(s: &WorldState, x: i32, z: i32) -> Vec<BuildAction> {
    let mut out = Vec::new();
    let [ax, _, az] = s.avatar.pos;
    if s.avatar.yaw != 0.0 {
        out.push(BuildAction::SetLook {
            pitch: s.avatar.pitch,
            yaw: 0.0,
        });
    }
    let dx = x as f64 - ax;
    let dz = z as f64 - az;
    let xdir = if dx > 0.0 { MoveDir::Left } else { MoveDir::Right };
    let zdir = if dz > 0.0 { MoveDir::Forward } else { MoveDir::Backward };
    out.extend(std::iter::repeat_n(BuildAction::Move { dir: xdir }, moves_between(ax, x as f64)));
    out.extend(std::iter::repeat_n(BuildAction::Move { dir: zdir }, moves_between(az, z as f64)));
    out
}

/// Plans every edit in order, simulating as it goes. Edits already satisfied
/// by the world (same block present, or nothing to remove) are skipped.
pub fn plan_edits(rules: &Rules, start: &WorldState, edits: &[Edit]) -> Result<Vec<BuildAction>, PlanError> {
    let mut s = start.clone();
    let mut out = Vec::new();
    let run = |s: &mut WorldState, out: &mut Vec<BuildAction>, a: BuildAction| -> Result<(), PlanError> {
        *s = rules.apply_action(s, &a)?;
        out.push(a);
        Ok(())
    };
    for edit in edits {
        let c = edit.coord();
        let mut steps = Vec::new();
        match *edit {
            Edit::Place(_, id) if s.grid.get(c) == Some(id) => continue,
            Edit::Remove(_) if !s.grid.contains(c) => continue,
            Edit::Place(_, id) => {
                if s.grid.contains(c) {
                    steps.push(BuildAction::BreakBlock { coord: c });
                }
                steps.push(BuildAction::PlaceBlock { coord: c, block: id });
            }
            Edit::Remove(_) => steps.push(BuildAction::BreakBlock { coord: c }),
        }
        for step in steps {
            let (x, z) = stand_for(rules, &s, c).ok_or(PlanError::Unreachable(c))?;
            for a in walk(&s, x, z) {
                run(&mut s, &mut out, a)?;
            }
            run(&mut s, &mut out, step)?;
        }
    }
    Ok(out)
}

/// Edits turning `world` into `target`: removals top-down, then placements bottom-up.
pub fn diff_edits(world: &builderkit_core::voxel::BlockGrid, target: &builderkit_core::voxel::BlockGrid) -> Vec<Edit> {
    let key = |c: &Coord| (c.y, c.x, c.z);
    let mut removes: Vec<Coord> = world
        .iter()
        .filter(|(c, _)| !target.contains(*c))
        .map(|(c, _)| c)
        .collect();
    removes.sort_by_key(|c| std::cmp::Reverse(key(c)));
    let mut places: Vec<(Coord, BlockId)> = target
        .iter()
        .filter(|(c, id)| world.get(*c) != Some(*id))
        .collect();
    places.sort_by_key(|(c, _)| key(c));
    removes
        .into_iter()
        .map(Edit::Remove)
        .chain(places.into_iter().map(|(c, id)| Edit::Place(c, id)))
        .collect()
}
