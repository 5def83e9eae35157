use log::warn;

use super::format::as_int;
use super::{Tape, TapeError, TapeEvent, TapeEventKind};
use crate::voxel::{
    in_bounds, BlockGrid, BlockId, BuildAction, Coord, MoveDir, Rules, WorldState, WORLD_GROUND_Y,
};

/// Position tolerance for strict replay, in world units.
pub const POSITION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayOptions {
    /// Also require each recorded `pos_change` to match the simulated position,
    /// and each `block_change` old id to match the replayed grid.
    pub strict: bool,
}

impl ReplayOptions {
    pub fn strict() -> Self {
        ReplayOptions { strict: true }
    }
}

/// Maps a tape action to a world action. `None` for names outside the vocabulary.
pub fn action_from_tape(name: &str, args: &[f64]) -> Option<BuildAction> {
    if let Some(dir) = MoveDir::from_action_name(name) {
        return Some(BuildAction::Move { dir });
    }
    let ints: Option<Vec<i64>> = args.iter().map(|a| as_int(*a)).collect();
    let ints = ints?;
    let world = |x: i64, y: i64, z: i64| {
        Some(Coord::from_world(
            i32::try_from(x).ok()?,
            i32::try_from(y).ok()?,
            i32::try_from(z).ok()?,
        ))
    };
    match (name, ints.as_slice()) {
        ("jump", []) => Some(BuildAction::Jump),
        ("select_and_place_block", [id, x, y, z]) => Some(BuildAction::PlaceBlock {
            coord: world(*x, *y, *z)?,
            block: BlockId::new(u16::try_from(*id).ok()?)?,
        }),
        ("break_block", [x, y, z]) => Some(BuildAction::BreakBlock {
            coord: world(*x, *y, *z)?,
        }),
        _ => None,
    }
}

/// Tape `action` event for a world action. `SetLook` is recorded as its own kind.
pub fn action_to_tape(action: &BuildAction) -> TapeEventKind {
    let (name, args): (&str, Vec<f64>) = match action {
        BuildAction::Move { dir } => (dir.action_name(), vec![]),
        BuildAction::Jump => ("jump", vec![]),
        BuildAction::SetLook { pitch, yaw } => {
            return TapeEventKind::SetLook {
                pitch: *pitch,
                yaw: *yaw,
            }
        }
        BuildAction::PlaceBlock { coord, block } => {
            let (x, y, z) = coord.to_world();
            (
                "select_and_place_block",
                vec![block.get() as f64, x as f64, y as f64, z as f64],
            )
        }
        BuildAction::BreakBlock { coord } => {
            let (x, y, z) = coord.to_world();
            ("break_block", vec![x as f64, y as f64, z as f64])
        }
    };
    TapeEventKind::Action {
        name: name.to_string(),
        args,
    }
}

#[derive(Debug, Clone, Copy)]
struct PendingBlock {
    step: u64,
    coord: Coord,
    new: Option<BlockId>,
}

/// Incremental replayer. Recorded `set_look`, `pos_change` and `block_change`
/// events are authoritative; simulated block edits are committed only when the
/// matching `block_change` arrives.
#[derive(Debug, Clone)]
pub struct Replayer<'r> {
    rules: &'r Rules,
    options: ReplayOptions,
    state: WorldState,
    pending_block: Option<PendingBlock>,
    pending_pos: Option<(u64, [f64; 3])>,
}

impl<'r> Replayer<'r> {
    pub fn new(initial: WorldState, rules: &'r Rules, options: ReplayOptions) -> Self {
        Replayer {
            rules,
            options,
            state: initial,
            pending_block: None,
            pending_pos: None,
        }
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn into_state(self) -> WorldState {
        self.state
    }

    pub fn feed(&mut self, event: &TapeEvent) -> Result<(), TapeError> {
        let step = event.step;
        let diverge = |reason: String| TapeError::ReplayDivergence { step, reason };
        match &event.kind {
            TapeEventKind::SetLook { pitch, yaw } => {
                self.state.avatar.pitch = pitch.clamp(-90.0, 90.0);
                self.state.avatar.yaw = crate::voxel::normalize_yaw(*yaw);
            }
            TapeEventKind::PosChange { x, y, z } => {
                let recorded = [*x, *y - WORLD_GROUND_Y as f64, *z];
                if let Some((_, simulated)) = self.pending_pos.take() {
                    let off = recorded
                        .iter()
                        .zip(simulated)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if self.options.strict && off > POSITION_TOLERANCE {
                        return Err(diverge(format!(
                            "recorded position {recorded:?} is {off:e} from simulated {simulated:?}"
                        )));
                    }
                }
                self.state.avatar.pos = recorded;
            }
            TapeEventKind::Action { name, args } => {
                if let Some(p) = self.pending_block.take() {
                    return Err(TapeError::ReplayDivergence {
                        step: p.step,
                        reason: format!("no block_change recorded for the edit at {}", p.coord),
                    });
                }
                self.pending_pos = None;
                let Some(action) = action_from_tape(name, args) else {
                    warn!("step {step}: unknown action {name:?} replayed as a no-op");
                    return Ok(());
                };
                match self.rules.apply_action(&self.state, &action) {
                    Ok(next) => match action {
                        BuildAction::PlaceBlock { coord, .. } | BuildAction::BreakBlock { coord } => {
                            self.pending_block = Some(PendingBlock {
                                step,
                                coord,
                                new: next.grid.get(coord),
                            });
                            self.state.avatar = next.avatar;
                        }
                        _ => {
                            self.pending_pos = Some((step, next.avatar.pos));
                            self.state.avatar = next.avatar;
                        }
                    },
                    Err(e) => warn!("step {step}: {name} not reproducible in simulation: {e}"),
                }
            }
            TapeEventKind::BlockChange { x, y, z, old, new } => {
                let coord = Coord::from_world(*x, *y, *z);
                if !in_bounds(coord) {
                    return Err(diverge(format!(
                        "block_change at world ({x}, {y}, {z}) is outside the build region"
                    )));
                }
                let new_id = BlockId::new(*new);
                if let Some(p) = self.pending_block.take() {
                    if p.coord != coord || p.new != new_id {
                        return Err(diverge(format!(
                            "simulated edit at {} -> {} but recorded {} -> {}",
                            p.coord,
                            p.new.map_or(0, BlockId::get),
                            coord,
                            new
                        )));
                    }
                }
                let current = self.state.grid.get(coord).map_or(0, BlockId::get);
                if self.options.strict && current != *old {
                    return Err(diverge(format!(
                        "block_change expects id {old} at {coord} but the grid holds {current}"
                    )));
                }
                match new_id {
                    Some(b) => {
                        let _ = self.state.grid.set(coord, b);
                    }
                    None => {
                        self.state.grid.remove(coord);
                    }
                }
            }
        }
        Ok(())
    }

    /// Final state. A trailing edit without a recorded `block_change` is not committed.
    pub fn finish(self) -> WorldState {
        self.state
    }
}

pub fn replay(
    tape: &Tape,
    initial: WorldState,
    rules: &Rules,
    options: ReplayOptions,
) -> Result<WorldState, TapeError> {
    let mut r = Replayer::new(initial, rules, options);
    for e in &tape.events {
        r.feed(e)?;
    }
    Ok(r.finish())
}

/// Applies actions through the world rules and writes a self-consistent tape:
/// each action followed by its recorded effects.
#[derive(Debug, Clone)]
pub struct TapeRecorder<'r> {
    rules: &'r Rules,
    state: WorldState,
    events: Vec<TapeEvent>,
    step: u64,
}

impl<'r> TapeRecorder<'r> {
    pub fn new(initial: WorldState, rules: &'r Rules) -> Self {
        TapeRecorder {
            rules,
            state: initial,
            events: Vec::new(),
            step: 0,
        }
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    fn push(&mut self, kind: TapeEventKind) {
        self.events.push(TapeEvent::new(self.step, kind));
        self.step += 1;
    }

    pub fn record(&mut self, action: &BuildAction) -> Result<(), crate::voxel::ActionError> {
        let next = self.rules.apply_action(&self.state, action)?;
        self.push(action_to_tape(action));
        if let BuildAction::PlaceBlock { coord, .. } | BuildAction::BreakBlock { coord } = action {
            let (x, y, z) = coord.to_world();
            let old = self.state.grid.get(*coord).map_or(0, BlockId::get);
            let new = next.grid.get(*coord).map_or(0, BlockId::get);
            self.push(TapeEventKind::BlockChange { x, y, z, old, new });
        }
        let moved = next.avatar.pos != self.state.avatar.pos;
        let is_move = matches!(action, BuildAction::Move { .. } | BuildAction::Jump);
        if moved || is_move {
            let [x, y, z] = next.avatar.pos;
            self.push(TapeEventKind::PosChange {
                x,
                y: y + WORLD_GROUND_Y as f64,
                z,
            });
        }
        self.state = next;
        Ok(())
    }

    pub fn finish(self) -> (Tape, WorldState) {
        (Tape::new(self.events), self.state)
    }
}

/// Outcome of checking a recorded ending state against a replay.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub replayed: WorldState,
    /// Cells where the replayed grid and the recorded ending state disagree.
    pub mismatches: Vec<Coord>,
}

impl Verification {
    pub fn verified(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn verify_ending_state(
    tape: &Tape,
    start: WorldState,
    ending: &BlockGrid,
    rules: &Rules,
) -> Result<Verification, TapeError> {
    let replayed = replay(tape, start, rules, ReplayOptions::default())?;
    let mismatches = replayed.grid.mismatches(ending);
    Ok(Verification {
        replayed,
        mismatches,
    })
}
