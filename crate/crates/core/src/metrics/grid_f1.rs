use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::voxel::{diff, BlockGrid, GridDelta};

pub const DEFAULT_SHIFT_RADIUS: i32 = 10;

/// Horizontal shift `(dx, dz)` applied to the builder's modifications.
pub type Shift = (i32, i32);

/// Square window of horizontal shifts searched by [`argmax_intersection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftWindow {
    pub radius: i32,
}

impl ShiftWindow {
    /// Only the identity shift.
    pub const NONE: ShiftWindow = ShiftWindow { radius: 0 };

    pub fn contains(self, (dx, dz): Shift) -> bool {
        dx.abs() <= self.radius && dz.abs() <= self.radius
    }
}

impl Default for ShiftWindow {
    fn default() -> Self {
        ShiftWindow {
            radius: DEFAULT_SHIFT_RADIUS,
        }
    }
}

/// Orders candidate shifts: more matches first, then smaller |dx|+|dz|, then (dx, dz).
fn better(a: (usize, Shift), b: (usize, Shift)) -> bool {
    let key = |(n, (dx, dz)): (usize, Shift)| (std::cmp::Reverse(n), dx.abs() + dz.abs(), dx, dz);
    key(a) < key(b)
}

/// Best horizontal shift of `m` onto `t` and the number of entries that then
/// coincide in position, tag and block id.
///
/// Every matching pair (m entry, t entry) votes for exactly one shift, and a
/// shift maps each m cell to at most one t cell, so the vote count of a shift
/// is its intersection size.
pub fn argmax_intersection(m: &GridDelta, t: &GridDelta, window: ShiftWindow) -> (Shift, usize) {
    let mut by_layer: BTreeMap<_, Vec<(i32, i32)>> = BTreeMap::new();
    for (c, change) in t.iter() {
        by_layer.entry((c.y, change)).or_default().push((c.x, c.z));
    }
    let mut votes: BTreeMap<Shift, usize> = BTreeMap::new();
    for (c, change) in m.iter() {
        for &(tx, tz) in by_layer.get(&(c.y, change)).into_iter().flatten() {
            let shift = (tx - c.x, tz - c.z);
            if window.contains(shift) {
                *votes.entry(shift).or_default() += 1;
            }
        }
    }
    let mut best = (0, (0, 0));
    for (shift, n) in votes {
        if better((n, shift), best) {
            best = (n, shift);
        }
    }
    (best.1, best.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub intersection: usize,
    pub best_shift: Shift,
    /// Builder environment steps taken in the episode.
    pub episode_length: u64,
    /// |T|, the number of cells the task needed modified.
    pub target_size: usize,
    /// |M|, the number of cells the builder modified.
    pub modified: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores a builder's modifications `m` against target diff `t`.
/// P = I/|T| and R = I/|M|; F1 is 0 whenever either side is empty.
pub fn grid_f1_delta(m: &GridDelta, t: &GridDelta, window: ShiftWindow) -> ScoreReport {
    let (best_shift, intersection) = argmax_intersection(m, t, window);
    let precision = ratio(intersection, t.len());
    let recall = ratio(intersection, m.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ScoreReport {
        f1,
        precision,
        recall,
        intersection,
        best_shift,
        episode_length: 0,
        target_size: t.len(),
        modified: m.len(),
    }
}

/// Scores final grid `g` against start `g0` and target diff `t`.
pub fn grid_f1(g: &BlockGrid, g0: &BlockGrid, t: &GridDelta, window: ShiftWindow) -> ScoreReport {
    grid_f1_delta(&diff(g0, g), t, window)
}

/// Σ f1ᵢ·wᵢ / Σ wᵢ with wᵢ = |Tᵢ|.
pub fn weighted_average(items: &[(f64, usize)]) -> Result<f64, MetricsError> {
    if items.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if let Some(i) = items.iter().position(|(_, w)| *w == 0) {
        return Err(MetricsError::BadWeight(i));
    }
    let total: usize = items.iter().map(|(_, w)| w).sum();
    let sum: f64 = items.iter().map(|(v, w)| v * *w as f64).sum();
    Ok(sum / total as f64)
}

/// One leaderboard line: F1, precision and recall weighted by target size,
/// episode length averaged over episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LeaderboardRow {
    pub agent: String,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub episode_length: f64,
    pub submissions: u32,
}

pub fn leaderboard_row(
    agent: &str,
    reports: &[ScoreReport],
    submissions: u32,
) -> Result<LeaderboardRow, MetricsError> {
    let weighted = |f: fn(&ScoreReport) -> f64| {
        weighted_average(
            &reports
                .iter()
                .map(|r| (f(r), r.target_size))
                .collect::<Vec<_>>(),
        )
    };
    Ok(LeaderboardRow {
        agent: agent.to_string(),
        f1: weighted(|r| r.f1)?,
        precision: weighted(|r| r.precision)?,
        recall: weighted(|r| r.recall)?,
        episode_length: reports.iter().map(|r| r.episode_length as f64).sum::<f64>()
            / reports.len() as f64,
        submissions,
    })
}
