use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Winner {
    AgentA,
    AgentB,
}

/// Verdict of one blinded comparison between two agents on the same task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GameOutcome {
    pub hit_id: String,
    pub agent_a: String,
    pub agent_b: String,
    pub task_id: String,
    pub winner: Winner,
}

impl GameOutcome {
    pub fn winner_id(&self) -> &str {
        match self.winner {
            Winner::AgentA => &self.agent_a,
            Winner::AgentB => &self.agent_b,
        }
    }

    pub fn loser_id(&self) -> &str {
        match self.winner {
            Winner::AgentA => &self.agent_b,
            Winner::AgentB => &self.agent_a,
        }
    }
}

/// `100·num/den` to two decimals, rounding the exact value half to even.
pub fn format_percent(num: usize, den: usize) -> String {
    if den == 0 {
        return "0.00".into();
    }
    let scaled = num as u128 * 10_000;
    let den = den as u128;
    let (mut q, r) = (scaled / den, scaled % den);
    if 2 * r > den || (2 * r == den && q % 2 == 1) {
        q += 1;
    }
    format!("{}.{:02}", q / 100, q % 100)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentTally {
    pub agent: String,
    pub games: usize,
    pub wins: usize,
    pub losses: usize,
    /// Games played against each opponent.
    pub games_against: BTreeMap<String, usize>,
    pub wins_against: BTreeMap<String, usize>,
    pub losses_against: BTreeMap<String, usize>,
}

impl AgentTally {
    pub fn win_percent(&self) -> String {
        format_percent(self.wins, self.games)
    }

    pub fn loss_percent(&self) -> String {
        format_percent(self.losses, self.games)
    }

    /// `(opponent, count, percent of games against that opponent)`.
    pub fn against<'a>(
        &'a self,
        map: &'a BTreeMap<String, usize>,
    ) -> impl Iterator<Item = (&'a str, usize, String)> + 'a {
        map.iter().map(move |(opp, n)| {
            let total = self.games_against.get(opp).copied().unwrap_or(0);
            (opp.as_str(), *n, format_percent(*n, total))
        })
    }
}

/// Per-agent win/loss table, sorted by agent id.
pub fn tally_human_eval(outcomes: &[GameOutcome]) -> Vec<AgentTally> {
    let mut table: BTreeMap<String, AgentTally> = BTreeMap::new();
    for o in outcomes {
        let (w, l) = (o.winner_id().to_string(), o.loser_id().to_string());
        for (me, opp, won) in [(&w, &l, true), (&l, &w, false)] {
            let t = table.entry(me.clone()).or_insert_with(|| AgentTally {
                agent: me.clone(),
                ..AgentTally::default()
            });
            t.games += 1;
            *t.games_against.entry(opp.clone()).or_default() += 1;
            if won {
                t.wins += 1;
                *t.wins_against.entry(opp.clone()).or_default() += 1;
            } else {
                t.losses += 1;
                *t.losses_against.entry(opp.clone()).or_default() += 1;
            }
        }
    }
    table.into_values().collect()
}

/// Plain-text table: totals with percentages, then per-opponent wins and losses.
pub fn render_tally(rows: &[AgentTally]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>5}  {:<14} {:<14} {:<28} {}",
        "Agent", "Games", "Wins", "Losses", "Wins Against", "Losses Against"
    );
    for t in rows {
        let list = |map| {
            t.against(map)
                .map(|(o, n, p)| format!("{o}: {n} ({p}%)"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(
            out,
            "{:<8} {:>5}  {:<14} {:<14} {:<28} {}",
            t.agent,
            t.games,
            format!("{} ({}%)", t.wins, t.win_percent()),
            format!("{} ({}%)", t.losses, t.loss_percent()),
            list(&t.wins_against),
            list(&t.losses_against),
        );
    }
    out
}
