use std::path::Path;

use builderkit_core::dataset::CleanConfig;
use builderkit_core::metrics::{ShiftWindow, DEFAULT_SHIFT_RADIUS};
use builderkit_core::taxonomy::{TaxonomyConfig, DEFAULT_TALL_THRESHOLD};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct CleanSection {
    pub min_words: usize,
    pub repetition_threshold: usize,
}

impl Default for CleanSection {
    fn default() -> Self {
        let c = CleanConfig::default();
        CleanSection {
            min_words: c.min_words,
            repetition_threshold: c.repetition_threshold,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct TaxonomySection {
    pub tall_threshold: i32,
}

impl Default for TaxonomySection {
    fn default() -> Self {
        TaxonomySection {
            tall_threshold: DEFAULT_TALL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ScoreSection {
    pub shift_radius: i32,
}

impl Default for ScoreSection {
    fn default() -> Self {
        ScoreSection {
            shift_radius: DEFAULT_SHIFT_RADIUS,
        }
    }
}

/// Settings for the offline commands. Server keys live at the top level of
/// the same file and are read by the server config loader.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub clean: CleanSection,
    pub taxonomy: TaxonomySection,
    pub score: ScoreSection,
}

fn env_override<T: std::str::FromStr>(
    vars: &[(String, String)],
    key: &str,
    slot: &mut T,
) -> Result<(), String> {
    if let Some((_, v)) = vars.iter().find(|(k, _)| k == key) {
        *slot = v
            .trim()
            .parse()
            .map_err(|_| format!("{key}: cannot parse {v:?}"))?;
    }
    Ok(())
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("reading {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => Settings::default(),
        };
        base.with_env(std::env::vars().collect())
    }

    pub fn with_env(mut self, vars: Vec<(String, String)>) -> Result<Self, String> {
        env_override(&vars, "BUILDERKIT_MIN_WORDS", &mut self.clean.min_words)?;
        env_override(
            &vars,
            "BUILDERKIT_REPETITION_THRESHOLD",
            &mut self.clean.repetition_threshold,
        )?;
        env_override(&vars, "BUILDERKIT_TALL_THRESHOLD", &mut self.taxonomy.tall_threshold)?;
        env_override(&vars, "BUILDERKIT_SHIFT_RADIUS", &mut self.score.shift_radius)?;
        if self.score.shift_radius < 0 {
            return Err("shift_radius must not be negative".into());
        }
        Ok(self)
    }

    pub fn clean_config(&self) -> CleanConfig {
        CleanConfig {
            min_words: self.clean.min_words,
            repetition_threshold: self.clean.repetition_threshold,
        }
    }

    pub fn taxonomy_config(&self) -> TaxonomyConfig {
        TaxonomyConfig {
            tall_threshold: self.taxonomy.tall_threshold,
        }
    }

    pub fn window(&self, no_shift: bool, radius: Option<i32>) -> ShiftWindow {
        if no_shift {
            ShiftWindow::NONE
        } else {
            ShiftWindow {
                radius: radius.unwrap_or(self.score.shift_radius).max(0),
            }
        }
    }
}
