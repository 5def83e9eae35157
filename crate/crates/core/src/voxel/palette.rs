use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::BlockId;

const DEFAULT_PALETTE: &str = include_str!("../../config/palette.toml");

#[derive(Debug, Error)]
pub enum PaletteError {
    #[error("reading palette file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing palette file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("color {0:?} maps to block id 0")]
    ZeroId(String),
    #[error("block id {0} is assigned to more than one color")]
    DuplicateId(u16),
}

#[derive(Deserialize)]
struct PaletteFile {
    colors: BTreeMap<String, u16>,
}

/// Color name ↔ block id table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    by_name: BTreeMap<String, BlockId>,
}

impl Palette {
    pub fn from_toml(text: &str) -> Result<Self, PaletteError> {
        let file: PaletteFile = toml::from_str(text)?;
        let mut by_name = BTreeMap::new();
        let mut seen = BTreeMap::new();
        for (name, id) in file.colors {
            let block = BlockId::new(id).ok_or_else(|| PaletteError::ZeroId(name.clone()))?;
            if seen.insert(id, ()).is_some() {
                return Err(PaletteError::DuplicateId(id));
            }
            by_name.insert(name.to_lowercase(), block);
        }
        Ok(Palette { by_name })
    }

    pub fn load(path: &Path) -> Result<Self, PaletteError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.by_name.values().any(|b| *b == id)
    }

    pub fn id_of(&self, color: &str) -> Option<BlockId> {
        self.by_name.get(&color.to_lowercase()).copied()
    }

    pub fn name_of(&self, id: BlockId) -> Option<&str> {
        self.by_name
            .iter()
            .find(|(_, b)| **b == id)
            .map(|(n, _)| n.as_str())
    }

    pub fn colors(&self) -> impl Iterator<Item = (&str, BlockId)> {
        self.by_name.iter().map(|(n, b)| (n.as_str(), *b))
    }

    pub fn ids(&self) -> Vec<BlockId> {
        let mut ids: Vec<_> = self.by_name.values().copied().collect();
        ids.sort();
        ids
    }
}

impl Default for Palette {
    fn default() -> Self {
        Palette::from_toml(DEFAULT_PALETTE).expect("bundled palette is valid")
    }
}
