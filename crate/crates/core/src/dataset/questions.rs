use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, DatasetError};

const DEFAULT_CATEGORIES: &str = include_str!("../../config/question_categories.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CqCategory {
    Color,
    DirectionOrientation,
    NumberOfBlocks,
    IdentifyBlocks,
    Other,
}

impl CqCategory {
    pub const ALL: [CqCategory; 5] = [
        CqCategory::Color,
        CqCategory::DirectionOrientation,
        CqCategory::NumberOfBlocks,
        CqCategory::IdentifyBlocks,
        CqCategory::Other,
    ];
}

#[derive(Debug, Deserialize)]
struct CategoryFile {
    color: Vec<String>,
    number: Vec<String>,
    direction: Vec<String>,
    identify: Vec<String>,
}

/// Rule-based clarifying-question tagger driven by keyword phrase lists.
#[derive(Debug, Clone)]
pub struct QuestionCategorizer {
    /// In match order.
    families: Vec<(CqCategory, Vec<Vec<String>>)>,
}

impl QuestionCategorizer {
    pub fn from_toml(text: &str) -> Result<Self, DatasetError> {
        let file: CategoryFile =
            toml::from_str(text).map_err(|e| DatasetError::Format(e.to_string()))?;
        let phrases = |list: Vec<String>| -> Vec<Vec<String>> {
            list.iter()
                .map(|p| tokenize(p).map(str::to_lowercase).collect::<Vec<_>>())
                .filter(|p| !p.is_empty())
                .collect()
        };
        Ok(QuestionCategorizer {
            families: vec![
                (CqCategory::Color, phrases(file.color)),
                (CqCategory::NumberOfBlocks, phrases(file.number)),
                (CqCategory::DirectionOrientation, phrases(file.direction)),
                (CqCategory::IdentifyBlocks, phrases(file.identify)),
            ],
        })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn categorize(&self, question: &str) -> CqCategory {
        let words: Vec<String> = tokenize(question).map(str::to_lowercase).collect();
        for (category, phrases) in &self.families {
            let hit = phrases
                .iter()
                .any(|p| words.windows(p.len()).any(|w| w == p.as_slice()));
            if hit {
                return *category;
            }
        }
        CqCategory::Other
    }
}

impl Default for QuestionCategorizer {
    fn default() -> Self {
        QuestionCategorizer::from_toml(DEFAULT_CATEGORIES).expect("bundled categories are valid")
    }
}

/// Tags `question` with the bundled keyword lists.
pub fn categorize_question(question: &str) -> CqCategory {
    QuestionCategorizer::default().categorize(question)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_example_questions() {
        let c = QuestionCategorizer::default();
        assert_eq!(c.categorize("Which color blocks?"), CqCategory::Color);
        assert_eq!(
            c.categorize("Which two purple blocks need to be destroyed?"),
            CqCategory::IdentifyBlocks
        );
        assert_eq!(
            c.categorize(
                "Which three of the four stacked red blocks on the east side need to be destroyed?"
            ),
            CqCategory::IdentifyBlocks
        );
        assert_eq!(
            c.categorize("Which side I need to make the rectangle is not clear"),
            CqCategory::DirectionOrientation
        );
        assert_eq!(
            c.categorize("Which one of the rightmost blocks should be removed?"),
            CqCategory::IdentifyBlocks
        );
        assert_eq!(
            c.categorize("Where would you like to place the purple and green blocks exactly?"),
            CqCategory::DirectionOrientation
        );
        assert_eq!(c.categorize("How many blocks tall?"), CqCategory::NumberOfBlocks);
        assert_eq!(c.categorize("hmm ok"), CqCategory::Other);
    }

    #[test]
    fn earlier_family_wins() {
        // Both a color and a count question; color is checked first.
        let c = QuestionCategorizer::default();
        assert_eq!(
            c.categorize("What color, and how many?"),
            CqCategory::Color
        );
    }

    #[test]
    fn custom_lists() {
        let c = QuestionCategorizer::from_toml(
            "color = []\nnumber = []\ndirection = [\"up\"]\nidentify = []\n",
        )
        .unwrap();
        assert_eq!(c.categorize("Up?"), CqCategory::DirectionOrientation);
        assert_eq!(c.categorize("Which color?"), CqCategory::Other);
    }
}
