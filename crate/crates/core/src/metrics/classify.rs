use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clarity {
    Clear,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryOutcome {
    pub predicted: Clarity,
    pub actual: Clarity,
}

fn class_f1(outcomes: &[BinaryOutcome], class: Clarity) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for o in outcomes {
        match (o.predicted == class, o.actual == class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        0.0
    } else {
        (2 * tp) as f64 / den as f64
    }
}

/// Unweighted mean of the clear and ambiguous F1 scores. A class that never
/// occurs in predictions or labels scores 0.
pub fn macro_f1(outcomes: &[BinaryOutcome]) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok((class_f1(outcomes, Clarity::Clear) + class_f1(outcomes, Clarity::Ambiguous)) / 2.0)
}
