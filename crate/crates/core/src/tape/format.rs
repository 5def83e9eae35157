use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TapeError;

/// Actions with a fixed, known argument count. Others parse with any arity.
const KNOWN_ARITY: &[(&str, usize)] = &[
    ("step_forward", 0),
    ("step_backward", 0),
    ("step_left", 0),
    ("step_right", 0),
    ("step_forward_left", 0),
    ("step_forward_right", 0),
    ("step_backward_left", 0),
    ("step_backward_right", 0),
    ("jump", 0),
    ("select_and_place_block", 4),
    ("break_block", 3),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TapeEventKind {
    SetLook { pitch: f64, yaw: f64 },
    /// Avatar position in world frame.
    PosChange { x: f64, y: f64, z: f64 },
    Action { name: String, args: Vec<f64> },
    /// World-frame cell and the ids before/after (0 = air).
    BlockChange { x: i32, y: i32, z: i32, old: u16, new: u16 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapeEvent {
    pub step: u64,
    #[serde(flatten)]
    pub kind: TapeEventKind,
}

impl TapeEvent {
    pub fn new(step: u64, kind: TapeEventKind) -> Self {
        TapeEvent { step, kind }
    }
}

impl fmt::Display for TapeEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.step)?;
        match &self.kind {
            TapeEventKind::SetLook { pitch, yaw } => write!(f, "set_look ({pitch}, {yaw})"),
            TapeEventKind::PosChange { x, y, z } => write!(f, "pos_change ({x}, {y}, {z})"),
            TapeEventKind::Action { name, args } => {
                write!(f, "action {name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            TapeEventKind::BlockChange { x, y, z, old, new } => {
                write!(f, "block_change ({x}, {y}, {z}, {old}, {new})")
            }
        }
    }
}

/// Ordered log of one builder turn.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tape {
    pub events: Vec<TapeEvent>,
}

impl Tape {
    pub fn new(events: Vec<TapeEvent>) -> Self {
        Tape { events }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// Parses newline-separated tape text.
    pub fn parse_text(text: &str) -> Result<Tape, TapeError> {
        parse_tape(text.lines())
    }

    /// Canonical single-spaced lines.
    pub fn to_lines(&self) -> Vec<String> {
        serialize_tape(self)
    }

    pub fn action_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, TapeEventKind::Action { .. }))
            .count()
    }
}

/// Parses `<step> <kind> <payload>` lines; blank lines are skipped.
/// Line numbers in errors are 1-based positions in the input.
pub fn parse_tape<I, S>(lines: I) -> Result<Tape, TapeError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut events = Vec::new();
    let mut last_step = 0u64;
    for (idx, raw) in lines.into_iter().enumerate() {
        let line = raw.as_ref().trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let err = |reason: String| TapeError::Parse {
            line: lineno,
            reason,
        };
        let event = parse_line(line).map_err(err)?;
        if event.step < last_step {
            return Err(TapeError::Parse {
                line: lineno,
                reason: format!("step {} follows step {last_step}", event.step),
            });
        }
        last_step = event.step;
        events.push(event);
    }
    Ok(Tape { events })
}

pub fn serialize_tape(t: &Tape) -> Vec<String> {
    t.events.iter().map(|e| e.to_string()).collect()
}

fn parse_line(line: &str) -> Result<TapeEvent, String> {
    let (step, rest) = split_word(line).ok_or("missing event kind")?;
    let step: u64 = step
        .parse()
        .map_err(|_| format!("step {step:?} is not a non-negative integer"))?;
    let (kind, payload) = split_word(rest).ok_or("missing event kind")?;
    let kind = match kind {
        "set_look" => {
            let v = parse_tuple(payload, 2)?;
            TapeEventKind::SetLook {
                pitch: v[0],
                yaw: v[1],
            }
        }
        "pos_change" => {
            let v = parse_tuple(payload, 3)?;
            TapeEventKind::PosChange {
                x: v[0],
                y: v[1],
                z: v[2],
            }
        }
        "block_change" => {
            let v = parse_tuple(payload, 5)?;
            let coord = |f: f64| as_int(f).and_then(|i| i32::try_from(i).ok());
            let id = |f: f64| as_int(f).and_then(|i| u16::try_from(i).ok());
            let (Some(x), Some(y), Some(z)) = (coord(v[0]), coord(v[1]), coord(v[2])) else {
                return Err("block_change coordinates must be integers".into());
            };
            let (Some(old), Some(new)) = (id(v[3]), id(v[4])) else {
                return Err("block_change ids must be non-negative integers".into());
            };
            if old == new {
                return Err(format!("block_change old and new ids are both {old}"));
            }
            TapeEventKind::BlockChange { x, y, z, old, new }
        }
        "action" => {
            let mut words = payload.split_whitespace();
            let name = words.next().ok_or("action without a name")?;
            if !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                return Err(format!("bad action name {name:?}"));
            }
            let args = words.map(parse_number).collect::<Result<Vec<_>, _>>()?;
            if let Some((_, n)) = KNOWN_ARITY.iter().find(|(k, _)| *k == name) {
                if args.len() != *n {
                    return Err(format!("{name} takes {n} arguments, got {}", args.len()));
                }
                if args.iter().any(|a| as_int(*a).is_none()) {
                    return Err(format!("{name} arguments must be integers"));
                }
            }
            TapeEventKind::Action {
                name: name.to_string(),
                args,
            }
        }
        other => return Err(format!("unknown event kind {other:?}")),
    };
    Ok(TapeEvent { step, kind })
}

fn split_word(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    if s.is_empty() {
        return None;
    }
    match s.find(char::is_whitespace) {
        Some(i) => Some((&s[..i], s[i..].trim())),
        None => Some((s, "")),
    }
}

fn parse_tuple(payload: &str, arity: usize) -> Result<Vec<f64>, String> {
    let inner = payload
        .strip_prefix('(')
        .and_then(|p| p.strip_suffix(')'))
        .ok_or_else(|| format!("expected a parenthesized tuple, got {payload:?}"))?;
    let values = inner
        .split(',')
        .map(|v| parse_number(v.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != arity {
        return Err(format!(
            "expected {arity} values, got {}",
            values.len()
        ));
    }
    Ok(values)
}

fn parse_number(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{s:?} is not a finite number")),
    }
}

pub(crate) fn as_int(v: f64) -> Option<i64> {
    (v.fract() == 0.0 && v.abs() < 1e15).then_some(v as i64)
}

/// Serialized as an array of lines; a single newline-joined string is also accepted.
impl Serialize for Tape {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_tape(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tape {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Encoded {
            Text(String),
            Lines(Vec<String>),
        }
        let parsed = match Encoded::deserialize(d)? {
            Encoded::Text(t) => Tape::parse_text(&t),
            Encoded::Lines(lines) => parse_tape(&lines),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}
