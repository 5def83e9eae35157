use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::DatasetError;
use crate::tape::Tape;
use crate::voxel::{Avatar, BlockGrid, WORLD_GROUND_Y};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    North,
    South,
    East,
    West,
    Top,
}

impl Perspective {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "north" => Perspective::North,
            "south" => Perspective::South,
            "east" => Perspective::East,
            "west" => Perspective::West,
            "top" => Perspective::Top,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Perspective::North => "north",
            Perspective::South => "south",
            Perspective::East => "east",
            Perspective::West => "west",
            Perspective::Top => "top",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Architect,
    Builder,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Architect => "architect",
            Role::Builder => "builder",
        })
    }
}

/// Collection metadata carried next to the schema fields. All optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordMeta {
    pub annotator_id: Option<String>,
    /// Unix seconds.
    pub timestamp: Option<f64>,
    pub split: Option<Split>,
    pub structure_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectRecord {
    pub game_id: i64,
    pub step_id: i64,
    pub perspective: Option<Perspective>,
    pub command: String,
    /// `Some(false)` marks the instruction as ambiguous ("not clear").
    pub is_clear: Option<bool>,
    pub clarification_question: Option<String>,
    pub meta: RecordMeta,
}

impl ArchitectRecord {
    pub fn is_ambiguous(&self) -> bool {
        self.is_clear == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuilderRecord {
    pub game_id: i64,
    pub step_id: i64,
    /// As recorded, in world frame; see [`BuilderRecord::build_frame_avatar`].
    pub avatar: Avatar,
    pub world_ending_state: BlockGrid,
    pub tape: Tape,
    pub clarification_question: Option<String>,
    pub meta: RecordMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Architect(ArchitectRecord),
    Builder(BuilderRecord),
}

impl Record {
    pub fn game_id(&self) -> i64 {
        match self {
            Record::Architect(r) => r.game_id,
            Record::Builder(r) => r.game_id,
        }
    }

    pub fn meta(&self) -> &RecordMeta {
        match self {
            Record::Architect(r) => &r.meta,
            Record::Builder(r) => &r.meta,
        }
    }

    pub fn role(&self) -> Role {
        match self {
            Record::Architect(_) => Role::Architect,
            Record::Builder(_) => Role::Builder,
        }
    }

    /// The clarifying question this record carries, if any.
    pub fn question(&self) -> Option<&str> {
        match self {
            Record::Architect(r) => r.clarification_question.as_deref(),
            Record::Builder(r) => r.clarification_question.as_deref(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Record::Architect(r) => r.to_json(),
            Record::Builder(r) => r.to_json(),
        }
    }

    /// Picks the role from the fields present: `command` means architect.
    pub fn from_json(index: usize, v: &Value) -> Result<Record, SchemaIssue> {
        if v.get("command").is_some() {
            ArchitectRecord::from_json(index, v).map(Record::Architect)
        } else {
            BuilderRecord::from_json(index, v).map(Record::Builder)
        }
    }
}

/// One malformed entry: its position in the file, the offending field and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaIssue {
    pub index: usize,
    pub field: String,
    pub reason: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {}: field {:?}: {}", self.index, self.field, self.reason)
    }
}

struct Fields<'a> {
    index: usize,
    obj: &'a Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn new(index: usize, v: &'a Value) -> Result<Self, SchemaIssue> {
        match v.as_object() {
            Some(obj) => Ok(Fields { index, obj }),
            None => Err(SchemaIssue {
                index,
                field: "".into(),
                reason: "record is not a JSON object".into(),
            }),
        }
    }

    fn issue(&self, field: &str, reason: impl Into<String>) -> SchemaIssue {
        SchemaIssue {
            index: self.index,
            field: field.into(),
            reason: reason.into(),
        }
    }

    fn required(&self, field: &str) -> Result<&'a Value, SchemaIssue> {
        self.obj
            .get(field)
            .ok_or_else(|| self.issue(field, "missing required field"))
    }

    fn step_ids(&self) -> Result<(i64, i64), SchemaIssue> {
        let game_id = self
            .required("gameId")?
            .as_i64()
            .ok_or_else(|| self.issue("gameId", "expected an integer"))?;
        let step_id = self
            .required("stepId")?
            .as_i64()
            .ok_or_else(|| self.issue("stepId", "expected an integer"))?;
        if step_id < 0 {
            return Err(self.issue("stepId", "must be non-negative"));
        }
        Ok((game_id, step_id))
    }

    /// Optional text where both JSON null and the string "null" mean absent.
    fn optional_text(&self, field: &str) -> Result<Option<String>, SchemaIssue> {
        match self.obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) if s == "null" || s.trim().is_empty() => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.issue(field, "expected a string or null")),
        }
    }

    fn meta(&self) -> Result<RecordMeta, SchemaIssue> {
        let annotator_id = match self.obj.get("annotatorId") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            Some(_) => return Err(self.issue("annotatorId", "expected a string")),
        };
        let timestamp = match self.obj.get("timestamp") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_f64()
                    .ok_or_else(|| self.issue("timestamp", "expected unix seconds"))?,
            ),
        };
        let split = match self.obj.get("split") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                serde_json::from_value(v.clone())
                    .map_err(|_| self.issue("split", "expected \"train\" or \"test\""))?,
            ),
        };
        let structure_id = match self.obj.get("structureId") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            Some(_) => return Err(self.issue("structureId", "expected a string")),
        };
        Ok(RecordMeta {
            annotator_id,
            timestamp,
            split,
            structure_id,
        })
    }
}

fn floats(v: &Value, n: usize) -> Option<Vec<f64>> {
    let arr = v.as_array()?;
    if arr.len() != n {
        return None;
    }
    arr.iter().map(Value::as_f64).collect()
}

fn meta_json(meta: &RecordMeta, obj: &mut Map<String, Value>) {
    if let Some(a) = &meta.annotator_id {
        obj.insert("annotatorId".into(), json!(a));
    }
    if let Some(t) = meta.timestamp {
        obj.insert("timestamp".into(), json!(t));
    }
    if let Some(s) = meta.split {
        obj.insert("split".into(), json!(s));
    }
    if let Some(s) = &meta.structure_id {
        obj.insert("structureId".into(), json!(s));
    }
}

impl ArchitectRecord {
    pub fn from_json(index: usize, v: &Value) -> Result<Self, SchemaIssue> {
        let f = Fields::new(index, v)?;
        let (game_id, step_id) = f.step_ids()?;
        let command = f
            .required("command")?
            .as_str()
            .ok_or_else(|| f.issue("command", "expected a string"))?
            .to_string();
        let perspective = match f.obj.get("avatarInfo").and_then(|a| a.get("perspective")) {
            None | Some(Value::Null) => None,
            Some(p) => Some(
                p.as_str()
                    .and_then(Perspective::parse)
                    .ok_or_else(|| f.issue("avatarInfo.perspective", "unknown perspective"))?,
            ),
        };
        let is_clear = match f.obj.get("isClear") {
            None | Some(Value::Null) => None,
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => return Err(f.issue("isClear", "expected a boolean")),
        };
        Ok(ArchitectRecord {
            game_id,
            step_id,
            perspective,
            command,
            is_clear,
            clarification_question: f.optional_text("clarification_question")?,
            meta: f.meta()?,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("gameId".into(), json!(self.game_id));
        obj.insert("stepId".into(), json!(self.step_id));
        let mut avatar = Map::new();
        if let Some(p) = self.perspective {
            avatar.insert("perspective".into(), json!(p.as_str()));
        }
        obj.insert("avatarInfo".into(), Value::Object(avatar));
        obj.insert("command".into(), json!(self.command));
        if let Some(c) = self.is_clear {
            obj.insert("isClear".into(), json!(c));
        }
        if let Some(q) = &self.clarification_question {
            obj.insert("clarification_question".into(), json!(q));
        }
        meta_json(&self.meta, &mut obj);
        Value::Object(obj)
    }
}

impl BuilderRecord {
    pub fn build_frame_avatar(&self) -> Avatar {
        let [x, y, z] = self.avatar.pos;
        Avatar {
            pos: [x, y - WORLD_GROUND_Y as f64, z],
            ..self.avatar
        }
    }

    pub fn from_json(index: usize, v: &Value) -> Result<Self, SchemaIssue> {
        let f = Fields::new(index, v)?;
        let (game_id, step_id) = f.step_ids()?;
        let info = f.required("avatarInfo")?;
        let pos = info
            .get("pos")
            .and_then(|p| floats(p, 3))
            .ok_or_else(|| f.issue("avatarInfo.pos", "expected [x, y, z]"))?;
        let look = info
            .get("look")
            .and_then(|p| floats(p, 2))
            .ok_or_else(|| f.issue("avatarInfo.look", "expected [pitch, yaw]"))?;
        let avatar = Avatar {
            pos: [pos[0], pos[1], pos[2]],
            pitch: look[0],
            yaw: look[1],
        };
        let blocks = f
            .required("worldEndingState")?
            .get("blocks")
            .ok_or_else(|| f.issue("worldEndingState.blocks", "missing required field"))?;
        let blocks: Vec<[i32; 4]> = serde_json::from_value(blocks.clone()).map_err(|_| {
            f.issue(
                "worldEndingState.blocks",
                "expected an array of [x, y, z, blockId]",
            )
        })?;
        let world_ending_state = BlockGrid::from_world_blocks(&blocks)
            .map_err(|e| f.issue("worldEndingState.blocks", e.to_string()))?;
        let tape: Tape = serde_json::from_value(f.required("tape")?.clone())
            .map_err(|e| f.issue("tape", e.to_string()))?;
        Ok(BuilderRecord {
            game_id,
            step_id,
            avatar,
            world_ending_state,
            tape,
            clarification_question: f.optional_text("clarification_question")?,
            meta: f.meta()?,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("gameId".into(), json!(self.game_id));
        obj.insert("stepId".into(), json!(self.step_id));
        obj.insert(
            "avatarInfo".into(),
            json!({
                "pos": self.avatar.pos,
                "look": [self.avatar.pitch, self.avatar.yaw],
            }),
        );
        obj.insert(
            "worldEndingState".into(),
            json!({ "blocks": self.world_ending_state }),
        );
        obj.insert("tape".into(), json!(self.tape));
        obj.insert(
            "clarification_question".into(),
            self.clarification_question
                .as_ref()
                .map_or(Value::Null, |q| json!(q)),
        );
        meta_json(&self.meta, &mut obj);
        Value::Object(obj)
    }
}

/// Which record schema a file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleFilter {
    Architect,
    Builder,
    /// Decide per entry from the fields present.
    Auto,
}

/// Splits file contents into JSON entries: a top-level array, a single object,
/// or one object per line.
fn entries(text: &str) -> Result<Vec<Value>, DatasetError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    match serde_json::from_str::<Value>(trimmed) {
        Ok(Value::Array(items)) => Ok(items),
        Ok(v @ Value::Object(_)) => Ok(vec![v]),
        Ok(_) => Err(DatasetError::Format(
            "expected a JSON array, object or JSON lines".into(),
        )),
        Err(whole) => trimmed
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| {
                    DatasetError::Format(format!("line {}: {e} (whole-file parse: {whole})", i + 1))
                })
            })
            .collect(),
    }
}

pub fn parse_records(text: &str, role: RoleFilter) -> Result<Vec<Record>, DatasetError> {
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (index, v) in entries(text)?.iter().enumerate() {
        let parsed = match role {
            RoleFilter::Architect => ArchitectRecord::from_json(index, v).map(Record::Architect),
            RoleFilter::Builder => BuilderRecord::from_json(index, v).map(Record::Builder),
            RoleFilter::Auto => Record::from_json(index, v),
        };
        match parsed {
            Ok(r) => records.push(r),
            Err(issue) => issues.push(issue),
        }
    }
    if issues.is_empty() {
        Ok(records)
    } else {
        Err(DatasetError::Schema(issues))
    }
}

/// Loads every record in `path`. Any malformed entry fails the load and is
/// reported with its index; nothing is dropped silently.
pub fn load_records(path: &Path, role: RoleFilter) -> Result<Vec<Record>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_records(&text, role)
}

pub fn records_to_json(records: &[Record]) -> Value {
    Value::Array(records.iter().map(Record::to_json).collect())
}
