//! File formats shared by several commands. Grids are lists of world-frame
//! `[x, y, z, blockId]` blocks, either bare or under a `blocks` key.

use std::path::Path;

use builderkit_core::voxel::BlockGrid;
use serde_json::Value;

use crate::Failure;

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn is_block_list(v: &Value) -> bool {
    match v {
        Value::Array(items) => items
            .first()
            .is_none_or(|b| b.as_array().is_some_and(|b| b.first().is_some_and(Value::is_number))),
        _ => false,
    }
}

/// The block list inside `v`, if `v` is shaped like a single grid.
fn grid_value(v: &Value) -> Option<&Value> {
    if is_block_list(v) {
        return Some(v);
    }
    let obj = v.as_object()?;
    obj.get("blocks")
        .or_else(|| obj.get("worldEndingState").and_then(|w| w.get("blocks")))
        .filter(|b| is_block_list(b))
}

pub fn grid_from_value(v: &Value) -> Result<BlockGrid, String> {
    let blocks = grid_value(v).ok_or("expected a list of [x, y, z, blockId] blocks")?;
    serde_json::from_value(blocks.clone()).map_err(|e| e.to_string())
}

pub fn read_grid(path: &Path) -> Result<BlockGrid, Failure> {
    grid_from_value(&read_json(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Named structures from a file holding one grid, a list of grids (optionally
/// as objects with `id` or `name`), or an object mapping names to grids.
pub fn read_structures(path: &Path) -> Result<Vec<(String, BlockGrid)>, Failure> {
    let v = read_json(path)?;
    let bad = |what: &str, e: String| Failure::usage(format!("{}: {what}: {e}", path.display()));
    if grid_value(&v).is_some() {
        let name = path
            .file_stem()
            .map_or_else(|| "structure".into(), |s| s.to_string_lossy().into_owned());
        return Ok(vec![(name, grid_from_value(&v).map_err(|e| bad("structure", e))?)]);
    }
    match &v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let name = ["id", "name"]
                    .iter()
                    .find_map(|k| item.get(*k))
                    .map_or_else(
                        || format!("#{i}"),
                        |n| n.as_str().map_or_else(|| n.to_string(), str::to_string),
                    );
                let grid = grid_from_value(item).map_err(|e| bad(&name, e))?;
                Ok((name, grid))
            })
            .collect(),
        Value::Object(map) => map
            .iter()
            .map(|(name, item)| Ok((name.clone(), grid_from_value(item).map_err(|e| bad(name, e))?)))
            .collect(),
        _ => Err(bad("structures", "expected a grid, a list or an object".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn grid_shapes() {
        let bare = json!([[0, 63, 0, 57]]);
        let wrapped = json!({"blocks": [[0, 63, 0, 57]]});
        let ending = json!({"worldEndingState": {"blocks": [[0, 63, 0, 57]]}});
        let a = grid_from_value(&bare).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(grid_from_value(&wrapped).unwrap(), a);
        assert_eq!(grid_from_value(&ending).unwrap(), a);
        assert!(grid_from_value(&json!([])).unwrap().is_empty());
        assert!(grid_from_value(&json!([[[0, 63, 0, 57]]])).is_err());
        assert!(grid_from_value(&json!([[0, 63, 0, 0]])).is_err());
    }

    #[test]
    fn structure_collections() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, v: Value| {
            let p = dir.path().join(name);
            std::fs::write(&p, v.to_string()).unwrap();
            p
        };
        let one = read_structures(&write("tower.json", json!([[0, 63, 0, 57]]))).unwrap();
        assert_eq!(one[0].0, "tower");
        let list = read_structures(&write(
            "list.json",
            json!([{"id": "a", "blocks": [[0, 63, 0, 57]]}, [[1, 63, 1, 50], [1, 64, 1, 50]]]),
        ))
        .unwrap();
        assert_eq!(list[0].0, "a");
        assert_eq!(list[1].0, "#1");
        assert_eq!(list[1].1.len(), 2);
        let map = read_structures(&write("map.json", json!({"b": [[0, 63, 0, 57]]}))).unwrap();
        assert_eq!(map[0].0, "b");
    }
}
