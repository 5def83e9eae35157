use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use builderkit_core::dataset::{build_report, clean, load_records, records_to_json, DatasetError, Record, RoleFilter};
use builderkit_core::metrics::{diff, grid_f1, render_tally, tally_human_eval};
use builderkit_core::tape::{verify_builder_record, TapeError};
use builderkit_core::taxonomy::{classify as classify_grid, label_counts, StructureLabels};
use builderkit_core::voxel::{Avatar, BlockGrid, Rules, WorldState};
use builderkit_server::storage::read_outcome_dir;
use serde_json::{json, Value};

use crate::input::{read_grid, read_structures};
use crate::{CmdResult, Ctx, Failure};

fn print_json(v: &Value) {
    // A closed pipe on stdout is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn write_file(path: &Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("json value");
    std::fs::write(path, text + "\n").map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))
}

fn load_all(paths: &[PathBuf], role: RoleFilter) -> Result<Vec<Record>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        match load_records(p, role) {
            Ok(records) => out.extend(records),
            Err(e @ DatasetError::Io { .. }) => return Err(Failure::usage(e.to_string())),
            Err(DatasetError::Schema(issues)) if issues.len() > 1 => {
                for issue in &issues {
                    eprintln!("{}: {issue}", p.display());
                }
                return Err(Failure::usage(format!("{}: {} schema errors", p.display(), issues.len())));
            }
            Err(e) => return Err(Failure::usage(format!("{}: {e}", p.display()))),
        }
    }
    Ok(out)
}

fn describe(r: &Record) -> String {
    format!("game {} step {} ({})", r.game_id(), step_id(r), r.role())
}

fn step_id(r: &Record) -> i64 {
    match r {
        Record::Architect(a) => a.step_id,
        Record::Builder(b) => b.step_id,
    }
}

pub fn ingest(ctx: &Ctx, paths: &[PathBuf]) -> CmdResult {
    let records = load_all(paths, RoleFilter::Auto)?;
    let outcome = clean(records, &ctx.settings.clean_config());
    let rejected: Vec<Value> = outcome
        .rejected
        .iter()
        .map(|(r, reason)| json!({"record": r.to_json(), "reason": reason, "message": reason.to_string()}))
        .collect();
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("creating {}: {e}", dir.display())))?;
        write_file(&dir.join("kept.json"), &records_to_json(&outcome.kept))?;
        write_file(&dir.join("rejected.json"), &Value::Array(rejected.clone()))?;
    }
    if ctx.json {
        print_json(&json!({
            "kept": outcome.kept.len(),
            "rejected": outcome.rejected.len(),
            "rejections": outcome.rejected.iter().map(|(r, reason)| json!({
                "gameId": r.game_id(),
                "stepId": step_id(r),
                "reason": reason,
            })).collect::<Vec<_>>(),
        }));
    } else {
        println!("kept {}, rejected {}", outcome.kept.len(), outcome.rejected.len());
        for (r, reason) in &outcome.rejected {
            println!("  rejected {}: {reason}", describe(r));
        }
    }
    Ok(0)
}

pub fn stats(ctx: &Ctx, paths: &[PathBuf]) -> CmdResult {
    let records = load_all(paths, RoleFilter::Auto)?;
    let report = build_report(records, &ctx.settings.clean_config());
    let v = serde_json::to_value(&report).expect("report serializes");
    if let Some(out) = &ctx.out {
        write_file(out, &v)?;
    }
    if ctx.json {
        print_json(&v);
    } else {
        print!("{}", report.to_table());
    }
    Ok(0)
}

pub fn score(ctx: &Ctx, g0: &Path, g: &Path, target: &Path, no_shift: bool, radius: Option<i32>) -> CmdResult {
    let (g0, g, target) = (read_grid(g0)?, read_grid(g)?, read_grid(target)?);
    let window = ctx.settings.window(no_shift, radius);
    let report = grid_f1(&g, &g0, &diff(&g0, &target), window);
    if ctx.json {
        print_json(&serde_json::to_value(report).expect("report serializes"));
    } else {
        println!("f1          {:.6}", report.f1);
        println!("precision   {:.6}", report.precision);
        println!("recall      {:.6}", report.recall);
        println!(
            "matched     {} (target {}, modified {})",
            report.intersection, report.target_size, report.modified
        );
        println!("best shift  dx={} dz={} (radius {})", report.best_shift.0, report.best_shift.1, window.radius);
    }
    Ok(0)
}

struct ReplayRow {
    game_id: i64,
    step_id: i64,
    result: Result<(Vec<Value>, BlockGrid), TapeError>,
}

pub fn replay(ctx: &Ctx, path: &Path, start: Option<&Path>) -> CmdResult {
    let records = load_all(&[path.to_path_buf()], RoleFilter::Auto)?;
    let start_grid = start.map(read_grid).transpose()?.unwrap_or_default();
    let rules = Rules::default();
    // Each builder record continues from the replayed state of the previous
    // record in the same game.
    let mut states: BTreeMap<i64, WorldState> = BTreeMap::new();
    let mut rows = Vec::new();
    for r in &records {
        let Record::Builder(b) = r else { continue };
        let start = states
            .remove(&b.game_id)
            .unwrap_or_else(|| WorldState::new(start_grid.clone(), Avatar::default()));
        let result = verify_builder_record(b, start, &rules).map(|v| {
            let cells = v
                .mismatches
                .iter()
                .map(|c| {
                    let (x, y, z) = c.to_world();
                    json!({
                        "x": x, "y": y, "z": z,
                        "recorded": b.world_ending_state.get(*c).map_or(0, |id| id.get()),
                        "replayed": v.replayed.grid.get(*c).map_or(0, |id| id.get()),
                    })
                })
                .collect();
            let grid = v.replayed.grid.clone();
            states.insert(b.game_id, v.replayed);
            (cells, grid)
        });
        rows.push(ReplayRow { game_id: b.game_id, step_id: b.step_id, result });
    }
    if rows.is_empty() {
        return Err(Failure::domain(format!("{}: no builder records", path.display())));
    }
    let failed = rows.iter().any(|r| !matches!(&r.result, Ok((cells, _)) if cells.is_empty()));
    if ctx.json {
        let out: Vec<Value> = rows
            .iter()
            .map(|r| match &r.result {
                Ok((cells, grid)) => json!({
                    "gameId": r.game_id,
                    "stepId": r.step_id,
                    "verified": cells.is_empty(),
                    "mismatches": cells,
                    "finalGrid": grid,
                }),
                Err(e) => json!({
                    "gameId": r.game_id,
                    "stepId": r.step_id,
                    "verified": false,
                    "error": e.to_string(),
                }),
            })
            .collect();
        print_json(&Value::Array(out));
    } else {
        for r in &rows {
            print!("game {} step {}: ", r.game_id, r.step_id);
            match &r.result {
                Ok((cells, _)) if cells.is_empty() => println!("VERIFIED"),
                Ok((cells, _)) => {
                    println!("MISMATCH ({} cells)", cells.len());
                    for c in cells {
                        println!(
                            "  ({}, {}, {}) recorded {} replayed {}",
                            c["x"], c["y"], c["z"], c["recorded"], c["replayed"]
                        );
                    }
                }
                Err(e) => println!("MISMATCH ({e})"),
            }
        }
        for (game, state) in &states {
            println!("final grid of game {game}: {}", serde_json::to_string(&state.grid).expect("grid"));
        }
    }
    Ok(u8::from(failed))
}

pub fn tally(ctx: &Ctx, dir: &Path) -> CmdResult {
    // Accept a server storage root as well as its outcomes directory.
    let nested = dir.join("outcomes");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    if !dir.exists() {
        return Err(Failure::usage(format!("{}: no such directory", dir.display())));
    }
    let outcomes = read_outcome_dir(&dir).map_err(|e| Failure::usage(e.to_string()))?;
    let rows = tally_human_eval(&outcomes);
    if ctx.json {
        let out: Vec<Value> = rows
            .iter()
            .map(|t| {
                let mut v = serde_json::to_value(t).expect("tally serializes");
                v["winPercent"] = json!(t.win_percent());
                v["lossPercent"] = json!(t.loss_percent());
                v
            })
            .collect();
        print_json(&json!({"games": outcomes.len(), "agents": out}));
    } else {
        print!("{}", render_tally(&rows));
    }
    Ok(0)
}

/// `flat [7], flying [3], ...` over every label.
pub fn bracketed_counts(labels: &[StructureLabels]) -> String {
    label_counts(labels.iter())
        .into_iter()
        .map(|(name, n)| (StructureLabels::NAMES.iter().position(|x| *x == name), name, n))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|(_, name, n)| format!("{name} [{n}]"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn classify(ctx: &Ctx, path: &Path) -> CmdResult {
    let structures = read_structures(path)?;
    let config = ctx.settings.taxonomy_config();
    let mut labelled = Vec::new();
    let mut errors = Vec::new();
    for (name, grid) in &structures {
        match classify_grid(grid, &config) {
            Ok(l) => labelled.push((name.as_str(), l)),
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    }
    let labels: Vec<StructureLabels> = labelled.iter().map(|(_, l)| *l).collect();
    if ctx.json {
        print_json(&json!({
            "structures": labelled.iter().map(|(n, l)| json!({"name": n, "labels": l.names()})).collect::<Vec<_>>(),
            "counts": label_counts(labels.iter()),
            "errors": errors,
        }));
    } else {
        let width = labelled.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        for (name, l) in &labelled {
            let names = l.names();
            let shown = if names.is_empty() { "-".to_string() } else { names.join(", ") };
            println!("{name:<width$}  {{{shown}}}");
        }
        println!("{}", bracketed_counts(&labels));
    }
    for e in &errors {
        eprintln!("{e}");
    }
    Ok(u8::from(!errors.is_empty()))
}
