use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use builderkit_agent::{run_agent, AdminClient, Connection, GrammarBuilder, NoOp, Policy, RunOptions, ScriptedArchitect};
use builderkit_core::metrics::{diff, grid_f1, leaderboard_row, LeaderboardRow, ScoreReport, ShiftWindow};
use builderkit_core::voxel::BlockGrid;
use builderkit_server::ServerConfig;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::input::{grid_from_value, read_json};
use crate::{CmdResult, Ctx, EvaluateArgs, Failure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EvalRunConfig {
    pub task_set_path: PathBuf,
    pub episodes_per_task: u32,
    pub time_budget_minutes: u64,
    pub agent_endpoint: String,
    pub seed: Option<u64>,
}

impl Default for EvalRunConfig {
    fn default() -> Self {
        EvalRunConfig {
            task_set_path: PathBuf::new(),
            episodes_per_task: 2,
            time_budget_minutes: 60,
            agent_endpoint: "builtin:grammar".into(),
            seed: None,
        }
    }
}

impl EvalRunConfig {
    fn validate(&self) -> Result<(), Failure> {
        if self.task_set_path.as_os_str().is_empty() {
            return Err(Failure::usage("no task set given"));
        }
        if self.episodes_per_task == 0 {
            return Err(Failure::usage("episodesPerTask must be at least 1"));
        }
        if self.time_budget_minutes == 0 {
            return Err(Failure::usage("timeBudgetMinutes must be positive"));
        }
        Ok(())
    }
}

pub struct EvalTask {
    pub id: String,
    pub initial: BlockGrid,
    pub target: BlockGrid,
}

fn read_tasks(path: &Path) -> Result<Vec<EvalTask>, Failure> {
    let v = read_json(path)?;
    let items = match &v {
        Value::Array(items) => items,
        Value::Object(o) => o
            .get("tasks")
            .and_then(Value::as_array)
            .ok_or_else(|| Failure::usage(format!("{}: expected a list of tasks", path.display())))?,
        _ => return Err(Failure::usage(format!("{}: expected a list of tasks", path.display()))),
    };
    let mut tasks = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let bad = |e: String| Failure::usage(format!("{}: task #{i}: {e}", path.display()));
        let id = item
            .get("id")
            .and_then(Value::as_str)
            .map_or_else(|| format!("task-{}", i + 1), str::to_string);
        let initial = match item.get("initial") {
            None | Some(Value::Null) => BlockGrid::new(),
            Some(g) => grid_from_value(g).map_err(|e| bad(format!("initial: {e}")))?,
        };
        let target = grid_from_value(item.get("target").ok_or_else(|| bad("missing target".into()))?)
            .map_err(|e| bad(format!("target: {e}")))?;
        if initial == target {
            return Err(bad("target equals the initial grid".into()));
        }
        tasks.push(EvalTask { id, initial, target });
    }
    if tasks.is_empty() {
        return Err(Failure::usage(format!("{}: empty task set", path.display())));
    }
    Ok(tasks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Builtin {
    Grammar,
    NoOp,
}

enum Endpoint {
    Builtin(Builtin),
    Live { stream: String, admin: String, agent_id: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Status {
    Scored,
    Failed(String),
    /// Not started before the time budget ran out.
    BudgetExceeded,
}

struct EpisodeResult {
    task: usize,
    episode: u32,
    status: Status,
    report: ScoreReport,
}

/// Zero score carrying the task's weight.
fn zero_report(task: &EvalTask) -> ScoreReport {
    ScoreReport {
        target_size: diff(&task.initial, &task.target).len(),
        ..ScoreReport::default()
    }
}

struct Runner<'a> {
    stream: String,
    admin: AdminClient,
    endpoint: &'a Endpoint,
    /// Server-side task ids, parallel to the task set.
    task_ids: Vec<String>,
    window: ShiftWindow,
    timeout: Duration,
}

fn spawn_agent<P: Policy + Send + 'static>(
    mut conn: Connection,
    mut policy: P,
) -> thread::JoinHandle<Result<(), String>> {
    thread::spawn(move || {
        let opts = RunOptions {
            max_sessions: Some(1),
            ..RunOptions::default()
        };
        run_agent(&mut conn, &mut policy, &opts)
            .map(|_| ())
            .map_err(|e| format!("agent: {e}"))
    })
}

impl Runner<'_> {
    fn episode(&self, tasks: &[EvalTask], task: usize, episode: u32) -> Result<ScoreReport, String> {
        let t = &tasks[task];
        let (agent_id, agent) = match self.endpoint {
            Endpoint::Builtin(kind) => {
                let id = format!("builtin-{}-{}", task + 1, episode + 1);
                let conn = Connection::connect(&self.stream, &id).map_err(|e| e.to_string())?;
                conn.set_read_timeout(Some(self.timeout)).map_err(|e| e.to_string())?;
                let handle = match kind {
                    Builtin::Grammar => spawn_agent(conn, GrammarBuilder::default()),
                    Builtin::NoOp => spawn_agent(conn, NoOp),
                };
                (id, Some(handle))
            }
            Endpoint::Live { agent_id, .. } => (agent_id.clone(), None),
        };
        let code = self
            .admin
            .mint_join_code(&agent_id, &self.task_ids[task])
            .map_err(|e| e.to_string())?;
        let architect = ScriptedArchitect {
            read_timeout: Some(self.timeout),
            ..ScriptedArchitect::default()
        };
        let played = architect.play(&self.stream, &code);
        if let Some(h) = agent {
            h.join().map_err(|_| "agent thread panicked".to_string())??;
        }
        let report = played.map_err(|e| format!("architect: {e}"))?;
        let log = self
            .admin
            .log_by_code(&report.completion_code)
            .map_err(|e| e.to_string())?;
        let mut score = grid_f1(&log.final_grid, &t.initial, &diff(&t.initial, &t.target), self.window);
        score.episode_length = log.builder_steps;
        Ok(score)
    }
}

fn run_episodes(runner: &Runner, tasks: &[EvalTask], episodes: u32, parallel: usize, deadline: Instant) -> Vec<EpisodeResult> {
    let plan: Vec<(usize, u32)> = (0..tasks.len())
        .flat_map(|t| (0..episodes).map(move |e| (t, e)))
        .collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(plan.len()));
    thread::scope(|s| {
        for _ in 0..parallel.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(task, episode)) = plan.get(i) else { break };
                let (status, report) = if Instant::now() >= deadline {
                    (Status::BudgetExceeded, zero_report(&tasks[task]))
                } else {
                    match runner.episode(tasks, task, episode) {
                        Ok(r) => (Status::Scored, r),
                        Err(e) => (Status::Failed(e), zero_report(&tasks[task])),
                    }
                };
                results.lock().expect("results lock").push(EpisodeResult { task, episode, status, report });
            });
        }
    });
    let mut results = results.into_inner().expect("results lock");
    results.sort_by_key(|r| (r.task, r.episode));
    results
}

fn render_row(row: &LeaderboardRow) -> String {
    let width = row.agent.len().max("Approach".len());
    format!(
        "{:<width$}  {:<6}  {:<9}  {:<6}  {}\n{:<width$}  {:<6.3}  {:<9.3}  {:<6.3}  {:.2}\n",
        "Approach", "F1", "Precision", "Recall", "Ep. Length", row.agent, row.f1, row.precision, row.recall, row.episode_length,
    )
}

fn parse_endpoint(spec: &str, args: &EvaluateArgs) -> Result<Endpoint, Failure> {
    match spec {
        "builtin:grammar" => Ok(Endpoint::Builtin(Builtin::Grammar)),
        "builtin:noop" => Ok(Endpoint::Builtin(Builtin::NoOp)),
        s if s.starts_with("builtin:") => Err(Failure::usage(format!("unknown builtin agent {s:?}"))),
        s => Ok(Endpoint::Live {
            stream: s.to_string(),
            admin: args
                .admin
                .clone()
                .ok_or_else(|| Failure::usage("--admin is required for a live endpoint"))?,
            agent_id: args
                .agent_id
                .clone()
                .ok_or_else(|| Failure::usage("--agent-id is required for a live endpoint"))?,
        }),
    }
}

pub fn evaluate(ctx: &Ctx, args: EvaluateArgs) -> CmdResult {
    let mut cfg = match &args.run_config {
        Some(p) => serde_json::from_value(read_json(p)?)
            .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => EvalRunConfig::default(),
    };
    if let Some(p) = &args.task_set {
        cfg.task_set_path = p.clone();
    }
    if let Some(a) = &args.agent {
        cfg.agent_endpoint = a.clone();
    }
    if let Some(n) = args.episodes {
        cfg.episodes_per_task = n;
    }
    if let Some(m) = args.budget_minutes {
        cfg.time_budget_minutes = m;
    }
    if ctx.seed.is_some() {
        cfg.seed = ctx.seed;
    }
    cfg.validate()?;
    let tasks = read_tasks(&cfg.task_set_path)?;
    let endpoint = parse_endpoint(&cfg.agent_endpoint, &args)?;
    let name = args.name.clone().unwrap_or_else(|| match &endpoint {
        Endpoint::Builtin(Builtin::Grammar) => "grammar".into(),
        Endpoint::Builtin(Builtin::NoOp) => "noop".into(),
        Endpoint::Live { agent_id, .. } => agent_id.clone(),
    });
    let window = ctx.settings.window(args.no_shift, None);
    let budget = Duration::from_secs(cfg.time_budget_minutes * 60);
    let total = tasks.len() as u32 * cfg.episodes_per_task;
    let timeout = (budget / total).max(Duration::from_secs(1));

    let rt;
    let mut server = None;
    let (stream, admin_addr, parallel) = match &endpoint {
        Endpoint::Builtin(_) => {
            let mut config = ServerConfig::load(ctx.config.as_deref()).map_err(|e| Failure::usage(e.to_string()))?;
            config.stream_addr = "127.0.0.1:0".into();
            config.http_addr = "127.0.0.1:0".into();
            config.storage_root = None;
            config.static_dir = None;
            config.seed = cfg.seed.or(config.seed);
            rt = tokio::runtime::Runtime::new().map_err(|e| Failure::usage(format!("runtime: {e}")))?;
            let handle = rt
                .block_on(builderkit_server::serve(config))
                .map_err(|e| Failure::usage(e.to_string()))?;
            let addrs = (handle.stream_addr.to_string(), handle.http_addr.to_string());
            server = Some((&rt, handle));
            (addrs.0, addrs.1, args.parallel)
        }
        // A live agent plays one session at a time.
        Endpoint::Live { stream, admin, .. } => (stream.clone(), admin.clone(), 1),
    };
    let admin = AdminClient::new(&admin_addr);
    if let Endpoint::Live { agent_id, .. } = &endpoint {
        let agents = admin
            .agents()
            .map_err(|e| Failure::usage(format!("agent unreachable: admin api {admin_addr}: {e}")))?;
        let connected = agents.as_array().into_iter().flatten().any(|a| {
            a["agentId"].as_str() == Some(agent_id.as_str()) && a["connected"].as_bool() == Some(true)
        });
        if !connected {
            return Err(Failure::usage(format!("agent unreachable: {agent_id} is not connected to {stream}")));
        }
    }
    let mut task_ids = Vec::with_capacity(tasks.len());
    for t in &tasks {
        let id = match endpoint {
            Endpoint::Builtin(_) => Some(t.id.as_str()),
            Endpoint::Live { .. } => None,
        };
        task_ids.push(
            admin
                .create_task(id, &t.initial, &t.target)
                .map_err(|e| Failure::usage(format!("registering {}: {e}", t.id)))?,
        );
    }
    let runner = Runner { stream, admin, endpoint: &endpoint, task_ids, window, timeout };
    let deadline = Instant::now() + budget;
    let results = run_episodes(&runner, &tasks, cfg.episodes_per_task, parallel, deadline);
    if let Some((rt, handle)) = server {
        rt.block_on(handle.shutdown());
    }

    let reports: Vec<ScoreReport> = results.iter().map(|r| r.report).collect();
    let row = leaderboard_row(&name, &reports, 1).map_err(|e| Failure::domain(e.to_string()))?;
    let episodes: Vec<Value> = results
        .iter()
        .map(|r| {
            let (status, detail) = match &r.status {
                Status::Scored => ("scored", None),
                Status::Failed(e) => ("failed", Some(e.clone())),
                Status::BudgetExceeded => ("budgetExceeded", None),
            };
            json!({
                "taskId": tasks[r.task].id,
                "episode": r.episode + 1,
                "status": status,
                "detail": detail,
                "report": r.report,
            })
        })
        .collect();
    let failed = results.iter().filter(|r| matches!(r.status, Status::Failed(_))).count();
    let unrun = results.iter().filter(|r| r.status == Status::BudgetExceeded).count();
    if let Some(dir) = &ctx.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("creating {}: {e}", dir.display())))?;
        let lines: String = episodes.iter().map(|e| format!("{e}\n")).collect();
        std::fs::write(dir.join("episodes.jsonl"), lines)
            .and_then(|_| std::fs::write(dir.join("leaderboard.json"), format!("{}\n", json!(row))))
            .map_err(|e| Failure::usage(format!("writing {}: {e}", dir.display())))?;
    }
    for r in &results {
        if let Status::Failed(e) = &r.status {
            eprintln!("episode {} of {}: {e}", r.episode + 1, tasks[r.task].id);
        }
    }
    if unrun > 0 {
        eprintln!("time budget exceeded: {unrun} episodes not run, scored 0");
    }
    if ctx.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "config": cfg,
                "row": row,
                "episodes": results.len(),
                "failed": failed,
                "budgetExceeded": unrun,
            }))
            .expect("json value")
        );
    } else {
        print!("{}", render_row(&row));
    }
    Ok(0)
}
