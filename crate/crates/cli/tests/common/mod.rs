#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, ChildStdout, Command, Output, Stdio};

use serde_json::{json, Value};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_builderkit"));
    c.env_remove("BUILDERKIT_SEED").env_remove("BUILDERKIT_CONFIG");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn builderkit")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

/// A `builderkit serve` child process and the addresses from its banner.
pub struct Served {
    pub child: Child,
    pub stream: String,
    pub http: String,
    _out: BufReader<ChildStdout>,
}

impl Served {
    pub fn start(config: &Path, extra: &[&str]) -> Served {
        let mut child = bin()
            .arg("serve")
            .arg(config)
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn serve");
        let mut out = BufReader::new(child.stdout.take().unwrap());
        let mut banner = String::new();
        out.read_line(&mut banner).unwrap();
        let addr = |key: &str| {
            banner
                .split(key)
                .nth(1)
                .and_then(|rest| rest.split([',', ' ', '\n']).find(|s| !s.is_empty()))
                .unwrap_or_else(|| panic!("no {key} in banner {banner:?}"))
                .to_string()
        };
        let (stream, http) = (addr("stream "), addr("http "));
        Served { child, stream, http, _out: out }
    }

    /// Sends SIGTERM and waits; returns the exit code.
    pub fn terminate(mut self) -> Option<i32> {
        let pid = self.child.id().to_string();
        Command::new("kill").args(["-TERM", &pid]).status().unwrap();
        self.child.wait().unwrap().code()
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn server_config(dir: &Path, storage: Option<&Path>) -> std::path::PathBuf {
    let mut text = "stream_addr = \"127.0.0.1:0\"\nhttp_addr = \"127.0.0.1:0\"\ntick_ms = 50\n".to_string();
    if let Some(s) = storage {
        text += &format!("storage_root = {:?}\n", s.to_string_lossy());
    }
    let p = dir.join("server.toml");
    std::fs::write(&p, text).unwrap();
    p
}

/// Builder record with a six-line tape fragment extended so that it
/// reaches the listed ending state.
pub fn sample_record() -> Value {
    json!({
        "gameId": 19,
        "stepId": 1,
        "avatarInfo": {
            "pos": [-0.5333829883845848, 65.07999999999996, -3.6806624583844014],
            "look": [-1.0720000000000007, -15.771999999999965]
        },
        "worldEndingState": {
            "blocks": [[-2, 63, 1, 50], [-1, 63, -2, 57], [-1, 63, 1, 50], [0, 63, -3, 57], [1, 63, 0, 57]]
        },
        "tape": [
            "0 set_look (-0.004, 0)",
            "1 set_look (-0.044, -0.042)",
            "2 action step_backward",
            "3 pos_change (-0.10159854456559483, 63, 0.014814775657966633)",
            "4 action select_and_place_block 50 1 63 0",
            "5 block_change  (1, 63, 0, 0, 50)",
            "6 action break_block 1 63 0",
            "7 block_change (1, 63, 0, 50, 0)",
            "8 action select_and_place_block 57 1 63 0",
            "9 block_change (1, 63, 0, 0, 57)",
            "10 action select_and_place_block 50 -1 63 1",
            "11 block_change (-1, 63, 1, 0, 50)",
            "12 action select_and_place_block 50 -2 63 1",
            "13 block_change (-2, 63, 1, 0, 50)",
            "14 action select_and_place_block 57 -1 63 -2",
            "15 block_change (-1, 63, -2, 0, 57)",
            "16 action select_and_place_block 57 0 63 -3",
            "17 block_change (0, 63, -3, 0, 57)"
        ],
        "clarification_question": "null"
    })
}

/// Four tasks the grammar covers: flat rows, a stack, a recolor and a removal.
pub fn grammar_task_set() -> Value {
    json!([
        {"id": "row", "target": [[0, 63, 0, 59], [1, 63, 0, 57], [1, 64, 0, 57]]},
        {"id": "stack", "target": [[-2, 63, 2, 56], [-2, 64, 2, 56], [-2, 65, 2, 60]]},
        {"id": "recolor", "initial": [[2, 63, -1, 50]], "target": [[2, 63, -1, 47], [3, 63, -1, 47]]},
        {"id": "clear", "initial": [[0, 63, 3, 57], [0, 64, 3, 57]], "target": [[0, 63, 3, 57], [1, 63, 3, 50]]}
    ])
}
