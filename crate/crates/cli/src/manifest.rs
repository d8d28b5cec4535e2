//! Run manifests: one JSON line appended per run.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

pub struct Manifest {
    command: String,
    argv: Vec<String>,
    seed: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    counters: Map<String, Value>,
    started: SystemTime,
    clock: Instant,
}

impl Manifest {
    pub fn new(command: &str, argv: Vec<String>, seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            argv,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counters: Map::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn counter(&mut self, key: &str, value: Value) {
        self.counters.insert(key.to_string(), value);
    }

    pub fn to_json(&self, exit_code: i32, error: Option<&str>) -> Value {
        let started = self
            .started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        json!({
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "counters": self.counters,
            "started_unix": started,
            "elapsed_secs": self.clock.elapsed().as_secs_f64(),
            "exit_code": exit_code,
            "error": error,
        })
    }

    /// Appends this run to `path`.
    pub fn append(&self, path: &Path, exit_code: i32, error: Option<&str>) -> std::io::Result<()> {
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(file, "{}", self.to_json(exit_code, error))
    }
}
