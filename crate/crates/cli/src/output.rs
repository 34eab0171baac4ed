use serde::Serialize;
use serde_json::{json, Value};
use std::fmt;

use intake_core::config::ConfigError;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl fmt::Display) -> CliError {
        CliError { code: EXIT_CONFIG, kind: "config", message: message.to_string() }
    }

    pub fn io(message: impl fmt::Display) -> CliError {
        CliError { code: EXIT_IO, kind: "io", message: message.to_string() }
    }

    pub fn usage(message: impl fmt::Display) -> CliError {
        CliError { code: EXIT_CONFIG, kind: "usage", message: message.to_string() }
    }

    pub fn failed(message: impl fmt::Display) -> CliError {
        CliError { code: EXIT_FAILURE, kind: "failed", message: message.to_string() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> CliError {
        match e {
            ConfigError::Io { .. } => CliError::io(e),
            _ => CliError::config(e),
        }
    }
}

/// What a command produced: a machine-readable result, its text rendering
/// and the exit code (non-zero for completed-but-failing runs).
pub struct Outcome {
    pub result: Value,
    pub text: String,
    pub code: u8,
}

impl Outcome {
    pub fn new<T: Serialize>(result: &T, text: String) -> Outcome {
        Outcome { result: serde_json::to_value(result).expect("results serialize"), text, code: EXIT_OK }
    }

    pub fn with_code(mut self, code: u8) -> Outcome {
        self.code = code;
        self
    }
}

/// `{"ok", "command", "exit_code", "result" | "error"}`.
pub fn envelope(command: &str, outcome: &Result<Outcome, CliError>) -> Value {
    match outcome {
        Ok(o) => json!({"ok": o.code == EXIT_OK, "command": command, "exit_code": o.code, "result": o.result}),
        Err(e) => json!({
            "ok": false,
            "command": command,
            "exit_code": e.code,
            "error": {"kind": e.kind, "message": e.message}
        }),
    }
}

pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn f3(x: f64) -> String {
    format!("{x:.3}")
}
