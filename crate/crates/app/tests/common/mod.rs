#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn girthkit(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_girthkit"))
        .args(args)
        .env("GIRTHKIT_DATA", data)
        .current_dir(data)
        .output()
        .expect("binary runs")
}

/// Runs and requires success, returning stdout.
pub fn ok(data: &Path, args: &[&str]) -> String {
    let out = girthkit(data, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("{e}: {text}"))
}

/// Percent-encodes everything but unreserved characters.
pub fn url_encode(text: &str) -> String {
    text.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}
