//! Newline-delimited JSON bridge to a classifier running in a child process.
//!
//! Protocol, one JSON object per line on the child's stdin/stdout:
//!
//! ```text
//! -> {"op":"info"}
//! <- {"classes":K,"length":L,"channels":C}
//! -> {"op":"predict_proba","instances":[[[..L..],..C..],...]}
//! <- {"proba":[[..K..],...]}
//! ```
//!
//! A child may answer any request with `{"error":"..."}`. The child must flush
//! after every line. One request is in flight at a time.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{check_batch_shape, validate_probabilities, Classifier};
use crate::error::{Error, Result};
use crate::series::TimeSeriesInstance;

pub const DEFAULT_BRIDGE_TIMEOUT: Duration = Duration::from_secs(30);

/// Probability vectors whose sum falls in this band are renormalized.
const RENORMALIZE_BAND: (f64, f64) = (0.99, 1.01);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeInfo {
    pub classes: usize,
    pub length: usize,
    pub channels: usize,
}

struct BridgeIo {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    transcript: Option<BufWriter<File>>,
}

pub struct ExternalModelBridge {
    io: Mutex<BridgeIo>,
    info: BridgeInfo,
    timeout: Duration,
}

impl std::fmt::Debug for ExternalModelBridge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalModelBridge")
            .field("info", &self.info)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalModelBridge {
    /// Spawns `program args...` and performs the `info` handshake.
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut cmd = Command::new(program);
        cmd.args(args);
        Self::spawn_command(cmd, timeout, None)
    }

    /// Spawns a whitespace-separated command line.
    pub fn spawn_command_line(command_line: &str, timeout: Duration) -> Result<Self> {
        let mut parts = command_line.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidValue("empty bridge command".into()))?;
        let args: Vec<String> = parts.map(str::to_owned).collect();
        Self::spawn(program, &args, timeout)
    }

    /// Like [`spawn_command_line`](Self::spawn_command_line) but records every
    /// request/response pair as JSON lines in `transcript`.
    pub fn spawn_with_transcript(command_line: &str, timeout: Duration, transcript: &Path) -> Result<Self> {
        let mut parts = command_line.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidValue("empty bridge command".into()))?;
        let mut cmd = Command::new(program);
        cmd.args(parts);
        Self::spawn_command(cmd, timeout, Some(BufWriter::new(File::create(transcript)?)))
    }

    fn spawn_command(mut cmd: Command, timeout: Duration, transcript: Option<BufWriter<File>>) -> Result<Self> {
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let io = BridgeIo {
            child,
            stdin,
            lines: rx,
            transcript,
        };
        let mut bridge = Self {
            io: Mutex::new(io),
            info: BridgeInfo {
                classes: 0,
                length: 0,
                channels: 0,
            },
            timeout,
        };
        let reply = bridge.request(&json!({"op": "info"}))?;
        let info: BridgeInfo = serde_json::from_value(reply)
            .map_err(|e| Error::BridgeProtocol(format!("bad info reply: {e}")))?;
        if info.classes < 2 || info.length == 0 || info.channels == 0 {
            return Err(Error::BridgeProtocol(format!("implausible info reply {info:?}")));
        }
        bridge.info = info;
        Ok(bridge)
    }

    pub fn info(&self) -> BridgeInfo {
        self.info
    }

    fn request(&self, body: &Value) -> Result<Value> {
        let mut io = self.io.lock().expect("bridge mutex poisoned");
        let line = serde_json::to_string(body).expect("request serializes");
        writeln!(io.stdin, "{line}")
            .and_then(|_| io.stdin.flush())
            .map_err(|e| Error::BridgeProtocol(format!("write to child failed: {e}")))?;
        let reply = match io.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(Error::BridgeProtocol(format!("read from child failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(Error::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::BridgeProtocol("child closed its output".into()))
            }
        };
        let value: Value = serde_json::from_str(&reply)
            .map_err(|e| Error::BridgeProtocol(format!("malformed reply `{reply}`: {e}")))?;
        if let Some(t) = io.transcript.as_mut() {
            let entry = json!({"request": body, "response": &value});
            writeln!(t, "{entry}").and_then(|_| t.flush())?;
        }
        if let Some(msg) = value.get("error") {
            return Err(Error::BridgeProtocol(format!("child reported error: {msg}")));
        }
        Ok(value)
    }
}

impl Drop for ExternalModelBridge {
    fn drop(&mut self) {
        if let Ok(io) = self.io.get_mut() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

#[derive(Deserialize)]
struct ProbaReply {
    proba: Vec<Vec<f64>>,
}

/// Checks a reply against the expected batch size and class count,
/// renormalizing vectors whose sum is within the tolerance band.
pub(crate) fn normalize_reply(mut proba: Vec<Vec<f64>>, batch: usize, classes: usize) -> Result<Vec<Vec<f64>>> {
    if proba.len() != batch {
        return Err(Error::BridgeProtocol(format!(
            "expected {batch} probability vectors, got {}",
            proba.len()
        )));
    }
    for p in proba.iter_mut() {
        validate_probabilities(p, classes)?;
        let sum: f64 = p.iter().sum();
        if !(RENORMALIZE_BAND.0..=RENORMALIZE_BAND.1).contains(&sum) {
            return Err(Error::BridgeProtocol(format!("probabilities sum to {sum}")));
        }
        p.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(proba)
}

impl Classifier for ExternalModelBridge {
    fn class_count(&self) -> usize {
        self.info.classes
    }

    fn input_shape(&self) -> Option<(usize, usize)> {
        Some((self.info.length, self.info.channels))
    }

    fn predict_proba(&self, batch: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>> {
        check_batch_shape(batch, (self.info.length, self.info.channels))?;
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let instances: Vec<Vec<Vec<f64>>> = batch.iter().map(TimeSeriesInstance::channel_vectors).collect();
        let reply = self.request(&json!({"op": "predict_proba", "instances": instances}))?;
        let reply: ProbaReply = serde_json::from_value(reply)
            .map_err(|e| Error::BridgeProtocol(format!("bad predict reply: {e}")))?;
        normalize_reply(reply.proba, batch.len(), self.info.classes)
    }

    fn supports_parallel(&self) -> bool {
        false
    }
}
