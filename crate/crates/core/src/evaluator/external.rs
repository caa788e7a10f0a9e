//! Evaluation delegated to a child process over newline-delimited JSON.
//!
//! Request: `{"id": u64, "env": "flat"|"platform"|"circular", "genome": {..}}`
//! Response: `{"id": u64, "fitness": f64}`
//!
//! A whole batch is written before responses are collected; responses may
//! arrive in any order but every id must be answered exactly once.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{EnvironmentSpec, EvaluationResult, Evaluator};
use crate::error::EvalError;
use crate::morphology::{descriptor_of, MorphologyTree};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    env: &'static str,
    genome: &'a MorphologyTree,
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    fitness: f64,
}

pub struct ExternalEvaluator {
    env: EnvironmentSpec,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
}

impl ExternalEvaluator {
    /// Start `command` through `sh -c`.
    pub fn spawn(command: &str, env: EnvironmentSpec, timeout: Duration) -> Result<Self, EvalError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| EvalError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            env,
            child,
            stdin,
            lines: rx,
            timeout,
            next_id: 0,
        })
    }

    fn send_batch(&mut self, payload: String) -> Result<(), EvalError> {
        let Some(mut stdin) = self.stdin.take() else {
            return Err(EvalError::Closed);
        };
        // a child that stops reading must not wedge the orchestrator
        let (done_tx, done_rx) = mpsc::channel();
        thread::spawn(move || {
            let res = stdin.write_all(payload.as_bytes()).and_then(|_| stdin.flush());
            let _ = done_tx.send(res.map(|_| stdin));
        });
        match done_rx.recv_timeout(self.timeout) {
            Ok(Ok(stdin)) => {
                self.stdin = Some(stdin);
                Ok(())
            }
            Ok(Err(e)) => Err(EvalError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(EvalError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(EvalError::Closed),
        }
    }
}

impl Evaluator for ExternalEvaluator {
    fn environment(&self) -> &EnvironmentSpec {
        &self.env
    }

    fn evaluate_batch(
        &mut self,
        genomes: &[MorphologyTree],
    ) -> Result<Vec<EvaluationResult>, EvalError> {
        let first = self.next_id;
        let mut payload = String::new();
        for (k, genome) in genomes.iter().enumerate() {
            let req = Request {
                id: first + k as u64,
                env: self.env.kind.name(),
                genome,
            };
            payload.push_str(&serde_json::to_string(&req).expect("genome serializes"));
            payload.push('\n');
        }
        self.next_id += genomes.len() as u64;
        self.send_batch(payload)?;

        let mut fitness: HashMap<u64, f64> = HashMap::with_capacity(genomes.len());
        let deadline = Instant::now() + self.timeout;
        while fitness.len() < genomes.len() {
            let wait = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(wait) {
                Ok(line) => line?,
                Err(RecvTimeoutError::Timeout) => return Err(EvalError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => return Err(EvalError::Closed),
            };
            if line.trim().is_empty() {
                continue;
            }
            let resp: Response = serde_json::from_str(&line).map_err(|e| EvalError::Protocol {
                line: line.clone(),
                reason: e.to_string(),
            })?;
            let in_batch = resp.id >= first && resp.id < first + genomes.len() as u64;
            if !in_batch || fitness.contains_key(&resp.id) {
                return Err(EvalError::Protocol {
                    line,
                    reason: format!("unexpected response id {}", resp.id),
                });
            }
            if !resp.fitness.is_finite() || resp.fitness < 0.0 {
                return Err(EvalError::Protocol {
                    line,
                    reason: "fitness must be a finite non-negative number".into(),
                });
            }
            fitness.insert(resp.id, resp.fitness);
        }

        Ok(genomes
            .iter()
            .enumerate()
            .map(|(k, g)| EvaluationResult {
                fitness: fitness[&(first + k as u64)],
                descriptor: descriptor_of(g),
                blocked_at: None,
            })
            .collect())
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
