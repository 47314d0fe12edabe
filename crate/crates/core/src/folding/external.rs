//! Line-protocol adapter for an external folder.
//!
//! Request: `FOLD <sequence> <target>`
//! Reply:   `OK <mfe> <mfe-energy> <ensemble-free-energy> <target-prob> <ensemble-defect>`
//!          or `ERR <message>`

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::structure::{pair_table, NucleotideSequence, TargetStructure};

use super::{FoldError, FoldResult, FoldingEngine};

pub struct ExternalEngine {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    stderr_reader: Option<JoinHandle<()>>,
    timeout: Duration,
    timeout_secs: f64,
    kt: f64,
}

impl ExternalEngine {
    /// Start `command` through `sh -c`; one child process per engine.
    pub fn spawn(command: &str, kt: f64, timeout_secs: f64) -> Result<Self, FoldError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| FoldError::failure(format!("cannot start `{command}`: {e}")))?;

        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut err_pipe = child.stderr.take().expect("piped stderr");

        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        let stderr_reader = thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(k) = err_pipe.read(&mut buf) {
                if k == 0 {
                    break;
                }
                sink.lock()
                    .unwrap()
                    .push_str(&String::from_utf8_lossy(&buf[..k]));
            }
        });

        Ok(ExternalEngine {
            child,
            stdin,
            replies,
            stderr,
            stderr_reader: Some(stderr_reader),
            timeout: Duration::from_secs_f64(timeout_secs),
            timeout_secs,
            kt,
        })
    }

    fn captured_stderr(&self) -> String {
        self.stderr.lock().unwrap().clone()
    }

    fn fail(&self, message: impl Into<String>) -> FoldError {
        FoldError::EngineFailure {
            message: message.into(),
            stderr: self.captured_stderr(),
        }
    }

    /// The child closed stdout: reap it so that its stderr is complete.
    fn exited(&mut self) -> FoldError {
        let status = self.child.wait().ok();
        if let Some(h) = self.stderr_reader.take() {
            let _ = h.join();
        }
        let status = status.map(|s| s.to_string()).unwrap_or_default();
        self.fail(format!("external folder exited ({status})"))
    }
}

impl FoldingEngine for ExternalEngine {
    fn fold(
        &mut self,
        seq: &NucleotideSequence,
        target: &TargetStructure,
    ) -> Result<FoldResult, FoldError> {
        if seq.len() != target.len() {
            return Err(FoldError::LengthMismatch(seq.len(), target.len()));
        }
        let request = format!("FOLD {} {}\n", seq, target.dotbracket());
        let sent = self
            .stdin
            .write_all(request.as_bytes())
            .and_then(|_| self.stdin.flush());
        if sent.is_err() {
            return Err(self.exited());
        }
        match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(line)) => parse_reply(&line, seq.len()).map_err(|m| self.fail(m)),
            Ok(Err(e)) => Err(self.fail(format!("cannot read reply: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(FoldError::Timeout(self.timeout_secs)),
            Err(RecvTimeoutError::Disconnected) => Err(self.exited()),
        }
    }

    fn kt(&self) -> f64 {
        self.kt
    }
}

impl Drop for ExternalEngine {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Parse and validate one reply line for a sequence of length `n`.
pub fn parse_reply(line: &str, n: usize) -> Result<FoldResult, String> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut tokens = line.split_whitespace();
    match tokens.next() {
        Some("ERR") => {
            let msg = line.trim_start().strip_prefix("ERR").unwrap_or("").trim();
            return Err(format!("external folder error: {msg}"));
        }
        Some("OK") => {}
        _ => return Err(format!("malformed reply line: {line:?}")),
    }
    let fields: Vec<&str> = tokens.collect();
    if fields.len() != 5 {
        return Err(format!(
            "malformed reply line (expected 5 fields): {line:?}"
        ));
    }
    let mfe_structure = fields[0].to_string();
    match pair_table(&mfe_structure) {
        Ok(t) if t.len() == n => {}
        Ok(t) => {
            return Err(format!(
                "reply structure has length {} (expected {n}): {line:?}",
                t.len()
            ))
        }
        Err(e) => return Err(format!("reply structure invalid ({e}): {line:?}")),
    }
    let number = |k: usize, name: &str| -> Result<f64, String> {
        fields[k]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad {name} {:?} in reply: {line:?}", fields[k]))
    };
    let mfe_energy = number(1, "mfe energy")?;
    let ensemble_free_energy = number(2, "ensemble free energy")?;
    let target_probability = number(3, "target probability")?;
    let ensemble_defect = number(4, "ensemble defect")?;
    if !(0.0..=1.0).contains(&target_probability) {
        return Err(format!(
            "target probability {target_probability} outside [0, 1]: {line:?}"
        ));
    }
    if !(0.0..=n as f64).contains(&ensemble_defect) {
        return Err(format!(
            "ensemble defect {ensemble_defect} outside [0, {n}]: {line:?}"
        ));
    }
    Ok(FoldResult {
        mfe_structure,
        mfe_energy,
        ensemble_free_energy,
        target_probability,
        target_log_probability: target_probability.ln(),
        ensemble_defect,
        pair_probabilities: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ok_reply() {
        let r = parse_reply("OK (((...))) -3.5 -3.9 0.62 0.8", 9).unwrap();
        assert_eq!(r.mfe_structure, "(((...)))");
        assert_eq!(r.mfe_energy, -3.5);
        assert_eq!(r.ensemble_free_energy, -3.9);
        assert_eq!(r.target_probability, 0.62);
        assert_eq!(r.ensemble_defect, 0.8);
        assert!(r.pair_probabilities.is_none());
    }

    #[test]
    fn rejects_bad_replies() {
        let e = parse_reply("hello", 3).unwrap_err();
        assert!(e.contains("hello"), "{e}");
        assert!(parse_reply("OK ... 0 0 1.2 0", 3)
            .unwrap_err()
            .contains("1.2"));
        assert!(parse_reply("OK ... 0 0 0.5", 3).is_err());
        assert!(parse_reply("OK (.. 0 0 0.5 0", 3).is_err());
        assert!(parse_reply("OK .... 0 0 0.5 0", 3).is_err());
        assert!(parse_reply("OK ... x 0 0.5 0", 3).is_err());
        assert!(parse_reply("OK ... 0 0 0.5 4", 3).is_err());
        assert!(parse_reply("OK ... 0 NaN 0.5 0", 3).is_err());
        assert_eq!(
            parse_reply("ERR no parameters", 3).unwrap_err(),
            "external folder error: no parameters"
        );
    }
}
