//! Objectives evaluated by an external program.
//!
//! Protocol, per evaluation: the candidate is written to the program's stdin
//! in matrix text format followed by one blank line; the program answers with
//! one line holding a decimal value. Each evaluator thread owns its own
//! process. A process that dies is restarted on the next evaluation, up to
//! `max_restarts` times in total; a timeout kills the process.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use booom::format::write_matrix;
use booom::{Error, Objective, Result, StiefelPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalObjectiveSpec {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    pub timeout: Duration,
    pub max_restarts: usize,
}

impl ExternalObjectiveSpec {
    pub fn new(command: Vec<String>) -> Self {
        Self { command, timeout: Duration::from_secs(30), max_restarts: 10 }
    }
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Process {
    fn spawn(command: &[String]) -> std::io::Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| std::io::Error::other("empty command"))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        // The reader thread ends when the process closes stdout.
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let done = line.is_err();
                if tx.send(line).is_err() || done {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines: rx })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

enum Failure {
    /// The process died or stopped answering; it is killed and restarted later.
    Lost(String),
    /// A well-formed exchange that returned no usable value.
    BadReply(String),
}

#[derive(Default)]
struct Slot {
    proc: Option<Process>,
    started: bool,
}

pub struct ExternalObjective {
    spec: ExternalObjectiveSpec,
    name: String,
    dims: (usize, usize),
    slots: Vec<Mutex<Slot>>,
    restarts: AtomicUsize,
    failures: AtomicUsize,
}

impl ExternalObjective {
    /// Starts the first process eagerly so a bad command fails here.
    pub fn new(spec: ExternalObjectiveSpec, p: usize, d: usize, workers: usize) -> Result<Self> {
        if spec.timeout.is_zero() {
            return Err(Error::InvalidArgument("external timeout must be positive".into()));
        }
        let first = Process::spawn(&spec.command).map_err(|e| {
            Error::InvalidArgument(format!("cannot start '{}': {e}", spec.command.join(" ")))
        })?;
        let mut slots: Vec<Mutex<Slot>> = (0..workers.max(1)).map(|_| Mutex::default()).collect();
        *slots[0].get_mut().expect("fresh mutex") = Slot { proc: Some(first), started: true };
        let name = format!("external:{}", spec.command.join(" "));
        Ok(Self {
            spec,
            name,
            dims: (p, d),
            slots,
            restarts: AtomicUsize::new(0),
            failures: AtomicUsize::new(0),
        })
    }

    pub fn restarts(&self) -> usize {
        self.restarts.load(Ordering::Relaxed)
    }

    pub fn failures(&self) -> usize {
        self.failures.load(Ordering::Relaxed)
    }

    fn slot(&self) -> &Mutex<Slot> {
        let idx = rayon::current_thread_index().unwrap_or(0);
        &self.slots[idx % self.slots.len()]
    }

    fn exchange(&self, proc: &mut Process, payload: &str) -> std::result::Result<f64, Failure> {
        if let Err(e) = proc.stdin.write_all(payload.as_bytes()).and_then(|_| proc.stdin.flush()) {
            return Err(Failure::Lost(format!("write failed: {e}")));
        }
        match proc.lines.recv_timeout(self.spec.timeout) {
            Ok(Ok(line)) => {
                let trimmed = line.trim();
                match trimmed.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(v) => Err(Failure::BadReply(format!("non-finite reply {v}"))),
                    Err(_) => Err(Failure::BadReply(format!("malformed reply '{trimmed}'"))),
                }
            }
            Ok(Err(e)) => Err(Failure::Lost(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Disconnected) => Err(Failure::Lost("process exited".into())),
            Err(RecvTimeoutError::Timeout) => Err(Failure::Lost(format!(
                "no reply within {:.3} s",
                self.spec.timeout.as_secs_f64()
            ))),
        }
    }

    fn fail(&self, msg: String) -> Error {
        self.failures.fetch_add(1, Ordering::Relaxed);
        log::warn!("{}: {msg}", self.name);
        Error::Objective(msg)
    }
}

impl Objective for ExternalObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        let mut slot = self.slot().lock().unwrap_or_else(|e| e.into_inner());
        if slot.proc.is_none() {
            if slot.started {
                let used = self.restarts.fetch_add(1, Ordering::Relaxed);
                if used >= self.spec.max_restarts {
                    self.restarts.fetch_sub(1, Ordering::Relaxed);
                    return Err(self.fail(format!("restart limit {} reached", self.spec.max_restarts)));
                }
                log::warn!("{}: restarting process (restart {})", self.name, used + 1);
            }
            slot.started = true;
            match Process::spawn(&self.spec.command) {
                Ok(p) => slot.proc = Some(p),
                Err(e) => return Err(self.fail(format!("cannot start process: {e}"))),
            }
        }
        let mut payload = write_matrix(q.matrix());
        payload.push('\n');
        let proc = slot.proc.as_mut().expect("process present");
        match self.exchange(proc, &payload) {
            Ok(v) => Ok(v),
            Err(Failure::BadReply(msg)) => Err(self.fail(msg)),
            Err(Failure::Lost(msg)) => {
                if let Some(p) = slot.proc.take() {
                    p.kill();
                }
                Err(self.fail(msg))
            }
        }
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        for slot in &mut self.slots {
            let slot = slot.get_mut().unwrap_or_else(|e| e.into_inner());
            if let Some(p) = slot.proc.take() {
                p.kill();
            }
        }
    }
}
