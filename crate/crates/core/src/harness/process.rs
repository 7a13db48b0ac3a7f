//! Child-process execution under a deadline, an address-space cap and an
//! output cap. Each child leads its own process group so a timeout kills
//! everything it spawned.

use std::io::{Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

const POLL: Duration = Duration::from_millis(2);
const STDERR_KEEP: usize = 2048;

#[derive(Debug)]
pub(crate) enum Exit {
    Code(i32),
    Signal(i32),
}

#[derive(Debug)]
pub(crate) enum ProcStatus {
    Exited(Exit),
    TimedOut,
    OutputExceeded,
    SpawnFailed(String),
}

#[derive(Debug)]
pub(crate) struct ProcResult {
    pub status: ProcStatus,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

impl ProcResult {
    pub fn success(&self) -> bool {
        matches!(self.status, ProcStatus::Exited(Exit::Code(0)))
    }

    /// Short description for error details.
    pub fn describe(&self) -> String {
        let tail = String::from_utf8_lossy(&self.stderr);
        let tail = tail.trim();
        let what = match &self.status {
            ProcStatus::Exited(Exit::Code(c)) => format!("exit status {c}"),
            ProcStatus::Exited(Exit::Signal(s)) => format!("killed by signal {s}"),
            ProcStatus::TimedOut => "timed out".to_string(),
            ProcStatus::OutputExceeded => "output limit exceeded".to_string(),
            ProcStatus::SpawnFailed(e) => format!("spawn failed: {e}"),
        };
        if tail.is_empty() {
            what
        } else {
            format!("{what}: {tail}")
        }
    }
}

pub(crate) struct Run<'a> {
    pub argv: &'a [String],
    pub cwd: &'a Path,
    pub stdin: &'a [u8],
    pub deadline: Instant,
    pub memory_cap: u64,
    pub output_cap: u64,
}

fn kill_group(child: &Child) {
    // The child is its own group leader, so -pid addresses the whole tree.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
}

fn reader<R: Read + Send + 'static>(
    mut source: R,
    cap: u64,
    keep: usize,
    overflow: Option<Arc<AtomicBool>>,
) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut total: u64 = 0;
        let mut buf = [0u8; 8192];
        loop {
            match source.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    total += n as u64;
                    if total > cap {
                        if let Some(flag) = &overflow {
                            flag.store(true, Ordering::SeqCst);
                        }
                    }
                    let room = keep.saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
            }
        }
        kept
    })
}

pub(crate) fn run(spec: Run<'_>) -> ProcResult {
    let failed = |e: String| ProcResult {
        status: ProcStatus::SpawnFailed(e),
        stdout: Vec::new(),
        stderr: Vec::new(),
    };
    let Some((program, args)) = spec.argv.split_first() else {
        return failed("empty command line".into());
    };
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(spec.cwd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let memory_cap = spec.memory_cap;
    // SAFETY: only async-signal-safe calls between fork and exec.
    unsafe {
        cmd.pre_exec(move || {
            let lim = libc::rlimit {
                rlim_cur: memory_cap as libc::rlim_t,
                rlim_max: memory_cap as libc::rlim_t,
            };
            libc::setrlimit(libc::RLIMIT_AS, &lim);
            let no_core = libc::rlimit { rlim_cur: 0, rlim_max: 0 };
            libc::setrlimit(libc::RLIMIT_CORE, &no_core);
            Ok(())
        });
    }
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => return failed(e.to_string()),
    };

    let stdin_bytes = spec.stdin.to_vec();
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = thread::spawn(move || {
        // A child that exits without reading closes the pipe; that is not our error.
        let _ = stdin.write_all(&stdin_bytes);
    });
    let overflow = Arc::new(AtomicBool::new(false));
    let out = reader(
        child.stdout.take().expect("piped stdout"),
        spec.output_cap,
        spec.output_cap as usize,
        Some(overflow.clone()),
    );
    let err = reader(child.stderr.take().expect("piped stderr"), u64::MAX, STDERR_KEEP, None);

    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => {
                break ProcStatus::Exited(match status.code() {
                    Some(c) => Exit::Code(c),
                    None => Exit::Signal(status.signal().unwrap_or(0)),
                })
            }
            Ok(None) => {}
            Err(e) => {
                kill_group(&child);
                let _ = child.wait();
                break ProcStatus::SpawnFailed(e.to_string());
            }
        }
        if overflow.load(Ordering::SeqCst) {
            kill_group(&child);
            let _ = child.wait();
            break ProcStatus::OutputExceeded;
        }
        if Instant::now() >= spec.deadline {
            kill_group(&child);
            let _ = child.wait();
            break ProcStatus::TimedOut;
        }
        thread::sleep(POLL);
    };
    // Reap anything the child left behind so the pipes close.
    kill_group(&child);

    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    let _ = writer.join();
    let status = match status {
        ProcStatus::Exited(_) if overflow.load(Ordering::SeqCst) => ProcStatus::OutputExceeded,
        s => s,
    };
    ProcResult { status, stdout, stderr }
}
