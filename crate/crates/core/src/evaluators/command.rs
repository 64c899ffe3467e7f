//! Runs an external program per configuration.
//!
//! The template is a shell command with `{PARAM}` placeholders. The program
//! must print a measurement-log row (same columns as the log file) on
//! standard output; the last line that parses as a row is used.

use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::{Counter, EvalError, Evaluator};
use crate::metrics::log::{format_row, header, parse_fields};
use crate::metrics::{energy_efficiency, RawMeasurement};
use crate::space::{Configuration, ParameterSpace};

#[derive(Debug, Clone)]
pub struct CommandOptions {
    pub timeout: Option<Duration>,
    /// Parsed rows are appended here; the header is written for new files.
    pub log_path: Option<PathBuf>,
    /// Simultaneous invocations allowed; 1 serializes runs.
    pub parallelism: usize,
}

impl Default for CommandOptions {
    fn default() -> Self {
        CommandOptions {
            timeout: None,
            log_path: None,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Param(usize),
}

#[derive(Debug)]
pub struct CommandEvaluator {
    space: ParameterSpace,
    template: String,
    pieces: Vec<Piece>,
    options: CommandOptions,
    slots: Mutex<usize>,
    freed: Condvar,
    log_lock: Mutex<()>,
    count: Counter,
}

impl CommandEvaluator {
    pub fn new(space: ParameterSpace, template: &str, options: CommandOptions) -> Result<Self, EvalError> {
        if options.parallelism == 0 {
            return Err(EvalError::Setup("parallelism must be at least 1".into()));
        }
        let pieces = parse_template(&space, template)?;
        Ok(CommandEvaluator {
            space,
            template: template.to_string(),
            pieces,
            slots: Mutex::new(options.parallelism),
            options,
            freed: Condvar::new(),
            log_lock: Mutex::new(()),
            count: Counter::default(),
        })
    }

    /// The shell command for a configuration. Categorical values are
    /// substituted by label.
    pub fn render(&self, config: &Configuration) -> Result<String, EvalError> {
        self.space.validate(config).map_err(crate::space::SpaceError::Invalid)?;
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Param(i) => out.push_str(&self.space.parameters()[*i].format_value(config.values()[*i])),
            }
        }
        Ok(out)
    }

    /// Runs the command and returns the parsed row.
    pub fn run(&self, config: &Configuration) -> Result<RawMeasurement, EvalError> {
        let cmd = self.render(config)?;
        let _permit = self.acquire();
        let (status, stdout, stderr) = run_shell(&cmd, self.options.timeout)?;
        let output = format!("$ {cmd}\n--- stdout\n{stdout}--- stderr\n{stderr}");
        match status {
            Some(0) => {}
            Some(code) => {
                return Err(EvalError::Execution {
                    message: format!("exit status {code}"),
                    output,
                })
            }
            None => {
                return Err(EvalError::Execution {
                    message: "terminated by signal or timeout".into(),
                    output,
                })
            }
        }
        let m = stdout
            .lines()
            .rev()
            .filter(|l| !l.trim().is_empty())
            .find_map(|l| {
                let fields: Vec<&str> = l.split(',').map(str::trim).collect();
                parse_fields(&self.space, fields, 0).ok()
            })
            .ok_or_else(|| EvalError::Execution {
                message: "no measurement row in output".into(),
                output: output.clone(),
            })?;
        if m.config != *config {
            return Err(EvalError::Execution {
                message: format!(
                    "row reports {} but {} was requested",
                    self.space.describe(&m.config),
                    self.space.describe(config)
                ),
                output,
            });
        }
        self.append(&m)?;
        Ok(m)
    }

    fn append(&self, m: &RawMeasurement) -> Result<(), EvalError> {
        let Some(path) = &self.options.log_path else {
            return Ok(());
        };
        let _guard = self.log_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(log_io)?;
        let mut text = String::new();
        if file.metadata().map_err(log_io)?.len() == 0 {
            text.push_str(&header(&self.space).join(","));
            text.push('\n');
        }
        text.push_str(&format_row(&self.space, m).join(","));
        text.push('\n');
        file.write_all(text.as_bytes()).map_err(log_io)?;
        Ok(())
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.freed.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }

    pub fn template(&self) -> &str {
        &self.template
    }
}

fn log_io(e: std::io::Error) -> EvalError {
    EvalError::Log(e.into())
}

struct Permit<'a>(&'a CommandEvaluator);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.slots.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

impl Evaluator for CommandEvaluator {
    fn evaluate(&self, config: &Configuration) -> Result<f64, EvalError> {
        self.count.bump();
        Ok(energy_efficiency(&self.run(config)?)?)
    }

    fn evaluation_count(&self) -> u64 {
        self.count.get()
    }

    fn max_concurrency(&self) -> usize {
        self.options.parallelism
    }

    fn describe(&self) -> String {
        format!("command `{}`", self.template)
    }
}

fn parse_template(space: &ParameterSpace, template: &str) -> Result<Vec<Piece>, EvalError> {
    let mut pieces = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let close = rest[open..]
            .find('}')
            .map(|c| open + c)
            .ok_or_else(|| EvalError::Setup(format!("unclosed `{{` in template `{template}`")))?;
        let name = &rest[open + 1..close];
        let index = space.index_of(name).ok_or_else(|| {
            EvalError::Setup(format!("template placeholder `{{{name}}}` is not a parameter of `{}`", space.name()))
        })?;
        if open > 0 {
            pieces.push(Piece::Text(rest[..open].to_string()));
        }
        pieces.push(Piece::Param(index));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest.to_string()));
    }
    Ok(pieces)
}

fn run_shell(cmd: &str, timeout: Option<Duration>) -> Result<(Option<i32>, String, String), EvalError> {
    let spawn_err = |e: std::io::Error| EvalError::Execution {
        message: format!("cannot start shell: {e}"),
        output: format!("$ {cmd}\n"),
    };
    let mut command = Command::new("sh");
    command
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    // own process group, so a timeout can take down grandchildren holding the pipes
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(&mut command, 0);
    let mut child = command.spawn().map_err(spawn_err)?;
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let status = wait(&mut child, timeout).map_err(spawn_err)?;
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    match status {
        Waited::Exited(code) => Ok((code, stdout, stderr)),
        Waited::TimedOut(limit) => Err(EvalError::Execution {
            message: format!("timed out after {limit:?}"),
            output: format!("$ {cmd}\n--- stdout\n{stdout}--- stderr\n{stderr}"),
        }),
    }
}

enum Waited {
    Exited(Option<i32>),
    TimedOut(Duration),
}

fn wait(child: &mut Child, timeout: Option<Duration>) -> std::io::Result<Waited> {
    let Some(limit) = timeout else {
        return Ok(Waited::Exited(child.wait()?.code()));
    };
    let start = Instant::now();
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Waited::Exited(status.code()));
        }
        if start.elapsed() >= limit {
            kill_group(child);
            let _ = child.wait();
            return Ok(Waited::TimedOut(limit));
        }
        thread::sleep(Duration::from_millis(5));
    }
}

fn kill_group(child: &mut Child) {
    #[cfg(unix)]
    {
        let _ = Command::new("kill")
            .args(["-KILL", "--", &format!("-{}", child.id())])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status();
    }
    let _ = child.kill();
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}
