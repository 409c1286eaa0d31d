//! Running a target on one input and classifying the result.

use std::io::Write;
use std::process::{Command, ExitStatus, Stdio};
use std::time::Duration;

use anyhow::{bail, Context};
use serde::Serialize;
use wait_timeout::ChildExt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Valid,
    Invalid,
    Crash,
    Timeout,
}

impl Outcome {
    pub fn from_status(status: ExitStatus) -> Outcome {
        #[cfg(unix)]
        {
            use std::os::unix::process::ExitStatusExt;
            if status.signal().is_some() {
                return Outcome::Crash;
            }
        }
        if status.success() {
            Outcome::Valid
        } else {
            Outcome::Invalid
        }
    }

    pub fn is_finding(self) -> bool {
        matches!(self, Outcome::Crash | Outcome::Timeout)
    }
}

/// Placeholder in a target command line that is replaced by an input file path.
pub const PATH_TOKEN: &str = "{}";

/// A target command. Inputs go to stdin unless an argument contains `{}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub argv: Vec<String>,
}

impl Target {
    /// Splits on whitespace; no shell quoting.
    pub fn parse(cmd: &str) -> anyhow::Result<Target> {
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            bail!("empty target command");
        }
        Ok(Target { argv })
    }

    pub fn uses_path(&self) -> bool {
        self.argv.iter().any(|a| a.contains(PATH_TOKEN))
    }

    /// Runs the target on `input`. Spawn failures are errors; everything
    /// else is an outcome.
    pub fn run(&self, input: &[u8], timeout: Duration) -> anyhow::Result<Outcome> {
        let file = if self.uses_path() {
            let mut f = tempfile::NamedTempFile::new().context("creating input file")?;
            f.write_all(input)?;
            f.flush()?;
            Some(f)
        } else {
            None
        };
        let args: Vec<String> = self.argv[1..]
            .iter()
            .map(|a| match &file {
                Some(f) => a.replace(PATH_TOKEN, &f.path().to_string_lossy()),
                None => a.clone(),
            })
            .collect();
        let mut cmd = Command::new(&self.argv[0]);
        cmd.args(&args)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .stdin(if file.is_some() { Stdio::null() } else { Stdio::piped() });
        let mut child = cmd
            .spawn()
            .with_context(|| format!("cannot start target `{}`", self.argv[0]))?;
        let writer = child.stdin.take().map(|mut stdin| {
            let data = input.to_vec();
            std::thread::spawn(move || {
                let _ = stdin.write_all(&data);
            })
        });
        let outcome = match child.wait_timeout(timeout)? {
            Some(status) => Outcome::from_status(status),
            None => {
                let _ = child.kill();
                let _ = child.wait();
                Outcome::Timeout
            }
        };
        if let Some(w) = writer {
            let _ = w.join();
        }
        Ok(outcome)
    }
}
