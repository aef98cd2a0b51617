use std::io::Read;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;

use super::{Phase, Sampler, SamplerError};
use crate::param_space::Configuration;

const POLL_INTERVAL: Duration = Duration::from_millis(5);

/// Runs a shell command per measurement and extracts seconds from its output.
///
/// The template may use `{alpha}`, `{cutoff}`, `{order}`, `{nx}`, `{ny}`,
/// `{nz}`, `{timesteps}` and `{phase}`. The first capture group of `parser`
/// applied to standard output must hold the time in seconds.
#[derive(Debug, Clone)]
pub struct ExternalCommandSampler {
    template: String,
    parser: Regex,
    timeout: Duration,
}

impl ExternalCommandSampler {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

    pub fn new(template: impl Into<String>, parser: &str) -> Result<Self, SamplerError> {
        let parser = Regex::new(parser)
            .map_err(|e| SamplerError::Parse(format!("invalid timing regex: {e}")))?;
        if parser.captures_len() < 2 {
            return Err(SamplerError::Parse("timing regex needs one capture group".into()));
        }
        Ok(ExternalCommandSampler { template: template.into(), parser, timeout: Self::DEFAULT_TIMEOUT })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn run(&self, command: &str) -> Result<String, SamplerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SamplerError::Spawn(format!("`{command}`: {e}")))?;

        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = thread::spawn(move || {
            let mut buf = String::new();
            stdout.read_to_string(&mut buf).map(|_| buf)
        });
        let err_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(SamplerError::Spawn(format!(
                        "`{command}` timed out after {:.1} s",
                        self.timeout.as_secs_f64()
                    )));
                }
                Ok(None) => thread::sleep(POLL_INTERVAL),
                Err(e) => return Err(SamplerError::Spawn(format!("`{command}`: {e}"))),
            }
        };
        let stdout = out_reader
            .join()
            .expect("stdout reader")
            .map_err(|e| SamplerError::Spawn(format!("reading output of `{command}`: {e}")))?;
        let stderr = err_reader.join().expect("stderr reader");
        if !status.success() {
            let tail: String = stderr.lines().last().unwrap_or_default().chars().take(200).collect();
            return Err(SamplerError::Spawn(format!("`{command}` exited with {status}: {tail}")));
        }
        Ok(stdout)
    }

    fn parse(&self, output: &str) -> Result<f64, SamplerError> {
        let caps = self
            .parser
            .captures(output)
            .ok_or_else(|| SamplerError::Parse(format!("no match for `{}`", self.parser.as_str())))?;
        let text = caps.get(1).map(|m| m.as_str()).unwrap_or_default();
        let seconds: f64 = text
            .trim()
            .parse()
            .map_err(|_| SamplerError::Parse(format!("`{text}` is not a number")))?;
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(SamplerError::NonPositiveTime(seconds));
        }
        Ok(seconds)
    }
}

/// Shortest decimal form with at most six fractional digits.
fn format_value(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

pub fn render_template(template: &str, config: &Configuration, phase: Phase, timesteps: u32) -> String {
    template
        .replace("{alpha}", &format_value(config.alpha))
        .replace("{cutoff}", &format_value(config.cutoff))
        .replace("{order}", &config.order.to_string())
        .replace("{nx}", &config.grid.nx.to_string())
        .replace("{ny}", &config.grid.ny.to_string())
        .replace("{nz}", &config.grid.nz.to_string())
        .replace("{timesteps}", &timesteps.to_string())
        .replace("{phase}", phase.as_str())
        .replace("{variant}", config.variant.as_str())
}

impl Sampler for ExternalCommandSampler {
    fn measure(
        &self,
        config: &Configuration,
        phase: Phase,
        timesteps: u32,
        _repeat: u32,
    ) -> Result<f64, SamplerError> {
        let command = render_template(&self.template, config, phase, timesteps);
        let output = self.run(&command)?;
        self.parse(&output)
    }

    fn concurrent(&self) -> bool {
        true
    }
}
