//! External pairwise scorers. A plugin is a command that receives a manifest
//! path, where each line reads `<index> <gt_path> <pred_path>`, and prints
//! one `<index> <score>` line per pair on stdout.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use alphabench_core::metrics::Direction;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn default_timeout() -> f64 {
    300.0
}

/// A declared plugin. `command` is split on whitespace; a `{manifest}`
/// argument is replaced by the manifest path, otherwise the path is appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginSpec {
    pub name: String,
    pub command: String,
    pub direction: Direction,
    /// Whether concurrent invocations are safe.
    #[serde(default)]
    pub reentrant: bool,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

impl PluginSpec {
    pub fn new(name: impl Into<String>, command: impl Into<String>, direction: Direction) -> Self {
        Self {
            name: name.into(),
            command: command.into(),
            direction,
            reentrant: false,
            timeout_secs: default_timeout(),
        }
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Plugin {
            name: self.name.clone(),
            message: message.into(),
        }
    }

    fn argv(&self, manifest: &Path) -> Result<Vec<String>> {
        let manifest = manifest.to_string_lossy();
        let mut args: Vec<String> = self.command.split_whitespace().map(str::to_owned).collect();
        if args.is_empty() {
            return Err(Error::Input(format!("plugin {}: empty command", self.name)));
        }
        let mut substituted = false;
        for a in &mut args {
            if a.contains("{manifest}") {
                *a = a.replace("{manifest}", &manifest);
                substituted = true;
            }
        }
        if !substituted {
            args.push(manifest.into_owned());
        }
        Ok(args)
    }
}

pub fn write_manifest(path: &Path, pairs: &[(PathBuf, PathBuf)]) -> Result<()> {
    let mut text = String::new();
    for (i, (gt, pred)) in pairs.iter().enumerate() {
        for p in [gt, pred] {
            if p.to_string_lossy().chars().any(char::is_whitespace) {
                return Err(Error::Input(format!(
                    "plugin manifest paths may not contain whitespace: {}",
                    p.display()
                )));
            }
        }
        text.push_str(&format!("{i} {} {}\n", gt.display(), pred.display()));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a manifest back into `(gt, pred)` pairs in index order.
pub fn read_manifest(path: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (line_no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            [i, gt, pred] if i.parse::<usize>().ok() == Some(pairs.len()) => pairs.push((gt.into(), pred.into())),
            _ => {
                return Err(Error::format(
                    path,
                    format!("line {}: expected \"<index> <gt> <pred>\"", line_no + 1),
                ))
            }
        }
    }
    Ok(pairs)
}

fn parse_scores(spec: &PluginSpec, stdout: &str, n: usize) -> Result<Vec<f64>> {
    let mut scores = vec![None; n];
    for line in stdout.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let mut f = line.split_whitespace();
        let (Some(i), Some(s), None) = (f.next(), f.next(), f.next()) else {
            return Err(spec.fail(format!("malformed output line {line:?}")));
        };
        let i: usize = i.parse().map_err(|_| spec.fail(format!("bad index in {line:?}")))?;
        let s: f64 = s.parse().map_err(|_| spec.fail(format!("bad score in {line:?}")))?;
        if !s.is_finite() {
            return Err(spec.fail(format!("non-finite score for pair {i}")));
        }
        let slot = scores
            .get_mut(i)
            .ok_or_else(|| spec.fail(format!("index {i} out of range")))?;
        if slot.replace(s).is_some() {
            return Err(spec.fail(format!("pair {i} scored twice")));
        }
    }
    scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| spec.fail(format!("no score for pair {i}"))))
        .collect()
}

fn drain<R: Read + Send + 'static>(r: Option<R>) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut s = String::new();
        if let Some(mut r) = r {
            let mut buf = Vec::new();
            let _ = r.read_to_end(&mut buf);
            s = String::from_utf8_lossy(&buf).into_owned();
        }
        s
    })
}

/// Scores `pairs` with one plugin invocation, using `workdir` for the
/// manifest.
pub fn run_plugin(spec: &PluginSpec, pairs: &[(PathBuf, PathBuf)], workdir: &Path) -> Result<Vec<f64>> {
    let manifest = workdir.join("manifest.txt");
    write_manifest(&manifest, pairs)?;
    let argv = spec.argv(&manifest)?;
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| spec.fail(format!("cannot start {:?}: {e}", argv[0])))?;
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let deadline = Instant::now() + Duration::from_secs_f64(spec.timeout_secs.max(0.0));
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(spec.fail(format!("timed out after {} s", spec.timeout_secs)));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(spec.fail(format!("wait failed: {e}"))),
        }
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if !status.success() {
        let tail: String = stderr
            .lines()
            .rev()
            .take(5)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect::<Vec<_>>()
            .join("\n");
        return Err(spec.fail(format!("exited with {status}: {tail}")));
    }
    parse_scores(spec, &stdout, pairs.len())
}

/// Writes scores in the plugin output format.
pub fn write_scores<W: Write>(mut w: W, scores: &[f64]) -> std::io::Result<()> {
    for (i, s) in scores.iter().enumerate() {
        writeln!(w, "{i} {s}")?;
    }
    Ok(())
}
