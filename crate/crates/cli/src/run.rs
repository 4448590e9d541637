use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ddlab_core::ensemble_lab::with_threads;
use ddlab_core::Error as CoreError;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ConfigErrorKind, ConfigErrors, RunConfig};
use crate::registry::{builtin, Registry};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "DDLAB_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "ddlab-runs";
pub const MANIFEST_FILE: &str = "manifest.txt";
const CONFIG_MARKER: &str = "--- config ---";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigErrors),
    Core(CoreError),
    Io(String),
}

impl RunError {
    /// A config problem found while building a run, with no line attached.
    pub fn invalid(message: impl Into<String>) -> Self {
        RunError::Config(ConfigErrors(vec![ConfigError {
            line: 0,
            kind: ConfigErrorKind::Invalid,
            message: message.into(),
        }]))
    }

    /// 2 config, 3 divergence, 4 numerical failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                CoreError::Divergence { .. } => 3,
                CoreError::Quadrature { .. }
                | CoreError::RootFinding(_)
                | CoreError::KernelNotPsd
                | CoreError::DegenerateMeasure(_) => 4,
                _ => 2,
            },
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error:\n{e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Core(e)
    }
}

impl From<ConfigErrors> for RunError {
    fn from(e: ConfigErrors) -> Self {
        RunError::Config(e)
    }
}

/// Files produced by a run, in creation order.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, content: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), content.into()));
    }

    pub fn files(&self) -> &[(String, Vec<u8>)] {
        &self.files
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub kind: String,
    /// SHA-256 of the normalized config.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub threads: Option<usize>,
    pub dry_run: bool,
    /// `(file name, SHA-256)`.
    pub outputs: Vec<(String, String)>,
    pub config: String,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind = {}", self.kind);
        let _ = writeln!(out, "config_hash = {}", self.config_hash);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "version = {}", self.version);
        let _ = writeln!(out, "wall_time_s = {:.3}", self.wall_time_s);
        let threads = self.threads.map(|t| t.to_string()).unwrap_or_else(|| "auto".into());
        let _ = writeln!(out, "threads = {threads}");
        let _ = writeln!(out, "dry_run = {}", self.dry_run);
        for (name, hash) in &self.outputs {
            let _ = writeln!(out, "output = {name} {hash}");
        }
        let _ = writeln!(out, "{CONFIG_MARKER}");
        out.push_str(&self.config);
        out
    }

    /// The normalized config embedded in a manifest's text.
    pub fn embedded_config(text: &str) -> Option<&str> {
        let i = text.find(CONFIG_MARKER)?;
        Some(text[i + CONFIG_MARKER.len()..].trim_start_matches('\n'))
    }

    pub fn output_hash(&self, name: &str) -> Option<&str> {
        self.outputs.iter().find(|(n, _)| n == name).map(|(_, h)| h.as_str())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub dry_run: bool,
    /// Output directory; derived from the output root when absent.
    pub out_dir: Option<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// `[output] dir` under `root` (or as given, if absolute), else
/// `<kind>-<config hash prefix>`.
pub fn out_dir_under(cfg: &RunConfig, root: &Path) -> PathBuf {
    let hash = sha256_hex(cfg.normalized().as_bytes());
    let dir = cfg
        .output()
        .opt_str("dir")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("{}-{}", cfg.kind, &hash[..12])));
    root.join(dir)
}

/// Prepares and runs `cfg` without touching the file system.
pub fn execute(registry: &Registry, cfg: &RunConfig, threads: Option<usize>) -> Result<Outputs, RunError> {
    let experiment = registry
        .experiment(&cfg.kind)
        .ok_or_else(|| RunError::invalid(format!("unknown kind `{}`", cfg.kind)))?;
    let job = experiment.prepare(cfg)?;
    let mut out = Outputs::default();
    with_threads(threads.or(cfg.threads), || job.run(&mut out))??;
    Ok(out)
}

/// Runs `cfg`, writes its outputs and manifest, and returns the manifest.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunManifest, RunError> {
    run_with(&builtin(), cfg, opts)
}

pub fn run_with(registry: &Registry, cfg: &RunConfig, opts: &RunOptions) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let experiment = registry
        .experiment(&cfg.kind)
        .ok_or_else(|| RunError::invalid(format!("unknown kind `{}`", cfg.kind)))?;
    let out = if opts.dry_run {
        experiment.prepare(cfg)?;
        Outputs::default()
    } else {
        execute(registry, cfg, opts.threads)?
    };
    let dir = opts.out_dir.clone().unwrap_or_else(|| out_dir_under(cfg, &output_root()));
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut outputs = Vec::with_capacity(out.files().len());
    for (name, content) in out.files() {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        outputs.push((name.clone(), sha256_hex(content)));
    }
    let config = cfg.normalized();
    let manifest = RunManifest {
        kind: cfg.kind.clone(),
        config_hash: sha256_hex(config.as_bytes()),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        threads: opts.threads.or(cfg.threads),
        dry_run: opts.dry_run,
        outputs,
        config,
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_text()).map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}
