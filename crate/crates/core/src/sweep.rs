//! Two-dimensional parameter sweeps with an append-only checkpoint log.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::classify_phase;
use crate::config::RunConfig;
use crate::dynamics::evolve_meanfield;
use crate::error::{Error, Result};
use crate::stability;
use crate::steady::{analytic_critical_pump, solve_from_seed};

/// Version of the CSV/JSON record layout.
pub const FORMAT_VERSION: u32 = 1;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "BEC_CAVITY_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Eta,
    DeltaC,
    U0n,
    G1d,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::DeltaC => "delta_c",
            SweepParam::U0n => "u0n",
            SweepParam::G1d => "g1d",
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepParam::Eta => cfg.eta = value,
            SweepParam::DeltaC => cfg.delta_c = value,
            SweepParam::U0n => cfg.u0n = value,
            SweepParam::G1d => cfg.g1d = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(SweepParam::Eta),
            "delta_c" => Ok(SweepParam::DeltaC),
            "u0n" => Ok(SweepParam::U0n),
            "g1d" => Ok(SweepParam::G1d),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?}; expected one of eta, delta_c, u0n, g1d"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(param: SweepParam, min: f64, max: f64, count: usize) -> Self {
        Self { param, min, max, count }
    }

    /// A single-point axis.
    pub fn fixed(param: SweepParam, value: f64) -> Self {
        Self::new(param, value, value, 1)
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Stability,
    Steady,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "classify" => Ok(Task::Classify),
            "stability" => Ok(Task::Stability),
            "steady" => Ok(Task::Steady),
            other => Err(Error::Config(format!(
                "unknown sweep task {other:?}; expected classify, stability or steady"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    /// Values of every parameter not swept.
    pub base: RunConfig,
    pub tasks: Vec<Task>,
    /// Checkpoint log; the sweep resumes from it when it exists.
    pub checkpoint: Option<PathBuf>,
    /// Points computed between two checkpoint flushes.
    pub checkpoint_interval: usize,
    /// Worker threads; `0` means the environment default.
    pub workers: usize,
}

impl SweepSpec {
    pub fn new(axis1: Axis, axis2: Axis, base: RunConfig, tasks: Vec<Task>) -> Self {
        Self { axis1, axis2, base, tasks, checkpoint: None, checkpoint_interval: 16, workers: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis1.count == 0 || self.axis2.count == 0 {
            return Err(Error::Config("axis counts must be at least 1".into()));
        }
        if self.axis1.param == self.axis2.param {
            return Err(Error::Config(format!("both axes sweep {}", self.axis1.param)));
        }
        if self.tasks.is_empty() {
            return Err(Error::Config("no sweep tasks selected".into()));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::Config("checkpoint_interval must be at least 1".into()));
        }
        self.base.params()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axis1.count * self.axis2.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Configuration of grid point `index` (row-major, `axis1` slowest).
    pub fn point(&self, index: usize) -> RunConfig {
        let (i, j) = (index / self.axis2.count, index % self.axis2.count);
        let mut cfg = self.base.clone();
        self.axis1.param.apply(&mut cfg, self.axis1.value(i));
        self.axis2.param.apply(&mut cfg, self.axis2.value(j));
        cfg
    }

    /// SHA-256 over everything that determines the records.
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            axis1: &'a Axis,
            axis2: &'a Axis,
            base: &'a RunConfig,
            tasks: &'a [Task],
        }
        let body = serde_json::to_vec(&Hashed {
            axis1: &self.axis1,
            axis2: &self.axis2,
            base: &self.base,
            tasks: &self.tasks,
        })
        .expect("sweep spec serializes");
        Sha256::digest(&body).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One grid point. Fields of tasks that were not requested are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub delta_c: f64,
    pub eta: f64,
    pub u0n: f64,
    pub g1d: f64,
    /// Phase label, `ERROR` when the point failed, empty when not classified.
    pub label: String,
    pub ipr: Option<f64>,
    pub mean_intensity: Option<f64>,
    pub dominant_frequency: Option<f64>,
    pub low_confidence: Option<bool>,
    pub max_growth: Option<f64>,
    pub stable: Option<bool>,
    pub steady_theta: Option<f64>,
    pub steady_intensity: Option<f64>,
    pub eta_c_analytic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub format: u32,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub spec: SweepSpec,
    pub records: Vec<SweepRecord>,
}

/// Evaluates the requested tasks at one configuration. Failures are recorded,
/// never propagated.
pub fn evaluate_point(index: usize, cfg: &RunConfig, tasks: &[Task]) -> SweepRecord {
    let mut rec = SweepRecord {
        index,
        delta_c: cfg.delta_c,
        eta: cfg.eta,
        u0n: cfg.u0n,
        g1d: cfg.g1d,
        label: String::new(),
        ipr: None,
        mean_intensity: None,
        dominant_frequency: None,
        low_confidence: None,
        max_growth: None,
        stable: None,
        steady_theta: None,
        steady_intensity: None,
        eta_c_analytic: None,
        error: None,
    };
    let mut errors = Vec::new();
    let p = match cfg.params() {
        Ok(p) => p,
        Err(e) => {
            rec.label = "ERROR".into();
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.eta_c_analytic = analytic_critical_pump(&p);

    if tasks.contains(&Task::Classify) {
        let outcome = evolve_meanfield(&cfg.initial_state(), &p, &cfg.integrator())
            .and_then(|traj| classify_phase(&traj, &cfg.rules()));
        match outcome {
            Ok(c) => {
                rec.label = c.label.to_string();
                rec.ipr = c.ipr;
                rec.mean_intensity = Some(c.mean_intensity);
                rec.dominant_frequency = c.dominant_frequency;
                rec.low_confidence = Some(c.low_confidence);
            }
            Err(e) => {
                rec.label = "ERROR".into();
                errors.push(format!("classify: {e}"));
            }
        }
    }

    if tasks.contains(&Task::Steady) || tasks.contains(&Task::Stability) {
        match solve_from_seed(&p, cfg.steady_branch >= 0, &cfg.imaginary_time()) {
            Ok(ss) => {
                rec.steady_theta = Some(ss.theta());
                rec.steady_intensity = Some(ss.a.norm_sqr());
                if tasks.contains(&Task::Stability) {
                    match stability::analyze(&ss, &p) {
                        Ok(r) => {
                            rec.max_growth = Some(r.max_growth);
                            rec.stable = Some(r.stable);
                        }
                        Err(e) => errors.push(format!("stability: {e}")),
                    }
                }
            }
            Err(e) => errors.push(format!("steady: {e}")),
        }
    }

    if !errors.is_empty() {
        rec.label = "ERROR".into();
        rec.error = Some(errors.join("; "));
    }
    rec
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config_hash: String,
    points: usize,
}

/// Reads the records of an existing checkpoint, verifying its header. A
/// truncated last line (an interrupted write) is ignored.
fn read_checkpoint(path: &Path, hash: &str) -> Result<Vec<SweepRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header: CheckpointHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?)
            .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?,
        None => return Ok(Vec::new()),
    };
    if header.config_hash != hash {
        return Err(Error::ResumeMismatch { expected: hash.to_string(), found: header.config_hash });
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        match serde_json::from_str::<SweepRecord>(&line) {
            Ok(r) => records.push(r),
            Err(_) => break,
        }
    }
    Ok(records)
}

/// Rewrites the log with its header and the surviving records, dropping any
/// torn line, and leaves it open for appending.
fn reopen_checkpoint(path: &Path, hash: &str, points: usize, kept: &[&SweepRecord]) -> Result<File> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        let header = CheckpointHeader { config_hash: hash.to_string(), points };
        writeln!(f, "{}", serde_json::to_string(&header)?)?;
        for r in kept {
            writeln!(f, "{}", serde_json::to_string(r)?)?;
        }
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(OpenOptions::new().append(true).open(path)?)
}

/// Worker count from the environment, falling back to the available cores.
pub fn default_workers() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs every grid point of `spec`, resuming from its checkpoint if present.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let workers = if spec.workers == 0 { default_workers() } else { spec.workers };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let hash = spec.config_hash();
    let total = spec.len();

    let mut done: Vec<Option<SweepRecord>> = vec![None; total];
    let mut log = None;
    if let Some(path) = &spec.checkpoint {
        let existing = if path.exists() { read_checkpoint(path, &hash)? } else { Vec::new() };
        for r in existing {
            if r.index < total {
                let slot = r.index;
                done[slot] = Some(r);
            }
        }
        let kept: Vec<&SweepRecord> = done.iter().flatten().collect();
        log = Some(reopen_checkpoint(path, &hash, total, &kept)?);
    }

    let pending: Vec<usize> = (0..total).filter(|&i| done[i].is_none()).collect();
    for chunk in pending.chunks(spec.checkpoint_interval) {
        let computed: Vec<SweepRecord> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&i| evaluate_point(i, &spec.point(i), &spec.tasks))
                .collect()
        });
        if let Some(f) = log.as_mut() {
            for r in &computed {
                writeln!(f, "{}", serde_json::to_string(r)?)?;
            }
            f.flush()?;
        }
        for r in computed {
            let slot = r.index;
            done[slot] = Some(r);
        }
    }

    let records = done.into_iter().map(|r| r.expect("every point computed")).collect();
    Ok(SweepResult {
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            format: FORMAT_VERSION,
            seed: spec.base.seed,
            config_hash: hash,
        },
        spec: spec.clone(),
        records,
    })
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Column names of [`write_csv`].
pub const CSV_COLUMNS: [&str; 16] = [
    "index",
    "delta_c",
    "eta",
    "u0n",
    "g1d",
    "label",
    "ipr",
    "mean_intensity",
    "dominant_frequency",
    "low_confidence",
    "max_growth",
    "stable",
    "steady_theta",
    "steady_intensity",
    "eta_c_analytic",
    "error",
];

/// Writes the records as CSV preceded by a `#` provenance line.
pub fn write_csv<W: Write>(result: &SweepResult, mut w: W) -> Result<()> {
    let p = &result.provenance;
    writeln!(
        w,
        "# format={} version={} seed={} config_hash={}",
        p.format, p.version, p.seed, p.config_hash
    )?;
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in &result.records {
        let error = r.error.as_deref().unwrap_or("").replace('"', "'");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"",
            r.index,
            r.delta_c,
            r.eta,
            r.u0n,
            r.g1d,
            r.label,
            opt(&r.ipr),
            opt(&r.mean_intensity),
            opt(&r.dominant_frequency),
            opt(&r.low_confidence),
            opt(&r.max_growth),
            opt(&r.stable),
            opt(&r.steady_theta),
            opt(&r.steady_intensity),
            opt(&r.eta_c_analytic),
            error
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write>(result: &SweepResult, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, result)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_base() -> RunConfig {
        RunConfig { n_max: 4, grid_points: 16, ..RunConfig::default() }
    }

    fn steady_spec() -> SweepSpec {
        SweepSpec::new(
            Axis::new(SweepParam::DeltaC, 8.0, 12.0, 3),
            Axis::new(SweepParam::Eta, 2.0, 6.0, 4),
            quick_base(),
            vec![Task::Steady, Task::Stability],
        )
    }

    #[test]
    fn axis_values_are_inclusive() {
        let a = Axis::new(SweepParam::Eta, 2.0, 18.0, 12);
        let v = a.values();
        assert_eq!(v.len(), 12);
        assert_eq!(v[0], 2.0);
        assert_eq!(v[11], 18.0);
        assert_eq!(Axis::fixed(SweepParam::G1d, 0.3).values(), vec![0.3]);
    }

    #[test]
    fn points_are_row_major() {
        let spec = steady_spec();
        let cfg = spec.point(5);
        assert_eq!(cfg.delta_c, 10.0);
        assert!((cfg.eta - (2.0 + 4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let mut spec = steady_spec();
        spec.axis2.param = SweepParam::DeltaC;
        assert!(spec.validate().is_err());
        let mut spec = steady_spec();
        spec.tasks.clear();
        assert!(spec.validate().is_err());
        assert!("kappa".parse::<SweepParam>().is_err());
        assert_eq!("u0n".parse::<SweepParam>().unwrap(), SweepParam::U0n);
    }

    #[test]
    fn hash_ignores_scheduling_fields() {
        let a = steady_spec();
        let mut b = a.clone();
        b.workers = 3;
        b.checkpoint_interval = 1;
        b.checkpoint = Some(PathBuf::from("/tmp/x"));
        assert_eq!(a.config_hash(), b.config_hash());
        b.base.kappa = 9.0;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let mut one = steady_spec();
        one.workers = 1;
        let mut two = steady_spec();
        two.workers = 2;
        assert_eq!(run_sweep(&one).unwrap().records, run_sweep(&two).unwrap().records);
    }

    #[test]
    fn failed_points_are_labelled() {
        let mut spec = steady_spec();
        spec.base.g1d = 0.2;
        let res = run_sweep(&spec).unwrap();
        assert!(res.records.iter().all(|r| r.label == "ERROR" && r.error.is_some()));
    }

    #[test]
    fn resume_after_interruption_reproduces_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.jsonl");
        let mut spec = steady_spec();
        spec.checkpoint = Some(path.clone());
        spec.checkpoint_interval = 5;
        let full = run_sweep(&spec).unwrap();

        // Keep the header and the first five records, plus half a line.
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let mut partial = lines[..6].join("\n");
        partial.push('\n');
        partial.push_str(&lines[6][..lines[6].len() / 2]);
        std::fs::write(&path, partial).unwrap();

        let resumed = run_sweep(&spec).unwrap();
        assert_eq!(full, resumed);
    }

    #[test]
    fn checkpoint_of_other_config_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.jsonl");
        let mut spec = steady_spec();
        spec.checkpoint = Some(path.clone());
        run_sweep(&spec).unwrap();
        spec.base.kappa = 8.0;
        assert!(matches!(run_sweep(&spec), Err(Error::ResumeMismatch { .. })));
    }

    #[test]
    fn csv_has_fixed_columns() {
        let res = run_sweep(&steady_spec()).unwrap();
        let mut out = Vec::new();
        write_csv(&res, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# format=1"));
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.count(), 12);
        let mut json = Vec::new();
        write_json(&res, &mut json).unwrap();
        let back: SweepResult = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, res);
    }
}
