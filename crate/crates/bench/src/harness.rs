//! Solve matrices over instance files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;

use ctop_core::instance_io::{read_instance, write_atomic};
use ctop_core::preprocess::ViForm;
use ctop_core::solver::{solve, Mode, ModelKind, SolveConfig};
use ctop_core::{Graph, Instance};

use crate::profile::{emit_profile, log_grid, write_profile_csv, ProfilePoint};
use crate::record::{to_jsonl, write_csv, RunRecord, RunStatus};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlagSet {
    pub checks: bool,
    pub domred: bool,
    pub sym: bool,
    pub vi: Option<ViForm>,
}

pub const PRESETS: [&str; 7] = ["plain", "checks", "domred", "sym", "full", "vi-span", "vi-pairwise"];

impl FlagSet {
    pub fn preset(name: &str) -> Option<FlagSet> {
        let f = |checks, domred, sym, vi| FlagSet { checks, domred, sym, vi };
        Some(match name {
            "plain" => f(false, false, false, None),
            "checks" => f(true, false, false, None),
            "domred" => f(true, true, false, None),
            "sym" => f(true, true, true, None),
            "full" => f(true, true, true, Some(ViForm::Span)),
            "vi-span" => f(true, true, false, Some(ViForm::Span)),
            "vi-pairwise" => f(true, true, false, Some(ViForm::Pairwise)),
            _ => return None,
        })
    }

    pub fn vi_name(&self) -> &'static str {
        match self.vi {
            None => "off",
            Some(ViForm::Span) => "span",
            Some(ViForm::Pairwise) => "pairwise",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub model: ModelKind,
    pub flags: FlagSet,
}

impl BenchConfig {
    pub fn solve_config(&self, limit: Duration) -> SolveConfig {
        SolveConfig {
            model: self.model,
            use_checks: self.flags.checks,
            use_domain_reduction: self.flags.domred,
            use_symmetry: self.flags.sym,
            use_valid_inequalities: self.flags.vi.is_some(),
            vi_form: self.flags.vi.unwrap_or(ViForm::Span),
            time_limit: limit,
            mode: Mode::FindOne,
            ..SolveConfig::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub instances: Vec<PathBuf>,
    pub configs: Vec<BenchConfig>,
    pub k: usize,
    pub time_limit: Duration,
    pub jobs: usize,
}

#[derive(Clone, Debug, Default)]
pub struct BenchResult {
    /// Instance-major, configurations in the order given.
    pub records: Vec<RunRecord>,
    /// `instance: message` for every unreadable instance.
    pub errors: Vec<String>,
}

/// `*.ctop` files of `dir`, sorted by name.
pub fn discover(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "ctop"))
        .collect();
    out.sort();
    Ok(out)
}

fn instance_id(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

pub fn density(g: &Graph) -> f64 {
    let pairs = g.n() * g.n().saturating_sub(1) / 2;
    if pairs == 0 {
        0.0
    } else {
        g.m() as f64 / pairs as f64
    }
}

pub fn run_one(id: &str, graph: &Graph, k: usize, cfg: &BenchConfig, limit: Duration) -> anyhow::Result<RunRecord> {
    let inst = Instance::new(graph.clone(), k)?;
    let out = solve(&inst, &cfg.solve_config(limit))?;
    Ok(RunRecord {
        instance: id.to_string(),
        n: graph.n(),
        m: graph.m(),
        density: density(graph),
        k,
        model: cfg.model.name().to_string(),
        checks: cfg.flags.checks,
        domred: cfg.flags.domred,
        sym: cfg.flags.sym,
        vi: cfg.flags.vi_name().to_string(),
        status: out.status.into(),
        time_us: out.stats.wall_time.as_micros() as u64,
        choice_points: out.stats.choice_points,
        fails: out.stats.fails,
        fired_check: out.preprocess.check().map(|c| c.label().to_string()),
    })
}

fn error_record(id: &str, k: usize, cfg: &BenchConfig) -> RunRecord {
    RunRecord {
        instance: id.to_string(),
        n: 0,
        m: 0,
        density: 0.0,
        k,
        model: cfg.model.name().to_string(),
        checks: cfg.flags.checks,
        domred: cfg.flags.domred,
        sym: cfg.flags.sym,
        vi: cfg.flags.vi_name().to_string(),
        status: RunStatus::DataError,
        time_us: 0,
        choice_points: 0,
        fails: 0,
        fired_check: None,
    }
}

pub fn run_bench(spec: &BenchSpec) -> BenchResult {
    let mut errors = Vec::new();
    let loaded: Vec<(String, Option<Graph>)> = spec
        .instances
        .iter()
        .map(|p| {
            let id = instance_id(p);
            match read_instance(p) {
                Ok(g) => (id, Some(g)),
                Err(e) => {
                    errors.push(format!("{id}: {e}"));
                    (id, None)
                }
            }
        })
        .collect();
    let tasks: Vec<(usize, usize)> =
        (0..loaded.len()).flat_map(|i| (0..spec.configs.len()).map(move |c| (i, c))).collect();
    let slots: Vec<Mutex<Option<RunRecord>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let failures = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let jobs = spec.jobs.clamp(1, tasks.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, c)) = tasks.get(t) else { break };
                let (id, graph) = &loaded[i];
                let cfg = &spec.configs[c];
                let rec = match graph {
                    Some(g) => run_one(id, g, spec.k, cfg, spec.time_limit).unwrap_or_else(|e| {
                        failures.lock().unwrap().push((t, format!("{id}: {e}")));
                        error_record(id, spec.k, cfg)
                    }),
                    None => error_record(id, spec.k, cfg),
                };
                *slots[t].lock().unwrap() = Some(rec);
            });
        }
    });
    let mut failures = failures.into_inner().unwrap();
    failures.sort();
    errors.extend(failures.into_iter().map(|(_, e)| e));
    let records = slots.into_iter().map(|m| m.into_inner().unwrap().expect("every task ran")).collect();
    BenchResult { records, errors }
}

#[derive(Serialize)]
struct Metadata<'a> {
    started_unix_s: u64,
    finished_unix_s: u64,
    k: usize,
    time_limit_s: f64,
    jobs: usize,
    instances: usize,
    configs: Vec<String>,
    errors: &'a [String],
}

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSONL: &str = "results.jsonl";
pub const PROFILE_CSV: &str = "profile.csv";
pub const METADATA_JSON: &str = "metadata.json";

/// Default profile grid: 4 points per decade from 0.1 ms to the time limit.
pub fn default_grid(limit: Duration) -> Vec<f64> {
    log_grid(1e-4, limit.as_secs_f64().max(1e-4), 4)
}

/// Writes results, profile and run metadata into `out_dir`.
pub fn write_outputs(
    out_dir: &Path,
    spec: &BenchSpec,
    result: &BenchResult,
    started: SystemTime,
) -> anyhow::Result<Vec<ProfilePoint>> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut csv_bytes = Vec::new();
    write_csv(&mut csv_bytes, &result.records)?;
    write_atomic(&out_dir.join(RESULTS_CSV), &csv_bytes)?;
    write_atomic(&out_dir.join(RESULTS_JSONL), to_jsonl(&result.records).as_bytes())?;
    let points = emit_profile(&result.records, &default_grid(spec.time_limit))?;
    let mut prof = Vec::new();
    write_profile_csv(&mut prof, &points)?;
    write_atomic(&out_dir.join(PROFILE_CSV), &prof)?;
    let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut configs: Vec<String> = Vec::new();
    for r in &result.records {
        let l = r.config_label();
        if !configs.contains(&l) {
            configs.push(l);
        }
    }
    let meta = Metadata {
        started_unix_s: unix(started),
        finished_unix_s: unix(SystemTime::now()),
        k: spec.k,
        time_limit_s: spec.time_limit.as_secs_f64(),
        jobs: spec.jobs,
        instances: spec.instances.len(),
        configs,
        errors: &result.errors,
    };
    write_atomic(&out_dir.join(METADATA_JSON), serde_json::to_string_pretty(&meta)?.as_bytes())?;
    Ok(points)
}
