//! The black-box fuzz loop.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmplfuzz_core::engine::{self, ExecOptions, Output};
use tmplfuzz_core::mutation::{index_corpus, random_smart_mutation};
use tmplfuzz_core::templatelang::TemplateUnit;

use crate::outcome::{Outcome, Target};
use crate::stats::Stats;

pub struct FuzzConfig<'a> {
    pub unit: &'a TemplateUnit,
    pub opts: ExecOptions,
    pub target: Target,
    pub count: u64,
    pub duration: Option<Duration>,
    pub timeout: Duration,
    pub jobs: usize,
    pub rng_seed: u64,
    pub out_dir: PathBuf,
    /// Files for smart mutation; when empty every input is generated.
    pub corpus: Vec<(String, Vec<u8>)>,
    /// Interval between progress lines; `None` keeps quiet.
    pub progress: Option<Duration>,
    /// Stop every worker after the first crash or timeout.
    pub stop_on_finding: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub outcome: Outcome,
    pub bin: PathBuf,
    pub seed: PathBuf,
}

#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub stats: Stats,
    pub findings: Vec<Finding>,
}

enum Msg {
    Done(Option<Outcome>),
    Finding(Finding),
    Failed(anyhow::Error),
}

fn persist(dir: &Path, outcome: Outcome, job: usize, iter: u64, out: &Output) -> anyhow::Result<Finding> {
    let kind = match outcome {
        Outcome::Crash => "crash",
        _ => "timeout",
    };
    let stem = format!("{kind}-{job}-{iter:06}");
    let bin = dir.join(format!("{stem}.bin"));
    let seed = dir.join(format!("{stem}.seed"));
    std::fs::write(&bin, &out.file).with_context(|| format!("writing {}", bin.display()))?;
    std::fs::write(&seed, &out.seed).with_context(|| format!("writing {}", seed.display()))?;
    Ok(Finding { outcome, bin, seed })
}

fn worker(cfg: &FuzzConfig<'_>, job: usize, count: u64, findings: &Path, tx: mpsc::Sender<Msg>, start: Instant, stop: &AtomicBool) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(job as u64));
    let (pool, _) = index_corpus(cfg.unit, cfg.corpus.iter().cloned(), &cfg.opts);
    for iter in 0..count {
        if stop.load(Ordering::Relaxed) || cfg.duration.is_some_and(|d| start.elapsed() >= d) {
            break;
        }
        let input = if !pool.files.is_empty() && rng.random_bool(0.5) {
            random_smart_mutation(cfg.unit, &pool, &mut rng, &cfg.opts)
                .ok()
                .map(|(_, out)| out)
        } else {
            engine::generate_random(cfg.unit, rng.random(), &cfg.opts).ok()
        };
        let Some(out) = input else {
            let _ = tx.send(Msg::Done(None));
            continue;
        };
        let outcome = match cfg.target.run(&out.file, cfg.timeout) {
            Ok(o) => o,
            Err(e) => {
                let _ = tx.send(Msg::Failed(e));
                return;
            }
        };
        if outcome.is_finding() {
            if cfg.stop_on_finding {
                stop.store(true, Ordering::Relaxed);
            }
            match persist(findings, outcome, job, iter, &out) {
                Ok(f) => {
                    let _ = tx.send(Msg::Finding(f));
                }
                Err(e) => {
                    let _ = tx.send(Msg::Failed(e));
                    return;
                }
            }
        }
        let _ = tx.send(Msg::Done(Some(outcome)));
    }
}

/// Runs `cfg.jobs` independent loops that share the iteration count.
/// Findings go to `out_dir/findings`, final counters to `out_dir/stats.json`.
pub fn fuzz(cfg: &FuzzConfig<'_>) -> anyhow::Result<FuzzReport> {
    let findings_dir = cfg.out_dir.join("findings");
    std::fs::create_dir_all(&findings_dir)
        .with_context(|| format!("creating {}", findings_dir.display()))?;
    let jobs = cfg.jobs.max(1);
    let start = Instant::now();
    let mut stats = Stats::default();
    let mut findings = Vec::new();
    let mut failure = None;
    let stop = AtomicBool::new(false);
    std::thread::scope(|s| {
        let (tx, rx) = mpsc::channel();
        for job in 0..jobs {
            let share = cfg.count / jobs as u64 + u64::from((job as u64) < cfg.count % jobs as u64);
            let tx = tx.clone();
            let dir = findings_dir.as_path();
            let stop = &stop;
            s.spawn(move || worker(cfg, job, share, dir, tx, start, stop));
        }
        drop(tx);
        let mut last = Instant::now();
        for msg in rx {
            match msg {
                Msg::Done(o) => stats.record(o),
                Msg::Finding(f) => findings.push(f),
                Msg::Failed(e) => {
                    failure.get_or_insert(e);
                }
            }
            if let Some(every) = cfg.progress {
                if last.elapsed() >= every {
                    stats.set_elapsed(start.elapsed());
                    println!("{}", stats.line());
                    last = Instant::now();
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    stats.set_elapsed(start.elapsed());
    if cfg.progress.is_some() {
        println!("{}", stats.line());
    }
    let path = cfg.out_dir.join("stats.json");
    std::fs::write(&path, stats.to_json()).with_context(|| format!("writing {}", path.display()))?;
    Ok(FuzzReport { stats, findings })
}
