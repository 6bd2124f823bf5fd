//! Single runs and the two comparison suites, plus their output files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use crate::config::{CacheSetup, ScenarioConfig};
use crate::error::Error;
use crate::metrics::{fmt_ratio, summary_csv, MetricsLedger, RunSummary};
use crate::model::UserId;
use crate::sim::{ConsistencyViolation, Simulation};
use crate::social::StrategyKind;
use crate::workload::{TraceAction, TraceEvent, TraceGenerator};

#[derive(Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub ledger: MetricsLedger,
    pub violations: Vec<ConsistencyViolation>,
    pub trace_events: u64,
}

/// Resolved settings of one invocation, written next to its outputs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub config: ScenarioConfig,
    pub output_dir: PathBuf,
}

impl RunManifest {
    pub fn run_id(&self) -> String {
        self.config.run_id()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# run_id = {}", self.run_id());
        let path = self
            .config_path
            .as_ref()
            .map_or("(defaults)".to_string(), |p| p.display().to_string());
        let _ = writeln!(out, "# config_path = {path}");
        out.push_str(&self.config.render());
        out
    }
}

/// Every user named in a trace, sorted.
pub fn trace_users(trace: &[TraceEvent]) -> Vec<UserId> {
    let mut users = BTreeSet::new();
    for e in trace {
        users.insert(e.actor.clone());
        match &e.action {
            TraceAction::Post { key, .. } | TraceAction::Lookup { key } => {
                users.insert(key.owner().clone());
            }
            TraceAction::FriendRequest { target } => {
                users.insert(target.clone());
            }
        }
    }
    users.into_iter().collect()
}

/// Runs one scenario on the generated trace, or on `trace` if given.
pub fn run_scenario(cfg: &ScenarioConfig, label: &str, trace: Option<&[TraceEvent]>) -> Result<RunOutput, Error> {
    cfg.validate()?;
    let sim = match trace {
        Some(events) => {
            let mut sim = Simulation::new(cfg, &trace_users(events));
            sim.run(events.iter().cloned())?;
            sim
        }
        None => {
            let gen = TraceGenerator::new(cfg)?;
            let mut sim = Simulation::new(cfg, &gen.user_ids());
            sim.run(gen)?;
            sim
        }
    };
    let totals = sim.totals();
    let violations = sim.consistency_violations();
    let summary = RunSummary {
        label: label.to_string(),
        strategy: cfg.strategy.kind.to_string(),
        cache_setup: cfg.cache_setup.to_string(),
        seed: cfg.seed,
        run_id: cfg.run_id(),
        trace_hash: sim.trace_hash(),
        counters: totals.counters,
        social_cache_items: totals.social_cache_items,
        current_cache_items: totals.current_cache_items,
        max_channels: totals.max_channels,
        max_muc: totals.max_muc,
    };
    let trace_events = sim.trace_events();
    let ledger = sim.into_ledger();
    Ok(RunOutput {
        summary,
        ledger,
        violations,
        trace_events,
    })
}

/// Runs the given configurations concurrently, one thread each; results
/// come back in input order.
pub fn run_all(
    runs: &[(String, ScenarioConfig)],
    trace: Option<&[TraceEvent]>,
) -> Result<Vec<RunOutput>, Error> {
    thread::scope(|scope| {
        let handles: Vec<_> = runs
            .iter()
            .map(|(label, cfg)| scope.spawn(move || run_scenario(cfg, label, trace)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `metrics.csv` and `summary.csv` for one run in `dir`.
pub fn write_run(dir: &Path, run: &RunOutput) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    run.ledger.export_csv(&dir.join("metrics.csv"))?;
    write(&dir.join("summary.csv"), &summary_csv([&run.summary]))
}

pub fn write_manifest(manifest: &RunManifest) -> Result<(), Error> {
    write(&manifest.output_dir.join("manifest.txt"), &manifest.render())
}

/// Cache/overlay split per strategy, social cache only.
pub fn compare_strategies(cfg: &ScenarioConfig, trace: Option<&[TraceEvent]>) -> Result<Vec<RunOutput>, Error> {
    let runs: Vec<(String, ScenarioConfig)> = StrategyKind::ALL
        .iter()
        .map(|&kind| {
            let mut c = cfg.clone();
            c.strategy.kind = kind;
            c.cache_setup = CacheSetup::SocialOnly;
            (kind.label().to_string(), c)
        })
        .collect();
    run_all(&runs, trace)
}

/// The four cache settings under the social score strategy.
pub fn compare_caches(cfg: &ScenarioConfig, trace: Option<&[TraceEvent]>) -> Result<Vec<RunOutput>, Error> {
    let runs: Vec<(String, ScenarioConfig)> = CacheSetup::ALL
        .iter()
        .map(|&setup| {
            let mut c = cfg.clone();
            c.strategy.kind = StrategyKind::SocialScore;
            c.cache_setup = setup;
            (setup.label().to_string(), c)
        })
        .collect();
    run_all(&runs, trace)
}

pub const STRATEGY_COMPARISON_HEADER: &str = "strategy,cache_replies,overlay_replies,total_requests,hit_ratio";
pub const CACHE_COMPARISON_HEADER: &str = "cache_setup,social_hits,current_hits,overlay_replies,total_requests,hit_ratio,items_in_cache,responses_per_item";

pub fn strategy_comparison_csv(runs: &[RunOutput]) -> String {
    let mut out = format!("{STRATEGY_COMPARISON_HEADER}\n");
    for r in runs {
        let s = &r.summary;
        let c = &s.counters;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.strategy,
            c.cache_replies(),
            c.overlay_replies,
            c.total_requests,
            fmt_ratio(s.cache_hit_ratio())
        );
    }
    out
}

pub fn cache_comparison_csv(runs: &[RunOutput]) -> String {
    let mut out = format!("{CACHE_COMPARISON_HEADER}\n");
    for r in runs {
        let s = &r.summary;
        let c = &s.counters;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.cache_setup,
            c.social_hits,
            c.current_hits,
            c.overlay_replies,
            c.total_requests,
            fmt_ratio(s.cache_hit_ratio()),
            s.items_in_cache(),
            fmt_ratio(s.responses_per_item())
        );
    }
    out
}

/// Writes each run under `dir/<label>/`, the merged `summary.csv` and
/// `comparison.csv` in `dir`.
pub fn write_comparison(dir: &Path, runs: &[RunOutput], comparison: &str) -> Result<(), Error> {
    for r in runs {
        write_run(&dir.join(&r.summary.label), r)?;
    }
    write(&dir.join("summary.csv"), &summary_csv(runs.iter().map(|r| &r.summary)))?;
    write(&dir.join("comparison.csv"), comparison)
}

/// Fixed-width rendering of a comparison CSV for terminals.
pub fn render_table(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.first().map_or(0, Vec::len);
    let widths: Vec<usize> = (0..cols)
        .map(|i| rows.iter().map(|r| r.get(i).map_or(0, |c| c.len())).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
