//! Run counters, sampled time series and CSV export.

use std::fmt::Write as _;
use std::fs;
use std::ops::AddAssign;
use std::path::Path;

use crate::error::Error;
use crate::model::SimTime;

/// Sampling cadence of the metrics time series: 60 simulated seconds.
pub const DEFAULT_SAMPLE_EVERY_TICKS: u64 = 60_000;

pub const METRICS_HEADER: [&str; 17] = [
    "t_ticks",
    "social_hits",
    "current_hits",
    "overlay_replies",
    "total_requests",
    "hit_ratio",
    "social_cache_items",
    "current_cache_items",
    "muc_size_mean",
    "subscriptions_sent",
    "unsubscriptions_sent",
    "bootstrap_dumps",
    "dispatcher_messages",
    "dht_lookups",
    "dht_puts",
    "bytes_read",
    "bytes_written",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub social_hits: u64,
    pub current_hits: u64,
    pub overlay_replies: u64,
    pub total_requests: u64,
    pub unanswered: u64,
    pub subscriptions_sent: u64,
    pub unsubscriptions_sent: u64,
    pub bootstrap_dumps: u64,
    pub social_updates_sent: u64,
    pub dispatcher_messages: u64,
    pub dht_lookups: u64,
    pub dht_puts: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl AddAssign<&Counters> for Counters {
    fn add_assign(&mut self, o: &Counters) {
        self.social_hits += o.social_hits;
        self.current_hits += o.current_hits;
        self.overlay_replies += o.overlay_replies;
        self.total_requests += o.total_requests;
        self.unanswered += o.unanswered;
        self.subscriptions_sent += o.subscriptions_sent;
        self.unsubscriptions_sent += o.unsubscriptions_sent;
        self.bootstrap_dumps += o.bootstrap_dumps;
        self.social_updates_sent += o.social_updates_sent;
        self.dispatcher_messages += o.dispatcher_messages;
        self.dht_lookups += o.dht_lookups;
        self.dht_puts += o.dht_puts;
        self.bytes_read += o.bytes_read;
        self.bytes_written += o.bytes_written;
    }
}

impl Counters {
    pub fn cache_replies(&self) -> u64 {
        self.social_hits + self.current_hits
    }

    pub fn answered(&self) -> u64 {
        self.cache_replies() + self.overlay_replies
    }

    pub fn scaled(&self, k: u64) -> Counters {
        let mut out = Counters::default();
        for _ in 0..k {
            out += self;
        }
        out
    }

    /// Every request is answered by exactly one tier or counted as unanswered.
    pub fn is_conserved(&self) -> bool {
        self.total_requests == self.answered() + self.unanswered
    }
}

/// Cache replies over total requests, where the total is the conserved sum
/// `social + current + overlay + unanswered`. `None` for an empty run.
pub fn cache_hit_ratio(c: &Counters) -> Option<f64> {
    hit_ratio(c.cache_replies(), c.total_requests)
}

pub fn hit_ratio(cache_replies: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| cache_replies as f64 / total as f64)
}

/// Cache replies per cached item; `None` for an empty cache.
pub fn responses_per_item(cache_replies: u64, items: u64) -> Option<f64> {
    (items > 0).then(|| cache_replies as f64 / items as f64)
}

/// Fixed six-decimal rendering; undefined values become an empty cell.
pub fn fmt_ratio(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    pub name: String,
    pub samples: Vec<(SimTime, f64)>,
}

impl SampledSeries {
    pub fn new(name: impl Into<String>) -> Self {
        SampledSeries {
            name: name.into(),
            samples: Vec::new(),
        }
    }

    /// Appends a sample; sample times must strictly increase.
    pub fn sample(&mut self, now: SimTime, value: f64) {
        if let Some(&(last, _)) = self.samples.last() {
            assert!(now > last, "sample times must strictly increase");
        }
        self.samples.push((now, value));
    }

    pub fn last(&self) -> Option<f64> {
        self.samples.last().map(|&(_, v)| v)
    }

    pub fn max(&self) -> Option<f64> {
        self.samples.iter().map(|&(_, v)| v).reduce(f64::max)
    }
}

/// One sampled snapshot of the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub t: SimTime,
    pub counters: Counters,
    pub social_cache_items: u64,
    pub current_cache_items: u64,
    pub muc_size_mean: f64,
    pub max_channels: usize,
    pub max_muc: usize,
}

impl MetricsRow {
    pub fn hit_ratio(&self) -> Option<f64> {
        cache_hit_ratio(&self.counters)
    }

    fn csv_line(&self, out: &mut String) {
        let c = &self.counters;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{},{},{}",
            self.t.ticks(),
            c.social_hits,
            c.current_hits,
            c.overlay_replies,
            c.total_requests,
            fmt_ratio(self.hit_ratio()),
            self.social_cache_items,
            self.current_cache_items,
            self.muc_size_mean,
            c.subscriptions_sent,
            c.unsubscriptions_sent,
            c.bootstrap_dumps,
            c.dispatcher_messages,
            c.dht_lookups,
            c.dht_puts,
            c.bytes_read,
            c.bytes_written,
        );
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLedger {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLedger {
    pub fn push(&mut self, row: MetricsRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.t > last.t, "sample times must strictly increase");
        }
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Extracts one column as a series, e.g. `"social_cache_items"`.
    pub fn series(&self, name: &str) -> Option<SampledSeries> {
        let pick: fn(&MetricsRow) -> f64 = match name {
            "hit_ratio" => |r| r.hit_ratio().unwrap_or(0.0),
            "social_cache_items" => |r| r.social_cache_items as f64,
            "current_cache_items" => |r| r.current_cache_items as f64,
            "muc_size_mean" => |r| r.muc_size_mean,
            "subscriptions_sent" => |r| r.counters.subscriptions_sent as f64,
            "dispatcher_messages" => |r| r.counters.dispatcher_messages as f64,
            "bytes_read" => |r| r.counters.bytes_read as f64,
            "max_channels" => |r| r.max_channels as f64,
            "max_muc" => |r| r.max_muc as f64,
            _ => return None,
        };
        let mut series = SampledSeries::new(name);
        for row in &self.rows {
            series.sample(row.t, pick(row));
        }
        Some(series)
    }

    pub fn to_csv(&self) -> String {
        let mut out = METRICS_HEADER.join(",");
        out.push('\n');
        for row in &self.rows {
            row.csv_line(&mut out);
        }
        out
    }

    pub fn export_csv(&self, path: &Path) -> Result<(), Error> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub const SUMMARY_HEADER: [&str; 26] = [
    "label",
    "strategy",
    "cache_setup",
    "seed",
    "run_id",
    "trace_hash",
    "social_hits",
    "current_hits",
    "overlay_replies",
    "total_requests",
    "unanswered",
    "subscriptions_sent",
    "unsubscriptions_sent",
    "bootstrap_dumps",
    "social_updates_sent",
    "dispatcher_messages",
    "dht_lookups",
    "dht_puts",
    "bytes_read",
    "bytes_written",
    "social_cache_items",
    "current_cache_items",
    "max_channels",
    "max_muc",
    "cache_hit_ratio",
    "responses_per_item",
];

/// Final state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub strategy: String,
    pub cache_setup: String,
    pub seed: u64,
    pub run_id: String,
    pub trace_hash: String,
    pub counters: Counters,
    pub social_cache_items: u64,
    pub current_cache_items: u64,
    pub max_channels: usize,
    pub max_muc: usize,
}

impl RunSummary {
    pub fn cache_hit_ratio(&self) -> Option<f64> {
        cache_hit_ratio(&self.counters)
    }

    pub fn items_in_cache(&self) -> u64 {
        self.social_cache_items + self.current_cache_items
    }

    pub fn responses_per_item(&self) -> Option<f64> {
        responses_per_item(self.counters.cache_replies(), self.items_in_cache())
    }

    pub fn csv_line(&self) -> String {
        let c = &self.counters;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.label,
            self.strategy,
            self.cache_setup,
            self.seed,
            self.run_id,
            self.trace_hash,
            c.social_hits,
            c.current_hits,
            c.overlay_replies,
            c.total_requests,
            c.unanswered,
            c.subscriptions_sent,
            c.unsubscriptions_sent,
            c.bootstrap_dumps,
            c.social_updates_sent,
            c.dispatcher_messages,
            c.dht_lookups,
            c.dht_puts,
            c.bytes_read,
            c.bytes_written,
            self.social_cache_items,
            self.current_cache_items,
            self.max_channels,
            self.max_muc,
            fmt_ratio(self.cache_hit_ratio()),
            fmt_ratio(self.responses_per_item()),
        )
    }
}

pub fn summary_csv<'a>(rows: impl IntoIterator<Item = &'a RunSummary>) -> String {
    let mut out = SUMMARY_HEADER.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counters(social: u64, current: u64, overlay: u64) -> Counters {
        Counters {
            social_hits: social,
            current_hits: current,
            overlay_replies: overlay,
            total_requests: social + current + overlay,
            ..Counters::default()
        }
    }

    #[test]
    fn hit_ratio_examples() {
        let random = Counters {
            social_hits: 635_663,
            overlay_replies: 33_032,
            total_requests: 669_476,
            unanswered: 669_476 - 635_663 - 33_032,
            ..Counters::default()
        };
        assert!(random.is_conserved());
        assert!((cache_hit_ratio(&random).unwrap() - 0.9495).abs() < 5e-5);
        assert!((hit_ratio(5_170_354, 6_090_445).unwrap() - 0.8489).abs() < 5e-5);
        let both = counters(4_606_187, 786_123, 44_299);
        assert!((cache_hit_ratio(&both).unwrap() - 0.99185).abs() < 5e-5);
        assert_eq!(cache_hit_ratio(&Counters::default()), None);
        assert_eq!(cache_hit_ratio(&counters(0, 0, 12)), Some(0.0));
    }

    #[test]
    fn responses_per_item_examples() {
        assert!((responses_per_item(3_427_562, 200_674).unwrap() - 17.0802).abs() < 1e-4);
        assert!((responses_per_item(5_170_354, 584_968).unwrap() - 8.8386).abs() < 1e-4);
        assert_eq!(responses_per_item(0, 10), Some(0.0));
        assert_eq!(responses_per_item(5, 0), None);
    }

    #[test]
    fn empty_ledger_is_header_only() {
        let csv = MetricsLedger::default().to_csv();
        assert_eq!(csv, format!("{}\n", METRICS_HEADER.join(",")));
    }

    #[test]
    fn undefined_ratio_is_empty_cell() {
        let mut ledger = MetricsLedger::default();
        ledger.push(MetricsRow {
            t: SimTime(60_000),
            counters: Counters::default(),
            social_cache_items: 0,
            current_cache_items: 0,
            muc_size_mean: 0.0,
            max_channels: 0,
            max_muc: 0,
        });
        let csv = ledger.to_csv();
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').nth(5), Some(""));
        assert_eq!(line.split(',').count(), METRICS_HEADER.len());
    }

    #[test]
    #[should_panic]
    fn series_rejects_non_increasing_times() {
        let mut s = SampledSeries::new("x");
        s.sample(SimTime(5), 1.0);
        s.sample(SimTime(5), 2.0);
    }

    proptest! {
        #[test]
        fn hit_ratio_scale_invariant(s in 0u64..10_000, c in 0u64..10_000, o in 1u64..10_000, k in 1u64..20) {
            let base = counters(s, c, o);
            let a = cache_hit_ratio(&base).unwrap();
            let b = cache_hit_ratio(&base.scaled(k)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
