//! The discrete-event loop driving one run.
//!
//! Trace events are consumed in order. At equal timestamps the trace event
//! runs first, then internally scheduled work (selection rounds, delayed
//! deliveries, samples) in scheduling order. Messages sent with zero hop
//! latency are delivered before the next event is taken, so each step ends
//! quiescent.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{Error, PeerError};
use crate::metrics::{Counters, MetricsLedger, MetricsRow};
use crate::model::{SimTime, StorageKey, UserId};
use crate::node::{Network, Peer};
use crate::overlay::MessageEnvelope;
use crate::social::{StrategyKind, Trigger};
use crate::workload::{TraceAction, TraceEvent};

#[derive(Debug)]
enum Task {
    Selection(usize),
    Deliver(MessageEnvelope),
    Sample,
}

#[derive(Debug)]
struct Scheduled {
    at: SimTime,
    seq: u64,
    task: Task,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

/// A SocialStore entry that disagrees with the DHT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyViolation {
    pub peer: UserId,
    pub key: StorageKey,
    pub cached_version: u64,
    pub dht_version: Option<u64>,
}

/// Totals over all peers at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTotals {
    pub counters: Counters,
    pub social_cache_items: u64,
    pub current_cache_items: u64,
    pub max_channels: usize,
    pub max_muc: usize,
}

#[derive(Debug)]
pub struct Simulation {
    cfg: ScenarioConfig,
    peers: Vec<Peer>,
    index: HashMap<UserId, usize>,
    net: Network,
    queue: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    now: SimTime,
    end: SimTime,
    ledger: MetricsLedger,
    hasher: Sha256,
    trace_events: u64,
}

impl Simulation {
    /// Sets up one peer per user, all online, with caches per the config.
    pub fn new(cfg: &ScenarioConfig, users: &[UserId]) -> Self {
        let mut net = Network::new(cfg.overlay.replication_factor, cfg.overlay.hop_latency_ticks);
        let current = cfg
            .cache_setup
            .current_enabled()
            .then_some((cfg.current_cache.capacity, cfg.current_cache.ttl_ticks));
        let mut peers = Vec::with_capacity(users.len());
        let mut index = HashMap::with_capacity(users.len());
        for (i, user) in users.iter().enumerate() {
            net.dispatcher.set_online(user, true);
            let social = cfg.cache_setup.social_enabled().then(|| {
                let mut s = cfg.strategy.clone();
                s.rng_seed = cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ i as u64;
                s
            });
            peers.push(Peer::new(user.clone(), current, social));
            index.insert(user.clone(), i);
        }
        let mut sim = Simulation {
            cfg: cfg.clone(),
            peers,
            index,
            net,
            queue: BinaryHeap::new(),
            seq: 0,
            now: SimTime::ZERO,
            end: SimTime(cfg.sim_duration_ticks),
            ledger: MetricsLedger::default(),
            hasher: Sha256::new(),
            trace_events: 0,
        };
        let s = &cfg.strategy;
        if cfg.cache_setup.social_enabled() && s.kind != StrategyKind::Random && s.trigger == Trigger::TimeBased {
            for i in 0..sim.peers.len() {
                sim.schedule(SimTime(s.update_interval), Task::Selection(i));
            }
        }
        sim.schedule(SimTime(cfg.metrics.sample_every_ticks), Task::Sample);
        sim
    }

    fn schedule(&mut self, at: SimTime, task: Task) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled { at, seq: self.seq, task }));
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer(&self, user: &UserId) -> Option<&Peer> {
        self.index.get(user).map(|&i| &self.peers[i])
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn ledger(&self) -> &MetricsLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> MetricsLedger {
        self.ledger
    }

    /// Number of trace events consumed so far.
    pub fn trace_events(&self) -> u64 {
        self.trace_events
    }

    /// SHA-256 over the consumed trace, one rendered record per line.
    pub fn trace_hash(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }

    fn peer_index(&self, user: &UserId) -> Result<usize, Error> {
        self.index
            .get(user)
            .copied()
            .ok_or_else(|| PeerError::Social(crate::error::SocialError::UnknownUser(user.clone())).into())
    }

    /// Feeds the whole trace, runs every scheduled task up to the end of the
    /// run and drains outstanding deliveries. Events after the end are ignored.
    pub fn run(&mut self, trace: impl IntoIterator<Item = TraceEvent>) -> Result<(), Error> {
        let mut trace = trace.into_iter().peekable();
        loop {
            let next_task = self.queue.peek().map(|Reverse(s)| s.at);
            let next_event = trace.peek().map(|e| e.at).filter(|&t| t <= self.end);
            match (next_event, next_task) {
                (Some(te), Some(tt)) if te <= tt => {
                    let event = trace.next().expect("peeked");
                    self.apply_event(event)?;
                }
                (Some(_), None) => {
                    let event = trace.next().expect("peeked");
                    self.apply_event(event)?;
                }
                (_, Some(tt)) => {
                    let is_delivery = matches!(self.queue.peek(), Some(Reverse(Scheduled { task: Task::Deliver(_), .. })));
                    if tt > self.end && !is_delivery {
                        // only deliveries may outlive the run
                        self.queue.pop();
                        continue;
                    }
                    let Reverse(s) = self.queue.pop().expect("peeked");
                    self.now = self.now.max(s.at);
                    self.apply_task(s.task)?;
                }
                (None, None) => break,
            }
        }
        Ok(())
    }

    /// Processes one trace event at its timestamp.
    pub fn apply_event(&mut self, event: TraceEvent) -> Result<(), Error> {
        assert!(event.at >= self.now, "trace went back in time");
        self.now = event.at;
        self.trace_events += 1;
        self.hasher.update(event.to_string().as_bytes());
        self.hasher.update(b"\n");
        let actor = self.peer_index(&event.actor)?;
        let now = self.now;
        match event.action {
            TraceAction::Post { key, payload_size } => {
                let payload = vec![0u8; payload_size as usize];
                self.peers[actor].add_content(key, payload, now, &mut self.net)?;
            }
            TraceAction::Lookup { key } => {
                match self.peers[actor].handle_request(&key, now, &mut self.net) {
                    Ok(_) | Err(PeerError::NotFound(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            TraceAction::FriendRequest { target } => {
                self.peer_index(&target)?;
                self.peers[actor].notify(&target, "friend-request", now, &mut self.net)?;
            }
        }
        self.flush()
    }

    fn apply_task(&mut self, task: Task) -> Result<(), Error> {
        let now = self.now;
        match task {
            Task::Selection(i) => {
                self.peers[i].run_selection(now, &mut self.net)?;
                let next = now.saturating_add(self.cfg.strategy.update_interval);
                if next <= self.end {
                    self.schedule(next, Task::Selection(i));
                }
            }
            Task::Deliver(env) => {
                self.net.dispatcher.dispatch(env).map_err(PeerError::from)?;
            }
            Task::Sample => {
                let row = self.snapshot();
                self.ledger.push(row);
                let next = now.saturating_add(self.cfg.metrics.sample_every_ticks);
                if next <= self.end {
                    self.schedule(next, Task::Sample);
                }
            }
        }
        self.flush()
    }

    /// Delivers everything the dispatcher has ready and schedules envelopes
    /// still in flight.
    fn flush(&mut self) -> Result<(), Error> {
        loop {
            while let Some(env) = self.net.dispatcher.next_ready() {
                let to = self.peer_index(&env.to)?;
                self.peers[to].receive(env, self.now, &mut self.net)?;
            }
            let in_flight = self.net.take_in_flight();
            if in_flight.is_empty() {
                return Ok(());
            }
            let at = self.now.saturating_add(self.net.hop_latency());
            for env in in_flight {
                self.schedule(at, Task::Deliver(env));
            }
        }
    }

    pub fn totals(&self) -> RunTotals {
        let mut counters = Counters::default();
        let mut social_cache_items = 0;
        let mut current_cache_items = 0;
        let mut max_channels = 0;
        let mut max_muc = 0;
        for p in &self.peers {
            counters += p.counters();
            if let Some(s) = p.social() {
                social_cache_items += s.store().item_count() as u64;
            }
            if let Some(c) = p.current() {
                current_cache_items += c.len() as u64;
            }
            let (ch, muc) = p.max_observed();
            max_channels = max_channels.max(ch);
            max_muc = max_muc.max(muc);
        }
        let dht = self.net.dht.counters();
        counters.dispatcher_messages = self.net.dispatcher.dispatched();
        counters.dht_lookups = dht.lookups;
        counters.dht_puts = dht.puts;
        counters.bytes_read = dht.bytes_read;
        counters.bytes_written = dht.bytes_written;
        RunTotals {
            counters,
            social_cache_items,
            current_cache_items,
            max_channels,
            max_muc,
        }
    }

    fn snapshot(&self) -> MetricsRow {
        let totals = self.totals();
        let mucs: Vec<usize> = self
            .peers
            .iter()
            .filter_map(|p| p.social().map(|s| s.muc().len()))
            .collect();
        let muc_size_mean = if mucs.is_empty() {
            0.0
        } else {
            mucs.iter().sum::<usize>() as f64 / mucs.len() as f64
        };
        let max_channels = self
            .peers
            .iter()
            .filter_map(|p| p.social().map(|s| s.channels().len()))
            .max()
            .unwrap_or(0);
        MetricsRow {
            t: self.now,
            counters: totals.counters,
            social_cache_items: totals.social_cache_items,
            current_cache_items: totals.current_cache_items,
            muc_size_mean,
            max_channels,
            max_muc: mucs.iter().copied().max().unwrap_or(0),
        }
    }

    /// Every SocialStore entry whose version differs from the DHT's.
    pub fn consistency_violations(&self) -> Vec<ConsistencyViolation> {
        self.peers
            .iter()
            .flat_map(|p| {
                p.stale_entries(&self.net.dht)
                    .into_iter()
                    .map(|(key, cached_version, dht_version)| ConsistencyViolation {
                        peer: p.id().clone(),
                        key,
                        cached_version,
                        dht_version,
                    })
            })
            .collect()
    }
}
