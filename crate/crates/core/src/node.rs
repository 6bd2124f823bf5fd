//! A simulated peer: the lookup pipeline, content writes and message handling.

use std::collections::HashMap;

use crate::error::PeerError;
use crate::info_cache::{CacheLookup, CurrentCache, LookupResult, Source};
use crate::metrics::Counters;
use crate::model::{ContentObject, SimTime, StorageKey, UserId};
use crate::overlay::{DhtStore, MessageBody, MessageDispatcher, MessageEnvelope};
use crate::social::{Outgoing, SocialCache, StrategyConfig};

/// Shared infrastructure every peer talks through.
#[derive(Debug)]
pub struct Network {
    pub dht: DhtStore,
    pub dispatcher: MessageDispatcher,
    hop_latency: u64,
    in_flight: Vec<MessageEnvelope>,
}

impl Network {
    pub fn new(replication_factor: u32, hop_latency: u64) -> Self {
        Network {
            dht: DhtStore::new(replication_factor),
            dispatcher: MessageDispatcher::new(),
            hop_latency,
            in_flight: Vec::new(),
        }
    }

    pub fn hop_latency(&self) -> u64 {
        self.hop_latency
    }

    /// Hands an envelope to the dispatcher, or parks it in flight when a hop
    /// latency is configured; the event loop dispatches it later.
    pub fn send(&mut self, env: MessageEnvelope) -> Result<(), PeerError> {
        if self.hop_latency == 0 {
            self.dispatcher.dispatch(env)?;
        } else {
            self.in_flight.push(env);
        }
        Ok(())
    }

    pub(crate) fn take_in_flight(&mut self) -> Vec<MessageEnvelope> {
        std::mem::take(&mut self.in_flight)
    }
}

#[derive(Debug)]
pub struct Peer {
    id: UserId,
    current: Option<CurrentCache>,
    social: Option<SocialCache>,
    versions: HashMap<StorageKey, u64>,
    counters: Counters,
    max_channels: usize,
    max_muc: usize,
}

impl Peer {
    /// `current` is `(capacity, ttl)` when the current cache is enabled;
    /// `social` is the strategy when the social cache is enabled.
    pub fn new(id: UserId, current: Option<(usize, u64)>, social: Option<StrategyConfig>) -> Self {
        Peer {
            current: current.map(|(capacity, ttl)| CurrentCache::new(capacity, ttl)),
            social: social.map(|cfg| SocialCache::new(id.clone(), cfg)),
            id,
            versions: HashMap::new(),
            counters: Counters::default(),
            max_channels: 0,
            max_muc: 0,
        }
    }

    pub fn id(&self) -> &UserId {
        &self.id
    }

    pub fn current(&self) -> Option<&CurrentCache> {
        self.current.as_ref()
    }

    pub fn social(&self) -> Option<&SocialCache> {
        self.social.as_ref()
    }

    /// Request and messaging counters of this peer only; overlay-wide
    /// counters stay zero here.
    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// Largest channel count and MUC list size this peer ever held.
    pub fn max_observed(&self) -> (usize, usize) {
        (self.max_channels, self.max_muc)
    }

    fn observe(&mut self) {
        if let Some(s) = &self.social {
            self.max_channels = self.max_channels.max(s.channels().len());
            self.max_muc = self.max_muc.max(s.muc().len());
        }
    }

    fn send_all(&mut self, out: Vec<Outgoing>, now: SimTime, net: &mut Network) -> Result<(), PeerError> {
        for Outgoing { to, body } in out {
            match body {
                MessageBody::Subscribe => self.counters.subscriptions_sent += 1,
                MessageBody::Unsubscribe => self.counters.unsubscriptions_sent += 1,
                MessageBody::BootstrapDump(_) => self.counters.bootstrap_dumps += 1,
                MessageBody::SocialUpdate(_) => self.counters.social_updates_sent += 1,
                MessageBody::SystemNotice(_) => {}
            }
            net.send(MessageEnvelope::new(self.id.clone(), to, body, now))?;
        }
        Ok(())
    }

    /// Resolves a request: social cache (own content, then subscriptions),
    /// then the current cache, then the overlay. The owner of the key is
    /// tracked first; the strategy's subscription messages go out after the
    /// request is answered.
    pub fn handle_request(
        &mut self,
        key: &StorageKey,
        now: SimTime,
        net: &mut Network,
    ) -> Result<LookupResult, PeerError> {
        self.counters.total_requests += 1;
        let actions = match &mut self.social {
            Some(s) => s.track_lookup(key.owner(), now),
            None => Vec::new(),
        };
        let result = self.resolve(key, now, &mut net.dht);
        match &result {
            Some(r) => match r.source {
                Source::SocialCache => self.counters.social_hits += 1,
                Source::CurrentCache => self.counters.current_hits += 1,
                Source::Overlay => self.counters.overlay_replies += 1,
            },
            None => self.counters.unanswered += 1,
        }
        self.send_all(actions, now, net)?;
        self.observe();
        result.ok_or_else(|| PeerError::NotFound(key.clone()))
    }

    fn resolve(&mut self, key: &StorageKey, now: SimTime, dht: &mut DhtStore) -> Option<LookupResult> {
        if let Some(content) = self.social.as_ref().and_then(|s| s.lookup(key)) {
            return Some(LookupResult {
                content: content.clone(),
                source: Source::SocialCache,
            });
        }
        if let Some(cache) = &mut self.current {
            if let CacheLookup::Hit(content) = cache.lookup(key, now) {
                return Some(LookupResult {
                    content,
                    source: Source::CurrentCache,
                });
            }
        }
        let content = dht.get(key)?;
        if let Some(cache) = &mut self.current {
            cache.insert(content.clone(), now);
        }
        Some(LookupResult {
            content,
            source: Source::Overlay,
        })
    }

    /// Writes a new version of one of this peer's own keys: own-content
    /// store, current cache and DHT, plus a social update to every subscriber.
    pub fn add_content(
        &mut self,
        key: StorageKey,
        payload: Vec<u8>,
        now: SimTime,
        net: &mut Network,
    ) -> Result<ContentObject, PeerError> {
        if *key.owner() != self.id {
            return Err(PeerError::NotOwner {
                peer: self.id.clone(),
                key,
            });
        }
        let version = self.versions.get(&key).copied().unwrap_or(0) + 1;
        let content = ContentObject::new(key.clone(), version, payload, now);
        net.dht.put(content.clone())?;
        self.versions.insert(key, version);
        if let Some(cache) = &mut self.current {
            cache.insert(content.clone(), now);
        }
        let out = match &mut self.social {
            Some(s) => s.publish(&content),
            None => Vec::new(),
        };
        self.send_all(out, now, net)?;
        Ok(content)
    }

    /// Sends a system notice (e.g. a friend request) to another user.
    pub fn notify(&mut self, to: &UserId, note: &str, now: SimTime, net: &mut Network) -> Result<(), PeerError> {
        let out = vec![Outgoing {
            to: to.clone(),
            body: MessageBody::SystemNotice(note.as_bytes().to_vec()),
        }];
        self.send_all(out, now, net)
    }

    /// Interval re-ranking of the social cache, if there is one.
    pub fn run_selection(&mut self, now: SimTime, net: &mut Network) -> Result<(), PeerError> {
        let Some(s) = &mut self.social else {
            return Ok(());
        };
        let diff = s.run_selection(now);
        let out = s.apply_diff(diff)?;
        self.send_all(out, now, net)?;
        self.observe();
        Ok(())
    }

    pub fn receive(&mut self, env: MessageEnvelope, now: SimTime, net: &mut Network) -> Result<(), PeerError> {
        let Some(s) = &mut self.social else {
            return Ok(());
        };
        let from = env.from;
        let mut out = Vec::new();
        match env.body {
            MessageBody::Subscribe => out.extend(s.on_subscribe_received(&from)),
            MessageBody::Unsubscribe => s.on_unsubscribe_received(&from),
            MessageBody::SocialUpdate(content) => {
                s.on_social_update(&from, content);
            }
            MessageBody::BootstrapDump(items) => {
                s.on_bootstrap(&from, items);
            }
            MessageBody::SystemNotice(_) => {}
        }
        self.send_all(out, now, net)
    }

    /// SocialStore entries whose version differs from the DHT's.
    pub fn stale_entries(&self, dht: &DhtStore) -> Vec<(StorageKey, u64, Option<u64>)> {
        let Some(s) = &self.social else {
            return Vec::new();
        };
        let mut stale = Vec::new();
        for user in s.store().users() {
            for item in s.store().items_of(user) {
                let stored = dht.peek(&item.key).map(|c| c.version);
                if stored != Some(item.version) {
                    stale.push((item.key.clone(), item.version, stored));
                }
            }
        }
        stale.sort_by(|a, b| a.0.cmp(&b.0));
        stale
    }
}
