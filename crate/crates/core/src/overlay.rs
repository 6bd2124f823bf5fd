//! In-process stand-in for the DHT storage layer and the message dispatcher.
//!
//! Replication is not modelled beyond a traffic multiplier: every successful
//! put is charged `payload size × replication_factor` written bytes.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::OverlayError;
use crate::model::{ContentObject, SimTime, StorageKey, UserId};

pub const DEFAULT_REPLICATION_FACTOR: u32 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DhtCounters {
    pub lookups: u64,
    pub failed_lookups: u64,
    pub puts: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

#[derive(Debug)]
pub struct DhtStore {
    entries: HashMap<StorageKey, ContentObject>,
    replication_factor: u32,
    counters: DhtCounters,
}

impl Default for DhtStore {
    fn default() -> Self {
        DhtStore::new(DEFAULT_REPLICATION_FACTOR)
    }
}

impl DhtStore {
    pub fn new(replication_factor: u32) -> Self {
        assert!(replication_factor > 0, "replication factor must be positive");
        DhtStore {
            entries: HashMap::new(),
            replication_factor,
            counters: DhtCounters::default(),
        }
    }

    /// Stores `content` if its version is not older than the stored one.
    pub fn put(&mut self, content: ContentObject) -> Result<(), OverlayError> {
        if let Some(stored) = self.entries.get(&content.key) {
            if content.version < stored.version {
                return Err(OverlayError::StaleWrite {
                    key: content.key.clone(),
                    stored: stored.version,
                    attempted: content.version,
                });
            }
        }
        self.counters.puts += 1;
        self.counters.bytes_written += content.size() * u64::from(self.replication_factor);
        self.entries.insert(content.key.clone(), content);
        Ok(())
    }

    /// Overlay lookup. Every call is counted, hit or not.
    pub fn get(&mut self, key: &StorageKey) -> Option<ContentObject> {
        self.counters.lookups += 1;
        match self.entries.get(key) {
            Some(c) => {
                self.counters.bytes_read += c.size();
                Some(c.clone())
            }
            None => {
                self.counters.failed_lookups += 1;
                None
            }
        }
    }

    /// Uncounted read for verification code; not part of the simulated traffic.
    pub fn peek(&self, key: &StorageKey) -> Option<&ContentObject> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn replication_factor(&self) -> u32 {
        self.replication_factor
    }

    pub fn counters(&self) -> DhtCounters {
        self.counters
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Subscribe,
    Unsubscribe,
    SocialUpdate,
    BootstrapDump,
    SystemNotice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageBody {
    Subscribe,
    Unsubscribe,
    SocialUpdate(ContentObject),
    BootstrapDump(Vec<ContentObject>),
    SystemNotice(Vec<u8>),
}

impl MessageBody {
    pub fn kind(&self) -> MessageKind {
        match self {
            MessageBody::Subscribe => MessageKind::Subscribe,
            MessageBody::Unsubscribe => MessageKind::Unsubscribe,
            MessageBody::SocialUpdate(_) => MessageKind::SocialUpdate,
            MessageBody::BootstrapDump(_) => MessageKind::BootstrapDump,
            MessageBody::SystemNotice(_) => MessageKind::SystemNotice,
        }
    }

    pub fn payload_size(&self) -> u64 {
        match self {
            MessageBody::Subscribe | MessageBody::Unsubscribe => 0,
            MessageBody::SocialUpdate(c) => c.size(),
            MessageBody::BootstrapDump(items) => items.iter().map(ContentObject::size).sum(),
            MessageBody::SystemNotice(bytes) => bytes.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageEnvelope {
    pub from: UserId,
    pub to: UserId,
    pub body: MessageBody,
    pub sent_at: SimTime,
}

impl MessageEnvelope {
    pub fn new(from: UserId, to: UserId, body: MessageBody, sent_at: SimTime) -> Self {
        MessageEnvelope {
            from,
            to,
            body,
            sent_at,
        }
    }

    pub fn kind(&self) -> MessageKind {
        self.body.kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchOutcome {
    Delivered,
    Persisted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DispatcherCounters {
    pub delivered: u64,
    pub persisted: u64,
    /// Persisted envelopes handed over once their receiver came online.
    pub replayed: u64,
    pub payload_bytes: u64,
}

/// Routes envelopes to online users and parks the rest until they return.
///
/// Delivered envelopes land in a ready queue that the owning event loop drains
/// within the same step.
#[derive(Debug, Default)]
pub struct MessageDispatcher {
    online: HashSet<UserId>,
    pending: HashMap<UserId, VecDeque<MessageEnvelope>>,
    ready: VecDeque<MessageEnvelope>,
    counters: DispatcherCounters,
}

impl MessageDispatcher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_online(&self, user: &UserId) -> bool {
        self.online.contains(user)
    }

    /// Marks `user` online or offline. Coming online releases the user's
    /// parked envelopes in FIFO order.
    pub fn set_online(&mut self, user: &UserId, online: bool) {
        if !online {
            self.online.remove(user);
            return;
        }
        self.online.insert(user.clone());
        if let Some(queue) = self.pending.remove(user) {
            self.counters.replayed += queue.len() as u64;
            self.ready.extend(queue);
        }
    }

    pub fn dispatch(&mut self, env: MessageEnvelope) -> Result<DispatchOutcome, OverlayError> {
        if env.from == env.to {
            return Err(OverlayError::InvalidEnvelope(format!(
                "{} addressed a message to itself",
                env.from
            )));
        }
        self.counters.payload_bytes += env.body.payload_size();
        if self.online.contains(&env.to) {
            self.counters.delivered += 1;
            self.ready.push_back(env);
            Ok(DispatchOutcome::Delivered)
        } else {
            self.counters.persisted += 1;
            self.pending.entry(env.to.clone()).or_default().push_back(env);
            Ok(DispatchOutcome::Persisted)
        }
    }

    /// Next envelope awaiting hand-over to its receiver.
    pub fn next_ready(&mut self) -> Option<MessageEnvelope> {
        self.ready.pop_front()
    }

    pub fn has_ready(&self) -> bool {
        !self.ready.is_empty()
    }

    pub fn pending_len(&self, user: &UserId) -> usize {
        self.pending.get(user).map_or(0, VecDeque::len)
    }

    pub fn counters(&self) -> DispatcherCounters {
        self.counters
    }

    /// Total envelopes accepted by `dispatch`.
    pub fn dispatched(&self) -> u64 {
        self.counters.delivered + self.counters.persisted
    }
}
