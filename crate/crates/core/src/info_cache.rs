//! The "current" information cache: fixed validity period plus LRU eviction.

use std::collections::{BTreeMap, HashMap};

use crate::model::{ContentObject, SimTime, StorageKey};

pub const DEFAULT_TTL_TICKS: u64 = 60_000;
pub const DEFAULT_CAPACITY: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub content: ContentObject,
    pub inserted_at: SimTime,
    pub ttl: u64,
}

impl CacheEntry {
    /// Valid while the entry's age is strictly below its ttl.
    pub fn is_valid(&self, now: SimTime) -> bool {
        now.since(self.inserted_at) < self.ttl
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheLookup {
    Hit(ContentObject),
    Miss,
}

/// Which tier answered a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    SocialCache,
    CurrentCache,
    Overlay,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupResult {
    pub content: ContentObject,
    pub source: Source,
}

#[derive(Debug)]
pub struct CurrentCache {
    capacity: usize,
    ttl: u64,
    entries: HashMap<StorageKey, (CacheEntry, u64)>,
    // recency stamp -> key; the largest stamp is the most recently used
    recency: BTreeMap<u64, StorageKey>,
    clock: u64,
    hits: u64,
    misses: u64,
}

impl CurrentCache {
    pub fn new(capacity: usize, ttl: u64) -> Self {
        assert!(capacity > 0, "cache capacity must be positive");
        CurrentCache {
            capacity,
            ttl,
            entries: HashMap::new(),
            recency: BTreeMap::new(),
            clock: 0,
            hits: 0,
            misses: 0,
        }
    }

    fn touch(&mut self, key: &StorageKey) {
        self.clock += 1;
        let stamp = self.clock;
        if let Some((_, old)) = self.entries.get_mut(key) {
            let previous = std::mem::replace(old, stamp);
            self.recency.remove(&previous);
            self.recency.insert(stamp, key.clone());
        }
    }

    fn remove(&mut self, key: &StorageKey) -> Option<CacheEntry> {
        let (entry, stamp) = self.entries.remove(key)?;
        self.recency.remove(&stamp);
        Some(entry)
    }

    pub fn lookup(&mut self, key: &StorageKey, now: SimTime) -> CacheLookup {
        let valid = match self.entries.get(key) {
            Some((entry, _)) => Some(entry.is_valid(now)),
            None => None,
        };
        match valid {
            Some(true) => {
                self.touch(key);
                self.hits += 1;
                CacheLookup::Hit(self.entries[key].0.content.clone())
            }
            Some(false) => {
                self.remove(key);
                self.misses += 1;
                CacheLookup::Miss
            }
            None => {
                self.misses += 1;
                CacheLookup::Miss
            }
        }
    }

    /// Inserts or replaces `content`, returning the LRU victim if the
    /// capacity was exceeded.
    pub fn insert(&mut self, content: ContentObject, now: SimTime) -> Option<StorageKey> {
        let key = content.key.clone();
        let entry = CacheEntry {
            content,
            inserted_at: now,
            ttl: self.ttl,
        };
        if let Some((slot, _)) = self.entries.get_mut(&key) {
            *slot = entry;
            self.touch(&key);
            return None;
        }
        self.clock += 1;
        self.recency.insert(self.clock, key.clone());
        self.entries.insert(key, (entry, self.clock));
        if self.entries.len() > self.capacity {
            let (_, victim) = self.recency.pop_first().expect("non-empty recency");
            self.entries.remove(&victim);
            return Some(victim);
        }
        None
    }

    pub fn peek(&self, key: &StorageKey) -> Option<&CacheEntry> {
        self.entries.get(key).map(|(e, _)| e)
    }

    /// Keys from most to least recently used.
    pub fn recency_order(&self) -> Vec<StorageKey> {
        self.recency.values().rev().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn ttl(&self) -> u64 {
        self.ttl
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }
}
