//! Pub/sub bookkeeping and the two content stores of the social cache.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{ContentObject, StorageKey, UserId};

pub const DEFAULT_CHANNEL_LIMIT: usize = 15;

/// Update channels this peer listens to, in subscription order.
#[derive(Debug, Clone)]
pub struct SubscriptionSet {
    channels: Vec<UserId>,
    limit: usize,
}

impl SubscriptionSet {
    pub fn new(limit: usize) -> Self {
        assert!(limit > 0, "channel limit must be positive");
        SubscriptionSet {
            channels: Vec::with_capacity(limit),
            limit,
        }
    }

    pub fn contains(&self, user: &UserId) -> bool {
        self.channels.contains(user)
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.channels.len() >= self.limit
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn get(&self, index: usize) -> Option<&UserId> {
        self.channels.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserId> {
        self.channels.iter()
    }

    pub fn to_set(&self) -> BTreeSet<UserId> {
        self.channels.iter().cloned().collect()
    }

    /// Returns false if already present. Panics past the limit; callers check
    /// the cap before applying a diff.
    pub(crate) fn insert(&mut self, user: UserId) -> bool {
        if self.contains(&user) {
            return false;
        }
        assert!(!self.is_full(), "subscription cap exceeded");
        self.channels.push(user);
        true
    }

    pub(crate) fn remove(&mut self, user: &UserId) -> bool {
        match self.channels.iter().position(|c| c == user) {
            Some(i) => {
                self.channels.remove(i);
                true
            }
            None => false,
        }
    }
}

/// Subscribers that receive this peer's social updates.
#[derive(Debug, Clone, Default)]
pub struct ReceiverList {
    subscribers: BTreeSet<UserId>,
}

impl ReceiverList {
    pub fn insert(&mut self, user: UserId) -> bool {
        self.subscribers.insert(user)
    }

    pub fn remove(&mut self, user: &UserId) -> bool {
        self.subscribers.remove(user)
    }

    pub fn contains(&self, user: &UserId) -> bool {
        self.subscribers.contains(user)
    }

    pub fn len(&self) -> usize {
        self.subscribers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subscribers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserId> {
        self.subscribers.iter()
    }
}

/// Subscribed user → storage key → latest received object.
#[derive(Debug, Clone, Default)]
pub struct SocialStore {
    by_user: HashMap<UserId, HashMap<StorageKey, ContentObject>>,
    item_count: usize,
}

impl SocialStore {
    /// Stores `content` under `from`, replacing an older or equal version.
    /// Returns false if a newer version is already held.
    pub fn store(&mut self, from: &UserId, content: ContentObject) -> bool {
        let items = self.by_user.entry(from.clone()).or_default();
        match items.get_mut(&content.key) {
            Some(existing) => {
                if content.version < existing.version {
                    return false;
                }
                *existing = content;
            }
            None => {
                items.insert(content.key.clone(), content);
                self.item_count += 1;
            }
        }
        true
    }

    pub fn get(&self, key: &StorageKey) -> Option<&ContentObject> {
        self.by_user.get(key.owner())?.get(key)
    }

    /// Drops everything received from `user`; returns the number of items removed.
    pub fn purge(&mut self, user: &UserId) -> usize {
        let removed = self.by_user.remove(user).map_or(0, |items| items.len());
        self.item_count -= removed;
        removed
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.by_user.keys()
    }

    pub fn items_of(&self, user: &UserId) -> impl Iterator<Item = &ContentObject> {
        self.by_user.get(user).into_iter().flat_map(|m| m.values())
    }

    pub fn has_user(&self, user: &UserId) -> bool {
        self.by_user.contains_key(user)
    }
}

/// The local peer's own content, served without an overlay round trip.
#[derive(Debug, Clone, Default)]
pub struct OwnContentStore {
    items: BTreeMap<StorageKey, ContentObject>,
}

impl OwnContentStore {
    pub fn put(&mut self, content: ContentObject) {
        self.items.insert(content.key.clone(), content);
    }

    pub fn get(&self, key: &StorageKey) -> Option<&ContentObject> {
        self.items.get(key)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Snapshot in key order, used for bootstrap dumps.
    pub fn snapshot(&self) -> Vec<ContentObject> {
        self.items.values().cloned().collect()
    }
}
