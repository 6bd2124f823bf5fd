//! Identifiers, content objects and simulated time shared by every subsystem.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::ModelError;

/// Simulated milliseconds.
pub const TICKS_PER_SECOND: u64 = 1_000;
pub const TICKS_PER_DAY: u64 = 86_400 * TICKS_PER_SECOND;

/// A point on the simulation clock, in milliseconds since the start of the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn ticks(self) -> u64 {
        self.0
    }

    pub fn saturating_add(self, ticks: u64) -> SimTime {
        SimTime(self.0.saturating_add(ticks))
    }

    /// Ticks elapsed since `earlier`, zero if `earlier` is in the future.
    pub fn since(self, earlier: SimTime) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Name of a simulated user. One user per peer.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(Arc<str>);

impl UserId {
    pub fn new(name: &str) -> Result<Self, ModelError> {
        if name.is_empty() {
            return Err(ModelError::InvalidKey("empty user name".into()));
        }
        if name.contains(char::is_whitespace) || name.contains('/') {
            return Err(ModelError::InvalidKey(format!("bad user name {name:?}")));
        }
        Ok(UserId(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UserId({})", self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for UserId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UserId::new(s)
    }
}

/// Address of a stored item. Encoded as `owner/path`, split on the first `/`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StorageKey {
    owner: UserId,
    path: Arc<str>,
}

impl StorageKey {
    pub fn new(owner: UserId, path: &str) -> Result<Self, ModelError> {
        if path.is_empty() {
            return Err(ModelError::InvalidKey("empty path".into()));
        }
        if path.contains(char::is_whitespace) {
            return Err(ModelError::InvalidKey(format!("bad path {path:?}")));
        }
        Ok(StorageKey {
            owner,
            path: Arc::from(path),
        })
    }

    pub fn owner(&self) -> &UserId {
        &self.owner
    }

    pub fn path(&self) -> &str {
        &self.path
    }
}

impl fmt::Debug for StorageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StorageKey({}/{})", self.owner, self.path)
    }
}

impl fmt::Display for StorageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.path)
    }
}

impl FromStr for StorageKey {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_storage_key(s)
    }
}

/// Formats `owner/path`, rejecting empty components.
pub fn format_storage_key(owner: &str, path: &str) -> Result<String, ModelError> {
    if path.contains('\n') {
        return Err(ModelError::InvalidKey("path contains a newline".into()));
    }
    let key = StorageKey::new(UserId::new(owner)?, path)?;
    Ok(key.to_string())
}

pub fn parse_storage_key(s: &str) -> Result<StorageKey, ModelError> {
    let (owner, path) = s
        .split_once('/')
        .ok_or_else(|| ModelError::InvalidKey(format!("missing '/' in {s:?}")))?;
    StorageKey::new(UserId::new(owner)?, path)
}

/// Recovers the owning user of a serialized key.
pub fn get_username(key: &str) -> Result<UserId, ModelError> {
    parse_storage_key(key).map(|k| k.owner)
}

/// A versioned item as held by the DHT and the caches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentObject {
    pub key: StorageKey,
    pub version: u64,
    pub payload: Arc<[u8]>,
    pub author: UserId,
    pub created_at: SimTime,
}

impl ContentObject {
    /// Builds an object authored by the key's owner.
    pub fn new(key: StorageKey, version: u64, payload: Vec<u8>, created_at: SimTime) -> Self {
        let author = key.owner().clone();
        ContentObject {
            key,
            version,
            payload: payload.into(),
            author,
            created_at,
        }
    }

    pub fn size(&self) -> u64 {
        self.payload.len() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InteractionKind {
    Lookup,
    WallPost,
    FriendRequest,
    Like,
    Comment,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 5] = [
        InteractionKind::Lookup,
        InteractionKind::WallPost,
        InteractionKind::FriendRequest,
        InteractionKind::Like,
        InteractionKind::Comment,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            InteractionKind::Lookup => "lookup",
            InteractionKind::WallPost => "wall_post",
            InteractionKind::FriendRequest => "friend_request",
            InteractionKind::Like => "like",
            InteractionKind::Comment => "comment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub peer: UserId,
    pub kind: InteractionKind,
    pub at: SimTime,
}
