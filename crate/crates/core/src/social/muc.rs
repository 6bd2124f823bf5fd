//! Most-used-contacts list: per-user interaction aggregates kept by each peer.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::SocialError;
use crate::model::{InteractionKind, InteractionRecord, SimTime, UserId};
use crate::social::score::{self, InteractionWeights};

/// Dunbar number: maximum distinct users tracked at once.
pub const DEFAULT_MUC_CAPACITY: usize = 150;

/// Interaction history with one user.
///
/// Only the aggregates the selection strategies need are retained: per-kind
/// counts, first and last timestamps. Those are sufficient for the lookup
/// ranking, tie strength and medium interaction length.
#[derive(Debug, Clone, PartialEq)]
pub struct MucEntry {
    user: UserId,
    counts: [u64; InteractionKind::ALL.len()],
    first_at: SimTime,
    last_at: SimTime,
}

impl MucEntry {
    fn new(user: UserId, kind: InteractionKind, at: SimTime) -> Self {
        let mut counts = [0; InteractionKind::ALL.len()];
        counts[kind.index()] = 1;
        MucEntry {
            user,
            counts,
            first_at: at,
            last_at: at,
        }
    }

    fn push(&mut self, kind: InteractionKind, at: SimTime) {
        debug_assert!(at >= self.last_at, "interaction records must arrive in time order");
        self.counts[kind.index()] += 1;
        self.last_at = self.last_at.max(at);
    }

    pub fn user(&self) -> &UserId {
        &self.user
    }

    pub fn lookup_count(&self) -> u64 {
        self.counts[InteractionKind::Lookup.index()]
    }

    pub fn count(&self, kind: InteractionKind) -> u64 {
        self.counts[kind.index()]
    }

    pub fn event_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn first_at(&self) -> SimTime {
        self.first_at
    }

    pub fn last_at(&self) -> SimTime {
        self.last_at
    }

    pub fn weighted_sum(&self, weights: &InteractionWeights) -> f64 {
        InteractionKind::ALL
            .iter()
            .map(|&k| weights.get(k) * self.counts[k.index()] as f64)
            .sum()
    }
}

/// How the MUC list orders users when it has to drop one.
#[derive(Debug, Clone, PartialEq)]
pub enum RankPolicy {
    LookupCount,
    SocialScore {
        alpha: f64,
        beta: f64,
        weights: InteractionWeights,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordOutcome {
    pub newly_tracked: bool,
    pub evicted: Option<UserId>,
}

#[derive(Debug, Clone)]
pub struct MucList {
    entries: HashMap<UserId, MucEntry>,
    max_users: usize,
    total_events: u64,
}

impl Default for MucList {
    fn default() -> Self {
        MucList::new(DEFAULT_MUC_CAPACITY)
    }
}

/// Higher value first, ties broken by ascending user name.
pub fn rank_order(a: (&UserId, f64), b: (&UserId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

impl MucList {
    pub fn new(max_users: usize) -> Self {
        assert!(max_users > 0, "MUC capacity must be positive");
        MucList {
            entries: HashMap::new(),
            max_users,
            total_events: 0,
        }
    }

    pub fn record(
        &mut self,
        user: &UserId,
        kind: InteractionKind,
        now: SimTime,
        policy: &RankPolicy,
    ) -> RecordOutcome {
        if let Some(entry) = self.entries.get_mut(user) {
            entry.push(kind, now);
            self.total_events += 1;
            return RecordOutcome {
                newly_tracked: false,
                evicted: None,
            };
        }
        let evicted = if self.entries.len() >= self.max_users {
            let victim = self
                .lowest_ranked(policy, now)
                .expect("full MUC list has a lowest-ranked user");
            self.remove(&victim);
            Some(victim)
        } else {
            None
        };
        self.entries
            .insert(user.clone(), MucEntry::new(user.clone(), kind, now));
        self.total_events += 1;
        RecordOutcome {
            newly_tracked: true,
            evicted,
        }
    }

    pub fn record_interaction(&mut self, rec: &InteractionRecord, policy: &RankPolicy) -> RecordOutcome {
        self.record(&rec.peer, rec.kind, rec.at, policy)
    }

    pub fn remove(&mut self, user: &UserId) -> Option<MucEntry> {
        let entry = self.entries.remove(user)?;
        self.total_events -= entry.event_count();
        Some(entry)
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.total_events = 0;
    }

    pub fn get(&self, user: &UserId) -> Option<&MucEntry> {
        self.entries.get(user)
    }

    pub fn contains(&self, user: &UserId) -> bool {
        self.entries.contains_key(user)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_users(&self) -> usize {
        self.max_users
    }

    /// |I|: all interactions currently held, across users.
    pub fn total_events(&self) -> u64 {
        self.total_events
    }

    pub fn entries(&self) -> impl Iterator<Item = &MucEntry> {
        self.entries.values()
    }

    /// Every tracked user with its ranking value, best first.
    pub fn ranked(&self, policy: &RankPolicy, now: SimTime) -> Vec<(UserId, f64)> {
        let mut ranked: Vec<(UserId, f64)> = self
            .entries
            .values()
            .map(|e| (e.user.clone(), self.rank_value(e, policy, now)))
            .collect();
        ranked.sort_by(|a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
        ranked
    }

    fn rank_value(&self, entry: &MucEntry, policy: &RankPolicy, now: SimTime) -> f64 {
        match policy {
            RankPolicy::LookupCount => entry.lookup_count() as f64,
            RankPolicy::SocialScore {
                alpha,
                beta,
                weights,
            } => {
                alpha * score::tie_strength_of(entry, self.total_events, weights)
                    + beta * score::mil_of(entry, now)
            }
        }
    }

    pub fn lowest_ranked(&self, policy: &RankPolicy, now: SimTime) -> Option<UserId> {
        self.entries
            .values()
            .map(|e| (&e.user, self.rank_value(e, policy, now)))
            .max_by(|a, b| rank_order(*a, *b))
            .map(|(u, _)| u.clone())
    }

    pub(crate) fn entry_or_unknown(&self, user: &UserId) -> Result<&MucEntry, SocialError> {
        self.entries
            .get(user)
            .ok_or_else(|| SocialError::UnknownUser(user.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(name: &str) -> UserId {
        UserId::new(name).unwrap()
    }

    #[test]
    fn first_insertion() {
        let mut muc = MucList::default();
        let out = muc.record(&u("bob"), InteractionKind::Lookup, SimTime(5), &RankPolicy::LookupCount);
        assert!(out.newly_tracked);
        assert_eq!(muc.len(), 1);
        assert_eq!(muc.get(&u("bob")).unwrap().lookup_count(), 1);
    }

    #[test]
    fn append_semantics() {
        let mut muc = MucList::default();
        muc.record(&u("bob"), InteractionKind::Lookup, SimTime(5), &RankPolicy::LookupCount);
        let out = muc.record(&u("bob"), InteractionKind::Lookup, SimTime(9), &RankPolicy::LookupCount);
        assert!(!out.newly_tracked);
        let e = muc.get(&u("bob")).unwrap();
        assert_eq!(e.lookup_count(), 2);
        assert_eq!((e.first_at(), e.last_at()), (SimTime(5), SimTime(9)));
        assert_eq!(muc.total_events(), 2);
    }

    #[test]
    fn non_lookup_kinds_do_not_count_as_lookups() {
        let mut muc = MucList::default();
        muc.record(&u("bob"), InteractionKind::Like, SimTime(1), &RankPolicy::LookupCount);
        muc.record(&u("bob"), InteractionKind::Lookup, SimTime(2), &RankPolicy::LookupCount);
        let e = muc.get(&u("bob")).unwrap();
        assert_eq!(e.lookup_count(), 1);
        assert_eq!(e.event_count(), 2);
    }

    #[test]
    fn full_list_evicts_lowest_ranked() {
        let mut muc = MucList::new(150);
        let policy = RankPolicy::LookupCount;
        for i in 0..150 {
            let user = u(&format!("user{i:03}"));
            // user000 gets one lookup, everyone else two
            muc.record(&user, InteractionKind::Lookup, SimTime(i), &policy);
            if i != 0 {
                muc.record(&user, InteractionKind::Lookup, SimTime(i), &policy);
            }
        }
        assert_eq!(muc.len(), 150);
        let out = muc.record(&u("newcomer"), InteractionKind::Lookup, SimTime(200), &policy);
        assert_eq!(out.evicted, Some(u("user000")));
        assert_eq!(muc.len(), 150);
        assert_eq!(muc.total_events(), 149 * 2 + 1);
    }

    #[test]
    fn eviction_tie_break_drops_largest_name() {
        let mut muc = MucList::new(2);
        let policy = RankPolicy::LookupCount;
        muc.record(&u("a"), InteractionKind::Lookup, SimTime(0), &policy);
        muc.record(&u("b"), InteractionKind::Lookup, SimTime(0), &policy);
        let out = muc.record(&u("c"), InteractionKind::Lookup, SimTime(1), &policy);
        assert_eq!(out.evicted, Some(u("b")));
    }

    #[test]
    fn ranking_is_value_then_name() {
        let mut muc = MucList::default();
        let policy = RankPolicy::LookupCount;
        for (name, n) in [("c", 1), ("a", 5), ("b", 5), ("d", 3)] {
            for t in 0..n {
                muc.record(&u(name), InteractionKind::Lookup, SimTime(t), &policy);
            }
        }
        let names: Vec<String> = muc
            .ranked(&policy, SimTime(10))
            .into_iter()
            .map(|(u, _)| u.to_string())
            .collect();
        assert_eq!(names, ["a", "b", "d", "c"]);
    }
}
