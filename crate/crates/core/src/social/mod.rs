//! The social cache: interaction tracking, subscription selection, push-based
//! update dissemination, social bootstrapping and the two-layer store.
//!
//! A [`SocialCache`] never talks to the network itself. Every state change
//! that has to reach another peer is returned as a list of [`Outgoing`]
//! messages, which the owning peer wraps into envelopes and dispatches.

pub mod muc;
pub mod score;
pub mod store;
pub mod strategy;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SocialError;
use crate::model::{ContentObject, InteractionKind, SimTime, StorageKey, UserId};
use crate::overlay::MessageBody;

pub use muc::{MucEntry, MucList, RankPolicy, RecordOutcome};
pub use score::{mil, social_score, tie_strength, InteractionWeights};
pub use store::{OwnContentStore, ReceiverList, SocialStore, SubscriptionSet};
pub use strategy::{StrategyConfig, StrategyKind, SubscriptionDiff, Trigger};

/// A message the social cache wants delivered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outgoing {
    pub to: UserId,
    pub body: MessageBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Accepted,
    Ignored,
}

#[derive(Debug)]
pub struct SocialCache {
    owner: UserId,
    cfg: StrategyConfig,
    policy: RankPolicy,
    muc: MucList,
    channels: SubscriptionSet,
    receivers: ReceiverList,
    store: SocialStore,
    own: OwnContentStore,
    rng: ChaCha8Rng,
    tracked_since_selection: usize,
}

impl SocialCache {
    pub fn new(owner: UserId, cfg: StrategyConfig) -> Self {
        SocialCache {
            owner,
            policy: cfg.rank_policy(),
            muc: MucList::new(cfg.muc_capacity),
            channels: SubscriptionSet::new(cfg.n),
            receivers: ReceiverList::default(),
            store: SocialStore::default(),
            own: OwnContentStore::default(),
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            tracked_since_selection: 0,
            cfg,
        }
    }

    pub fn owner(&self) -> &UserId {
        &self.owner
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.cfg
    }

    pub fn muc(&self) -> &MucList {
        &self.muc
    }

    pub fn channels(&self) -> &SubscriptionSet {
        &self.channels
    }

    pub fn receivers(&self) -> &ReceiverList {
        &self.receivers
    }

    pub fn store(&self) -> &SocialStore {
        &self.store
    }

    pub fn own(&self) -> &OwnContentStore {
        &self.own
    }

    /// Records a lookup of `user`'s content and runs the strategy's
    /// immediate actions.
    ///
    /// Random subscribes every newly tracked user, replacing a uniformly
    /// drawn channel once all `n` are taken; the replaced user also leaves the
    /// MUC list. Trend and social score subscribe directly while fewer than
    /// `n` channels are open and otherwise wait for the next selection round.
    pub fn track_lookup(&mut self, user: &UserId, now: SimTime) -> Vec<Outgoing> {
        self.track(user, InteractionKind::Lookup, now)
    }

    pub fn track(&mut self, user: &UserId, kind: InteractionKind, now: SimTime) -> Vec<Outgoing> {
        if *user == self.owner {
            return Vec::new();
        }
        let recorded = self.muc.record(user, kind, now, &self.policy);
        let mut out = Vec::new();

        if kind == InteractionKind::Lookup && !self.channels.contains(user) {
            let diff = match self.cfg.kind {
                strategy::StrategyKind::Random if recorded.newly_tracked => {
                    Some(self.random_replacement(user))
                }
                strategy::StrategyKind::Random => None,
                _ if !self.channels.is_full() => Some(SubscriptionDiff::subscribe(user.clone())),
                _ => None,
            };
            if let Some(diff) = diff {
                out.extend(self.apply_diff(diff).expect("immediate action respects the cap"));
            }
        }

        if kind == InteractionKind::Lookup
            && self.cfg.trigger == Trigger::LookupCountBased
            && self.cfg.kind != StrategyKind::Random
        {
            self.tracked_since_selection += 1;
            if self.tracked_since_selection >= self.cfg.m {
                self.tracked_since_selection = 0;
                let diff = self.run_selection(now);
                out.extend(self.apply_diff(diff).expect("selection respects the cap"));
            }
        }
        out
    }

    fn random_replacement(&mut self, user: &UserId) -> SubscriptionDiff {
        let mut diff = SubscriptionDiff::subscribe(user.clone());
        if self.channels.is_full() {
            let index = self.rng.random_range(0..self.channels.len());
            let victim = self.channels.get(index).expect("index in range").clone();
            self.muc.remove(&victim);
            diff.to_unsubscribe.insert(victim);
        }
        diff
    }

    /// Interval re-ranking; see [`strategy::select`].
    pub fn run_selection(&mut self, now: SimTime) -> SubscriptionDiff {
        strategy::select(&self.cfg, &mut self.muc, &self.channels, now)
    }

    /// Applies a diff, purging unsubscribed users' content. Rejects the whole
    /// diff if it would exceed the channel cap.
    pub fn apply_diff(&mut self, diff: SubscriptionDiff) -> Result<Vec<Outgoing>, SocialError> {
        diff.check_cap(&self.channels)?;
        let mut out = Vec::new();
        for user in diff.to_unsubscribe {
            if self.channels.remove(&user) {
                self.store.purge(&user);
                out.push(Outgoing {
                    to: user,
                    body: MessageBody::Unsubscribe,
                });
            }
        }
        for user in diff.to_subscribe {
            if user != self.owner && self.channels.insert(user.clone()) {
                out.push(Outgoing {
                    to: user,
                    body: MessageBody::Subscribe,
                });
            }
        }
        Ok(out)
    }

    /// A peer asked for our updates. Answers with a bootstrap dump of our own
    /// content the first time, if bootstrapping is on.
    pub fn on_subscribe_received(&mut self, subscriber: &UserId) -> Option<Outgoing> {
        if *subscriber == self.owner || !self.receivers.insert(subscriber.clone()) {
            return None;
        }
        self.cfg.bootstrapping.then(|| Outgoing {
            to: subscriber.clone(),
            body: MessageBody::BootstrapDump(self.own.snapshot()),
        })
    }

    pub fn on_unsubscribe_received(&mut self, subscriber: &UserId) {
        self.receivers.remove(subscriber);
    }

    pub fn on_social_update(&mut self, from: &UserId, content: ContentObject) -> UpdateOutcome {
        if !self.channels.contains(from) || content.key.owner() != from {
            return UpdateOutcome::Ignored;
        }
        self.store.store(from, content);
        UpdateOutcome::Accepted
    }

    /// Inserts a bootstrap dump; returns how many items were accepted.
    pub fn on_bootstrap(&mut self, from: &UserId, items: Vec<ContentObject>) -> usize {
        items
            .into_iter()
            .filter(|c| self.on_social_update(from, c.clone()) == UpdateOutcome::Accepted)
            .count()
    }

    /// Own content first, then the subscription store.
    pub fn lookup(&self, key: &StorageKey) -> Option<&ContentObject> {
        if *key.owner() == self.owner {
            return self.own.get(key);
        }
        self.store.get(key)
    }

    /// Keeps a locally written object and fans it out to every subscriber.
    pub fn publish(&mut self, content: &ContentObject) -> Vec<Outgoing> {
        debug_assert_eq!(content.key.owner(), &self.owner);
        self.own.put(content.clone());
        self.receivers
            .iter()
            .map(|r| Outgoing {
                to: r.clone(),
                body: MessageBody::SocialUpdate(content.clone()),
            })
            .collect()
    }
}
