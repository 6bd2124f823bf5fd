//! Subscription selection strategies.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::SocialError;
use crate::model::{SimTime, UserId};
use crate::social::muc::{DEFAULT_MUC_CAPACITY, MucList, RankPolicy};
use crate::social::score::InteractionWeights;
use crate::social::store::{DEFAULT_CHANNEL_LIMIT, SubscriptionSet};

pub const DEFAULT_UPDATE_INTERVAL_TICKS: u64 = 50_000;
pub const DEFAULT_LOOKUPS_PER_INTERVAL: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Random,
    Trend,
    SocialScore,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Random, StrategyKind::Trend, StrategyKind::SocialScore];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Trend => "trend",
            StrategyKind::SocialScore => "social_score",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StrategyKind::Random => "Random",
            StrategyKind::Trend => "Trend",
            StrategyKind::SocialScore => "SocialScore",
        };
        f.write_str(s)
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "random" => Ok(StrategyKind::Random),
            "trend" => Ok(StrategyKind::Trend),
            "socialscore" => Ok(StrategyKind::SocialScore),
            _ => Err(format!("unknown strategy {s:?} (expected Random, Trend or SocialScore)")),
        }
    }
}

/// When the interval strategies re-rank their MUC list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// Every `update_interval` ticks.
    TimeBased,
    /// After every `m` tracked lookups.
    LookupCountBased,
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trigger::TimeBased => "TimeBased",
            Trigger::LookupCountBased => "LookupCountBased",
        })
    }
}

impl FromStr for Trigger {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "timebased" | "time" => Ok(Trigger::TimeBased),
            "lookupcountbased" | "lookupcount" | "count" => Ok(Trigger::LookupCountBased),
            _ => Err(format!("unknown trigger {s:?} (expected TimeBased or LookupCountBased)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub alpha: f64,
    pub beta: f64,
    pub weights: InteractionWeights,
    /// Parallel update channels.
    pub n: usize,
    /// Tracked lookups per interval for the count-based trigger.
    pub m: usize,
    pub update_interval: u64,
    pub trigger: Trigger,
    pub rng_seed: u64,
    pub bootstrapping: bool,
    pub muc_capacity: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            kind: StrategyKind::SocialScore,
            alpha: 0.5,
            beta: 0.5,
            weights: InteractionWeights::default(),
            n: DEFAULT_CHANNEL_LIMIT,
            m: DEFAULT_LOOKUPS_PER_INTERVAL,
            update_interval: DEFAULT_UPDATE_INTERVAL_TICKS,
            trigger: Trigger::TimeBased,
            rng_seed: 0,
            bootstrapping: true,
            muc_capacity: DEFAULT_MUC_CAPACITY,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err("alpha and beta must be non-negative".into());
        }
        if self.kind == StrategyKind::SocialScore && self.alpha + self.beta <= 0.0 {
            return Err("alpha + beta must be positive for the social score strategy".into());
        }
        if self.n == 0 {
            return Err("n must be positive".into());
        }
        if self.trigger == Trigger::LookupCountBased && self.n >= self.m {
            return Err(format!("n ({}) must be smaller than m ({})", self.n, self.m));
        }
        if self.trigger == Trigger::TimeBased && self.update_interval == 0 {
            return Err("update interval must be positive".into());
        }
        if self.muc_capacity < self.n {
            return Err("MUC capacity must be at least n".into());
        }
        Ok(())
    }

    /// The order used both for selection and for MUC eviction.
    pub fn rank_policy(&self) -> RankPolicy {
        match self.kind {
            StrategyKind::SocialScore => RankPolicy::SocialScore {
                alpha: self.alpha,
                beta: self.beta,
                weights: self.weights,
            },
            StrategyKind::Random | StrategyKind::Trend => RankPolicy::LookupCount,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubscriptionDiff {
    pub to_subscribe: BTreeSet<UserId>,
    pub to_unsubscribe: BTreeSet<UserId>,
}

impl SubscriptionDiff {
    pub fn is_empty(&self) -> bool {
        self.to_subscribe.is_empty() && self.to_unsubscribe.is_empty()
    }

    pub fn subscribe(user: UserId) -> Self {
        SubscriptionDiff {
            to_subscribe: BTreeSet::from([user]),
            to_unsubscribe: BTreeSet::new(),
        }
    }

    /// subscribe `new ∖ old`, unsubscribe `old ∖ new`.
    pub fn between(new: &BTreeSet<UserId>, old: &BTreeSet<UserId>) -> Self {
        SubscriptionDiff {
            to_subscribe: new.difference(old).cloned().collect(),
            to_unsubscribe: old.difference(new).cloned().collect(),
        }
    }

    /// Channel count after applying the diff to `current`.
    pub fn resulting_len(&self, current: &SubscriptionSet) -> usize {
        let removed = self.to_unsubscribe.iter().filter(|u| current.contains(u)).count();
        let added = self
            .to_subscribe
            .iter()
            .filter(|u| !current.contains(u) || self.to_unsubscribe.contains(u))
            .count();
        current.len() - removed + added
    }

    pub fn check_cap(&self, current: &SubscriptionSet) -> Result<(), SocialError> {
        let would_hold = self.resulting_len(current);
        if would_hold > current.limit() {
            return Err(SocialError::CapExceeded {
                would_hold,
                limit: current.limit(),
            });
        }
        Ok(())
    }
}

/// The `n` best users of the MUC list under `policy`.
pub fn top_n(muc: &MucList, policy: &RankPolicy, n: usize, now: SimTime) -> BTreeSet<UserId> {
    muc.ranked(policy, now).into_iter().take(n).map(|(u, _)| u).collect()
}

/// Interval re-ranking for trend and social score. Trend clears the MUC list
/// afterwards; social score keeps it. Random has no interval action.
pub fn select(
    cfg: &StrategyConfig,
    muc: &mut MucList,
    channels: &SubscriptionSet,
    now: SimTime,
) -> SubscriptionDiff {
    match cfg.kind {
        StrategyKind::Random => SubscriptionDiff::default(),
        StrategyKind::Trend => {
            let chosen = top_n(muc, &RankPolicy::LookupCount, cfg.n, now);
            muc.clear();
            SubscriptionDiff::between(&chosen, &channels.to_set())
        }
        StrategyKind::SocialScore => {
            let chosen = top_n(muc, &cfg.rank_policy(), cfg.n, now);
            SubscriptionDiff::between(&chosen, &channels.to_set())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionKind;

    fn u(name: &str) -> UserId {
        UserId::new(name).unwrap()
    }

    fn set(names: &[&str]) -> BTreeSet<UserId> {
        names.iter().map(|n| u(n)).collect()
    }

    fn channels(names: &[&str], limit: usize) -> SubscriptionSet {
        let mut s = SubscriptionSet::new(limit);
        for n in names {
            s.insert(u(n));
        }
        s
    }

    #[test]
    fn trend_selects_top_counts_and_clears() {
        let cfg = StrategyConfig {
            kind: StrategyKind::Trend,
            n: 2,
            ..StrategyConfig::default()
        };
        let mut muc = MucList::default();
        for (name, count) in [("a", 5), ("b", 3), ("c", 1)] {
            for t in 0..count {
                muc.record(&u(name), InteractionKind::Lookup, SimTime(t), &RankPolicy::LookupCount);
            }
        }
        let diff = select(&cfg, &mut muc, &channels(&["c"], 2), SimTime(10));
        assert_eq!(diff.to_subscribe, set(&["a", "b"]));
        assert_eq!(diff.to_unsubscribe, set(&["c"]));
        assert!(muc.is_empty());
    }

    #[test]
    fn social_score_fixed_point_keeps_muc() {
        let cfg = StrategyConfig {
            kind: StrategyKind::SocialScore,
            n: 2,
            ..StrategyConfig::default()
        };
        let mut muc = MucList::default();
        let policy = cfg.rank_policy();
        for t in 0..9 {
            muc.record(&u("a"), InteractionKind::Lookup, SimTime(t), &policy);
        }
        muc.record(&u("b"), InteractionKind::Lookup, SimTime(3), &policy);
        let diff = select(&cfg, &mut muc, &channels(&["a", "b"], 2), SimTime(10));
        assert!(diff.is_empty());
        assert_eq!(muc.len(), 2);
    }

    #[test]
    fn random_has_no_interval_action() {
        let cfg = StrategyConfig {
            kind: StrategyKind::Random,
            ..StrategyConfig::default()
        };
        let mut muc = MucList::default();
        muc.record(&u("a"), InteractionKind::Lookup, SimTime(0), &RankPolicy::LookupCount);
        assert!(select(&cfg, &mut muc, &channels(&[], 15), SimTime(1)).is_empty());
        assert_eq!(muc.len(), 1);
    }

    #[test]
    fn cap_check() {
        let current = channels(&["a", "b"], 2);
        let ok = SubscriptionDiff {
            to_subscribe: set(&["c"]),
            to_unsubscribe: set(&["a"]),
        };
        assert!(ok.check_cap(&current).is_ok());
        let too_many = SubscriptionDiff::subscribe(u("c"));
        assert_eq!(
            too_many.check_cap(&current),
            Err(SocialError::CapExceeded { would_hold: 3, limit: 2 })
        );
        let resubscribe_existing = SubscriptionDiff::subscribe(u("a"));
        assert!(resubscribe_existing.check_cap(&current).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(StrategyConfig::default().validate().is_ok());
        let zero = StrategyConfig {
            alpha: 0.0,
            beta: 0.0,
            ..StrategyConfig::default()
        };
        assert!(zero.validate().is_err());
        let count = StrategyConfig {
            trigger: Trigger::LookupCountBased,
            n: 150,
            m: 150,
            ..StrategyConfig::default()
        };
        assert!(count.validate().is_err());
        assert_eq!("social_score".parse::<StrategyKind>(), Ok(StrategyKind::SocialScore));
        assert_eq!("Trend".parse::<StrategyKind>(), Ok(StrategyKind::Trend));
        assert!("best".parse::<StrategyKind>().is_err());
    }
}
