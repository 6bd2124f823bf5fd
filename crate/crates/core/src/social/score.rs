//! Social score: weighted tie strength plus medium interaction length.
//!
//! * tie strength of `x` = Σ weight(interaction) over `x`'s interactions / |I|,
//!   where |I| counts every interaction held in the MUC list;
//! * medium interaction length of `x`, with timestamps `T_0..T_n`:
//!   `[Σ_{i=1..n} (T_i - T_{i-1}) / (n - 1)] / (T_now - T_0)`;
//! * score = `alpha * tie_strength + beta * mil`.
//!
//! The gap sum telescopes to `T_n - T_0`, so only the first and last
//! timestamps and the event count are needed. A single interaction, or
//! `T_now == T_0`, yields zero. With exactly two interactions the `n - 1`
//! divisor would be zero and is taken as one.

use crate::error::SocialError;
use crate::model::{InteractionKind, SimTime, UserId};
use crate::social::muc::{MucEntry, MucList};

/// Weight per interaction kind; all 1.0 by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionWeights([f64; InteractionKind::ALL.len()]);

impl Default for InteractionWeights {
    fn default() -> Self {
        InteractionWeights([1.0; InteractionKind::ALL.len()])
    }
}

impl InteractionWeights {
    pub fn get(&self, kind: InteractionKind) -> f64 {
        self.0[kind.index()]
    }

    pub fn set(&mut self, kind: InteractionKind, weight: f64) {
        assert!(weight >= 0.0 && weight.is_finite(), "weights must be non-negative");
        self.0[kind.index()] = weight;
    }

    pub fn with(mut self, kind: InteractionKind, weight: f64) -> Self {
        self.set(kind, weight);
        self
    }
}

pub(crate) fn tie_strength_of(entry: &MucEntry, total_events: u64, weights: &InteractionWeights) -> f64 {
    if total_events == 0 {
        return 0.0;
    }
    entry.weighted_sum(weights) / total_events as f64
}

pub(crate) fn mil_of(entry: &MucEntry, now: SimTime) -> f64 {
    let gaps = entry.event_count().saturating_sub(1);
    let span_to_now = now.since(entry.first_at());
    if gaps == 0 || span_to_now == 0 {
        return 0.0;
    }
    let divisor = gaps.saturating_sub(1).max(1) as f64;
    let mean_gap = entry.last_at().since(entry.first_at()) as f64 / divisor;
    mean_gap / span_to_now as f64
}

pub fn tie_strength(muc: &MucList, user: &UserId, weights: &InteractionWeights) -> Result<f64, SocialError> {
    let entry = muc.entry_or_unknown(user)?;
    Ok(tie_strength_of(entry, muc.total_events(), weights))
}

pub fn mil(muc: &MucList, user: &UserId, now: SimTime) -> Result<f64, SocialError> {
    Ok(mil_of(muc.entry_or_unknown(user)?, now))
}

pub fn social_score(
    muc: &MucList,
    user: &UserId,
    alpha: f64,
    beta: f64,
    weights: &InteractionWeights,
    now: SimTime,
) -> Result<f64, SocialError> {
    if alpha + beta <= 0.0 {
        return Err(SocialError::InvalidWeights { alpha, beta });
    }
    let entry = muc.entry_or_unknown(user)?;
    Ok(alpha * tie_strength_of(entry, muc.total_events(), weights) + beta * mil_of(entry, now))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::muc::RankPolicy;
    use proptest::prelude::*;

    fn u(name: &str) -> UserId {
        UserId::new(name).unwrap()
    }

    fn muc_with(events: &[(&str, InteractionKind, u64)]) -> MucList {
        let mut muc = MucList::default();
        for &(name, kind, t) in events {
            muc.record(&u(name), kind, SimTime(t), &RankPolicy::LookupCount);
        }
        muc
    }

    /// Direct summation oracle for the weighted tie strength.
    fn tie_oracle(events: &[(&str, InteractionKind, u64)], x: &str, w: &InteractionWeights) -> f64 {
        let num: f64 = events.iter().filter(|e| e.0 == x).map(|e| w.get(e.1)).sum();
        num / events.len() as f64
    }

    #[test]
    fn tie_strength_examples() {
        let w = InteractionWeights::default();
        let sole: Vec<_> = (0..5).map(|t| ("x", InteractionKind::Lookup, t)).collect();
        assert_eq!(tie_strength(&muc_with(&sole), &u("x"), &w).unwrap(), 1.0);

        let mut mixed: Vec<_> = (0..3).map(|t| ("x", InteractionKind::Lookup, t)).collect();
        mixed.extend((0..7).map(|t| ("y", InteractionKind::Lookup, t)));
        let v = tie_strength(&muc_with(&mixed), &u("x"), &w).unwrap();
        assert!((v - 0.3).abs() < 1e-12);

        let w = InteractionWeights::default()
            .with(InteractionKind::Comment, 2.0)
            .with(InteractionKind::Lookup, 1.0);
        let events = [
            ("x", InteractionKind::Comment, 0),
            ("x", InteractionKind::Lookup, 1),
            ("y", InteractionKind::Lookup, 0),
            ("y", InteractionKind::Lookup, 1),
            ("z", InteractionKind::Lookup, 0),
            ("z", InteractionKind::Lookup, 1),
        ];
        let expected = tie_oracle(&events, "x", &w);
        assert!((expected - 0.5).abs() < 1e-12);
        let v = tie_strength(&muc_with(&events), &u("x"), &w).unwrap();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn tie_strength_unknown_user() {
        let muc = MucList::default();
        assert!(matches!(
            tie_strength(&muc, &u("x"), &InteractionWeights::default()),
            Err(SocialError::UnknownUser(_))
        ));
    }

    #[test]
    fn mil_examples() {
        let l = InteractionKind::Lookup;
        let muc = muc_with(&[("x", l, 0), ("x", l, 10), ("x", l, 20)]);
        let v = mil(&muc, &u("x"), SimTime(30)).unwrap();
        assert!((v - 20.0 / 30.0).abs() < 1e-12, "{v}");

        let muc = muc_with(&[("x", l, 7)]);
        assert_eq!(mil(&muc, &u("x"), SimTime(30)).unwrap(), 0.0);

        let muc = muc_with(&[("x", l, 0), ("x", l, 30)]);
        assert_eq!(mil(&muc, &u("x"), SimTime(30)).unwrap(), 1.0);

        let muc = muc_with(&[("x", l, 30), ("x", l, 30)]);
        assert_eq!(mil(&muc, &u("x"), SimTime(30)).unwrap(), 0.0);
    }

    #[test]
    fn social_score_examples() {
        let l = InteractionKind::Lookup;
        // x: 3 of 10 events at 0, 10, 20 -> tie 0.3, mil at t=30 -> 2/3
        let mut events = vec![("x", l, 0), ("x", l, 10), ("x", l, 20)];
        events.extend((0..7).map(|t| ("y", l, t)));
        let muc = muc_with(&events);
        let w = InteractionWeights::default();
        let s = social_score(&muc, &u("x"), 0.5, 0.5, &w, SimTime(30)).unwrap();
        assert!((s - 0.483_333_333_333).abs() < 1e-9, "{s}");

        let s = social_score(&muc, &u("x"), 1.0, 0.0, &w, SimTime(30)).unwrap();
        assert!((s - 0.3).abs() < 1e-12);

        assert!(matches!(
            social_score(&muc, &u("x"), 0.0, 0.0, &w, SimTime(30)),
            Err(SocialError::InvalidWeights { .. })
        ));
        assert!(matches!(
            social_score(&muc, &u("nobody"), 0.5, 0.5, &w, SimTime(30)),
            Err(SocialError::UnknownUser(_))
        ));
    }

    proptest! {
        #[test]
        fn tie_strength_never_drops_on_extra_lookup(
            others in proptest::collection::vec(0u8..5, 0..40),
            own in 1usize..20,
        ) {
            let w = InteractionWeights::default();
            let mut muc = MucList::default();
            let x = u("x");
            for i in 0..own {
                muc.record(&x, InteractionKind::Lookup, SimTime(i as u64), &RankPolicy::LookupCount);
            }
            for (i, o) in others.iter().enumerate() {
                muc.record(&u(&format!("o{o}")), InteractionKind::Lookup, SimTime(i as u64), &RankPolicy::LookupCount);
            }
            let before = tie_strength(&muc, &x, &w).unwrap();
            muc.record(&x, InteractionKind::Lookup, SimTime(100), &RankPolicy::LookupCount);
            let after = tie_strength(&muc, &x, &w).unwrap();
            prop_assert!(after >= before);
            prop_assert!(after <= 1.0);
        }
    }
}
