use std::fmt;

use serde::{Deserialize, Serialize};

use crate::signals::{SignalGroup, SignalId, SignalOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Incorrect,
    Correct,
    Abstain,
}

impl Vote {
    pub const ALL: [Vote; 3] = [Vote::Incorrect, Vote::Correct, Vote::Abstain];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// A voter in the labeler registry: one per signal plus three positive labelers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Labeler {
    Signal(SignalId),
    /// Votes correct when no signal fired.
    All,
    /// Votes correct when no database signal fired.
    Db,
    /// Votes correct when no model-judged signal fired.
    Llm,
}

impl Labeler {
    pub fn registry() -> Vec<Labeler> {
        let mut v: Vec<Labeler> = SignalId::ALL.into_iter().map(Labeler::Signal).collect();
        v.extend([Labeler::All, Labeler::Db, Labeler::Llm]);
        v
    }

    pub fn key(self) -> String {
        match self {
            Labeler::Signal(s) => s.key(),
            Labeler::All => "positive_all".into(),
            Labeler::Db => "positive_db".into(),
            Labeler::Llm => "positive_llm".into(),
        }
    }

    pub fn from_key(key: &str) -> Option<Labeler> {
        match key {
            "positive_all" => Some(Labeler::All),
            "positive_db" => Some(Labeler::Db),
            "positive_llm" => Some(Labeler::Llm),
            k => SignalId::from_key(k).map(Labeler::Signal),
        }
    }
}

impl fmt::Display for Labeler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

pub const REGISTRY_LEN: usize = 17;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub query_id: String,
    pub votes: Vec<Vote>,
}

impl DecisionVector {
    pub fn new(query_id: impl Into<String>, votes: Vec<Vote>) -> Self {
        DecisionVector {
            query_id: query_id.into(),
            votes,
        }
    }

    pub fn vote(&self, labeler: Labeler) -> Vote {
        let idx = Labeler::registry().iter().position(|l| *l == labeler).expect("registered labeler");
        self.votes.get(idx).copied().unwrap_or(Vote::Abstain)
    }
}

/// Maps signal outcomes to labeler votes. Missing signals abstain.
pub fn build_decision_vector(query_id: impl Into<String>, outcomes: &[SignalOutcome]) -> DecisionVector {
    let fired = |s: SignalId| outcomes.iter().any(|o| o.signal_id == s && o.flagged);
    let mut votes: Vec<Vote> = SignalId::ALL
        .iter()
        .map(|s| if fired(*s) { Vote::Incorrect } else { Vote::Abstain })
        .collect();
    let none_in = |group: Option<SignalGroup>| {
        !SignalId::ALL
            .iter()
            .filter(|s| group.is_none_or(|g| s.group() == g))
            .any(|s| fired(*s))
    };
    for group in [None, Some(SignalGroup::Db), Some(SignalGroup::Llm)] {
        votes.push(if none_in(group) { Vote::Correct } else { Vote::Abstain });
    }
    DecisionVector::new(query_id, votes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn flagged(ids: &[SignalId]) -> Vec<SignalOutcome> {
        SignalId::ALL
            .iter()
            .map(|s| {
                if ids.contains(s) {
                    SignalOutcome::flag(*s, Default::default(), "x", Value::Null)
                } else {
                    SignalOutcome::clear(*s, Value::Null)
                }
            })
            .collect()
    }

    #[test]
    fn positive_labelers() {
        let v = build_decision_vector("q", &flagged(&[]));
        assert_eq!(v.votes.len(), REGISTRY_LEN);
        assert!(v.votes[..14].iter().all(|x| *x == Vote::Abstain));
        assert!(v.votes[14..].iter().all(|x| *x == Vote::Correct));

        let v = build_decision_vector("q", &flagged(&[SignalId::ColumnAmbiguity]));
        assert_eq!(v.vote(Labeler::Db), Vote::Correct);
        assert_eq!(v.vote(Labeler::Llm), Vote::Abstain);
        assert_eq!(v.vote(Labeler::All), Vote::Abstain);
        assert_eq!(v.vote(Labeler::Signal(SignalId::ColumnAmbiguity)), Vote::Incorrect);
    }

    #[test]
    fn keys_roundtrip() {
        for l in Labeler::registry() {
            assert_eq!(Labeler::from_key(&l.key()), Some(l));
        }
    }
}
