use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::codec::{FrameDigest, GooseFrame, MacAddress};
use crate::netsim::SimTime;

/// Rule id used for frames that fail to decode.
pub const MALFORMED_RULE_ID: &str = "malformed-frame";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    /// st_num goes backwards, or sq_num goes backwards within one st_num.
    SequenceRegression,
    /// sq_num advances by more than `max_gap` within one st_num.
    SequenceSkip {
        #[serde(default = "default_gap")]
        max_gap: u32,
    },
    /// time_allowed_to_live outside `[min_ms, max_ms]`.
    TtlBound {
        #[serde(default = "default_ttl_min")]
        min_ms: u32,
        #[serde(default = "default_ttl_max")]
        max_ms: u32,
    },
    /// gocb_ref -> allowed source MACs.
    PublisherWhitelist { publishers: BTreeMap<String, Vec<MacAddress>> },
    /// gocb_ref -> IDS ports the publication may legitimately arrive on.
    IngressBinding { bindings: BTreeMap<String, Vec<u8>> },
    /// More than `max_frames` per gocb_ref inside one `window_us` window.
    RateLimit {
        #[serde(default = "default_rate_max")]
        max_frames: u32,
        #[serde(default = "default_rate_window")]
        window_us: u64,
    },
}

fn default_gap() -> u32 {
    1
}
fn default_ttl_min() -> u32 {
    1
}
fn default_ttl_max() -> u32 {
    60_000
}
fn default_rate_max() -> u32 {
    10
}
fn default_rate_window() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    #[serde(flatten)]
    pub kind: RuleKind,
}

impl Rule {
    pub fn new(id: impl Into<String>, kind: RuleKind) -> Self {
        Rule { id: id.into(), kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleSetError {
    #[error("duplicate rule id `{0}`")]
    DuplicateId(String),
    #[error("rule `{0}`: {1}")]
    BadParameter(String, &'static str),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self, RuleSetError> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.id.as_str()) {
                return Err(RuleSetError::DuplicateId(r.id.clone()));
            }
            match r.kind {
                RuleKind::TtlBound { min_ms, max_ms } if min_ms > max_ms => {
                    return Err(RuleSetError::BadParameter(r.id.clone(), "min_ms exceeds max_ms"))
                }
                RuleKind::RateLimit { window_us: 0, .. } => {
                    return Err(RuleSetError::BadParameter(r.id.clone(), "window_us must be > 0"))
                }
                _ => {}
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Whitelist and ingress bindings for one publisher, plus the
    /// parameter-free rules with their default settings.
    pub fn standard(gocb_ref: &str, publisher: MacAddress, ingress_ports: &[u8]) -> Self {
        let rules = vec![
            Rule::new("seq-regression", RuleKind::SequenceRegression),
            Rule::new("seq-skip", RuleKind::SequenceSkip { max_gap: default_gap() }),
            Rule::new("ttl-bound", RuleKind::TtlBound { min_ms: default_ttl_min(), max_ms: default_ttl_max() }),
            Rule::new(
                "publisher-whitelist",
                RuleKind::PublisherWhitelist { publishers: BTreeMap::from([(gocb_ref.to_owned(), vec![publisher])]) },
            ),
            Rule::new(
                "ingress-binding",
                RuleKind::IngressBinding { bindings: BTreeMap::from([(gocb_ref.to_owned(), ingress_ports.to_vec())]) },
            ),
            Rule::new(
                "rate-limit",
                RuleKind::RateLimit { max_frames: default_rate_max(), window_us: default_rate_window() },
            ),
        ];
        RuleSet::new(rules).expect("standard rule ids are unique")
    }
}

impl<'de> Deserialize<'de> for RuleSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rules = Vec::<Rule>::deserialize(deserializer)?;
        RuleSet::new(rules).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub time: SimTime,
    pub rule_id: String,
    pub gocb_ref: String,
    pub ingress: u8,
    pub digest: FrameDigest,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct RateWindow {
    start: SimTime,
    count: u32,
}

/// Per-publication tracking. Sequence fields only advance on frames that
/// raised no alert, so rejected traffic cannot move the baseline.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subscription {
    pub last_st_num: u32,
    pub last_sq_num: u32,
    pub last_timestamp: u64,
    seen: bool,
    windows: BTreeMap<String, RateWindow>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubscriptionState {
    subs: BTreeMap<String, Subscription>,
}

impl SubscriptionState {
    pub fn get(&self, gocb_ref: &str) -> Option<&Subscription> {
        self.subs.get(gocb_ref).filter(|s| s.seen)
    }
}

/// Evaluates every rule against one decoded frame and updates `state`.
pub fn inspect(
    state: &mut SubscriptionState,
    rules: &RuleSet,
    frame: &GooseFrame,
    ingress: u8,
    digest: FrameDigest,
    at: SimTime,
) -> Vec<Alert> {
    let sub = state.subs.entry(frame.gocb_ref.clone()).or_default();
    let mut alerts = Vec::new();
    let mut raise = |rule: &Rule| {
        alerts.push(Alert { time: at, rule_id: rule.id.clone(), gocb_ref: frame.gocb_ref.clone(), ingress, digest })
    };

    for rule in rules.rules() {
        let violated = match &rule.kind {
            RuleKind::SequenceRegression => {
                sub.seen
                    && (frame.st_num < sub.last_st_num
                        || (frame.st_num == sub.last_st_num && frame.sq_num < sub.last_sq_num))
            }
            RuleKind::SequenceSkip { max_gap } => {
                sub.seen
                    && frame.st_num == sub.last_st_num
                    && frame.sq_num > sub.last_sq_num
                    && frame.sq_num - sub.last_sq_num > *max_gap
            }
            RuleKind::TtlBound { min_ms, max_ms } => {
                frame.time_allowed_to_live < *min_ms || frame.time_allowed_to_live > *max_ms
            }
            RuleKind::PublisherWhitelist { publishers } => {
                !publishers.get(&frame.gocb_ref).is_some_and(|macs| macs.contains(&frame.src))
            }
            RuleKind::IngressBinding { bindings } => {
                !bindings.get(&frame.gocb_ref).is_some_and(|ports| ports.contains(&ingress))
            }
            RuleKind::RateLimit { max_frames, window_us } => {
                let w = sub.windows.entry(rule.id.clone()).or_default();
                if w.count == 0 || at.saturating_sub(w.start) >= *window_us {
                    w.start = at;
                    w.count = 0;
                }
                w.count += 1;
                w.count > *max_frames
            }
        };
        if violated {
            raise(rule);
        }
    }

    if alerts.is_empty() {
        sub.seen = true;
        sub.last_st_num = frame.st_num;
        sub.last_sq_num = frame.sq_num;
        sub.last_timestamp = sub.last_timestamp.max(frame.timestamp);
    }
    alerts
}
