//! GOOSE inspection, loop-based origin localization and mitigation.
//!
//! The IDS sits between the station bus and the Omicron. Frames from the
//! station bus are checked against a rule set, forwarded after the
//! inspection delay, and also looped back through the switch once. A frame
//! that shows up on the return port without having been sent round the loop
//! must have been produced by the switch itself.

mod device;
mod localize;
mod rules;

pub use device::{IdentityBinding, IdsConfig, IdsDevice, LoopTracker};
pub use localize::{
    localize, mitigate, Host, IdsPorts, LocalizationVerdict, LocalizeError, ObservationRecord, VerdictOutcome,
};
pub use rules::{
    inspect, Alert, Rule, RuleKind, RuleSet, RuleSetError, Subscription, SubscriptionState, MALFORMED_RULE_ID,
};
