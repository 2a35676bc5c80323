use serde::{Deserialize, Serialize};

use crate::codec::{MacAddress, RawFrame};

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingress_port: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethertype: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_mac: Option<MacAddress>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app_id: Option<u16>,
}

impl MatchFields {
    pub fn is_empty(&self) -> bool {
        self.ingress_port.is_none() && self.ethertype.is_none() && self.src_mac.is_none() && self.app_id.is_none()
    }

    /// Unset fields are wildcards. A field the frame cannot supply (too short,
    /// non-GOOSE ethertype for app_id) never matches a set field.
    pub fn matches(&self, raw: &RawFrame, ingress: u8) -> bool {
        fn check<T: PartialEq>(want: Option<T>, have: Option<T>) -> bool {
            match want {
                None => true,
                Some(w) => have == Some(w),
            }
        }
        check(self.ingress_port, Some(ingress))
            && check(self.ethertype, raw.ethertype())
            && check(self.src_mac, raw.src_mac())
            && check(self.app_id, raw.app_id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward(u8),
    Drop,
    ToController,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub priority: u16,
    #[serde(rename = "match")]
    pub match_fields: MatchFields,
    pub actions: Vec<Action>,
}

impl FlowEntry {
    pub fn new(priority: u16, match_fields: MatchFields, actions: Vec<Action>) -> Self {
        FlowEntry { priority, match_fields, actions }
    }

    pub fn is_drop(&self) -> bool {
        self.actions == [Action::Drop]
    }

    fn key(&self) -> (u16, &MatchFields) {
        (self.priority, &self.match_fields)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultAction {
    #[default]
    Drop,
    ToController,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowModCommand {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("an entry with priority {0} and identical match already exists")]
    DuplicateEntry(u16),
    #[error("no entry with priority {0} and that match")]
    NotFound(u16),
    #[error("match fields are all wildcards")]
    EmptyMatch,
    #[error("entry has no actions")]
    NoActions,
    #[error("drop cannot be combined with other actions")]
    MixedDrop,
    #[error("forward to port {port} but the switch has {ports} ports")]
    BadForwardPort { port: u8, ports: u8 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowTable {
    #[serde(default)]
    pub entries: Vec<FlowEntry>,
    #[serde(default)]
    pub default_action: DefaultAction,
}

impl FlowTable {
    pub fn new(default_action: DefaultAction) -> Self {
        FlowTable { entries: Vec::new(), default_action }
    }

    pub fn validate_entry(entry: &FlowEntry, ports: u8) -> Result<(), FlowError> {
        if entry.match_fields.is_empty() {
            return Err(FlowError::EmptyMatch);
        }
        if entry.actions.is_empty() {
            return Err(FlowError::NoActions);
        }
        if entry.actions.contains(&Action::Drop) && entry.actions.len() > 1 {
            return Err(FlowError::MixedDrop);
        }
        for a in &entry.actions {
            if let Action::Forward(p) = *a {
                if p == 0 || p > ports {
                    return Err(FlowError::BadForwardPort { port: p, ports });
                }
            }
        }
        Ok(())
    }

    /// Builds a table from entries, checking each one and rejecting duplicates.
    pub fn from_entries(entries: Vec<FlowEntry>, default_action: DefaultAction, ports: u8) -> Result<Self, FlowError> {
        let mut table = FlowTable::new(default_action);
        for e in entries {
            Self::validate_entry(&e, ports)?;
            table = table.apply_flow_mod(FlowModCommand::Add, &e)?;
        }
        Ok(table)
    }

    /// Returns the updated table; `self` is left untouched.
    pub fn apply_flow_mod(&self, command: FlowModCommand, entry: &FlowEntry) -> Result<FlowTable, FlowError> {
        let pos = self.entries.iter().position(|e| e.key() == entry.key());
        let mut next = self.clone();
        match (command, pos) {
            (FlowModCommand::Add, Some(_)) => return Err(FlowError::DuplicateEntry(entry.priority)),
            (FlowModCommand::Add, None) => next.entries.push(entry.clone()),
            (FlowModCommand::Remove, Some(i)) => {
                next.entries.remove(i);
            }
            (FlowModCommand::Remove, None) => return Err(FlowError::NotFound(entry.priority)),
        }
        Ok(next)
    }

    /// Multi-match lookup: every matching entry contributes its actions,
    /// highest priority first, with one emission per output port. A matching
    /// drop entry suppresses the entries ranked below it.
    pub fn match_frame(&self, raw: &RawFrame, ingress: u8) -> Vec<Action> {
        let mut matched: Vec<(usize, &FlowEntry)> =
            self.entries.iter().enumerate().filter(|(_, e)| e.match_fields.matches(raw, ingress)).collect();
        if matched.is_empty() {
            return match self.default_action {
                DefaultAction::Drop => Vec::new(),
                DefaultAction::ToController => vec![Action::ToController],
            };
        }
        // stable: ties keep insertion order
        matched.sort_by(|(ia, a), (ib, b)| b.priority.cmp(&a.priority).then(ia.cmp(ib)));

        let mut out: Vec<Action> = Vec::new();
        let mut blocked_below: Option<u16> = None;
        for (_, entry) in matched {
            if blocked_below.is_some_and(|p| entry.priority < p) {
                break;
            }
            if entry.is_drop() {
                blocked_below = Some(entry.priority);
                continue;
            }
            for a in &entry.actions {
                if !out.contains(a) {
                    out.push(*a);
                }
            }
        }
        if out.is_empty() {
            out.push(Action::Drop);
        }
        out
    }
}
