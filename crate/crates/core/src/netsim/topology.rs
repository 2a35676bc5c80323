use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// What a node does in the substation. Drives delay attribution and
/// mitigation targeting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Omicron,
    MergingUnit,
    ProcessBusSwitch,
    Pied,
    StationBusSwitch,
    Ids,
}

impl NodeRole {
    pub fn is_switch(self) -> bool {
        matches!(self, NodeRole::ProcessBusSwitch | NodeRole::StationBusSwitch)
    }
}

/// A numbered port on a named node. Port numbers start at 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub node: String,
    pub port: u8,
}

impl PortRef {
    pub fn new(node: impl Into<String>, port: u8) -> Self {
        PortRef { node: node.into(), port }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.node, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub role: NodeRole,
    pub ports: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: PortRef,
    pub b: PortRef,
    pub latency_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TopologySpec {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("port {0} does not exist")]
    DanglingPort(PortRef),
    #[error("port {0} is already linked")]
    DuplicateLink(PortRef),
    #[error("link connects port {0} to itself")]
    SelfLink(PortRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub a: PortRef,
    pub b: PortRef,
    pub latency_us: u64,
}

impl Link {
    pub fn far_end(&self, from: &PortRef) -> Option<&PortRef> {
        if &self.a == from {
            Some(&self.b)
        } else if &self.b == from {
            Some(&self.a)
        } else {
            None
        }
    }
}

/// Validated topology. Every link endpoint resolves to an existing port.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: BTreeMap<String, NodeSpec>,
    links: Vec<Link>,
    by_port: BTreeMap<PortRef, usize>,
}

pub fn build_topology(spec: &TopologySpec) -> Result<Network, TopologyError> {
    let mut nodes = BTreeMap::new();
    for node in &spec.nodes {
        if nodes.insert(node.name.clone(), node.clone()).is_some() {
            return Err(TopologyError::DuplicateNode(node.name.clone()));
        }
    }
    let mut net = Network { nodes, links: Vec::new(), by_port: BTreeMap::new() };
    for link in &spec.links {
        for end in [&link.a, &link.b] {
            net.check_port(end)?;
        }
        if link.a == link.b {
            return Err(TopologyError::SelfLink(link.a.clone()));
        }
        for end in [&link.a, &link.b] {
            if net.by_port.contains_key(end) {
                return Err(TopologyError::DuplicateLink(end.clone()));
            }
        }
        let idx = net.links.len();
        net.by_port.insert(link.a.clone(), idx);
        net.by_port.insert(link.b.clone(), idx);
        net.links.push(Link { a: link.a.clone(), b: link.b.clone(), latency_us: link.latency_us });
    }
    Ok(net)
}

impl Network {
    pub fn check_port(&self, port: &PortRef) -> Result<(), TopologyError> {
        let node = self.nodes.get(&port.node).ok_or_else(|| TopologyError::UnknownNode(port.node.clone()))?;
        if port.port == 0 || port.port > node.ports {
            return Err(TopologyError::DanglingPort(port.clone()));
        }
        Ok(())
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.get(name)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.values()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_of(&self, port: &PortRef) -> Option<&Link> {
        self.by_port.get(port).map(|&i| &self.links[i])
    }

    pub fn peer(&self, port: &PortRef) -> Option<&PortRef> {
        self.link_of(port)?.far_end(port)
    }

    pub fn nodes_with_role(&self, role: NodeRole) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.values().filter(move |n| n.role == role)
    }

    pub fn role_of(&self, node: &str) -> Option<NodeRole> {
        self.nodes.get(node).map(|n| n.role)
    }

    /// All ports of `node`, in ascending order.
    pub fn ports_of(&self, node: &str) -> Vec<PortRef> {
        match self.nodes.get(node) {
            Some(spec) => (1..=spec.ports).map(|p| PortRef::new(node, p)).collect(),
            None => Vec::new(),
        }
    }
}
