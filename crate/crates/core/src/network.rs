//! Transportation network graph, two-terminal connectivity, and the exact
//! enumeration oracle.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest link count accepted by [`TransportNetwork::exact_reliability`].
pub const MAX_EXACT_LINKS: usize = 25;

pub type NodeId = i64;
pub type BridgeId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roadway {
    pub id: usize,
    pub endpoints: [NodeId; 2],
    #[serde(default)]
    pub bridge_ids: Vec<BridgeId>,
}

impl Roadway {
    pub fn is_invulnerable(&self) -> bool {
        self.bridge_ids.is_empty()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeId>,
    links: Vec<Roadway>,
    source: NodeId,
    terminal: NodeId,
}

/// Binary roadway states, `1` = survived, `0` = failed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopologyRealization(Vec<u8>);

impl TopologyRealization {
    pub fn new(states: Vec<u8>) -> Result<Self> {
        if let Some(i) = states.iter().position(|&s| s > 1) {
            return Err(Error::Validation(format!(
                "roadway state at index {i} is {}, expected 0 or 1",
                states[i]
            )));
        }
        Ok(Self(states))
    }

    pub fn all_survived(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub fn states(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

/// Reusable buffers for [`TransportNetwork::connected_with`]. One per worker.
#[derive(Debug, Default, Clone)]
pub struct DfsScratch {
    stamp: Vec<u32>,
    generation: u32,
    stack: Vec<usize>,
}

impl DfsScratch {
    fn begin(&mut self, nodes: usize) -> u32 {
        if self.stamp.len() != nodes {
            self.stamp = vec![0; nodes];
            self.generation = 0;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.stack.clear();
        self.generation
    }
}

/// Undirected multigraph of nodes and roadway links with designated source
/// and terminal. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TransportNetwork {
    nodes: Vec<NodeId>,
    links: Vec<Roadway>,
    source: NodeId,
    terminal: NodeId,
    source_ix: usize,
    terminal_ix: usize,
    // adjacency[node index] = (neighbor index, link id)
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl TransportNetwork {
    pub fn new(
        nodes: Vec<NodeId>,
        mut links: Vec<Roadway>,
        source: NodeId,
        terminal: NodeId,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, &n) in nodes.iter().enumerate() {
            if index.insert(n, i).is_some() {
                return Err(Error::Validation(format!("duplicate node id {n}")));
            }
        }
        if source == terminal {
            return Err(Error::Validation(format!(
                "source and terminal are both node {source}"
            )));
        }
        let lookup = |n: NodeId, what: &str| {
            index.get(&n).copied().ok_or_else(|| {
                Error::Validation(format!("{what} node {n} is not in the node list"))
            })
        };
        let source_ix = lookup(source, "source")?;
        let terminal_ix = lookup(terminal, "terminal")?;

        links.sort_by_key(|l| l.id);
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (expected, link) in links.iter().enumerate() {
            if link.id != expected {
                return Err(Error::Validation(if link.id < expected {
                    format!("duplicate link id {}", link.id)
                } else {
                    format!(
                        "link ids must be dense 0..{}; missing {expected}",
                        links.len()
                    )
                }));
            }
            let [a, b] = link.endpoints;
            if a == b {
                return Err(Error::Validation(format!(
                    "link {} is a self-loop on node {a}",
                    link.id
                )));
            }
            let ai = lookup(a, &format!("link {} endpoint", link.id))?;
            let bi = lookup(b, &format!("link {} endpoint", link.id))?;
            let unique: BTreeSet<_> = link.bridge_ids.iter().collect();
            if unique.len() != link.bridge_ids.len() {
                return Err(Error::Validation(format!(
                    "link {} lists a bridge twice",
                    link.id
                )));
            }
            adjacency[ai].push((bi, link.id));
            adjacency[bi].push((ai, link.id));
        }

        Ok(Self {
            nodes,
            links,
            source,
            terminal,
            source_ix,
            terminal_ix,
            adjacency,
        })
    }

    /// Parse and validate a network file (JSON).
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        Self::new(file.nodes, file.links, file.source, file.terminal)
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            nodes: self.nodes.clone(),
            links: self.links.clone(),
            source: self.source,
            terminal: self.terminal,
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn links(&self) -> &[Roadway] {
        &self.links
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn terminal(&self) -> NodeId {
        self.terminal
    }

    /// Number of roadway links, ℓ.
    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// All bridge ids referenced by any roadway, ascending.
    pub fn bridge_ids(&self) -> Vec<BridgeId> {
        let set: BTreeSet<_> = self
            .links
            .iter()
            .flat_map(|l| l.bridge_ids.iter().copied())
            .collect();
        set.into_iter().collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.links.len() {
            return Err(Error::DimensionMismatch {
                expected: self.links.len(),
                actual: len,
            });
        }
        Ok(())
    }

    pub fn is_connected(&self, topo: &TopologyRealization) -> Result<bool> {
        self.connected_with(topo.states(), &mut DfsScratch::default())
    }

    /// Iterative depth-first search from the source over surviving links.
    /// `states[i]` nonzero means link `i` survived.
    pub fn connected_with(&self, states: &[u8], scratch: &mut DfsScratch) -> Result<bool> {
        self.check_len(states.len())?;
        Ok(self.dfs(states, scratch))
    }

    #[inline]
    pub(crate) fn dfs(&self, states: &[u8], scratch: &mut DfsScratch) -> bool {
        let gen = scratch.begin(self.nodes.len());
        scratch.stamp[self.source_ix] = gen;
        scratch.stack.push(self.source_ix);
        while let Some(u) = scratch.stack.pop() {
            for &(v, link) in &self.adjacency[u] {
                if states[link] != 0 && scratch.stamp[v] != gen {
                    if v == self.terminal_ix {
                        return true;
                    }
                    scratch.stamp[v] = gen;
                    scratch.stack.push(v);
                }
            }
        }
        false
    }

    /// Sum over all 2^ℓ roadway state vectors of P(state) · connected(state).
    pub fn exact_reliability(&self, probs: &[f64]) -> Result<f64> {
        self.check_len(probs.len())?;
        check_probs(probs)?;
        let l = self.links.len();
        if l > MAX_EXACT_LINKS {
            return Err(Error::TooManyLinks {
                links: l,
                limit: MAX_EXACT_LINKS,
            });
        }
        let mut scratch = DfsScratch::default();
        let mut states = vec![0u8; l];
        let mut total = 0.0;
        for mask in 0u64..(1u64 << l) {
            let mut weight = 1.0;
            for (i, (s, &p)) in states.iter_mut().zip(probs).enumerate() {
                if mask >> i & 1 == 1 {
                    *s = 1;
                    weight *= p;
                } else {
                    *s = 0;
                    weight *= 1.0 - p;
                }
            }
            if weight != 0.0 && self.dfs(&states, &mut scratch) {
                total += weight;
            }
        }
        Ok(total)
    }
}

pub(crate) fn check_probs(probs: &[f64]) -> Result<()> {
    match probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(index) => Err(Error::ProbabilityOutOfRange {
            index,
            value: probs[index],
        }),
        None => Ok(()),
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn topo(states: &[u8]) -> TopologyRealization {
        TopologyRealization::new(states.to_vec()).unwrap()
    }

    #[test]
    fn minimal_file_loads() {
        let net = TransportNetwork::from_json(
            r#"{"nodes":[0,1],"links":[{"id":0,"endpoints":[0,1],"bridge_ids":[]}],"source":0,"terminal":1}"#,
        )
        .unwrap();
        assert_eq!(net.num_links(), 1);
        assert!(net.links()[0].is_invulnerable());
    }

    #[test]
    fn dangling_endpoint_rejected() {
        let err = TransportNetwork::from_json(
            r#"{"nodes":[0,1],"links":[{"id":0,"endpoints":[0,99],"bridge_ids":[]}],"source":0,"terminal":1}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("99")),
            "{err}"
        );
    }

    #[test]
    fn structural_violations_rejected() {
        let cases = [
            // source == terminal
            r#"{"nodes":[0,1],"links":[],"source":0,"terminal":0}"#,
            // duplicate link id
            r#"{"nodes":[0,1],"links":[{"id":0,"endpoints":[0,1]},{"id":0,"endpoints":[1,0]}],"source":0,"terminal":1}"#,
            // gap in link ids
            r#"{"nodes":[0,1],"links":[{"id":1,"endpoints":[0,1]}],"source":0,"terminal":1}"#,
            // self-loop
            r#"{"nodes":[0,1],"links":[{"id":0,"endpoints":[1,1]}],"source":0,"terminal":1}"#,
            // repeated bridge on one link
            r#"{"nodes":[0,1],"links":[{"id":0,"endpoints":[0,1],"bridge_ids":[4,4]}],"source":0,"terminal":1}"#,
            // terminal missing from nodes
            r#"{"nodes":[0,1],"links":[],"source":0,"terminal":5}"#,
        ];
        for text in cases {
            assert!(
                matches!(TransportNetwork::from_json(text), Err(Error::Validation(_))),
                "{text}"
            );
        }
        assert!(matches!(
            TransportNetwork::from_json("{\"nodes\":[0,1]"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn parallel_links_allowed() {
        let net = parallel(3);
        assert!(net.is_connected(&topo(&[0, 0, 1])).unwrap());
        assert!(!net.is_connected(&topo(&[0, 0, 0])).unwrap());
    }

    #[test]
    fn chain_connectivity() {
        let net = series(2);
        assert!(net.is_connected(&topo(&[1, 1])).unwrap());
        assert!(!net.is_connected(&topo(&[0, 1])).unwrap());
    }

    #[test]
    fn wheatstone_diagonal_path() {
        let net = wheatstone();
        // s-1, 1-2 (diagonal), 2-t
        assert!(net.is_connected(&topo(&[1, 0, 0, 1, 1])).unwrap());
        // only the two links leaving s
        assert!(!net.is_connected(&topo(&[1, 1, 0, 0, 0])).unwrap());
        // the "diagonal" pair of opposite links without the bridge link
        assert!(!net.is_connected(&topo(&[1, 0, 0, 1, 0])).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let net = series(2);
        assert!(matches!(
            net.is_connected(&topo(&[1, 1, 1])),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        ));
        assert!(TopologyRealization::new(vec![0, 2]).is_err());
    }

    #[test]
    fn exact_small_cases() {
        assert!((parallel(2).exact_reliability(&[0.5, 0.5]).unwrap() - 0.75).abs() < 1e-15);
        assert!((series(2).exact_reliability(&[0.9, 0.8]).unwrap() - 0.72).abs() < 1e-15);
        assert!((wheatstone().exact_reliability(&[0.5; 5]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_guards() {
        let big = series(26);
        assert!(matches!(
            big.exact_reliability(&vec![0.5; 26]),
            Err(Error::TooManyLinks { links: 26, .. })
        ));
        assert!(matches!(
            series(2).exact_reliability(&[0.5, 1.5]),
            Err(Error::ProbabilityOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn scratch_reuse_across_networks() {
        let mut scratch = DfsScratch::default();
        let a = wheatstone();
        let b = series(3);
        for _ in 0..3 {
            assert!(a.connected_with(&[1, 0, 0, 1, 1], &mut scratch).unwrap());
            assert!(!b.connected_with(&[1, 0, 1], &mut scratch).unwrap());
        }
    }
}
