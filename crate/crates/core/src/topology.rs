//! Node placement and connectivity.
//!
//! Nodes live in a square region; two nodes are connected when their
//! Euclidean distance is at most the transmission range. Every node is a
//! member of its own neighborhood, which is the convention the combination
//! step relies on. Connectivity is decided once at construction: fading
//! may silence a link for an iteration, but never rewires the graph.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::Error;
use crate::Result;

/// Two generated nodes closer than this are considered coincident and the
/// draw is rejected, keeping path-loss terms finite.
pub const MIN_SEPARATION: f64 = 1e-6;

/// How many rejected draws per node before generation gives up.
const MAX_REDRAWS: usize = 10_000;

/// On-disk form of a topology.
#[derive(Debug, Serialize, Deserialize)]
struct TopologyDoc {
    /// Transmission range.
    r_o: f64,
    /// Node coordinates, one `[x, y]` pair per node.
    positions: Vec<[f64; 2]>,
    /// Optional region side; when present, all positions must fall in
    /// `[0, region_side]^2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    region_side: Option<f64>,
}

/// A fixed network layout: positions, transmission range, and the
/// neighborhoods they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    positions: Vec<[f64; 2]>,
    tx_range: f64,
    /// Sorted neighbor lists, self included.
    neighbors: Vec<Vec<usize>>,
}

impl NetworkTopology {
    /// Build a topology from explicit positions and a transmission range.
    pub fn new(positions: Vec<[f64; 2]>, tx_range: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Topology("at least one node is required".into()));
        }
        if !(tx_range > 0.0) || !tx_range.is_finite() {
            return Err(Error::Topology(format!(
                "transmission range must be positive and finite, got {tx_range}"
            )));
        }
        if let Some(bad) = positions
            .iter()
            .find(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::Topology(format!(
                "non-finite position [{}, {}]",
                bad[0], bad[1]
            )));
        }
        let neighbors = build_neighborhoods(&positions, tx_range);
        Ok(Self {
            positions,
            tx_range,
            neighbors,
        })
    }

    /// Draw `node_count` nodes uniformly in `[0, region_side]^2`,
    /// rejecting draws closer than [`MIN_SEPARATION`] to an earlier node.
    /// The same seed always yields the same layout.
    pub fn generate(node_count: usize, tx_range: f64, region_side: f64, seed: u64) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Topology("node count must be positive".into()));
        }
        if !(region_side > 0.0) || !region_side.is_finite() {
            return Err(Error::Topology(format!(
                "region side must be positive and finite, got {region_side}"
            )));
        }
        if !(tx_range > 0.0) || !tx_range.is_finite() {
            return Err(Error::Topology(format!(
                "transmission range must be positive and finite, got {tx_range}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions: Vec<[f64; 2]> = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            let mut attempts = 0;
            loop {
                let candidate = [
                    rng.gen_range(0.0..=region_side),
                    rng.gen_range(0.0..=region_side),
                ];
                let clear = positions
                    .iter()
                    .all(|p| euclidean(p, &candidate) >= MIN_SEPARATION);
                if clear {
                    positions.push(candidate);
                    break;
                }
                attempts += 1;
                if attempts >= MAX_REDRAWS {
                    return Err(Error::Topology(format!(
                        "could not place {node_count} nodes at least {MIN_SEPARATION} apart \
                         in a region of side {region_side}"
                    )));
                }
            }
        }
        Self::new(positions, tx_range)
    }

    /// Parse a topology from its JSON document form.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TopologyDoc =
            serde_json::from_str(text).map_err(|e| Error::Topology(format!("bad document: {e}")))?;
        if let Some(side) = doc.region_side {
            if !(side > 0.0) || !side.is_finite() {
                return Err(Error::Topology(format!(
                    "region side must be positive and finite, got {side}"
                )));
            }
            for (idx, p) in doc.positions.iter().enumerate() {
                if p.iter().any(|c| *c < 0.0 || *c > side) {
                    return Err(Error::Topology(format!(
                        "node {idx} at [{}, {}] lies outside the declared region [0, {side}]^2",
                        p[0], p[1]
                    )));
                }
            }
        }
        Self::new(doc.positions, doc.r_o)
    }

    /// Load a topology document from a file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// Serialize to the JSON document form. `serde_json` prints floats in
    /// shortest round-trip form, so coordinates survive a save/load cycle
    /// bit for bit.
    pub fn to_json(&self) -> String {
        let doc = TopologyDoc {
            r_o: self.tx_range,
            positions: self.positions.clone(),
            region_side: None,
        };
        serde_json::to_string_pretty(&doc).expect("topology serialization cannot fail")
    }

    /// Write the JSON document form to a file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        crate::output::write_atomic(path, self.to_json().as_bytes())
    }

    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    /// Transmission range.
    pub fn tx_range(&self) -> f64 {
        self.tx_range
    }

    /// Position of node `k`.
    pub fn position(&self, k: usize) -> [f64; 2] {
        self.positions[k]
    }

    /// Euclidean distance between two nodes.
    pub fn distance(&self, l: usize, k: usize) -> f64 {
        euclidean(&self.positions[l], &self.positions[k])
    }

    /// Sorted neighborhood of `k`, self included.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    /// Neighborhood size `|N_k|` (counts `k` itself).
    pub fn degree(&self, k: usize) -> usize {
        self.neighbors[k].len()
    }

    /// Whether `l` is in the neighborhood of `k` (true for `l == k`).
    pub fn is_neighbor(&self, l: usize, k: usize) -> bool {
        self.neighbors[k].binary_search(&l).is_ok()
    }

    /// Nodes whose transmissions interfere on the link from `l` to `k`:
    /// every neighbor of the receiver except the receiver itself and the
    /// intended transmitter. Sorted.
    pub fn interferers(&self, l: usize, k: usize) -> Vec<usize> {
        self.neighbors[k]
            .iter()
            .copied()
            .filter(|&n| n != k && n != l)
            .collect()
    }
}

fn euclidean(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn build_neighborhoods(positions: &[[f64; 2]], tx_range: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    (0..n)
        .map(|k| {
            (0..n)
                .filter(|&l| l == k || euclidean(&positions[l], &positions[k]) <= tx_range)
                .collect()
        })
        .collect()
}
