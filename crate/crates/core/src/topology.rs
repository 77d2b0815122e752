//! Base stations, the interference conflict graph, and per-root subnets.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanism::{BandId, BidderId};

/// Two macro-cell stations closer than this fraction of the region side interfere.
pub const MACRO_RANGE: f64 = 0.4;
/// Any pair involving a small-cell station closer than this fraction interferes.
pub const SMALL_RANGE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("duplicate station id {0}")]
    DuplicateStation(BidderId),
    #[error("station {id} at ({x}, {y}) lies outside the [0, {side}]² region")]
    OutOfRegion { id: BidderId, x: f64, y: f64, side: f64 },
    #[error("unknown station {0}")]
    UnknownStation(BidderId),
    #[error("station {0} has already been a root")]
    RootAlreadyUsed(BidderId),
    #[error("station {neighbor} is not an interferer of {owner}")]
    UnknownNeighbor { owner: BidderId, neighbor: BidderId },
    #[error("self-loop on station {0}")]
    SelfLoop(BidderId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Macro,
    Small,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: BidderId,
    /// Operator index, 1-based.
    pub wsp: u32,
    pub kind: CellKind,
    pub x: f64,
    pub y: f64,
}

impl BaseStation {
    pub fn distance(&self, other: &BaseStation) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Distance rule with strict inequality at both thresholds.
pub fn interferes(a: &BaseStation, b: &BaseStation, region_side: f64) -> bool {
    let d = a.distance(b);
    match (a.kind, b.kind) {
        (CellKind::Macro, CellKind::Macro) => d < MACRO_RANGE * region_side,
        _ => d < SMALL_RANGE * region_side,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    stations: BTreeMap<BidderId, BaseStation>,
    adjacency: BTreeMap<BidderId, BTreeSet<BidderId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeList {
    pub nodes: Vec<BidderId>,
    pub edges: Vec<(BidderId, BidderId)>,
}

pub fn build_conflict_graph(
    stations: &[BaseStation],
    region_side: f64,
) -> Result<ConflictGraph, TopologyError> {
    let mut by_id = BTreeMap::new();
    for s in stations {
        let inside = |v: f64| (0.0..=region_side).contains(&v);
        if !inside(s.x) || !inside(s.y) {
            return Err(TopologyError::OutOfRegion {
                id: s.id,
                x: s.x,
                y: s.y,
                side: region_side,
            });
        }
        if by_id.insert(s.id, s.clone()).is_some() {
            return Err(TopologyError::DuplicateStation(s.id));
        }
    }
    let mut adjacency: BTreeMap<BidderId, BTreeSet<BidderId>> =
        by_id.keys().map(|&id| (id, BTreeSet::new())).collect();
    let list: Vec<&BaseStation> = by_id.values().collect();
    for (i, a) in list.iter().enumerate() {
        for b in &list[i + 1..] {
            if interferes(a, b, region_side) {
                adjacency.get_mut(&a.id).unwrap().insert(b.id);
                adjacency.get_mut(&b.id).unwrap().insert(a.id);
            }
        }
    }
    Ok(ConflictGraph { stations: by_id, adjacency })
}

impl ConflictGraph {
    /// A graph with explicit edges, ignoring positions.
    pub fn from_edges(
        stations: &[BaseStation],
        edges: &[(BidderId, BidderId)],
    ) -> Result<Self, TopologyError> {
        let mut by_id = BTreeMap::new();
        for s in stations {
            if by_id.insert(s.id, s.clone()).is_some() {
                return Err(TopologyError::DuplicateStation(s.id));
            }
        }
        let mut adjacency: BTreeMap<BidderId, BTreeSet<BidderId>> =
            by_id.keys().map(|&id| (id, BTreeSet::new())).collect();
        for &(u, v) in edges {
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            for id in [u, v] {
                if !by_id.contains_key(&id) {
                    return Err(TopologyError::UnknownStation(id));
                }
            }
            adjacency.get_mut(&u).unwrap().insert(v);
            adjacency.get_mut(&v).unwrap().insert(u);
        }
        Ok(ConflictGraph { stations: by_id, adjacency })
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = BidderId> + '_ {
        self.stations.keys().copied()
    }

    pub fn stations(&self) -> impl Iterator<Item = &BaseStation> {
        self.stations.values()
    }

    pub fn station(&self, id: BidderId) -> Option<&BaseStation> {
        self.stations.get(&id)
    }

    pub fn neighbors(&self, id: BidderId) -> Result<&BTreeSet<BidderId>, TopologyError> {
        self.adjacency.get(&id).ok_or(TopologyError::UnknownStation(id))
    }

    pub fn has_edge(&self, u: BidderId, v: BidderId) -> bool {
        self.adjacency.get(&u).is_some_and(|n| n.contains(&v))
    }

    /// Each undirected edge once, as `(smaller, larger)`.
    pub fn edges(&self) -> impl Iterator<Item = (BidderId, BidderId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// The subgraph induced by the stations `keep` accepts.
    pub fn induced(&self, keep: impl Fn(&BaseStation) -> bool) -> ConflictGraph {
        let stations: BTreeMap<_, _> = self
            .stations
            .iter()
            .filter(|(_, s)| keep(s))
            .map(|(&id, s)| (id, s.clone()))
            .collect();
        let adjacency = stations
            .keys()
            .map(|id| {
                let ns = self.adjacency[id]
                    .iter()
                    .filter(|n| stations.contains_key(n))
                    .copied()
                    .collect();
                (*id, ns)
            })
            .collect();
        ConflictGraph { stations, adjacency }
    }

    pub fn edge_list(&self) -> EdgeList {
        EdgeList {
            nodes: self.ids().collect(),
            edges: self.edges().collect(),
        }
    }
}

/// Bands and price awarded to a station.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Award {
    pub bands: BTreeSet<BandId>,
    pub price: u64,
}

/// A station's view of what its interferers have won.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictTable {
    pub owner: BidderId,
    pub interferers: BTreeSet<BidderId>,
    pub occupancy: BTreeMap<BidderId, BTreeSet<BandId>>,
    pub own_award: Option<Award>,
}

impl ConflictTable {
    pub fn new(graph: &ConflictGraph, owner: BidderId) -> Result<Self, TopologyError> {
        Ok(ConflictTable {
            owner,
            interferers: graph.neighbors(owner)?.clone(),
            occupancy: BTreeMap::new(),
            own_award: None,
        })
    }

    /// Bands currently held by interferers.
    pub fn blocked_bands(&self) -> BTreeSet<BandId> {
        self.occupancy.values().flatten().copied().collect()
    }
}

/// Records that `station` won `bands` at `price`. Writing the same update
/// twice yields the same table.
pub fn update_conflict_table(
    table: &ConflictTable,
    station: BidderId,
    bands: &BTreeSet<BandId>,
    price: u64,
) -> Result<ConflictTable, TopologyError> {
    let mut next = table.clone();
    if station == table.owner {
        next.own_award = Some(Award { bands: bands.clone(), price });
    } else if table.interferers.contains(&station) {
        next.occupancy.insert(station, bands.clone());
    } else {
        return Err(TopologyError::UnknownNeighbor {
            owner: table.owner,
            neighbor: station,
        });
    }
    Ok(next)
}

/// The arena of one auction round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subnet {
    pub root: BidderId,
    /// Root plus its neighbors that have not been roots, ascending.
    pub members: Vec<BidderId>,
    /// All bands minus those awarded to neighboring previous roots, ascending.
    pub available_bands: Vec<BandId>,
    /// Neighboring previous roots that were excluded.
    pub excluded_roots: Vec<BidderId>,
}

pub fn subnet_of(
    graph: &ConflictGraph,
    root: BidderId,
    used_roots: &BTreeSet<BidderId>,
    awards: &BTreeMap<BidderId, Award>,
    all_bands: &[BandId],
) -> Result<Subnet, TopologyError> {
    if used_roots.contains(&root) {
        return Err(TopologyError::RootAlreadyUsed(root));
    }
    let neighbors = graph.neighbors(root)?;
    let mut members = vec![root];
    let mut excluded_roots = Vec::new();
    for &n in neighbors {
        if used_roots.contains(&n) {
            excluded_roots.push(n);
        } else {
            members.push(n);
        }
    }
    members.sort();
    let taken: BTreeSet<BandId> = excluded_roots
        .iter()
        .filter_map(|r| awards.get(r))
        .flat_map(|a| a.bands.iter().copied())
        .collect();
    let mut available_bands: Vec<BandId> = all_bands
        .iter()
        .copied()
        .filter(|b| !taken.contains(b))
        .collect();
    available_bands.sort();
    available_bands.dedup();
    Ok(Subnet {
        root,
        members,
        available_bands,
        excluded_roots,
    })
}

/// Uniform draw over stations that have not been roots; `None` once all have.
pub fn pick_next_root<R: Rng + ?Sized>(
    graph: &ConflictGraph,
    used_roots: &BTreeSet<BidderId>,
    rng: &mut R,
) -> Option<BidderId> {
    let remaining: Vec<BidderId> = graph.ids().filter(|id| !used_roots.contains(id)).collect();
    if remaining.is_empty() {
        return None;
    }
    Some(remaining[rng.gen_range(0..remaining.len())])
}
