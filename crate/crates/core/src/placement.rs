//! Spread and MinHost placement of a gang's identical containers onto offers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::resources::{NodeId, Offer, ResourceVector};
use crate::workload::JobId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementPolicy {
    /// Balance containers round-robin over every eligible node.
    Spread,
    /// Pack containers onto as few nodes as possible.
    MinHost,
}

impl fmt::Display for PlacementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlacementPolicy::Spread => "spread",
            PlacementPolicy::MinHost => "minhost",
        })
    }
}

impl FromStr for PlacementPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spread" => Ok(PlacementPolicy::Spread),
            "minhost" => Ok(PlacementPolicy::MinHost),
            other => Err(format!("unknown policy `{}` (expected spread|minhost)", other)),
        }
    }
}

/// An offer together with how many containers of one demand it can hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Eligible {
    pub offer: Offer,
    pub max_containers: u64,
}

/// Assignment of each process rank of one job to a node. Rank 0 hosts the
/// master container.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub job_id: JobId,
    pub assignments: Vec<(u32, NodeId)>,
}

impl Placement {
    pub fn counts(&self) -> BTreeMap<NodeId, u32> {
        let mut counts = BTreeMap::new();
        for &(_, node) in &self.assignments {
            *counts.entry(node).or_insert(0) += 1;
        }
        counts
    }

    pub fn hosts_used(&self) -> usize {
        self.counts().len()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn master_node(&self) -> Option<NodeId> {
        self.assignments
            .iter()
            .find(|(rank, _)| *rank == 0)
            .map(|&(_, node)| node)
    }

    /// Build a placement from per-node counts, ranks assigned in the given node order.
    pub fn from_counts(job_id: JobId, counts: &[(NodeId, u32)]) -> Placement {
        let mut assignments = Vec::new();
        let mut rank = 0;
        for &(node, count) in counts {
            for _ in 0..count {
                assignments.push((rank, node));
                rank += 1;
            }
        }
        Placement {
            job_id,
            assignments,
        }
    }
}

fn containers_in(available: u64, per: u64) -> Option<u64> {
    available.checked_div(per)
}

/// How many `demand`-sized containers fit in `available`; a zero demand
/// component does not constrain. An all-zero demand yields 0.
pub fn max_containers(available: &ResourceVector, demand: &ResourceVector) -> u64 {
    let cpu = containers_in(available.milli_cpus, demand.milli_cpus);
    let mem = containers_in(available.mem_mib, demand.mem_mib);
    match (cpu, mem) {
        (Some(c), Some(m)) => c.min(m),
        (Some(c), None) => c,
        (None, Some(m)) => m,
        (None, None) => 0,
    }
}

/// Offers that can hold at least one container, with their capacity in
/// containers. Input order is preserved.
pub fn eligible_offers(offers: &[Offer], demand: &ResourceVector) -> Vec<Eligible> {
    offers
        .iter()
        .map(|offer| Eligible {
            offer: *offer,
            max_containers: max_containers(&offer.available, demand),
        })
        .filter(|e| e.max_containers > 0)
        .collect()
}

fn check_total(eligible: &[Eligible], n: u32) -> Result<(), SimError> {
    let total: u64 = eligible.iter().map(|e| e.max_containers).sum();
    if total < n as u64 {
        return Err(SimError::InsufficientCapacity {
            needed: n,
            available: total,
        });
    }
    Ok(())
}

/// Round-robin over eligible nodes in the given order, one container per node
/// per pass, skipping saturated nodes.
pub fn place_spread(job_id: JobId, eligible: &[Eligible], n: u32) -> Result<Placement, SimError> {
    check_total(eligible, n)?;
    let mut left: Vec<u64> = eligible.iter().map(|e| e.max_containers).collect();
    let mut assignments = Vec::with_capacity(n as usize);
    let mut rank = 0u32;
    while rank < n {
        for (idx, e) in eligible.iter().enumerate() {
            if rank == n {
                break;
            }
            if left[idx] == 0 {
                continue;
            }
            left[idx] -= 1;
            assignments.push((rank, e.offer.node_id));
            rank += 1;
        }
    }
    Ok(Placement {
        job_id,
        assignments,
    })
}

/// Fill nodes to capacity in order of descending capacity (ties to the lower
/// node id). With identical containers this uses the minimum number of hosts.
pub fn place_minhost(job_id: JobId, eligible: &[Eligible], n: u32) -> Result<Placement, SimError> {
    check_total(eligible, n)?;
    let mut order: Vec<&Eligible> = eligible.iter().collect();
    order.sort_by(|a, b| {
        b.max_containers
            .cmp(&a.max_containers)
            .then(a.offer.node_id.cmp(&b.offer.node_id))
    });
    let mut counts = Vec::new();
    let mut left = n as u64;
    for e in order {
        if left == 0 {
            break;
        }
        let take = e.max_containers.min(left);
        counts.push((e.offer.node_id, take as u32));
        left -= take;
    }
    Ok(Placement::from_counts(job_id, &counts))
}

pub fn place(policy: PlacementPolicy, job_id: JobId, eligible: &[Eligible], n: u32) -> Result<Placement, SimError> {
    match policy {
        PlacementPolicy::Spread => place_spread(job_id, eligible, n),
        PlacementPolicy::MinHost => place_minhost(job_id, eligible, n),
    }
}

/// True iff every rank `0..n` appears exactly once and each node's containers
/// fit inside that node's offer.
pub fn validate_placement(p: &Placement, offers: &[Offer], demand: &ResourceVector, n: u32) -> bool {
    if p.assignments.len() != n as usize {
        return false;
    }
    let mut seen = vec![false; n as usize];
    for &(rank, _) in &p.assignments {
        match seen.get_mut(rank as usize) {
            Some(slot) if !*slot => *slot = true,
            _ => return false,
        }
    }
    p.counts().into_iter().all(|(node, count)| {
        offers
            .iter()
            .find(|o| o.node_id == node)
            .is_some_and(|o| demand.scale(count as u64).fits_in(&o.available))
    })
}
