//! Resource arithmetic, per-node state and offer generation.
//!
//! CPUs are tracked in integer milli-cores so that allocation and release are
//! exact inverses; memory is tracked in MiB.

use std::fmt;
use std::ops::{Add, Sub};

use crate::error::SimError;

/// Identifier of a cluster node. Node 0 is conventionally the head node.
pub type NodeId = u32;

/// A (cpus, memory) quantity used for capacities, demands, allocations and offers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ResourceVector {
    pub milli_cpus: u64,
    pub mem_mib: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector {
        milli_cpus: 0,
        mem_mib: 0,
    };

    pub const fn new(milli_cpus: u64, mem_mib: u64) -> Self {
        Self {
            milli_cpus,
            mem_mib,
        }
    }

    /// Build from a (possibly fractional) core count, rounded to the nearest milli-core.
    /// Negative or non-finite inputs clamp to zero.
    pub fn from_cpus(cpus: f64, mem_mib: u64) -> Self {
        let milli = if cpus.is_finite() && cpus > 0.0 {
            (cpus * 1000.0).round() as u64
        } else {
            0
        };
        Self::new(milli, mem_mib)
    }

    pub fn cpus(&self) -> f64 {
        self.milli_cpus as f64 / 1000.0
    }

    pub fn is_zero(&self) -> bool {
        self.milli_cpus == 0 && self.mem_mib == 0
    }

    /// True when any component is positive.
    pub fn any_positive(&self) -> bool {
        !self.is_zero()
    }

    /// Component-wise `self <= other`.
    pub fn fits_in(&self, other: &ResourceVector) -> bool {
        self.milli_cpus <= other.milli_cpus && self.mem_mib <= other.mem_mib
    }

    pub fn checked_sub(&self, other: &ResourceVector) -> Option<ResourceVector> {
        Some(ResourceVector {
            milli_cpus: self.milli_cpus.checked_sub(other.milli_cpus)?,
            mem_mib: self.mem_mib.checked_sub(other.mem_mib)?,
        })
    }

    pub fn saturating_sub(&self, other: &ResourceVector) -> ResourceVector {
        ResourceVector {
            milli_cpus: self.milli_cpus.saturating_sub(other.milli_cpus),
            mem_mib: self.mem_mib.saturating_sub(other.mem_mib),
        }
    }

    pub fn scale(&self, count: u64) -> ResourceVector {
        ResourceVector {
            milli_cpus: self.milli_cpus * count,
            mem_mib: self.mem_mib * count,
        }
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;

    fn add(self, rhs: ResourceVector) -> ResourceVector {
        ResourceVector {
            milli_cpus: self.milli_cpus + rhs.milli_cpus,
            mem_mib: self.mem_mib + rhs.mem_mib,
        }
    }
}

impl Sub for ResourceVector {
    type Output = ResourceVector;

    /// Panics on underflow; stored state never holds negative components.
    fn sub(self, rhs: ResourceVector) -> ResourceVector {
        self.checked_sub(&rhs)
            .expect("resource subtraction underflow")
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, |acc, v| acc + v)
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} cpu, {} MiB)", self.cpus(), self.mem_mib)
    }
}

/// True iff `demand <= available` component-wise.
pub fn fits(demand: &ResourceVector, available: &ResourceVector) -> bool {
    demand.fits_in(available)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeState {
    pub node_id: NodeId,
    pub capacity: ResourceVector,
    pub allocated: ResourceVector,
}

impl NodeState {
    pub fn new(node_id: NodeId, capacity: ResourceVector) -> Self {
        Self {
            node_id,
            capacity,
            allocated: ResourceVector::ZERO,
        }
    }

    pub fn available(&self) -> ResourceVector {
        self.capacity.saturating_sub(&self.allocated)
    }

    pub fn is_idle(&self) -> bool {
        self.allocated.is_zero()
    }

    /// Block `demand` on this node.
    pub fn allocate(&mut self, demand: ResourceVector) -> Result<(), SimError> {
        let available = self.available();
        if !fits(&demand, &available) {
            return Err(SimError::CapacityExceeded {
                node: self.node_id,
                demand,
                available,
            });
        }
        self.allocated = self.allocated + demand;
        Ok(())
    }

    /// Return `demand` previously blocked by [`NodeState::allocate`].
    pub fn release(&mut self, demand: ResourceVector) -> Result<(), SimError> {
        self.allocated = self.allocated.checked_sub(&demand).ok_or_else(|| {
            SimError::InvariantViolation(format!(
                "release of {} on node {} exceeds allocation {}",
                demand, self.node_id, self.allocated
            ))
        })?;
        Ok(())
    }
}

/// One agent's unallocated resources, advertised for one offer cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Offer {
    pub node_id: NodeId,
    pub available: ResourceVector,
    pub epoch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterState {
    nodes: Vec<NodeState>,
    head_node_id: NodeId,
}

impl ClusterState {
    /// Nodes are kept sorted by id; ids must be unique.
    pub fn new(mut nodes: Vec<NodeState>, head_node_id: NodeId) -> Result<Self, SimError> {
        nodes.sort_by_key(|n| n.node_id);
        if nodes.windows(2).any(|w| w[0].node_id == w[1].node_id) {
            return Err(SimError::ScenarioInvalid("duplicate node id".into()));
        }
        Ok(Self {
            nodes,
            head_node_id,
        })
    }

    /// A head node (id 0) plus `workers` identical worker nodes with ids `1..=workers`.
    pub fn homogeneous(workers: u32, capacity: ResourceVector, head_capacity: ResourceVector) -> Self {
        let mut nodes = Vec::with_capacity(workers as usize + 1);
        nodes.push(NodeState::new(0, head_capacity));
        nodes.extend((1..=workers).map(|id| NodeState::new(id, capacity)));
        Self {
            nodes,
            head_node_id: 0,
        }
    }

    pub fn head_node_id(&self) -> NodeId {
        self.head_node_id
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    /// Worker (non-head) nodes in ascending id order.
    pub fn workers(&self) -> impl Iterator<Item = &NodeState> {
        let head = self.head_node_id;
        self.nodes.iter().filter(move |n| n.node_id != head)
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.nodes
            .binary_search_by_key(&id, |n| n.node_id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeState> {
        self.nodes
            .binary_search_by_key(&id, |n| n.node_id)
            .ok()
            .map(move |i| &mut self.nodes[i])
    }

    pub fn allocate(&mut self, id: NodeId, demand: ResourceVector) -> Result<(), SimError> {
        if id == self.head_node_id {
            return Err(SimError::InvariantViolation(format!(
                "attempted placement on head node {}",
                id
            )));
        }
        self.node_mut(id)
            .ok_or_else(|| SimError::InvariantViolation(format!("unknown node {}", id)))?
            .allocate(demand)
    }

    pub fn release(&mut self, id: NodeId, demand: ResourceVector) -> Result<(), SimError> {
        self.node_mut(id)
            .ok_or_else(|| SimError::InvariantViolation(format!("unknown node {}", id)))?
            .release(demand)
    }

    /// Sum of worker capacities.
    pub fn worker_capacity(&self) -> ResourceVector {
        self.workers().map(|n| n.capacity).sum()
    }

    pub fn worker_allocated(&self) -> ResourceVector {
        self.workers().map(|n| n.allocated).sum()
    }

    /// Capacity safety: `allocated <= capacity` on every node.
    pub fn check_capacity(&self) -> Result<(), SimError> {
        for n in &self.nodes {
            if !n.allocated.fits_in(&n.capacity) {
                return Err(SimError::InvariantViolation(format!(
                    "node {} allocated {} exceeds capacity {}",
                    n.node_id, n.allocated, n.capacity
                )));
            }
        }
        Ok(())
    }
}

/// One whole-remainder offer per worker node with anything left, ascending by node id.
pub fn make_offers(cluster: &ClusterState, epoch: u64) -> Vec<Offer> {
    cluster
        .workers()
        .map(|n| Offer {
            node_id: n.node_id,
            available: n.available(),
            epoch,
        })
        .filter(|o| o.available.any_positive())
        .collect()
}
