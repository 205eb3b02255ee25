use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use super::{CellId, GridError};
use crate::field::PrimeField;
use crate::hash::{sha256, Digest, Domain};

pub trait MerkleHasher: Send + Sync {
    fn id(&self) -> String;
    fn leaf(&self, cell: &CellId) -> Digest;
    fn node(&self, left: &Digest, right: &Digest) -> Digest;
    fn is_valid_digest(&self, _d: &Digest) -> bool {
        true
    }
}

/// Field-native hasher; the one the circuit can recompute.
#[derive(Clone, Copy, Debug, Default)]
pub struct FieldHasher<F>(PhantomData<F>);

impl<F: PrimeField> FieldHasher<F> {
    pub fn new() -> Self {
        FieldHasher(PhantomData)
    }

    pub fn leaf_element(cell: &CellId) -> F {
        F::poseidon_params().hash(
            Domain::Leaf,
            cell.resolution as u64,
            &[F::from_i64(cell.q as i64), F::from_i64(cell.r as i64)],
        )
    }

    pub fn node_element(left: F, right: F) -> F {
        F::poseidon_params().hash(Domain::Node, 0, &[left, right])
    }
}

impl<F: PrimeField> MerkleHasher for FieldHasher<F> {
    fn id(&self) -> String {
        format!("poseidon3-{}", F::FIELD_ID)
    }

    fn leaf(&self, cell: &CellId) -> Digest {
        Self::leaf_element(cell).to_bytes()
    }

    fn node(&self, left: &Digest, right: &Digest) -> Digest {
        let l = F::from_bytes_reduced(left);
        let r = F::from_bytes_reduced(right);
        Self::node_element(l, r).to_bytes()
    }

    fn is_valid_digest(&self, d: &Digest) -> bool {
        F::from_bytes(d).is_some()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sha256Hasher;

impl MerkleHasher for Sha256Hasher {
    fn id(&self) -> String {
        "sha256".into()
    }

    fn leaf(&self, cell: &CellId) -> Digest {
        sha256(&[
            &[0u8],
            &[cell.resolution],
            &cell.q.to_be_bytes(),
            &cell.r.to_be_bytes(),
        ])
    }

    fn node(&self, left: &Digest, right: &Digest) -> Digest {
        sha256(&[&[1u8], left, right])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipPath {
    pub leaf_index: u64,
    /// Bottom-up sibling digests.
    pub siblings: Vec<Digest>,
}

/// Merkle commitment over a sorted cell set. Leaves are padded to a power
/// of two by repeating the last leaf.
#[derive(Clone, Debug)]
pub struct RegionCommitment {
    pub cells: Vec<CellId>,
    pub root: Digest,
    pub depth: usize,
    pub hash_id: String,
    pub resolution: u8,
    layers: Vec<Vec<Digest>>,
}

impl RegionCommitment {
    pub fn build(cells: Vec<CellId>, hasher: &dyn MerkleHasher) -> Result<Self, GridError> {
        let first = cells.first().ok_or(GridError::EmptyRegion)?;
        let resolution = first.resolution;
        if cells.iter().any(|c| c.resolution != resolution)
            || cells.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(GridError::UnsortedCells);
        }
        let depth = cells.len().next_power_of_two().trailing_zeros() as usize;
        let mut leaves: Vec<Digest> = cells.iter().map(|c| hasher.leaf(c)).collect();
        let last = *leaves.last().unwrap();
        leaves.resize(1 << depth, last);
        let mut layers = vec![leaves];
        while layers.last().unwrap().len() > 1 {
            let next = layers
                .last()
                .unwrap()
                .chunks(2)
                .map(|p| hasher.node(&p[0], &p[1]))
                .collect();
            layers.push(next);
        }
        Ok(RegionCommitment {
            root: layers.last().unwrap()[0],
            cells,
            depth,
            hash_id: hasher.id(),
            resolution,
            layers,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: &CellId) -> bool {
        self.cells.binary_search(cell).is_ok()
    }

    pub fn prove_membership(&self, cell: &CellId) -> Result<MembershipPath, GridError> {
        let index = self
            .cells
            .binary_search(cell)
            .map_err(|_| GridError::NotMember { q: cell.q, r: cell.r })?;
        Ok(self.path_at(index))
    }

    /// Path for a leaf slot, including padding slots.
    pub fn path_at(&self, index: usize) -> MembershipPath {
        let mut idx = index;
        let siblings = self.layers[..self.depth]
            .iter()
            .map(|layer| {
                let s = layer[idx ^ 1];
                idx >>= 1;
                s
            })
            .collect();
        MembershipPath {
            leaf_index: index as u64,
            siblings,
        }
    }
}

pub fn verify_membership(
    hasher: &dyn MerkleHasher,
    root: &Digest,
    cell: &CellId,
    path: &MembershipPath,
) -> bool {
    if path.siblings.len() < 64 && path.leaf_index >> path.siblings.len() != 0 {
        return false;
    }
    if !path.siblings.iter().all(|s| hasher.is_valid_digest(s)) {
        return false;
    }
    let mut acc = hasher.leaf(cell);
    for (level, sib) in path.siblings.iter().enumerate() {
        acc = if (path.leaf_index >> level) & 1 == 0 {
            hasher.node(&acc, sib)
        } else {
            hasher.node(sib, &acc)
        };
    }
    &acc == root
}
