use serde::{Deserialize, Serialize};

use super::{CellId, FieldHasher, GridError, MerkleHasher, Polygon, RegionCommitment, Sha256Hasher};
use crate::field::{Fp61, PallasFp};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Equirectangular projection about longitude 0 and `ref_latitude`.
pub fn project(lon: f64, lat: f64, ref_latitude: f64) -> (f64, f64) {
    let x = EARTH_RADIUS_M * ref_latitude.to_radians().cos() * lon.to_radians();
    let y = EARTH_RADIUS_M * (lat - ref_latitude).to_radians();
    (x, y)
}

pub fn unproject(x: f64, y: f64, ref_latitude: f64) -> (f64, f64) {
    let lon = (x / (EARTH_RADIUS_M * ref_latitude.to_radians().cos())).to_degrees();
    let lat = ref_latitude + (y / EARTH_RADIUS_M).to_degrees();
    (lon, lat)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionFile {
    pub name: String,
    pub ref_latitude: f64,
    /// `[lon, lat]` pairs in degrees.
    pub vertices: Vec<[f64; 2]>,
}

impl RegionFile {
    pub fn from_planar(name: &str, ref_latitude: f64, poly: &Polygon) -> Self {
        RegionFile {
            name: name.to_string(),
            ref_latitude,
            vertices: poly
                .vertices
                .iter()
                .map(|&(x, y)| {
                    let (lon, lat) = unproject(x, y, ref_latitude);
                    [lon, lat]
                })
                .collect(),
        }
    }

    pub fn to_polygon(&self) -> Result<Polygon, GridError> {
        Polygon::new(
            self.vertices
                .iter()
                .map(|[lon, lat]| project(*lon, *lat, self.ref_latitude))
                .collect(),
        )
    }
}

pub fn hasher_for_id(id: &str) -> Result<Box<dyn MerkleHasher>, GridError> {
    let candidates: [Box<dyn MerkleHasher>; 3] = [
        Box::new(FieldHasher::<Fp61>::new()),
        Box::new(FieldHasher::<PallasFp>::new()),
        Box::new(Sha256Hasher),
    ];
    candidates
        .into_iter()
        .find(|h| h.id() == id)
        .ok_or_else(|| GridError::UnknownHash(id.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentFile {
    pub root_hex: String,
    pub cells: Vec<[i32; 2]>,
    pub resolution: u8,
    pub hash_id: String,
}

impl From<&RegionCommitment> for CommitmentFile {
    fn from(c: &RegionCommitment) -> Self {
        CommitmentFile {
            root_hex: hex::encode(c.root),
            cells: c.cells.iter().map(|c| [c.q, c.r]).collect(),
            resolution: c.resolution,
            hash_id: c.hash_id.clone(),
        }
    }
}

impl CommitmentFile {
    /// Rebuilds the tree and checks it against the stored root.
    pub fn to_commitment(&self) -> Result<RegionCommitment, GridError> {
        let hasher = hasher_for_id(&self.hash_id)?;
        let cells = self
            .cells
            .iter()
            .map(|[q, r]| CellId::new(*q, *r, self.resolution))
            .collect();
        let c = RegionCommitment::build(cells, hasher.as_ref())?;
        let root = hex::decode(&self.root_hex)
            .map_err(|e| GridError::Malformed(e.to_string()))?;
        if root != c.root {
            return Err(GridError::RootMismatch);
        }
        Ok(c)
    }
}
