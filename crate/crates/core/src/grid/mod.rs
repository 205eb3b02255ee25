//! Flat hexagonal grid over a local planar frame (meters east, meters north).
//!
//! Cells use pointy-top axial coordinates `(q, r)`. The resolution selects
//! the edge length: 30 m at resolution 9, halving per step, so the default
//! resolution gives cells about 60 m across.

mod io;
mod merkle;
mod raster;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{hasher_for_id, project, unproject, CommitmentFile, RegionFile, EARTH_RADIUS_M};
pub use merkle::{
    verify_membership, FieldHasher, MembershipPath, MerkleHasher, RegionCommitment, Sha256Hasher,
};
pub use raster::{point_in_polygon, CellRule, Polygon};

pub const DEFAULT_RESOLUTION: u8 = 9;
pub const MAX_RESOLUTION: u8 = 15;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("region rasterizes to no cells")]
    EmptyRegion,
    #[error("cell ({q},{r}) is not a member of the committed region")]
    NotMember { q: i32, r: i32 },
    #[error("cell list must be strictly sorted and share one resolution")]
    UnsortedCells,
    #[error("resolution {0} out of range 0..={MAX_RESOLUTION}")]
    InvalidResolution(u8),
    #[error("commitment root does not match its cell list")]
    RootMismatch,
    #[error("unknown hash id {0:?}")]
    UnknownHash(String),
    #[error("malformed commitment file: {0}")]
    Malformed(String),
}

/// Axial hex cell. Ordering is lexicographic on `(resolution, q, r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub resolution: u8,
    pub q: i32,
    pub r: i32,
}

impl CellId {
    pub const fn new(q: i32, r: i32, resolution: u8) -> Self {
        CellId { resolution, q, r }
    }

    pub fn neighbors(&self) -> [CellId; 6] {
        const DIRS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
        DIRS.map(|(dq, dr)| CellId::new(self.q + dq, self.r + dr, self.resolution))
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})@{}", self.q, self.r, self.resolution)
    }
}

pub fn edge_length(resolution: u8) -> f64 {
    30.0 * 2f64.powi(DEFAULT_RESOLUTION as i32 - resolution as i32)
}

/// Vertex-to-vertex width of a cell.
pub fn cell_diameter(resolution: u8) -> f64 {
    2.0 * edge_length(resolution)
}

/// Coarsest resolution whose cells are no wider than `precision_m`.
pub fn resolution_for_precision(precision_m: f64) -> u8 {
    (0..=MAX_RESOLUTION)
        .find(|r| cell_diameter(*r) <= precision_m)
        .unwrap_or(MAX_RESOLUTION)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HexGrid {
    resolution: u8,
    edge: f64,
}

impl HexGrid {
    pub fn new(resolution: u8) -> Result<Self, GridError> {
        if resolution > MAX_RESOLUTION {
            return Err(GridError::InvalidResolution(resolution));
        }
        Ok(HexGrid {
            resolution,
            edge: edge_length(resolution),
        })
    }

    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    pub fn edge_length(&self) -> f64 {
        self.edge
    }

    pub fn center(&self, cell: CellId) -> (f64, f64) {
        let q = cell.q as f64;
        let r = cell.r as f64;
        (self.edge * SQRT3 * (q + r / 2.0), self.edge * 1.5 * r)
    }

    /// Corners of the cell, counter-clockwise starting at 30 degrees.
    pub fn corners(&self, cell: CellId) -> [(f64, f64); 6] {
        let (cx, cy) = self.center(cell);
        std::array::from_fn(|i| {
            let angle = std::f64::consts::PI / 180.0 * (60.0 * i as f64 + 30.0);
            (cx + self.edge * angle.cos(), cy + self.edge * angle.sin())
        })
    }

    fn fractional(&self, x: f64, y: f64) -> (f64, f64) {
        let q = (SQRT3 / 3.0 * x - y / 3.0) / self.edge;
        let r = (2.0 / 3.0 * y) / self.edge;
        (q, r)
    }

    /// The cell whose hexagon contains `(x, y)`. Points equidistant from
    /// several centers go to the smallest `(q, r)`.
    pub fn locate(&self, x: f64, y: f64) -> CellId {
        let (qf, rf) = self.fractional(x, y);
        let sf = -qf - rf;
        let (mut q, mut r, s) = (qf.round(), rf.round(), sf.round());
        let (dq, dr, ds) = ((q - qf).abs(), (r - rf).abs(), (s - sf).abs());
        if dq > dr && dq > ds {
            q = -r - s;
        } else if dr > ds {
            r = -q - s;
        }
        let rounded = CellId::new(q as i32, r as i32, self.resolution);
        let mut candidates = vec![rounded];
        candidates.extend(rounded.neighbors());
        self.nearest(x, y, candidates)
    }

    pub(crate) fn nearest(&self, x: f64, y: f64, candidates: Vec<CellId>) -> CellId {
        let dist2 = |c: &CellId| {
            let (cx, cy) = self.center(*c);
            (cx - x).powi(2) + (cy - y).powi(2)
        };
        let best = candidates
            .iter()
            .map(dist2)
            .fold(f64::INFINITY, f64::min);
        let tolerance = 1e-9 * self.edge * self.edge;
        candidates
            .into_iter()
            .filter(|c| dist2(c) <= best + tolerance)
            .min_by_key(|c| (c.q, c.r))
            .expect("candidate list is non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_maps_to_origin_cell() {
        for res in 0..=MAX_RESOLUTION {
            let g = HexGrid::new(res).unwrap();
            assert_eq!(g.locate(0.0, 0.0), CellId::new(0, 0, res));
        }
    }

    #[test]
    fn default_cells_are_sixty_meters_across() {
        assert_eq!(cell_diameter(DEFAULT_RESOLUTION), 60.0);
        assert_eq!(resolution_for_precision(150.0), 8);
        assert_eq!(resolution_for_precision(60.0), 9);
        assert_eq!(resolution_for_precision(50.0), 10);
        assert_eq!(resolution_for_precision(8.0), 12);
    }

    #[test]
    fn centers_locate_to_themselves() {
        let g = HexGrid::new(9).unwrap();
        for q in -20..20 {
            for r in -20..20 {
                let c = CellId::new(q, r, 9);
                let (x, y) = g.center(c);
                assert_eq!(g.locate(x, y), c);
            }
        }
    }

    #[test]
    fn shared_edge_midpoint_goes_to_smaller_cell() {
        let g = HexGrid::new(9).unwrap();
        let a = CellId::new(0, 0, 9);
        let b = CellId::new(1, 0, 9);
        let (ax, ay) = g.center(a);
        let (bx, by) = g.center(b);
        assert_eq!(g.locate((ax + bx) / 2.0, (ay + by) / 2.0), a);
        let c = CellId::new(-1, 0, 9);
        let (cx, cy) = g.center(c);
        assert_eq!(g.locate((ax + cx) / 2.0, (ay + cy) / 2.0), c);
    }

    #[test]
    fn corners_are_equidistant_from_center() {
        let g = HexGrid::new(11).unwrap();
        let c = CellId::new(3, -7, 11);
        let (cx, cy) = g.center(c);
        for (x, y) in g.corners(c) {
            let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            assert!((d - g.edge_length()).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_resolution_rejected() {
        assert!(matches!(HexGrid::new(16), Err(GridError::InvalidResolution(16))));
    }

    #[test]
    fn neighbors_are_adjacent() {
        let g = HexGrid::new(9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = CellId::new(rng.gen_range(-100..100), rng.gen_range(-100..100), 9);
            let (cx, cy) = g.center(c);
            for n in c.neighbors() {
                let (nx, ny) = g.center(n);
                let d = ((nx - cx).powi(2) + (ny - cy).powi(2)).sqrt();
                assert!((d - SQRT3 * g.edge_length()).abs() < 1e-6);
            }
        }
    }
}
