//! Rasterization against a brute-force scan of every cell in the window.

use std::collections::BTreeSet;

use pol_core::grid::{CellId, CellRule, HexGrid, Polygon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Star-shaped around its center with angular gaps below a half turn.
fn random_polygon(rng: &mut ChaCha8Rng, extent: f64) -> Polygon {
    let n = rng.gen_range(3..12);
    let step = std::f64::consts::TAU / n as f64;
    let angles: Vec<f64> = (0..n)
        .map(|i| (i as f64 + rng.gen_range(0.0..0.8)) * step)
        .collect();
    let (cx, cy) = (rng.gen_range(0.3..0.7) * extent, rng.gen_range(0.3..0.7) * extent);
    let vertices = angles
        .iter()
        .map(|a| {
            let r = rng.gen_range(0.1..0.3) * extent;
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    Polygon::new(vertices).unwrap()
}

/// Crossing-number test written independently of the library's.
fn inside(vertices: &[(f64, f64)], x: f64, y: f64) -> bool {
    let n = vertices.len();
    let mut crossings = 0;
    for i in 0..n {
        let (x1, y1) = vertices[i];
        let (x2, y2) = vertices[(i + 1) % n];
        if (y1 <= y) != (y2 <= y) {
            let t = (y - y1) / (y2 - y1);
            if x < x1 + t * (x2 - x1) {
                crossings += 1;
            }
        }
    }
    crossings % 2 == 1
}

fn brute_force(grid: &HexGrid, poly: &Polygon, cols: i32, rows: i32) -> BTreeSet<CellId> {
    let res = grid.resolution();
    let mut out = BTreeSet::new();
    for q in -2 * cols..=2 * cols {
        for r in -2..=rows + 2 {
            let c = CellId::new(q, r, res);
            let (x, y) = grid.center(c);
            if inside(&poly.vertices, x, y) {
                out.insert(c);
            }
        }
    }
    out
}

#[test]
fn fifty_random_polygons_match_scan() {
    let grid = HexGrid::new(9).unwrap();
    let s = grid.edge_length();
    // A 50x50-cell window.
    let extent = 50.0 * s * 3f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut nonempty = 0;
    for i in 0..50 {
        let poly = random_polygon(&mut rng, extent);
        let want = brute_force(&grid, &poly, 60, 70);
        match poly.rasterize(&grid, CellRule::CenterInside) {
            Ok(cells) => {
                nonempty += 1;
                let got: BTreeSet<CellId> = cells.into_iter().collect();
                assert_eq!(got, want, "polygon {i}");
            }
            Err(_) => assert!(want.is_empty(), "polygon {i}"),
        }
    }
    assert!(nonempty > 40);
}

#[test]
fn any_overlap_covers_center_inside() {
    let grid = HexGrid::new(9).unwrap();
    let extent = 30.0 * grid.edge_length() * 3f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..20 {
        let poly = random_polygon(&mut rng, extent);
        let inside: BTreeSet<CellId> = poly
            .rasterize(&grid, CellRule::CenterInside)
            .unwrap_or_default()
            .into_iter()
            .collect();
        let overlap: BTreeSet<CellId> = poly
            .rasterize(&grid, CellRule::AnyOverlap)
            .unwrap()
            .into_iter()
            .collect();
        assert!(inside.is_subset(&overlap));
    }
}
