use serde::{Deserialize, Serialize};

use super::{CellId, GridError, HexGrid};

/// Which cells a polygon covers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellRule {
    /// Cells whose center lies inside the polygon.
    #[default]
    CenterInside,
    /// Cells whose hexagon intersects the polygon at all.
    AnyOverlap,
}

/// Simple polygon in planar meters. Orientation does not matter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self, GridError> {
        let mut vertices = vertices;
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let poly = Polygon { vertices };
        poly.validate()?;
        Ok(poly)
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GridError> {
        Polygon::new(vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = self.vertices[i];
                let (x1, y1) = self.vertices[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
        )
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn validate(&self) -> Result<(), GridError> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(GridError::DegeneratePolygon(format!("{n} vertices")));
        }
        if self
            .vertices
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(GridError::DegeneratePolygon("non-finite coordinate".into()));
        }
        if self.signed_area().abs() < 1e-9 {
            return Err(GridError::DegeneratePolygon("zero area".into()));
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return Err(GridError::DegeneratePolygon(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        point_in_polygon(&self.vertices, x, y)
    }

    /// Sorted, deduplicated cells covered under `rule`.
    pub fn rasterize(&self, grid: &HexGrid, rule: CellRule) -> Result<Vec<CellId>, GridError> {
        let (x0, y0, x1, y1) = self.bbox();
        let s = grid.edge_length();
        let w = s * 3f64.sqrt();
        let pad = match rule {
            CellRule::CenterInside => 1.0,
            CellRule::AnyOverlap => 2.0,
        };
        let r_lo = (y0 / (1.5 * s)).floor() - pad;
        let r_hi = (y1 / (1.5 * s)).ceil() + pad;
        let mut cells = Vec::new();
        let mut r = r_lo;
        while r <= r_hi {
            let q_lo = (x0 / w - r / 2.0).floor() - pad;
            let q_hi = (x1 / w - r / 2.0).ceil() + pad;
            let mut q = q_lo;
            while q <= q_hi {
                let cell = CellId::new(q as i32, r as i32, grid.resolution());
                let hit = match rule {
                    CellRule::CenterInside => {
                        let (cx, cy) = grid.center(cell);
                        self.contains(cx, cy)
                    }
                    CellRule::AnyOverlap => self.overlaps_hex(grid, cell),
                };
                if hit {
                    cells.push(cell);
                }
                q += 1.0;
            }
            r += 1.0;
        }
        cells.sort();
        cells.dedup();
        if cells.is_empty() {
            return Err(GridError::EmptyRegion);
        }
        Ok(cells)
    }

    fn overlaps_hex(&self, grid: &HexGrid, cell: CellId) -> bool {
        let (cx, cy) = grid.center(cell);
        let hex = grid.corners(cell);
        if self.contains(cx, cy) || hex.iter().any(|&(x, y)| self.contains(x, y)) {
            return true;
        }
        if self
            .vertices
            .iter()
            .any(|&(x, y)| point_in_polygon(&hex, x, y))
        {
            return true;
        }
        self.edges().any(|(a, b)| {
            (0..6).any(|i| segments_intersect(a, b, hex[i], hex[(i + 1) % 6]))
        })
    }
}

/// Even-odd crossing test with a half-open rule on y.
pub fn point_in_polygon(vertices: &[(f64, f64)], x: f64, y: f64) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = vertices[i];
        let (xj, yj) = vertices[j];
        if (yi > y) != (yj > y) {
            let xc = (xj - xi) * (y - yi) / (yj - yi) + xi;
            if x < xc {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn winding(vertices: &[(f64, f64)], x: f64, y: f64) -> bool {
        let mut total = 0.0;
        let n = vertices.len();
        for i in 0..n {
            let (ax, ay) = (vertices[i].0 - x, vertices[i].1 - y);
            let (bx, by) = (vertices[(i + 1) % n].0 - x, vertices[(i + 1) % n].1 - y);
            total += (ax * by - ay * bx).atan2(ax * bx + ay * by);
        }
        (total / std::f64::consts::TAU).round() != 0.0
    }

    #[test]
    fn rejects_degenerate_polygons() {
        assert!(Polygon::new(vec![(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(Polygon::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(Polygon::new(vec![(0.0, 0.0), (f64::NAN, 1.0), (2.0, 0.0)]).is_err());
        let bowtie = vec![(0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0)];
        assert!(matches!(
            Polygon::new(bowtie),
            Err(GridError::DegeneratePolygon(_))
        ));
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let p = Polygon::new(vec![(0.0, 0.0), (5.0, 0.0), (0.0, 5.0), (0.0, 0.0)]).unwrap();
        assert_eq!(p.vertices.len(), 3);
    }

    #[test]
    fn rect_matches_center_oracle() {
        let g = HexGrid::new(9).unwrap();
        let p = Polygon::rect(-151.0, -97.0, 263.0, 211.0).unwrap();
        let got = p.rasterize(&g, CellRule::CenterInside).unwrap();
        let mut want = Vec::new();
        for q in -40..40 {
            for r in -40..40 {
                let c = CellId::new(q, r, 9);
                let (x, y) = g.center(c);
                if winding(&p.vertices, x, y) {
                    want.push(c);
                }
            }
        }
        want.sort();
        assert_eq!(got, want);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tiny_polygon_is_empty_region() {
        let g = HexGrid::new(9).unwrap();
        let p = Polygon::rect(10.0, 10.0, 11.0, 11.0).unwrap();
        assert!(matches!(
            p.rasterize(&g, CellRule::CenterInside),
            Err(GridError::EmptyRegion)
        ));
        assert_eq!(p.rasterize(&g, CellRule::AnyOverlap).unwrap().len(), 1);
    }

    #[test]
    fn overlap_is_superset_of_center() {
        let g = HexGrid::new(10).unwrap();
        let p = Polygon::new(vec![(0.0, 0.0), (301.0, 17.0), (150.0, 233.0)]).unwrap();
        let centers = p.rasterize(&g, CellRule::CenterInside).unwrap();
        let overlap = p.rasterize(&g, CellRule::AnyOverlap).unwrap();
        assert!(centers.iter().all(|c| overlap.binary_search(c).is_ok()));
        assert!(overlap.len() > centers.len());
    }
}
