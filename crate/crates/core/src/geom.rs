//! Axis-aligned rectangles and a bucketed point index.

use serde::{Deserialize, Serialize};

/// Closed axis-aligned rectangle in micrometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn is_valid(&self) -> bool {
        self.xmin <= self.xmax && self.ymin <= self.ymax
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect {
            xmin: self.xmin - margin,
            ymin: self.ymin - margin,
            xmax: self.xmax + margin,
            ymax: self.ymax + margin,
        }
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            xmin: self.xmin.max(other.xmin),
            ymin: self.ymin.max(other.ymin),
            xmax: self.xmax.min(other.xmax),
            ymax: self.ymax.min(other.ymax),
        };
        r.is_valid().then_some(r)
    }
}

/// Uniform-grid bucket index over a fixed point set.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<(f64, f64)>,
    origin: (f64, f64),
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointIndex {
    pub fn new(points: &[(f64, f64)]) -> Self {
        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            xmin = xmin.min(x);
            ymin = ymin.min(y);
            xmax = xmax.max(x);
            ymax = ymax.max(y);
        }
        if points.is_empty() {
            (xmin, ymin, xmax, ymax) = (0.0, 0.0, 0.0, 0.0);
        }
        let span = (xmax - xmin).max(ymax - ymin).max(1e-9);
        // roughly four points per occupied cell
        let target_cells = (points.len() / 4).max(1) as f64;
        let cell = (span / target_cells.sqrt()).max(1e-6);
        let cols = ((xmax - xmin) / cell).floor() as usize + 1;
        let rows = ((ymax - ymin) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); cols * rows];
        for (i, &(x, y)) in points.iter().enumerate() {
            let c = (((x - xmin) / cell).floor() as usize).min(cols - 1);
            let r = (((y - ymin) / cell).floor() as usize).min(rows - 1);
            buckets[r * cols + c].push(i);
        }
        Self {
            points: points.to_vec(),
            origin: (xmin, ymin),
            cell,
            cols,
            rows,
            buckets,
        }
    }

    /// Appends the indices of all points inside `rect` to `out`, ascending.
    pub fn query(&self, rect: &Rect, out: &mut Vec<usize>) {
        let start = out.len();
        if self.points.is_empty() || !rect.is_valid() {
            return;
        }
        let to_cell = |v: f64, o: f64, max: usize| -> Option<usize> {
            let c = ((v - o) / self.cell).floor();
            if c < 0.0 {
                None
            } else {
                Some((c as usize).min(max - 1))
            }
        };
        let c0 = to_cell(rect.xmin, self.origin.0, self.cols).unwrap_or(0);
        let r0 = to_cell(rect.ymin, self.origin.1, self.rows).unwrap_or(0);
        let (Some(c1), Some(r1)) = (
            to_cell(rect.xmax, self.origin.0, self.cols),
            to_cell(rect.ymax, self.origin.1, self.rows),
        ) else {
            return;
        };
        for r in r0..=r1 {
            for c in c0..=c1 {
                for &i in &self.buckets[r * self.cols + c] {
                    let (x, y) = self.points[i];
                    if rect.contains(x, y) {
                        out.push(i);
                    }
                }
            }
        }
        out[start..].sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_matches_scan() {
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|i| (((i * 37) % 101) as f64 * 1.5, ((i * 53) % 97) as f64 * 0.7))
            .collect();
        let idx = PointIndex::new(&pts);
        for (k, r) in [
            Rect { xmin: 10.0, ymin: 5.0, xmax: 60.0, ymax: 40.0 },
            Rect { xmin: -5.0, ymin: -5.0, xmax: 0.0, ymax: 0.0 },
            Rect { xmin: 200.0, ymin: 0.0, xmax: 300.0, ymax: 10.0 },
            Rect { xmin: -1e9, ymin: -1e9, xmax: 1e9, ymax: 1e9 },
        ]
        .iter()
        .enumerate()
        {
            let mut got = Vec::new();
            idx.query(r, &mut got);
            let want: Vec<usize> = (0..pts.len())
                .filter(|&i| r.contains(pts[i].0, pts[i].1))
                .collect();
            assert_eq!(got, want, "query {k}");
        }
    }
}
