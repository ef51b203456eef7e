//! Seeded random relation graphs and synthetic planning instances.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Rect;
use crate::planner::{PlanInstance, PlanParams};
use crate::relgraph::{FTsvPlacement, RelGraph, SpareSite};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphSpec {
    pub max_f: usize,
    pub max_s: usize,
    /// Probability of each possible edge.
    pub density: f64,
    /// Edges beyond this count are dropped at random.
    pub max_edges: Option<usize>,
}

/// Graph with `1..=max_f` f-TSVs and `1..=max_s` spares, each possible edge
/// present with probability `density`.
pub fn random_graph(seed: u64, spec: &GraphSpec) -> RelGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=spec.max_f.max(1));
    let n = rng.random_range(1..=spec.max_s.max(1));
    let mut edges = Vec::new();
    for u in 0..m {
        for v in 0..m + n {
            if v != u && rng.random_bool(spec.density) {
                edges.push((u, v));
            }
        }
    }
    if let Some(cap) = spec.max_edges {
        if edges.len() > cap {
            let mut keep: Vec<usize> = sample(&mut rng, edges.len(), cap).into_vec();
            keep.sort_unstable();
            edges = keep.into_iter().map(|i| edges[i]).collect();
        }
    }
    RelGraph::from_indexed(
        (1..=m).map(|i| format!("f{i}")).collect(),
        (1..=n).map(|i| format!("s{i}")).collect(),
        edges,
    )
    .expect("generated graph is well formed")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{cols}x{rows} grid points cannot hold {n} f-TSVs")]
    AreaTooSmall { n: usize, cols: usize, rows: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_ftsv: usize,
    /// Width and height in micrometers; defaults to a square with 16 grid
    /// points per f-TSV.
    pub area: Option<(f64, f64)>,
    pub bbox_scale: f64,
    pub pitch_um: f64,
    pub seed: u64,
    pub params: PlanParams,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_ftsv: 55,
            area: None,
            bbox_scale: 1.0,
            pitch_um: 5.0,
            seed: 0,
            params: PlanParams::default(),
        }
    }
}

/// f-TSVs on distinct random grid points, each with a random box of 3 to 10
/// pitches per side (times `bbox_scale`) that contains it and stays on the
/// die where it fits; every other grid point is a spare site.
pub fn synth_instance(spec: &SynthSpec) -> Result<PlanInstance, SynthError> {
    let pitch = spec.pitch_um;
    if !(pitch > 0.0) || spec.n_ftsv == 0 || !(spec.bbox_scale >= 0.0) {
        return Err(SynthError::Invalid(
            "pitch and f-TSV count must be positive, bbox scale non-negative".into(),
        ));
    }
    let (cols, rows) = match spec.area {
        Some((w, h)) => {
            if !(w > 0.0 && h > 0.0) {
                return Err(SynthError::Invalid(format!("area {w}x{h} is not positive")));
            }
            ((w / pitch).floor() as usize + 1, (h / pitch).floor() as usize + 1)
        }
        None => {
            let side = ((16 * spec.n_ftsv) as f64).sqrt().ceil() as usize;
            (side, side)
        }
    };
    let points = cols * rows;
    if points < spec.n_ftsv {
        return Err(SynthError::AreaTooSmall { n: spec.n_ftsv, cols, rows });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen = sample(&mut rng, points, spec.n_ftsv).into_vec();
    chosen.sort_unstable();
    let at = |i: usize| ((i % cols) as f64 * pitch, (i / cols) as f64 * pitch);
    let scaled = spec.bbox_scale * pitch;
    let mut f_tsvs = Vec::with_capacity(chosen.len());
    for (j, &i) in chosen.iter().enumerate() {
        let (x, y) = at(i);
        let w = rng.random_range(3..=10u32);
        let h = rng.random_range(3..=10u32);
        let dx = rng.random_range(0..=w);
        let dy = rng.random_range(0..=h);
        // keep the box on the die when it fits
        let clamp = |lo: f64, len: f64, extent: f64| {
            if len > extent { lo } else { lo.clamp(0.0, extent - len) }
        };
        let (bw, bh) = (f64::from(w) * scaled, f64::from(h) * scaled);
        let xmin = clamp(x - f64::from(dx) * scaled, bw, (cols - 1) as f64 * pitch);
        let ymin = clamp(y - f64::from(dy) * scaled, bh, (rows - 1) as f64 * pitch);
        f_tsvs.push(FTsvPlacement {
            id: format!("f{}", j + 1),
            x,
            y,
            bbox: Rect {
                xmin,
                ymin,
                xmax: xmin + bw,
                ymax: ymin + bh,
            },
        });
    }
    let mut taken = vec![false; points];
    for &i in &chosen {
        taken[i] = true;
    }
    let s_sites = (0..points)
        .filter(|&i| !taken[i])
        .enumerate()
        .map(|(j, i)| {
            let (x, y) = at(i);
            SpareSite { id: format!("s{}", j + 1), x, y }
        })
        .collect();
    Ok(PlanInstance {
        pitch_um: pitch,
        f_tsvs,
        s_sites,
        params: spec.params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphs_are_seeded() {
        let spec = GraphSpec { max_f: 6, max_s: 4, density: 0.4, max_edges: None };
        assert_eq!(random_graph(3, &spec), random_graph(3, &spec));
        let capped = random_graph(3, &GraphSpec { max_edges: Some(2), ..spec });
        assert!(capped.num_edges() <= 2);
    }

    #[test]
    fn synth_layout_is_valid() {
        let spec = SynthSpec { n_ftsv: 40, seed: 7, ..Default::default() };
        let inst = synth_instance(&spec).unwrap();
        assert_eq!(inst, synth_instance(&spec).unwrap());
        assert_eq!(inst.f_tsvs.len(), 40);
        assert_eq!(inst.f_tsvs.len() + inst.s_sites.len(), 26 * 26);
        for f in &inst.f_tsvs {
            assert!(f.bbox.contains(f.x, f.y));
            let w = (f.bbox.xmax - f.bbox.xmin) / 5.0;
            assert!((3.0..=10.0).contains(&w));
        }
        let err = synth_instance(&SynthSpec { n_ftsv: 10, area: Some((5.0, 5.0)), ..spec });
        assert!(matches!(err, Err(SynthError::AreaTooSmall { .. })));
    }
}
