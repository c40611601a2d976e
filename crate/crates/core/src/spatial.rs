//! Spatial phase unwrapping.
//!
//! Two methods are provided for the smooth reference plane: a scan-line
//! unwrapper built on the 1-D jump-counting recursion, and a quality-guided
//! flood fill ordered by modulation. Both recover the continuous phase up to
//! one global 2*pi*k piston whenever the true per-pixel gradients stay below
//! pi on a connected mask.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::demod::WrappedPhaseMap;
use crate::error::{Error, Result};
use crate::raster::{Grid, Mask, Unit};

/// Which method produced an unwrapped map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "spatial-itoh")]
    SpatialItoh,
    #[serde(rename = "spatial-quality-guided")]
    SpatialQualityGuided,
    #[serde(rename = "dual-frequency")]
    DualFrequency,
    #[serde(rename = "geometric")]
    Geometric,
    #[serde(rename = "geometric+corrected")]
    GeometricCorrected,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::SpatialItoh => "spatial-itoh",
            Provenance::SpatialQualityGuided => "spatial-quality-guided",
            Provenance::DualFrequency => "dual-frequency",
            Provenance::Geometric => "geometric",
            Provenance::GeometricCorrected => "geometric+corrected",
        };
        f.write_str(s)
    }
}

/// Continuous phase map, congruent to its source wrapped phase mod 2*pi.
#[derive(Debug, Clone)]
pub struct UnwrappedPhaseMap {
    /// Finite wherever the mask is valid, NaN elsewhere.
    pub phase: Grid,
    pub mask: Mask,
    pub provenance: Provenance,
}

/// Fringe-order increment for one step of the jump-counting recursion:
/// a drop below -pi raises the order, a rise above +pi lowers it.
#[inline]
pub(crate) fn order_step(diff: f64) -> i64 {
    if diff < -PI {
        1
    } else if diff > PI {
        -1
    } else {
        0
    }
}

/// Unwrap a 1-D sequence of finite phase values.
///
/// The first output equals the first input (zero correction at the start);
/// each subsequent value is the input plus `2*pi` times the running order
/// count, so adjacent output differences lie within `[-pi, pi]`.
pub fn itoh_unwrap_line(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySequence);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinitePhase);
    }
    let mut out = Vec::with_capacity(values.len());
    let mut order: i64 = 0;
    out.push(values[0]);
    for i in 1..values.len() {
        order += order_step(values[i] - values[i - 1]);
        out.push(values[i] + TAU * order as f64);
    }
    Ok(out)
}

/// Two-pass anchored scan correction.
///
/// Applies the jump-counting recursion down the anchor column, then along
/// each row in both directions starting from that column's corrected value.
/// Invalid pixels break scan continuity; the first valid pixel after a gap
/// re-anchors with zero correction, keeping its input value.
pub(crate) fn anchored_scan(values: &Grid, mask: &Mask, anchor_col: usize) -> Grid {
    let (w, h) = (values.width(), values.height());
    debug_assert!(anchor_col < w);
    let mut out = values.clone();

    // Column pass: running order per contiguous valid segment.
    let mut col_order: Vec<Option<i64>> = vec![None; h];
    let mut order: i64 = 0;
    let mut prev: Option<f64> = None;
    for (y, slot) in col_order.iter_mut().enumerate() {
        if mask.get(anchor_col, y) {
            let v = values.get(anchor_col, y);
            debug_assert!(v.is_finite());
            match prev {
                None => order = 0,
                Some(p) => order += order_step(v - p),
            }
            *slot = Some(order);
            out.set(anchor_col, y, v + TAU * order as f64);
            prev = Some(v);
        } else {
            prev = None;
        }
    }

    // Row passes, both directions from the anchor column.
    for (y, anchor_order) in col_order.iter().enumerate() {
        let anchor_state = anchor_order.map(|k| (k, values.get(anchor_col, y)));

        let mut order: i64 = anchor_state.map_or(0, |(k, _)| k);
        let mut prev: Option<f64> = anchor_state.map(|(_, v)| v);
        for x in anchor_col + 1..w {
            if mask.get(x, y) {
                let v = values.get(x, y);
                match prev {
                    None => order = 0,
                    Some(p) => order += order_step(v - p),
                }
                out.set(x, y, v + TAU * order as f64);
                prev = Some(v);
            } else {
                prev = None;
            }
        }

        let mut order: i64 = anchor_state.map_or(0, |(k, _)| k);
        let mut prev: Option<f64> = anchor_state.map(|(_, v)| v);
        for x in (0..anchor_col).rev() {
            if mask.get(x, y) {
                let v = values.get(x, y);
                match prev {
                    None => order = 0,
                    Some(p) => order += order_step(v - p),
                }
                out.set(x, y, v + TAU * order as f64);
                prev = Some(v);
            } else {
                prev = None;
            }
        }
    }

    out
}

/// Highest-modulation valid pixel, ties broken by smallest row-major index.
pub(crate) fn default_seed(wrapped: &WrappedPhaseMap) -> Result<(usize, usize)> {
    let (w, h) = (wrapped.phase.width(), wrapped.phase.height());
    let mut best: Option<(f64, usize, usize)> = None;
    for y in 0..h {
        for x in 0..w {
            if !wrapped.mask.get(x, y) {
                continue;
            }
            let q = wrapped.modulation.get(x, y);
            if best.is_none_or(|(bq, _, _)| q > bq) {
                best = Some((q, x, y));
            }
        }
    }
    best.map(|(_, x, y)| (x, y)).ok_or(Error::EmptyValidSet)
}

/// Scan-line unwrap of a wrapped map, anchored at the given pixel's column
/// (default: the highest-modulation valid pixel).
///
/// Every valid pixel receives a value; segments cut off from the anchor
/// column restart with zero correction, so disconnected regions carry an
/// unknown relative 2*pi*k offset. Use [`quality_guided_unwrap`] when the
/// connected component structure matters.
pub fn itoh_unwrap_grid(
    wrapped: &WrappedPhaseMap,
    anchor: Option<(usize, usize)>,
) -> Result<UnwrappedPhaseMap> {
    let anchor = resolve_seed(wrapped, anchor)?;
    let phase = anchored_scan(&wrapped.phase, &wrapped.mask, anchor.0);
    Ok(UnwrappedPhaseMap {
        phase,
        mask: wrapped.mask.clone(),
        provenance: Provenance::SpatialItoh,
    })
}

#[derive(PartialEq)]
struct Candidate {
    quality: f64,
    idx: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: higher quality first, then smaller row-major index.
        self.quality
            .total_cmp(&other.quality)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Quality-guided region growing from a seed pixel.
///
/// Pixels are admitted in descending modulation order; each new pixel takes
/// its fringe order from its best settled neighbor, adjusted by the wrapped
/// difference. Only the mask-valid connected component of the seed is
/// unwrapped; everything else stays invalid. `Phi(seed) = phi_w(seed)`.
pub fn quality_guided_unwrap(
    wrapped: &WrappedPhaseMap,
    seed: Option<(usize, usize)>,
) -> Result<UnwrappedPhaseMap> {
    let (sx, sy) = resolve_seed(wrapped, seed)?;
    let (w, h) = (wrapped.phase.width(), wrapped.phase.height());

    let mut settled = vec![false; w * h];
    let mut orders = vec![0i64; w * h];
    let mut phase = Grid::filled(w, h, Unit::Radians, f64::NAN)?;
    let mut mask = Mask::new(w, h, vec![false; w * h])?;
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();

    let seed_idx = sy * w + sx;
    settled[seed_idx] = true;
    phase.set(sx, sy, wrapped.phase.get(sx, sy));
    mask.set(sx, sy, true);
    push_neighbors(wrapped, &settled, sx, sy, &mut heap);

    while let Some(Candidate { idx, .. }) = heap.pop() {
        if settled[idx] {
            continue;
        }
        let (x, y) = (idx % w, idx / w);
        // Best settled neighbor: highest modulation, ties by smallest index.
        let mut best: Option<(f64, usize)> = None;
        for (nx, ny) in neighbors4(x, y, w, h) {
            let nidx = ny * w + nx;
            if settled[nidx] {
                let q = wrapped.modulation.get(nx, ny);
                if best.is_none_or(|(bq, _)| q > bq) {
                    best = Some((q, nidx));
                }
            }
        }
        let (_, nidx) = best.expect("popped candidate has a settled neighbor");
        let (nx, ny) = (nidx % w, nidx / w);
        let order = orders[nidx] + order_step(wrapped.phase.get(x, y) - wrapped.phase.get(nx, ny));
        settled[idx] = true;
        orders[idx] = order;
        phase.set(x, y, wrapped.phase.get(x, y) + TAU * order as f64);
        mask.set(x, y, true);
        push_neighbors(wrapped, &settled, x, y, &mut heap);
    }

    Ok(UnwrappedPhaseMap {
        phase,
        mask,
        provenance: Provenance::SpatialQualityGuided,
    })
}

fn resolve_seed(wrapped: &WrappedPhaseMap, seed: Option<(usize, usize)>) -> Result<(usize, usize)> {
    match seed {
        Some((x, y)) => {
            let in_bounds = x < wrapped.phase.width() && y < wrapped.phase.height();
            if !in_bounds || !wrapped.mask.get(x, y) {
                return Err(Error::InvalidSeedPixel { x, y });
            }
            Ok((x, y))
        }
        None => default_seed(wrapped),
    }
}

fn neighbors4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    [
        (x.wrapping_sub(1), y),
        (x + 1, y),
        (x, y.wrapping_sub(1)),
        (x, y + 1),
    ]
    .into_iter()
    .filter(move |&(nx, ny)| nx < w && ny < h)
}

fn push_neighbors(
    wrapped: &WrappedPhaseMap,
    settled: &[bool],
    x: usize,
    y: usize,
    heap: &mut BinaryHeap<Candidate>,
) {
    let w = wrapped.phase.width();
    let h = wrapped.phase.height();
    for (nx, ny) in neighbors4(x, y, w, h) {
        let idx = ny * w + nx;
        if !settled[idx] && wrapped.mask.get(nx, ny) {
            heap.push(Candidate {
                quality: wrapped.modulation.get(nx, ny),
                idx,
            });
        }
    }
}
