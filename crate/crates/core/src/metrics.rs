//! Quantitative comparison of reconstructed phase against ground truth.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{Grid, Mask, Unit};
use crate::spatial::UnwrappedPhaseMap;
use crate::synth::DfpGeometry;

/// Spatial anchoring leaves at most an integer-period piston; +-50 periods
/// is far beyond anything the scenes here can produce.
const PISTON_SEARCH_PERIODS: f64 = 50.0;

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub rmse: f64,
    pub max_abs_err: f64,
    pub order_error_count: usize,
    pub order_error_rate: f64,
    /// Global constant subtracted before computing statistics; always an
    /// integer multiple of 2*pi (zero when piston removal is off).
    pub piston_removed: f64,
    pub valid_pixel_count: usize,
}

/// Compare an unwrapped estimate against a ground-truth phase grid.
///
/// Pixels count when valid in both the estimate's mask and `mask`. With
/// `remove_piston`, the integer multiple of 2*pi minimizing the RMSE is
/// subtracted first (the mean difference rounded to the nearest period,
/// clamped to +-50 periods). A pixel is a fringe-order error when its
/// residual exceeds pi in magnitude.
pub fn evaluate(
    estimate: &UnwrappedPhaseMap,
    truth: &Grid,
    mask: &Mask,
    remove_piston: bool,
) -> Result<EvalReport> {
    estimate.phase.check_same_dims(truth)?;
    mask.check_same_dims_grid(truth)?;

    let (w, h) = (truth.width(), truth.height());
    let mut count = 0usize;
    let mut sum_diff = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            if estimate.mask.get(x, y) && mask.get(x, y) {
                count += 1;
                sum_diff += estimate.phase.get(x, y) - truth.get(x, y);
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyValidSet);
    }

    let piston = if remove_piston {
        let periods = (sum_diff / count as f64 / TAU)
            .round()
            .clamp(-PISTON_SEARCH_PERIODS, PISTON_SEARCH_PERIODS);
        TAU * periods
    } else {
        0.0
    };

    let mut sum_sq = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut order_errors = 0usize;
    for y in 0..h {
        for x in 0..w {
            if estimate.mask.get(x, y) && mask.get(x, y) {
                let d = estimate.phase.get(x, y) - truth.get(x, y) - piston;
                sum_sq += d * d;
                max_abs = max_abs.max(d.abs());
                if d.abs() > PI {
                    order_errors += 1;
                }
            }
        }
    }

    Ok(EvalReport {
        rmse: (sum_sq / count as f64).sqrt(),
        max_abs_err: max_abs,
        order_error_count: order_errors,
        order_error_rate: order_errors as f64 / count as f64,
        piston_removed: piston,
        valid_pixel_count: count,
    })
}

/// Absolute residual map `|estimate - truth - piston|`; NaN where the
/// estimate is invalid.
pub fn difference_map(estimate: &UnwrappedPhaseMap, truth: &Grid, piston: f64) -> Result<Grid> {
    estimate.phase.check_same_dims(truth)?;
    Grid::from_fn(truth.width(), truth.height(), Unit::Radians, |x, y| {
        if estimate.mask.get(x, y) {
            (estimate.phase.get(x, y) - truth.get(x, y) - piston).abs()
        } else {
            f64::NAN
        }
    })
}

/// Invert the height-to-phase model: `h = L * dphi / (dphi + 2*pi*f_r*d)`.
///
/// Exact inverse of the forward model for `dphi > -2*pi*f_r*d`; NaN inputs
/// (mask-invalid pixels) propagate.
pub fn height_from_phase(delta_phi: &Grid, geom: &DfpGeometry) -> Result<Grid> {
    geom.validate()?;
    let carrier_term = TAU * geom.fringes_per_mm * geom.baseline_mm;
    for y in 0..delta_phi.height() {
        for x in 0..delta_phi.width() {
            let v = delta_phi.get(x, y);
            if v.is_finite() && v + carrier_term <= 0.0 {
                return Err(Error::NonPositiveDenominator { x, y });
            }
        }
    }
    Ok(delta_phi.map(Unit::Millimeters, |dphi| {
        geom.standoff_mm * dphi / (dphi + carrier_term)
    }))
}
