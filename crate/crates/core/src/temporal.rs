//! Temporal phase unwrapping.
//!
//! The geometric-constraint method unwraps a high-frequency wrapped phase
//! directly against the continuous phase of a reference plane placed at the
//! nearest admissible depth: since every surface point lies at or beyond that
//! plane, its continuous phase is bounded below by the plane's phase, which
//! pins the fringe order per pixel with no spatial propagation. Residual
//! wraps that appear when the object exceeds one fringe period above the
//! plane are removed by a scan correction. The conventional dual-frequency
//! method is provided as the baseline comparator.

use std::f64::consts::{PI, TAU};

use crate::demod::WrappedPhaseMap;
use crate::error::{Error, Result};
use crate::raster::{Grid, Mask, Unit};
use crate::spatial::{anchored_scan, Provenance, UnwrappedPhaseMap};

/// Low/high fringe frequency pair in fringes per image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPair {
    pub low: f64,
    pub high: f64,
}

impl FrequencyPair {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        let ok = low.is_finite() && high.is_finite() && low > 0.0 && low < high;
        if !ok {
            return Err(Error::InvalidParam(format!(
                "frequencies must satisfy 0 < low < high, got low={low} high={high}"
            )));
        }
        Ok(Self { low, high })
    }

    pub fn ratio(&self) -> f64 {
        self.high / self.low
    }
}

/// Continuous phase of the reference plane at the nearest admissible depth;
/// the pixelwise lower bound used by the geometric constraint.
#[derive(Debug, Clone)]
pub struct MinPhaseMap {
    pub phase: Grid,
    pub mask: Mask,
}

impl MinPhaseMap {
    pub fn from_unwrapped(map: UnwrappedPhaseMap) -> Self {
        Self {
            phase: map.phase,
            mask: map.mask,
        }
    }
}

/// Conventional dual-frequency unwrapping.
///
/// `k = round[(f2*phi1/f1 - phi2) / (2*pi)]`, `Phi2 = phi2 + 2*k*pi`, with
/// half-integer ties rounded away from zero. The output mask is the
/// intersection of the input masks.
pub fn dual_frequency_unwrap(
    phi1: &UnwrappedPhaseMap,
    phi2: &WrappedPhaseMap,
    freqs: &FrequencyPair,
) -> Result<UnwrappedPhaseMap> {
    FrequencyPair::new(freqs.low, freqs.high)?;
    phi1.phase.check_same_dims(&phi2.phase)?;
    let ratio = freqs.ratio();
    let mask = phi1.mask.intersect(&phi2.mask)?;

    let (w, h) = (phi2.phase.width(), phi2.phase.height());
    let mut phase = Grid::filled(w, h, Unit::Radians, f64::NAN)?;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let low = phi1.phase.get(x, y);
            let wrapped = phi2.phase.get(x, y);
            // f64::round ties away from zero, the fixed tie rule here.
            let k = ((ratio * low - wrapped) / TAU).round();
            phase.set(x, y, wrapped + TAU * k);
        }
    }

    Ok(UnwrappedPhaseMap {
        phase,
        mask,
        provenance: Provenance::DualFrequency,
    })
}

/// Geometric-constraint unwrapping against the reference-plane phase.
///
/// `K = ceil[(phi_min - phi_w) / (2*pi)]`, `Phi = phi_w + 2*K*pi`, so the
/// output lands in `[phi_min, phi_min + 2*pi)` and is congruent to the
/// wrapped input mod 2*pi. Purely pixelwise: no spatial path is needed, so
/// isolated regions unwrap like any other pixel.
pub fn geometric_unwrap(
    phi_w: &WrappedPhaseMap,
    phi_min: &MinPhaseMap,
) -> Result<UnwrappedPhaseMap> {
    phi_w.phase.check_same_dims(&phi_min.phase)?;
    let (w, h) = (phi_w.phase.width(), phi_w.phase.height());
    let mut phase = Grid::filled(w, h, Unit::Radians, f64::NAN)?;
    for y in 0..h {
        for x in 0..w {
            if !phi_w.mask.get(x, y) {
                continue;
            }
            if !phi_min.mask.get(x, y) {
                return Err(Error::MissingMinPhase { x, y });
            }
            let wrapped = phi_w.phase.get(x, y);
            let floor = phi_min.phase.get(x, y);
            let k = ((floor - wrapped) / TAU).ceil();
            phase.set(x, y, wrapped + TAU * k);
        }
    }

    Ok(UnwrappedPhaseMap {
        phase,
        mask: phi_w.mask.clone(),
        provenance: Provenance::Geometric,
    })
}

/// Remove residual wraps left by [`geometric_unwrap`] when the object rises
/// more than one fringe period above the reference plane.
///
/// The jump-counting recursion runs down an anchor column, then along each
/// row in both directions from that column. The anchor column is the one
/// holding the highest-quality valid pixel when a quality grid (typically
/// the modulation map) is supplied; otherwise the column with the most valid
/// pixels. Invalid pixels break a scan, and the first valid pixel after a
/// gap re-anchors to its incoming value. Idempotent: a second application
/// changes nothing.
pub fn residual_correct(
    phi_u: &UnwrappedPhaseMap,
    quality: Option<&Grid>,
) -> Result<UnwrappedPhaseMap> {
    let anchor_col = match quality {
        Some(q) => {
            q.check_same_dims(&phi_u.phase)?;
            let mut best: Option<(f64, usize, usize)> = None;
            for y in 0..q.height() {
                for x in 0..q.width() {
                    if !phi_u.mask.get(x, y) {
                        continue;
                    }
                    let v = q.get(x, y);
                    if best.is_none_or(|(bv, _, _)| v > bv) {
                        best = Some((v, x, y));
                    }
                }
            }
            best.ok_or(Error::EmptyValidSet)?.1
        }
        None => {
            let mut best = (0usize, 0usize);
            for x in 0..phi_u.phase.width() {
                let count = (0..phi_u.phase.height())
                    .filter(|&y| phi_u.mask.get(x, y))
                    .count();
                if count > best.1 {
                    best = (x, count);
                }
            }
            if best.1 == 0 {
                return Err(Error::EmptyValidSet);
            }
            best.0
        }
    };

    let phase = anchored_scan(&phi_u.phase, &phi_u.mask, anchor_col);
    Ok(UnwrappedPhaseMap {
        phase,
        mask: phi_u.mask.clone(),
        provenance: Provenance::GeometricCorrected,
    })
}

/// Detect residual wraps: any adjacent valid-pixel difference above pi
/// (4-connectivity) in an unwrapped map.
pub fn has_residual_wraps(map: &UnwrappedPhaseMap) -> bool {
    let (w, h) = (map.phase.width(), map.phase.height());
    for y in 0..h {
        for x in 0..w {
            if !map.mask.get(x, y) {
                continue;
            }
            let v = map.phase.get(x, y);
            if x + 1 < w && map.mask.get(x + 1, y) && (map.phase.get(x + 1, y) - v).abs() > PI {
                return true;
            }
            if y + 1 < h && map.mask.get(x, y + 1) && (map.phase.get(x, y + 1) - v).abs() > PI {
                return true;
            }
        }
    }
    false
}

/// Continuous phase of a unit-frequency pattern, as the conventional
/// dual-frequency baseline recovers it: the wrapped phase folded into
/// `[0, 2*pi)`, the span of a single fringe covering the whole image.
pub fn unit_frequency_phase(wrapped: &WrappedPhaseMap) -> UnwrappedPhaseMap {
    let phase = wrapped.phase.map(Unit::Radians, |v| {
        if v.is_nan() {
            f64::NAN
        } else if v < 0.0 {
            v + TAU
        } else {
            v
        }
    });
    UnwrappedPhaseMap {
        phase,
        mask: wrapped.mask.clone(),
        provenance: Provenance::DualFrequency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{wrap_to_principal, wrap_unchecked};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wrapped_map(values: Vec<f64>, w: usize, h: usize) -> WrappedPhaseMap {
        let phase = Grid::new(w, h, Unit::Radians, values).unwrap();
        WrappedPhaseMap {
            modulation: Grid::filled(w, h, Unit::Intensity, 100.0).unwrap(),
            mask: Mask::all_valid(w, h).unwrap(),
            phase,
        }
    }

    fn unwrapped_map(values: Vec<f64>, w: usize, h: usize) -> UnwrappedPhaseMap {
        UnwrappedPhaseMap {
            phase: Grid::new(w, h, Unit::Radians, values).unwrap(),
            mask: Mask::all_valid(w, h).unwrap(),
            provenance: Provenance::Geometric,
        }
    }

    fn min_map(values: Vec<f64>, w: usize, h: usize) -> MinPhaseMap {
        MinPhaseMap {
            phase: Grid::new(w, h, Unit::Radians, values).unwrap(),
            mask: Mask::all_valid(w, h).unwrap(),
        }
    }

    #[test]
    fn dual_identity_at_equal_frequencies_rejected() {
        // f1 must be strictly below f2.
        let phi1 = unwrapped_map(vec![1.0], 1, 1);
        let phi2 = wrapped_map(vec![1.0], 1, 1);
        assert!(dual_frequency_unwrap(
            &phi1,
            &phi2,
            &FrequencyPair {
                low: 1.0,
                high: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn dual_recovers_order_two() {
        // phi1 = 2.0, phi2 = wrap(16.0), ratio 8 -> k = 2, Phi2 = 16.
        let phi1 = unwrapped_map(vec![2.0], 1, 1);
        let phi2 = wrapped_map(vec![wrap_to_principal(16.0).unwrap()], 1, 1);
        let freqs = FrequencyPair::new(1.0, 8.0).unwrap();
        let out = dual_frequency_unwrap(&phi1, &phi2, &freqs).unwrap();
        assert!((out.phase.get(0, 0) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn dual_low_frequency_error_threshold() {
        // A perturbation delta on phi1 flips the fringe order exactly when
        // |f2*delta/f1| crosses pi. Sweep delta against a brute-force check.
        let truth = 16.0f64;
        let freqs = FrequencyPair::new(1.0, 8.0).unwrap();
        let phi2 = wrapped_map(vec![wrap_to_principal(truth).unwrap()], 1, 1);
        for i in 0..400 {
            let delta = -0.8 + i as f64 * 0.004;
            let phi1 = unwrapped_map(vec![truth / 8.0 + delta], 1, 1);
            let out = dual_frequency_unwrap(&phi1, &phi2, &freqs).unwrap();
            let err = (out.phase.get(0, 0) - truth).abs();
            let expect_failure = (8.0 * delta).abs() > PI;
            if expect_failure {
                assert!(err >= TAU - 1e-9, "delta={delta}: err={err}");
            } else if (8.0 * delta).abs() < PI - 1e-9 {
                assert!(err < 1e-9, "delta={delta}: err={err}");
            }
        }
    }

    #[test]
    fn dual_mask_is_intersection() {
        let mut phi1 = unwrapped_map(vec![0.0, 0.0], 2, 1);
        let phi2 = wrapped_map(vec![0.0, 0.0], 2, 1);
        phi1.mask.set(0, 0, false);
        let freqs = FrequencyPair::new(1.0, 4.0).unwrap();
        let out = dual_frequency_unwrap(&phi1, &phi2, &freqs).unwrap();
        assert_eq!(out.mask.values(), &[false, true]);
        assert!(out.phase.get(0, 0).is_nan());
    }

    #[test]
    fn geometric_coincident_case() {
        let out =
            geometric_unwrap(&wrapped_map(vec![1.0], 1, 1), &min_map(vec![1.0], 1, 1)).unwrap();
        assert_eq!(out.phase.get(0, 0), 1.0);
    }

    #[test]
    fn geometric_lifts_two_orders() {
        // phi_min = 5, phi_w = -2: K = ceil(7/2pi) = 2, Phi = -2 + 4pi.
        let out =
            geometric_unwrap(&wrapped_map(vec![-2.0], 1, 1), &min_map(vec![5.0], 1, 1)).unwrap();
        assert!((out.phase.get(0, 0) - 10.566370614359172).abs() < 1e-12);
    }

    #[test]
    fn geometric_object_already_above_plane() {
        // phi_min = 0.5, phi_w = 1.0: K = 0.
        let out =
            geometric_unwrap(&wrapped_map(vec![1.0], 1, 1), &min_map(vec![0.5], 1, 1)).unwrap();
        assert_eq!(out.phase.get(0, 0), 1.0);
    }

    #[test]
    fn geometric_requires_min_phase_under_valid_pixels() {
        let phi_w = wrapped_map(vec![0.0], 1, 1);
        let mut pm = min_map(vec![0.0], 1, 1);
        pm.mask.set(0, 0, false);
        assert!(matches!(
            geometric_unwrap(&phi_w, &pm),
            Err(Error::MissingMinPhase { x: 0, y: 0 })
        ));
    }

    #[test]
    fn geometric_output_within_window_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000usize;
        let phi_w: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..=PI)).collect();
        let phi_min: Vec<f64> = (0..n).map(|_| rng.gen_range(-60.0..60.0)).collect();
        let out = geometric_unwrap(
            &wrapped_map(phi_w.clone(), n, 1),
            &min_map(phi_min.clone(), n, 1),
        )
        .unwrap();
        for i in 0..n {
            let lift = out.phase.get(i, 0) - phi_min[i];
            assert!(
                (0.0..TAU).contains(&lift),
                "i={i}: lift={lift} phi_w={} phi_min={}",
                phi_w[i],
                phi_min[i]
            );
            let d = wrap_unchecked(out.phase.get(i, 0) - phi_w[i]).abs();
            assert!(d.min(TAU - d) < 1e-9);
        }
    }

    #[test]
    fn correction_no_op_on_continuous_map() {
        let values: Vec<f64> = (0..30).map(|i| 0.2 * i as f64).collect();
        let map = unwrapped_map(values.clone(), 10, 3);
        let out = residual_correct(&map, None).unwrap();
        assert_eq!(out.phase.values(), map.phase.values());
        assert_eq!(out.provenance, Provenance::GeometricCorrected);
    }

    #[test]
    fn correction_lifts_row_deficit() {
        // Residual wrap of -2*pi in the middle of a row.
        let mut values: Vec<f64> = (0..16).map(|i| 10.0 + 0.2 * i as f64).collect();
        for v in values.iter_mut().skip(6).take(4) {
            *v -= TAU;
        }
        let map = unwrapped_map(values, 16, 1);
        let out = residual_correct(&map, None).unwrap();
        for i in 0..16 {
            let expect = 10.0 + 0.2 * i as f64;
            assert!((out.phase.get(i, 0) - expect).abs() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn correction_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = Grid::from_fn(24, 18, Unit::Radians, |x, y| {
            0.3 * x as f64 + 0.1 * y as f64
        })
        .unwrap();
        // Plant a few rectangular 2*pi deficits.
        let mut values = truth.values().to_vec();
        for _ in 0..3 {
            let cx = rng.gen_range(4..20);
            let cy = rng.gen_range(4..14);
            for y in cy - 2..cy + 2 {
                for x in cx - 2..cx + 2 {
                    values[y * 24 + x] -= TAU;
                }
            }
        }
        let map = unwrapped_map(values, 24, 18);
        let once = residual_correct(&map, None).unwrap();
        let twice = residual_correct(&once, None).unwrap();
        assert_eq!(once.phase.values(), twice.phase.values());
    }

    #[test]
    fn correction_congruent_to_input() {
        let mut values: Vec<f64> = (0..40).map(|i| 0.4 * (i % 10) as f64).collect();
        values[17] -= TAU;
        let map = unwrapped_map(values.clone(), 10, 4);
        let out = residual_correct(&map, None).unwrap();
        for (o, i) in out.phase.values().iter().zip(&values) {
            let d = wrap_unchecked(o - i).abs();
            assert!(d.min(TAU - d) < 1e-9);
        }
    }

    #[test]
    fn correction_anchor_from_quality() {
        // Anchor column must follow the highest-quality pixel.
        let map = unwrapped_map(vec![0.0; 12], 4, 3);
        let mut quality = Grid::filled(4, 3, Unit::Intensity, 1.0).unwrap();
        quality.set(2, 1, 50.0);
        let out = residual_correct(&map, Some(&quality)).unwrap();
        assert_eq!(out.phase.values(), map.phase.values());
    }

    #[test]
    fn residual_wrap_detection() {
        let smooth = unwrapped_map((0..12).map(|i| 0.1 * i as f64).collect(), 4, 3);
        assert!(!has_residual_wraps(&smooth));
        let mut jumpy = smooth.clone();
        jumpy.phase.set(2, 1, jumpy.phase.get(2, 1) + TAU);
        assert!(has_residual_wraps(&jumpy));
        // Jumps across invalid pixels do not count.
        let mut masked = jumpy.clone();
        masked.mask.set(2, 1, false);
        masked.phase.set(2, 1, f64::NAN);
        assert!(!has_residual_wraps(&masked));
    }

    #[test]
    fn unit_frequency_phase_folds_into_one_turn() {
        let wrapped = wrapped_map(vec![-3.0, -0.1, 0.0, 3.0], 4, 1);
        let out = unit_frequency_phase(&wrapped);
        let expect = [TAU - 3.0, TAU - 0.1, 0.0, 3.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((out.phase.get(i, 0) - e).abs() < 1e-12);
            assert!((0.0..TAU).contains(&out.phase.get(i, 0)));
        }
    }
}
