//! Four-step phase-shifting demodulation.
//!
//! Recovers wrapped phase and modulation from four fringe images with phase
//! offsets `n*pi/2`:
//!
//! ```text
//! phase      = atan2(I3 - I1, I0 - I2)            in (-pi, pi]
//! modulation = sqrt((I3 - I1)^2 + (I0 - I2)^2) / 2
//! ```
//!
//! Pixels whose modulation does not exceed the threshold (background,
//! shadows, holes) are marked invalid.

use crate::error::{require_non_negative, Result};
use crate::raster::{wrap_unchecked, Grid, Mask, Unit};
use crate::synth::SHIFT_COUNT;

/// Default modulation threshold in intensity counts on an 8-bit scale.
/// Rejects unlit background while keeping low-contrast object regions.
pub const DEFAULT_MODULATION_THRESHOLD: f64 = 5.0;

/// Four phase-shifted intensity images; image `n` carries offset `n*pi/2`.
#[derive(Debug, Clone)]
pub struct FringeStack {
    images: [Grid; SHIFT_COUNT],
}

impl FringeStack {
    pub fn new(images: [Grid; SHIFT_COUNT]) -> Result<Self> {
        for img in &images[1..] {
            images[0].check_same_dims(img)?;
        }
        Ok(Self { images })
    }

    pub fn images(&self) -> &[Grid; SHIFT_COUNT] {
        &self.images
    }

    pub fn width(&self) -> usize {
        self.images[0].width()
    }

    pub fn height(&self) -> usize {
        self.images[0].height()
    }
}

/// Wrapped phase plus the modulation and validity mask that qualify it.
#[derive(Debug, Clone)]
pub struct WrappedPhaseMap {
    /// Phase in `(-pi, pi]` wherever the mask is valid, NaN elsewhere.
    pub phase: Grid,
    /// Recovered fringe amplitude; doubles as the quality map.
    pub modulation: Grid,
    pub mask: Mask,
}

/// Demodulate a four-step stack.
///
/// Pixels with modulation at or below `modulation_threshold` are masked
/// invalid and their phase set to NaN.
pub fn four_step_phase(stack: &FringeStack, modulation_threshold: f64) -> Result<WrappedPhaseMap> {
    require_non_negative(modulation_threshold, "modulation threshold")?;
    let (w, h) = (stack.width(), stack.height());
    let [i0, i1, i2, i3] = stack.images();

    let mut phase = Grid::filled(w, h, Unit::Radians, f64::NAN)?;
    let mut modulation = Grid::filled(w, h, Unit::Intensity, 0.0)?;
    let mut mask = Mask::all_valid(w, h)?;

    for y in 0..h {
        for x in 0..w {
            let num = i3.get(x, y) - i1.get(x, y); // 2B sin(phi)
            let den = i0.get(x, y) - i2.get(x, y); // 2B cos(phi)
            let b = 0.5 * (num * num + den * den).sqrt();
            modulation.set(x, y, b);
            if b > modulation_threshold {
                // atan2 lands in [-pi, pi]; fold the lower boundary onto +pi.
                phase.set(x, y, wrap_unchecked(num.atan2(den)));
            } else {
                mask.set(x, y, false);
            }
        }
    }

    Ok(WrappedPhaseMap {
        phase,
        modulation,
        mask,
    })
}

/// Valid iff modulation strictly exceeds the threshold.
pub fn validity_mask(modulation: &Grid, threshold: f64) -> Result<Mask> {
    require_non_negative(threshold, "modulation threshold")?;
    let mut mask = Mask::all_valid(modulation.width(), modulation.height())?;
    for y in 0..modulation.height() {
        for x in 0..modulation.width() {
            // Strict comparison, so NaN modulation is invalid.
            let valid = modulation.get(x, y) > threshold;
            if !valid {
                mask.set(x, y, false);
            }
        }
    }
    Ok(mask)
}
