//! Decentralized sinusoidal joint controller.
//!
//! Each servo carries its own [`WaveParams`]; the commanded angle is
//! `amp * sin(freq * t + phase) + offset`, clamped to the servo's reachable
//! set-point range.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

pub const SET_POINT_RANGE: ParamRange = ParamRange::new(-1.57, 1.57);
pub const AMP_RANGE: ParamRange = ParamRange::new(-1.57, 1.57);
pub const FREQ_RANGE: ParamRange = ParamRange::new(0.2, 2.0);
pub const PHASE_RANGE: ParamRange =
    ParamRange::new(-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI);
pub const OFFSET_RANGE: ParamRange = ParamRange::new(-1.57, 1.57);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
    pub offset: f64,
}

impl WaveParams {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            amp: rng.random_range(AMP_RANGE.lo..=AMP_RANGE.hi),
            freq: rng.random_range(FREQ_RANGE.lo..=FREQ_RANGE.hi),
            phase: rng.random_range(PHASE_RANGE.lo..=PHASE_RANGE.hi),
            offset: rng.random_range(OFFSET_RANGE.lo..=OFFSET_RANGE.hi),
        }
    }

    pub fn is_valid(&self) -> bool {
        AMP_RANGE.contains(self.amp)
            && FREQ_RANGE.contains(self.freq)
            && PHASE_RANGE.contains(self.phase)
            && OFFSET_RANGE.contains(self.offset)
    }

    /// Commanded joint angle at time `t` (seconds since controller start).
    pub fn output(&self, t: f64) -> f64 {
        SET_POINT_RANGE.clamp(self.amp * (self.freq * t + self.phase).sin() + self.offset)
    }

    /// Half the peak-to-peak swing that survives the output clamp.
    pub fn effective_amplitude(&self) -> f64 {
        let a = self.amp.abs();
        (SET_POINT_RANGE.clamp(self.offset + a) - SET_POINT_RANGE.clamp(self.offset - a)) / 2.0
    }

    /// Gaussian perturbation of every field, noise scaled by each field's span
    /// and folded back into range with [`bounce_back`].
    pub fn mutate<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> Self {
        debug_assert!(sigma > 0.0);
        let mut perturb = |v: f64, range: ParamRange| {
            let noise = Normal::new(0.0, sigma * range.span())
                .expect("sigma and span are positive")
                .sample(rng);
            bounce_back(v + noise, range)
        };
        Self {
            amp: perturb(self.amp, AMP_RANGE),
            freq: perturb(self.freq, FREQ_RANGE),
            phase: perturb(self.phase, PHASE_RANGE),
            offset: perturb(self.offset, OFFSET_RANGE),
        }
    }
}

pub fn wave_output(p: &WaveParams, t: f64) -> f64 {
    p.output(t)
}

pub fn effective_amplitude(p: &WaveParams) -> f64 {
    p.effective_amplitude()
}

pub fn mutate_params<R: Rng + ?Sized>(p: &WaveParams, sigma: f64, rng: &mut R) -> WaveParams {
    p.mutate(sigma, rng)
}

/// Reflect `v` across whichever bound it violates until it lands in range.
pub fn bounce_back(mut v: f64, r: ParamRange) -> f64 {
    while v > r.hi || v < r.lo {
        if v > r.hi {
            v = r.hi - (v - r.hi);
        } else {
            v = r.lo + (r.lo - v);
        }
    }
    v
}
