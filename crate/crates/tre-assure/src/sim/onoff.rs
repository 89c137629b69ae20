//! Correlated ON/OFF arrival process with a fixed long-run mean rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Two-phase Markov-modulated Poisson source parameterized by a mean rate
/// and a peak-to-mean ratio `b ≥ 1`.
///
/// During ON phases the rate is `b·mean_rate`, during OFF phases
/// `mean_rate/b`. Phase durations are exponential with means `10·b` (ON) and
/// `10·b²` (OFF), so the ON fraction is `1/(b+1)` and the long-run rate is
/// exactly `mean_rate` for every `b`; larger `b` produces longer bursts.
/// `b = 1` degenerates to a plain Poisson process at `mean_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffAttacker {
    pub mean_rate: f64,
    pub burstiness: f64,
    pub on_rate: f64,
    pub off_rate: f64,
    pub mean_on: f64,
    pub mean_off: f64,
}

impl OnOffAttacker {
    pub fn new(mean_rate: f64, burstiness: f64) -> Result<Self, SimError> {
        if !(mean_rate >= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "mean_rate must be nonnegative, got {mean_rate}"
            )));
        }
        if !(burstiness >= 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "burstiness must be ≥ 1, got {burstiness}"
            )));
        }
        Ok(Self {
            mean_rate,
            burstiness,
            on_rate: burstiness * mean_rate,
            off_rate: mean_rate / burstiness,
            mean_on: 10.0 * burstiness,
            mean_off: 10.0 * burstiness * burstiness,
        })
    }

    /// Generate arrival epochs on `[0, horizon)`.
    ///
    /// Phase boundaries are resampled exponentially; within a phase the
    /// arrivals are Poisson at the phase rate, restarted at each boundary
    /// (exact for piecewise-Poisson processes by memorylessness). The first
    /// phase is ON or OFF with the stationary probability.
    pub fn arrivals(&self, horizon: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        if self.mean_rate == 0.0 || horizon <= 0.0 {
            return out;
        }
        let on_fraction = self.mean_on / (self.mean_on + self.mean_off);
        let mut on = rng.random::<f64>() < on_fraction;
        let mut t = 0.0;
        while t < horizon {
            let (rate, mean_len) = if on {
                (self.on_rate, self.mean_on)
            } else {
                (self.off_rate, self.mean_off)
            };
            let phase_end = (t + mean_len * rng.sample::<f64, _>(Exp1)).min(horizon);
            if rate > 0.0 {
                let mut s = t;
                loop {
                    s += rng.sample::<f64, _>(Exp1) / rate;
                    if s >= phase_end {
                        break;
                    }
                    out.push(s);
                }
            }
            t = phase_end;
            on = !on;
        }
        out
    }
}
