//! Reference signals γ(t) and θ(t) available to leader agents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("signal parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("ramp end time {end} precedes start time {start}")]
    RampOrder { start: f64, end: f64 },
    #[error("signal value {value} at t = {t} exceeds declared bound {bound}")]
    ValueBound { t: f64, value: f64, bound: f64 },
    #[error("signal rate {rate} at t = {t} exceeds declared rate bound {bound}")]
    RateBound { t: f64, rate: f64, bound: f64 },
}

/// Shape of a reference signal.
///
/// Frequencies are angular (rad per time unit). Ramps saturate at `end` so
/// that every shape is bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalShape {
    Constant {
        value: f64,
    },
    Step {
        before: f64,
        after: f64,
        at: f64,
    },
    Ramp {
        start_value: f64,
        slope: f64,
        start: f64,
        end: f64,
    },
    Sinusoid {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

/// A reference signal together with its optional declared bounds
/// (|value| ≤ `bound`, |rate| ≤ `rate_bound`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSignal {
    #[serde(flatten)]
    pub shape: SignalShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bound: Option<f64>,
}

impl From<SignalShape> for ParameterSignal {
    fn from(shape: SignalShape) -> Self {
        ParameterSignal {
            shape,
            bound: None,
            rate_bound: None,
        }
    }
}

impl ParameterSignal {
    pub fn constant(value: f64) -> Self {
        SignalShape::Constant { value }.into()
    }

    pub fn sinusoid(offset: f64, amplitude: f64, frequency: f64) -> Self {
        SignalShape::Sinusoid {
            offset,
            amplitude,
            frequency,
            phase: 0.0,
        }
        .into()
    }

    pub fn step(before: f64, after: f64, at: f64) -> Self {
        SignalShape::Step { before, after, at }.into()
    }

    pub fn ramp(start_value: f64, slope: f64, start: f64, end: f64) -> Self {
        SignalShape::Ramp {
            start_value,
            slope,
            start,
            end,
        }
        .into()
    }

    pub fn with_bounds(mut self, bound: Option<f64>, rate_bound: Option<f64>) -> Self {
        self.bound = bound;
        self.rate_bound = rate_bound;
        self
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.shape {
            SignalShape::Constant { value } => value,
            // right-continuous: the new value applies from `at` onward
            SignalShape::Step { before, after, at } => {
                if t < at {
                    before
                } else {
                    after
                }
            }
            SignalShape::Ramp {
                start_value,
                slope,
                start,
                end,
            } => start_value + slope * (t.clamp(start, end) - start),
            SignalShape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * (frequency * t + phase).sin(),
        }
    }

    /// Time derivative where it exists; zero on flat pieces and at jumps.
    pub fn rate(&self, t: f64) -> f64 {
        match self.shape {
            SignalShape::Constant { .. } | SignalShape::Step { .. } => 0.0,
            SignalShape::Ramp {
                slope, start, end, ..
            } => {
                if t >= start && t < end {
                    slope
                } else {
                    0.0
                }
            }
            SignalShape::Sinusoid {
                amplitude,
                frequency,
                phase,
                ..
            } => amplitude * frequency * (frequency * t + phase).cos(),
        }
    }

    /// True when the signal cannot change over time.
    pub fn is_constant(&self) -> bool {
        match self.shape {
            SignalShape::Constant { .. } => true,
            SignalShape::Step { before, after, .. } => before == after,
            SignalShape::Ramp {
                slope, start, end, ..
            } => slope == 0.0 || start == end,
            SignalShape::Sinusoid {
                amplitude,
                frequency,
                ..
            } => amplitude == 0.0 || frequency == 0.0,
        }
    }

    /// Times at which the value jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self.shape {
            SignalShape::Step { before, after, at } if before != after => vec![at],
            _ => Vec::new(),
        }
    }

    /// Checks parameters are finite and, when bounds are declared, that value
    /// and rate respect them on a uniform grid over `[0, horizon]`.
    pub fn validate(&self, horizon: f64, spacing: f64) -> Result<(), SignalError> {
        let params: Vec<(&'static str, f64)> = match self.shape {
            SignalShape::Constant { value } => vec![("value", value)],
            SignalShape::Step { before, after, at } => {
                vec![("before", before), ("after", after), ("at", at)]
            }
            SignalShape::Ramp {
                start_value,
                slope,
                start,
                end,
            } => {
                if end < start {
                    return Err(SignalError::RampOrder { start, end });
                }
                vec![
                    ("start_value", start_value),
                    ("slope", slope),
                    ("start", start),
                    ("end", end),
                ]
            }
            SignalShape::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => vec![
                ("offset", offset),
                ("amplitude", amplitude),
                ("frequency", frequency),
                ("phase", phase),
            ],
        };
        if let Some((name, _)) = params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SignalError::NonFinite(name));
        }
        if self.bound.is_none() && self.rate_bound.is_none() {
            return Ok(());
        }
        let samples = (horizon / spacing).ceil().max(1.0) as usize;
        for k in 0..=samples {
            let t = (k as f64 * spacing).min(horizon);
            if let Some(bound) = self.bound {
                let value = self.value(t);
                if value.abs() > bound {
                    return Err(SignalError::ValueBound { t, value, bound });
                }
            }
            if let Some(bound) = self.rate_bound {
                let rate = self.rate(t);
                if rate.abs() > bound {
                    return Err(SignalError::RateBound { t, rate, bound });
                }
            }
        }
        Ok(())
    }
}
