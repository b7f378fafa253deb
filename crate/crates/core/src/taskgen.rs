//! ISO 9241-9 multidirectional ring task.

use serde::{Deserialize, Serialize};

use crate::prediction::Point;

pub const DEFAULT_TARGETS: u32 = 9;
pub const DEFAULT_TRIALS: usize = 22;
pub const DEFAULT_WIDTH_PX: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("amplitude and width must be positive (A={amplitude}, W={width})")]
    NonPositive { amplitude: f64, width: f64 },
    #[error("index of difficulty must be positive, got {0}")]
    NonPositiveId(f64),
    #[error("amplitude {amplitude} px does not exceed width {width} px")]
    AmplitudeNotAboveWidth { amplitude: f64, width: f64 },
    #[error("ring needs an odd number of targets >= 3, got {0}")]
    BadTargetCount(u32),
}

/// Shannon index of difficulty, log2(A/W + 1), in bits.
pub fn index_of_difficulty(amplitude: f64, width: f64) -> Result<f64, TaskError> {
    if !(amplitude > 0.0 && width > 0.0) {
        return Err(TaskError::NonPositive { amplitude, width });
    }
    Ok((amplitude / width + 1.0).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingLayout {
    pub n_targets: u32,
    /// Diameter of the ring, i.e. distance between opposite targets.
    pub amplitude_px: f64,
    pub width_px: f64,
    pub center: Point,
}

impl RingLayout {
    pub fn new(n_targets: u32, amplitude_px: f64, width_px: f64) -> Result<Self, TaskError> {
        if n_targets < 3 || n_targets.is_multiple_of(2) {
            return Err(TaskError::BadTargetCount(n_targets));
        }
        if !(amplitude_px > 0.0 && width_px > 0.0) {
            return Err(TaskError::NonPositive {
                amplitude: amplitude_px,
                width: width_px,
            });
        }
        if amplitude_px <= width_px {
            return Err(TaskError::AmplitudeNotAboveWidth {
                amplitude: amplitude_px,
                width: width_px,
            });
        }
        Ok(RingLayout {
            n_targets,
            amplitude_px,
            width_px,
            center: Point::new(amplitude_px / 2.0 + width_px, amplitude_px / 2.0 + width_px),
        })
    }

    pub fn id_bits(&self) -> f64 {
        (self.amplitude_px / self.width_px + 1.0).log2()
    }

    /// Target `i` sits at angle 2πi/n, starting at twelve o'clock.
    pub fn position(&self, i: u32) -> Point {
        let angle = std::f64::consts::TAU * f64::from(i % self.n_targets)
            / f64::from(self.n_targets)
            - std::f64::consts::FRAC_PI_2;
        let r = self.amplitude_px / 2.0;
        Point::new(
            self.center.x + r * angle.cos(),
            self.center.y + r * angle.sin(),
        )
    }

    /// Index offset between consecutive trials.
    pub fn stride(&self) -> u32 {
        self.n_targets.div_ceil(2)
    }
}

/// Ring whose nominal ID equals `id_bits` for targets of width `width_px`.
pub fn layout_for_id(id_bits: f64, width_px: f64, n_targets: u32) -> Result<RingLayout, TaskError> {
    // Written this way round so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(id_bits > 0.0) {
        return Err(TaskError::NonPositiveId(id_bits));
    }
    let amplitude = width_px * (id_bits.exp2() - 1.0);
    RingLayout::new(n_targets, amplitude, width_px)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub layout: RingLayout,
    pub order: Vec<u32>,
}

impl TrialPlan {
    pub fn n_trials(&self) -> usize {
        self.order.len()
    }

    /// Where the pointer rests before trial 0: the target that would have
    /// preceded it in the alternation.
    pub fn start_index(&self) -> u32 {
        let n = self.layout.n_targets;
        (n - self.layout.stride() % n) % n
    }

    /// Pointer distance covered by trial `j`.
    pub fn travel(&self, j: usize) -> f64 {
        let from = if j == 0 {
            self.start_index()
        } else {
            self.order[j - 1]
        };
        self.layout
            .position(from)
            .distance(self.layout.position(self.order[j]))
    }
}

/// Standard alternation: order[j] = j·⌈n/2⌉ mod n.
pub fn trial_sequence(layout: RingLayout, n_trials: usize) -> TrialPlan {
    let n = u64::from(layout.n_targets);
    let stride = u64::from(layout.stride());
    let order = (0..n_trials as u64)
        .map(|j| ((j * stride) % n) as u32)
        .collect();
    TrialPlan { layout, order }
}
