//! Recording, rating and workload-class types shared by every stage.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Channel layout of the 14-electrode headset used for the reference dataset.
pub const STEW_CHANNELS: [&str; 14] =
    ["AF3", "F7", "F3", "FC5", "T7", "P7", "O1", "O2", "P8", "T8", "FC6", "F4", "F8", "AF4"];

pub const STEW_SAMPLING_RATE_HZ: f64 = 128.0;
pub const STEW_DURATION_S: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Rest,
    Simkap,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Rest, Condition::Simkap];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Rest => "rest",
            Condition::Simkap => "simkap",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rest" | "lo" => Ok(Condition::Rest),
            "simkap" | "hi" => Ok(Condition::Simkap),
            other => Err(Error::InvalidArgument(alloc::format!("unknown condition `{other}`"))),
        }
    }
}

/// Binary mental-workload class. `SuperOptimal` is the positive class for
/// every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadClass {
    Suboptimal,
    SuperOptimal,
}

impl WorkloadClass {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadClass::Suboptimal => "suboptimal",
            WorkloadClass::SuperOptimal => "superoptimal",
        }
    }

    pub fn is_positive(self) -> bool {
        self == WorkloadClass::SuperOptimal
    }

    pub fn flipped(self) -> Self {
        match self {
            WorkloadClass::Suboptimal => WorkloadClass::SuperOptimal,
            WorkloadClass::SuperOptimal => WorkloadClass::Suboptimal,
        }
    }
}

impl fmt::Display for WorkloadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkloadClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "suboptimal" | "0" => Ok(WorkloadClass::Suboptimal),
            "superoptimal" | "1" => Ok(WorkloadClass::SuperOptimal),
            other => Err(Error::InvalidArgument(alloc::format!("unknown workload class `{other}`"))),
        }
    }
}

/// Self-reported workload on the 1..=9 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub subject_id: u32,
    pub condition: Condition,
    pub score: u8,
}

impl Rating {
    pub fn new(subject_id: u32, condition: Condition, score: i64) -> Result<Self> {
        if !(1..=9).contains(&score) {
            return Err(Error::RatingOutOfRange(score));
        }
        Ok(Self { subject_id, condition, score: score as u8 })
    }

    pub fn class(&self) -> Option<WorkloadClass> {
        map_rating_to_class(i64::from(self.score)).ok().flatten()
    }
}

/// Scores 1-4 are suboptimal, 6-9 super-optimal; the neutral 5 is discarded.
pub fn map_rating_to_class(score: i64) -> Result<Option<WorkloadClass>> {
    match score {
        1..=4 => Ok(Some(WorkloadClass::Suboptimal)),
        5 => Ok(None),
        6..=9 => Ok(Some(WorkloadClass::SuperOptimal)),
        other => Err(Error::RatingOutOfRange(other)),
    }
}

/// One subject under one condition: `samples` is `n_samples × n_channels`
/// in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub subject_id: u32,
    pub condition: Condition,
    pub samples: Matrix,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
}

impl EegRecording {
    pub fn new(
        subject_id: u32,
        condition: Condition,
        samples: Matrix,
        sampling_rate_hz: f64,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        if !(sampling_rate_hz > 0.0) || !sampling_rate_hz.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        if samples.cols() != channel_names.len() {
            return Err(Error::Shape(alloc::format!(
                "{} columns but {} channel names",
                samples.cols(),
                channel_names.len()
            )));
        }
        for (i, name) in channel_names.iter().enumerate() {
            if channel_names[..i].contains(name) {
                return Err(Error::InvalidArgument(alloc::format!("duplicate channel `{name}`")));
            }
        }
        if !samples.is_finite() {
            return Err(Error::InvalidArgument("recording contains non-finite samples".into()));
        }
        Ok(Self { subject_id, condition, samples, sampling_rate_hz, channel_names })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.rows()
    }

    pub fn n_channels(&self) -> usize {
        self.samples.cols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sampling_rate_hz
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channel_names
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingChannel(name.into()))
    }

    pub fn channel(&self, j: usize) -> Vec<f64> {
        self.samples.column(j)
    }

    /// Copy of this recording with different sample values.
    pub fn with_samples(&self, samples: Matrix) -> Self {
        Self { samples, ..self.clone() }
    }
}
