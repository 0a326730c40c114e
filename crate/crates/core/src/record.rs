//! Per-shot decode records, the row type behind every table.

use serde::{Deserialize, Serialize};

use crate::bp::Schedule;
use crate::osd::DecodePath;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderVariant {
    /// Min-sum BP with OSD-0 fallback.
    BpOsd,
    /// Relay-BP with OSD-0 fallback.
    RelayOsd,
}

impl DecoderVariant {
    pub fn name(self) -> &'static str {
        match self {
            DecoderVariant::BpOsd => "bp_osd",
            DecoderVariant::RelayOsd => "relay_osd",
        }
    }
}

/// Everything recorded about one decoded shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeRecord {
    pub shot: u64,
    pub decoder: DecoderVariant,
    pub schedule: Schedule,
    pub defect_count: usize,
    pub w: usize,
    pub mod_w_class: usize,
    /// Largest connected defect cluster; 0 for a trivial syndrome.
    pub max_component: usize,
    pub position_variance: f64,
    pub path: DecodePath,
    /// BP (or Relay-BP) reproduced the syndrome.
    pub converged: bool,
    pub iterations: usize,
    /// The final correction, after any OSD fallback, reproduces the syndrome.
    pub valid: bool,
    pub data_weight: usize,
    pub meas_count: usize,
}

impl DecodeRecord {
    pub fn is_trivial(&self) -> bool {
        self.defect_count == 0
    }

    pub fn mod_w_zero(&self) -> bool {
        self.mod_w_class == 0
    }
}
