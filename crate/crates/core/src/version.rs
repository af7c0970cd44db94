//! A version: one generated set of group clips, kept for reference and revisit.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::clip::{ClipSpec, GroupClip};
use crate::composition::Timeline;
use crate::encoding::Warning;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Version {
    pub id: u64,
    pub clips: Vec<GroupClip>,
    /// Index of the history entry that produced this version.
    pub origin_message: usize,
    pub base_versions: Vec<u64>,
    pub warnings: Vec<Warning>,
}

impl Version {
    /// New version with default timing and coordination on every clip.
    pub fn from_clips(id: u64, clips: Vec<ClipSpec>, origin_message: usize, base_versions: Vec<u64>) -> Self {
        Version {
            id,
            clips: clips.into_iter().map(GroupClip::with_defaults).collect(),
            origin_message,
            base_versions,
            warnings: Vec::new(),
        }
    }

    pub fn timeline(&self) -> Timeline {
        Timeline::new(self.id, self.clips.clone())
    }
}
