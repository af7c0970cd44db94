use serde::{Deserialize, Serialize};
use sway_core::encoding::EncodingManifest;
use sway_core::Version;

use crate::canonical::to_canonical_vec;
use crate::svg::{sha256_hex, SvgDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub role: Role,
    pub text: String,
    #[serde(default)]
    pub referred_versions: Vec<u64>,
    #[serde(default)]
    pub produced_version: Option<u64>,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

/// One reference visualization with its conversation and versions.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub id: String,
    pub document: SvgDocument,
    pub styles: Option<String>,
    pub manifest: Option<EncodingManifest>,
    pub history: Vec<HistoryEntry>,
    pub versions: Vec<Version>,
    pub active_version: Option<u64>,
}

impl Session {
    pub fn svg_text(&self) -> &str {
        self.document.text()
    }

    pub fn version(&self, id: u64) -> Option<&Version> {
        self.versions.iter().find(|v| v.id == id)
    }

    pub fn version_mut(&mut self, id: u64) -> Option<&mut Version> {
        self.versions.iter_mut().find(|v| v.id == id)
    }

    pub fn next_version_id(&self) -> u64 {
        self.versions.last().map_or(1, |v| v.id + 1)
    }
}

/// Content digest of a version's canonical serialization.
pub fn version_digest(version: &Version) -> String {
    sha256_hex(&to_canonical_vec(version).expect("versions serialize"))
}
