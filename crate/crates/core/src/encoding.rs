//! Encoding manifest and the rule table that flags animations touching a
//! visual channel that already carries data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::clip::{ClipSpec, Property};
use crate::document::{Selector, VectorDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "kebab-case"))]
pub enum Channel {
    FillColor,
    StrokeColor,
    Size,
    XPosition,
    YPosition,
    Opacity,
    Shape,
}

impl Channel {
    pub const ALL: [Channel; 7] =
        [Channel::FillColor, Channel::StrokeColor, Channel::Size, Channel::XPosition, Channel::YPosition, Channel::Opacity, Channel::Shape];

    pub fn name(self) -> &'static str {
        match self {
            Channel::FillColor => "fill-color",
            Channel::StrokeColor => "stroke-color",
            Channel::Size => "size",
            Channel::XPosition => "x-position",
            Channel::YPosition => "y-position",
            Channel::Opacity => "opacity",
            Channel::Shape => "shape",
        }
    }

    pub fn from_name(name: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Noun used in warning text.
    pub fn noun(self) -> &'static str {
        match self {
            Channel::FillColor => "Color",
            Channel::StrokeColor => "Stroke color",
            Channel::Size => "Size",
            Channel::XPosition => "Horizontal position",
            Channel::YPosition => "Vertical position",
            Channel::Opacity => "Opacity",
            Channel::Shape => "Shape",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether animating `property` interferes with data encoded in `channel`.
pub fn conflicts(property: Property, channel: Channel) -> bool {
    use Channel as C;
    use Property as P;
    match property {
        P::FillColor | P::StrokeColor => matches!(channel, C::FillColor | C::StrokeColor),
        P::Scale => channel == C::Size,
        P::TranslateX => channel == C::XPosition,
        P::TranslateY => channel == C::YPosition,
        P::Opacity => channel == C::Opacity,
        P::Rotate | P::StrokeWidth | P::FilterBlur => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ManifestEntry {
    pub selector: Selector,
    pub channel: Channel,
    pub meaning: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EncodingManifest {
    pub entries: Vec<ManifestEntry>,
}

impl EncodingManifest {
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|e| !e.selector.is_empty())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "kebab-case"))]
pub enum Severity {
    #[default]
    Advisory,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Warning {
    pub channel: Channel,
    pub selector: Selector,
    pub clip_title: String,
    pub rationale: String,
    pub severity: Severity,
}

fn rationale(channel: Channel, meaning: &str) -> String {
    let meaning = meaning.trim();
    let meaning = if meaning.is_empty() { "data" } else { meaning };
    format!("{} has already encoded {}. Please make sure that it does not confuse the audience.", channel.noun(), meaning)
}

/// One warning per (clip, manifest entry) pair whose groups are related by
/// `overlap` and where some animated property conflicts with the entry's channel.
pub fn check_encoding_conflict_with<F>(manifest: &EncodingManifest, clips: &[ClipSpec], overlap: F) -> Vec<Warning>
where
    F: Fn(&Selector, &Selector) -> bool,
{
    let mut out = Vec::new();
    for clip in clips {
        for entry in &manifest.entries {
            let hit = clip.tracks.iter().any(|t| conflicts(t.property, entry.channel));
            if hit && overlap(&clip.selector, &entry.selector) {
                out.push(Warning {
                    channel: entry.channel,
                    selector: entry.selector.clone(),
                    clip_title: clip.title.clone(),
                    rationale: rationale(entry.channel, &entry.meaning),
                    severity: Severity::Advisory,
                });
            }
        }
    }
    out
}

/// Rule-table check where groups intersect when they name the same class.
pub fn check_encoding_conflict(manifest: &EncodingManifest, clips: &[ClipSpec]) -> Vec<Warning> {
    check_encoding_conflict_with(manifest, clips, |a, b| a.class_name() == b.class_name())
}

/// Rule-table check where groups intersect when they share elements or one
/// contains the other in `doc` (animating a parent affects its children).
pub fn check_encoding_conflict_in(doc: &VectorDocument, manifest: &EncodingManifest, clips: &[ClipSpec]) -> Vec<Warning> {
    check_encoding_conflict_with(manifest, clips, |a, b| a.class_name() == b.class_name() || doc.groups_overlap(a, b))
}
