//! Element-wise animation clips: keyframe tracks over a closed property set,
//! easing, and interpolation at normalized time.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coordination::CoordinationScheme;
use crate::document::{Selector, VectorDocument};
use crate::Millis;

/// Animatable properties. Transform properties pivot on the element's
/// bounding-box center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Property {
    #[cfg_attr(feature = "serde", serde(rename = "translateX"))]
    TranslateX,
    #[cfg_attr(feature = "serde", serde(rename = "translateY"))]
    TranslateY,
    #[cfg_attr(feature = "serde", serde(rename = "rotate"))]
    Rotate,
    #[cfg_attr(feature = "serde", serde(rename = "scale"))]
    Scale,
    #[cfg_attr(feature = "serde", serde(rename = "opacity"))]
    Opacity,
    #[cfg_attr(feature = "serde", serde(rename = "fill-color"))]
    FillColor,
    #[cfg_attr(feature = "serde", serde(rename = "stroke-color"))]
    StrokeColor,
    #[cfg_attr(feature = "serde", serde(rename = "stroke-width"))]
    StrokeWidth,
    #[cfg_attr(feature = "serde", serde(rename = "filter-blur"))]
    FilterBlur,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    Color,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::TranslateX,
        Property::TranslateY,
        Property::Rotate,
        Property::Scale,
        Property::Opacity,
        Property::FillColor,
        Property::StrokeColor,
        Property::StrokeWidth,
        Property::FilterBlur,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::TranslateX => "translateX",
            Property::TranslateY => "translateY",
            Property::Rotate => "rotate",
            Property::Scale => "scale",
            Property::Opacity => "opacity",
            Property::FillColor => "fill-color",
            Property::StrokeColor => "stroke-color",
            Property::StrokeWidth => "stroke-width",
            Property::FilterBlur => "filter-blur",
        }
    }

    pub fn from_name(name: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn kind(self) -> ValueKind {
        match self {
            Property::FillColor | Property::StrokeColor => ValueKind::Color,
            _ => ValueKind::Scalar,
        }
    }

    pub fn is_transform(self) -> bool {
        matches!(self, Property::TranslateX | Property::TranslateY | Property::Rotate | Property::Scale)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 8-bit sRGB color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }

    /// Parses `#rgb` or `#rrggbb`.
    pub fn from_hex(text: &str) -> Option<Rgb> {
        let hex = text.trim().strip_prefix('#')?;
        let digit = |c: u8| (c as char).to_digit(16).map(|d| d as u8);
        let bytes = hex.as_bytes();
        match bytes.len() {
            3 => {
                let (r, g, b) = (digit(bytes[0])?, digit(bytes[1])?, digit(bytes[2])?);
                Some(Rgb::new(r * 17, g * 17, b * 17))
            }
            6 => {
                let pair = |i: usize| Some(digit(bytes[i])? * 16 + digit(bytes[i + 1])?);
                Some(Rgb::new(pair(0)?, pair(2)?, pair(4)?))
            }
            _ => None,
        }
    }

    pub fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

#[cfg(feature = "serde")]
impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Rgb::from_hex(&text).ok_or_else(|| serde::de::Error::custom(alloc::format!("invalid color {text:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(untagged))]
pub enum PropertyValue {
    Scalar(f64),
    Color(Rgb),
}

impl PropertyValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            PropertyValue::Scalar(_) => ValueKind::Scalar,
            PropertyValue::Color(_) => ValueKind::Color,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            PropertyValue::Scalar(v) => Some(*v),
            PropertyValue::Color(_) => None,
        }
    }

    pub fn as_color(&self) -> Option<Rgb> {
        match self {
            PropertyValue::Color(c) => Some(*c),
            PropertyValue::Scalar(_) => None,
        }
    }

    /// Blends towards `other` by `t`. Colors blend per sRGB channel and
    /// round half up. Mismatched kinds hold `self`.
    pub fn lerp(&self, other: &PropertyValue, t: f64) -> PropertyValue {
        match (self, other) {
            (PropertyValue::Scalar(a), PropertyValue::Scalar(b)) => PropertyValue::Scalar(a + (b - a) * t),
            (PropertyValue::Color(a), PropertyValue::Color(b)) => {
                let mix = |x: u8, y: u8| {
                    let v = x as f64 + (y as f64 - x as f64) * t;
                    libm::floor(v + 0.5).clamp(0.0, 255.0) as u8
                };
                PropertyValue::Color(Rgb::new(mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)))
            }
            _ => *self,
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Scalar(v) => write!(f, "{v}"),
            PropertyValue::Color(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown easing {0:?}")]
pub struct UnknownEasing(pub String);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Easing {
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "linear"))]
    Linear,
    #[cfg_attr(feature = "serde", serde(rename = "ease-in-quad"))]
    EaseInQuad,
    #[cfg_attr(feature = "serde", serde(rename = "ease-out-quad"))]
    EaseOutQuad,
    #[cfg_attr(feature = "serde", serde(rename = "ease-in-out-cubic"))]
    EaseInOutCubic,
    #[cfg_attr(feature = "serde", serde(rename = "sine-in-out"))]
    SineInOut,
}

impl Easing {
    pub const ALL: [Easing; 5] = [Easing::Linear, Easing::EaseInQuad, Easing::EaseOutQuad, Easing::EaseInOutCubic, Easing::SineInOut];

    pub fn name(self) -> &'static str {
        match self {
            Easing::Linear => "linear",
            Easing::EaseInQuad => "ease-in-quad",
            Easing::EaseOutQuad => "ease-out-quad",
            Easing::EaseInOutCubic => "ease-in-out-cubic",
            Easing::SineInOut => "sine-in-out",
        }
    }

    pub fn from_name(name: &str) -> Result<Easing, UnknownEasing> {
        Easing::ALL.into_iter().find(|e| e.name() == name).ok_or_else(|| UnknownEasing(String::from(name)))
    }

    /// Maps normalized segment progress to eased progress; `u` is clamped
    /// to `[0, 1]` and the endpoints are fixed.
    pub fn apply(self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = match self {
            Easing::Linear => u,
            Easing::EaseInQuad => u * u,
            Easing::EaseOutQuad => u * (2.0 - u),
            Easing::EaseInOutCubic => {
                if u < 0.5 {
                    4.0 * u * u * u
                } else {
                    let k = -2.0 * u + 2.0;
                    1.0 - k * k * k / 2.0
                }
            }
            Easing::SineInOut => -(libm::cos(core::f64::consts::PI * u) - 1.0) / 2.0,
        };
        v.clamp(0.0, 1.0)
    }
}

pub fn apply_easing(name: &str, u: f64) -> Result<f64, UnknownEasing> {
    Ok(Easing::from_name(name)?.apply(u))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Keyframe {
    pub offset: f64,
    pub value: PropertyValue,
    /// Easing of the segment that starts at this keyframe.
    #[cfg_attr(feature = "serde", serde(rename = "easing", default))]
    pub easing_out: Easing,
}

impl Keyframe {
    pub fn new(offset: f64, value: PropertyValue) -> Self {
        Keyframe { offset, value, easing_out: Easing::Linear }
    }

    pub fn eased(mut self, easing: Easing) -> Self {
        self.easing_out = easing;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PropertyTrack {
    pub property: Property,
    pub keyframes: Vec<Keyframe>,
}

impl PropertyTrack {
    pub fn new(property: Property, keyframes: Vec<Keyframe>) -> Self {
        PropertyTrack { property, keyframes }
    }

    /// Two-keyframe linear track.
    pub fn between(property: Property, from: PropertyValue, to: PropertyValue) -> Self {
        PropertyTrack::new(property, alloc::vec![Keyframe::new(0.0, from), Keyframe::new(1.0, to)])
    }

    pub fn first_value(&self) -> Option<PropertyValue> {
        self.keyframes.first().map(|k| k.value)
    }

    pub fn last_value(&self) -> Option<PropertyValue> {
        self.keyframes.last().map(|k| k.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ClipSpec {
    pub selector: Selector,
    pub title: String,
    pub description: String,
    #[cfg_attr(feature = "serde", serde(rename = "loop"))]
    pub looping: bool,
    pub tracks: Vec<PropertyTrack>,
}

impl ClipSpec {
    pub fn new(selector: impl Into<Selector>, title: impl Into<String>) -> Self {
        ClipSpec { selector: selector.into(), title: title.into(), description: String::new(), looping: false, tracks: Vec::new() }
    }

    pub fn with_track(mut self, track: PropertyTrack) -> Self {
        self.tracks.push(track);
        self
    }

    pub fn track(&self, property: Property) -> Option<&PropertyTrack> {
        self.tracks.iter().find(|t| t.property == property)
    }

    /// Property values at clip-local progress `local_u`. Values hold the
    /// first keyframe before the start and the last keyframe after the end;
    /// looping clips wrap past the end instead.
    pub fn value_at(&self, local_u: f64) -> BTreeMap<Property, PropertyValue> {
        let u = if local_u.is_nan() || local_u < 0.0 {
            0.0
        } else if local_u > 1.0 {
            if self.looping {
                local_u - libm::floor(local_u)
            } else {
                1.0
            }
        } else {
            local_u
        };
        self.tracks.iter().filter_map(|t| Some((t.property, interpolate_track(t, u)?))).collect()
    }
}

pub fn clip_value_at(clip: &ClipSpec, local_u: f64) -> BTreeMap<Property, PropertyValue> {
    clip.value_at(local_u)
}

/// Track value at `u ∈ [0, 1]`; `None` only for a track without keyframes.
pub fn interpolate_track(track: &PropertyTrack, u: f64) -> Option<PropertyValue> {
    let keys = &track.keyframes;
    let first = keys.first()?;
    let u = u.clamp(0.0, 1.0);
    // Number of keyframes at or before u.
    let after = keys.partition_point(|k| k.offset <= u);
    if after == 0 {
        return Some(first.value);
    }
    let k0 = &keys[after - 1];
    if k0.offset == u || after == keys.len() {
        return Some(k0.value);
    }
    let k1 = &keys[after];
    let span = k1.offset - k0.offset;
    let local = if span > 0.0 { (u - k0.offset) / span } else { 1.0 };
    Some(k0.value.lerp(&k1.value, k0.easing_out.apply(local)))
}

/// A clip plus its group-level timing and coordination.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GroupClip {
    pub clip: ClipSpec,
    pub delay: Millis,
    pub duration: Millis,
    pub offset: Millis,
    pub coordination: CoordinationScheme,
}

impl GroupClip {
    pub const DEFAULT_DELAY: Millis = 0.0;
    pub const DEFAULT_DURATION: Millis = 1000.0;
    pub const DEFAULT_OFFSET: Millis = 500.0;

    /// Fresh group clip: no delay, one second, 500 ms offset, ascending
    /// layer order.
    pub fn with_defaults(clip: ClipSpec) -> Self {
        GroupClip {
            clip,
            delay: Self::DEFAULT_DELAY,
            duration: Self::DEFAULT_DURATION,
            offset: Self::DEFAULT_OFFSET,
            coordination: CoordinationScheme::default(),
        }
    }

    pub fn timing_is_valid(&self) -> bool {
        self.delay >= 0.0 && self.duration > 0.0 && self.offset >= 0.0 && self.duration.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Diagnostic {
    #[error("selector {0:?} matches no element")]
    UnknownSelector(String),
    #[error("clip selector is empty")]
    EmptySelector,
    #[error("clip title is empty")]
    EmptyTitle,
    #[error("clip has no tracks")]
    NoTracks,
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
    #[error("property {0} has more than one track")]
    DuplicateTrack(Property),
    #[error("track {0} needs at least two keyframes")]
    TooFewKeyframes(Property),
    #[error("keyframe offsets of {0} are not strictly increasing")]
    NonMonotoneOffsets(Property),
    #[error("keyframes of {0} must start at offset 0 and end at offset 1")]
    OpenEndpoints(Property),
    #[error("keyframe {keyframe} of {property} holds a value of the wrong kind")]
    KindMismatch { property: Property, keyframe: usize },
    #[error("keyframe {keyframe} of {property} is not finite")]
    NonFiniteValue { property: Property, keyframe: usize },
    #[error("keyframe {keyframe} of {property} has color channel {channel} outside 0..=255")]
    ColorOutOfRange { property: Property, keyframe: usize, channel: i64 },
    #[error("unknown easing {0:?}")]
    UnknownEasing(String),
    #[error("malformed clip: {0}")]
    Malformed(String),
}

impl Diagnostic {
    /// Structural problems make a clip unusable; an unmatched selector is
    /// only a property of the current document.
    pub fn is_structural(&self) -> bool {
        !matches!(self, Diagnostic::UnknownSelector(_))
    }
}

/// Structural checks that do not need a document.
pub fn validate_structure(clip: &ClipSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if clip.selector.is_empty() {
        out.push(Diagnostic::EmptySelector);
    }
    if clip.title.trim().is_empty() {
        out.push(Diagnostic::EmptyTitle);
    }
    if clip.tracks.is_empty() {
        out.push(Diagnostic::NoTracks);
    }
    let mut seen: Vec<Property> = Vec::new();
    for track in &clip.tracks {
        let p = track.property;
        if seen.contains(&p) {
            if !out.contains(&Diagnostic::DuplicateTrack(p)) {
                out.push(Diagnostic::DuplicateTrack(p));
            }
        } else {
            seen.push(p);
        }
        let keys = &track.keyframes;
        if keys.len() < 2 {
            out.push(Diagnostic::TooFewKeyframes(p));
        }
        if keys.windows(2).any(|w| !(w[0].offset < w[1].offset)) {
            out.push(Diagnostic::NonMonotoneOffsets(p));
        }
        if let (Some(a), Some(b)) = (keys.first(), keys.last()) {
            if a.offset != 0.0 || b.offset != 1.0 {
                out.push(Diagnostic::OpenEndpoints(p));
            }
        }
        for (i, k) in keys.iter().enumerate() {
            if k.value.kind() != p.kind() {
                out.push(Diagnostic::KindMismatch { property: p, keyframe: i });
            } else if let PropertyValue::Scalar(v) = k.value {
                if !v.is_finite() {
                    out.push(Diagnostic::NonFiniteValue { property: p, keyframe: i });
                }
            }
        }
    }
    out
}

/// All diagnostics for a clip against a document.
pub fn validate_clip(clip: &ClipSpec, doc: &VectorDocument) -> Vec<Diagnostic> {
    let mut out = validate_structure(clip);
    if !clip.selector.is_empty() && doc.select_group(&clip.selector).is_empty() {
        out.insert(0, Diagnostic::UnknownSelector(String::from(clip.selector.as_str())));
    }
    out
}

/// The value a property has when nothing animates it.
pub fn base_value(doc: &VectorDocument, index: usize, property: Property) -> Option<PropertyValue> {
    let scalar = |name: &str, inherited: bool, default: f64| {
        let v =
            doc.presentation(index, name, inherited).and_then(|s| s.trim().trim_end_matches("px").parse::<f64>().ok()).unwrap_or(default);
        Some(PropertyValue::Scalar(v))
    };
    let color = |name: &str| doc.presentation(index, name, true).and_then(Rgb::from_hex).map(PropertyValue::Color);
    doc.element(index).ok()?;
    match property {
        Property::TranslateX | Property::TranslateY | Property::Rotate | Property::FilterBlur => Some(PropertyValue::Scalar(0.0)),
        Property::Scale => Some(PropertyValue::Scalar(1.0)),
        Property::Opacity => scalar("opacity", false, 1.0),
        Property::StrokeWidth => scalar("stroke-width", true, 1.0),
        // SVG's initial fill is black; stroke has no initial color.
        Property::FillColor => match doc.presentation(index, "fill", true) {
            None => Some(PropertyValue::Color(Rgb::new(0, 0, 0))),
            Some(_) => color("fill"),
        },
        Property::StrokeColor => color("stroke"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(v: f64) -> PropertyValue {
        PropertyValue::Scalar(v)
    }

    fn track(property: Property, keys: &[(f64, f64)]) -> PropertyTrack {
        PropertyTrack::new(property, keys.iter().map(|&(o, v)| Keyframe::new(o, s(v))).collect())
    }

    #[test]
    fn easing_examples() {
        assert_eq!(apply_easing("linear", 0.3).unwrap(), 0.3);
        assert_eq!(apply_easing("ease-in-quad", 0.5).unwrap(), 0.25);
        for e in Easing::ALL {
            assert_eq!(e.apply(1.0), 1.0, "{}", e.name());
            assert_eq!(e.apply(0.0), 0.0, "{}", e.name());
        }
        assert_eq!(apply_easing("bounce", 0.5), Err(UnknownEasing("bounce".into())));
    }

    #[test]
    fn easing_is_monotone_on_grid() {
        for e in Easing::ALL {
            let mut prev = 0.0;
            for i in 0..=10_000 {
                let v = e.apply(i as f64 / 10_000.0);
                assert!(v >= prev && (0.0..=1.0).contains(&v), "{} at {i}", e.name());
                prev = v;
            }
        }
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(interpolate_track(&track(Property::Opacity, &[(0.0, 0.0), (1.0, 1.0)]), 0.5), Some(s(0.5)));
        let tri = track(Property::TranslateY, &[(0.0, 0.0), (0.5, 10.0), (1.0, 0.0)]);
        assert_eq!(interpolate_track(&tri, 0.75), Some(s(5.0)));
        let fill = PropertyTrack::between(
            Property::FillColor,
            PropertyValue::Color(Rgb::new(0, 0, 0)),
            PropertyValue::Color(Rgb::new(255, 255, 255)),
        );
        assert_eq!(interpolate_track(&fill, 0.5), Some(PropertyValue::Color(Rgb::from_hex("#808080").unwrap())));
    }

    #[test]
    fn easing_applies_to_outgoing_segment() {
        let t = PropertyTrack::new(Property::Scale, vec![Keyframe::new(0.0, s(0.0)).eased(Easing::EaseInQuad), Keyframe::new(1.0, s(4.0))]);
        assert_eq!(interpolate_track(&t, 0.5), Some(s(1.0)));
    }

    #[test]
    fn clip_fill_modes() {
        let clip = ClipSpec::new(".petal", "Fade").with_track(track(Property::Opacity, &[(0.0, 0.0), (1.0, 1.0)]));
        assert_eq!(clip.value_at(0.0)[&Property::Opacity], s(0.0));
        assert_eq!(clip.value_at(-3.0)[&Property::Opacity], s(0.0));
        assert_eq!(clip.value_at(2.5)[&Property::Opacity], s(1.0));
        let mut looping = clip.clone();
        looping.looping = true;
        // fract(1.25) = 0.25, substituted directly into 0 + (1 - 0)·0.25.
        assert_eq!(clip_value_at(&looping, 1.25)[&Property::Opacity], s(0.25));
        assert_eq!(looping.value_at(1.0)[&Property::Opacity], s(1.0));
    }

    #[test]
    fn structural_diagnostics() {
        let bad = ClipSpec::new(".petal", "Bad").with_track(track(Property::Opacity, &[(0.0, 0.0), (0.5, 1.0), (0.5, 0.0), (1.0, 1.0)]));
        assert_eq!(validate_structure(&bad), vec![Diagnostic::NonMonotoneOffsets(Property::Opacity)]);

        let dup = ClipSpec::new(".petal", "Dup")
            .with_track(track(Property::Opacity, &[(0.0, 0.0), (1.0, 1.0)]))
            .with_track(track(Property::Opacity, &[(0.0, 1.0), (1.0, 0.0)]));
        assert_eq!(validate_structure(&dup), vec![Diagnostic::DuplicateTrack(Property::Opacity)]);

        let wrong_kind = ClipSpec::new("", " ").with_track(PropertyTrack::new(Property::FillColor, vec![Keyframe::new(0.2, s(1.0))]));
        let diags = validate_structure(&wrong_kind);
        assert!(diags.contains(&Diagnostic::EmptySelector));
        assert!(diags.contains(&Diagnostic::EmptyTitle));
        assert!(diags.contains(&Diagnostic::TooFewKeyframes(Property::FillColor)));
        assert!(diags.contains(&Diagnostic::OpenEndpoints(Property::FillColor)));
        assert!(diags.contains(&Diagnostic::KindMismatch { property: Property::FillColor, keyframe: 0 }));
    }

    #[test]
    fn hex_colors() {
        assert_eq!(Rgb::from_hex("#fff"), Some(Rgb::new(255, 255, 255)));
        assert_eq!(Rgb::from_hex("#1a2B3c"), Some(Rgb::new(0x1a, 0x2b, 0x3c)));
        assert_eq!(Rgb::from_hex("red"), None);
        assert_eq!(alloc::format!("{}", Rgb::new(1, 2, 255)), "#0102ff");
    }

    fn arb_track() -> impl proptest::strategy::Strategy<Value = PropertyTrack> {
        use proptest::prelude::*;
        (proptest::collection::vec((0.0f64..1.0, -100.0f64..100.0), 0..6), -100.0f64..100.0, -100.0f64..100.0, 0usize..5).prop_map(
            |(inner, first, last, easing)| {
                let mut offsets: Vec<f64> = inner.iter().map(|x| x.0).filter(|o| *o > 0.0).collect();
                offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut spaced: Vec<f64> = Vec::new();
                for o in offsets {
                    if o - spaced.last().copied().unwrap_or(0.0) >= 1e-3 && 1.0 - o >= 1e-3 {
                        spaced.push(o);
                    }
                }
                let offsets = spaced;
                let mut keys = vec![Keyframe::new(0.0, s(first)).eased(Easing::ALL[easing])];
                for (o, (_, v)) in offsets.iter().zip(&inner) {
                    keys.push(Keyframe::new(*o, s(*v)).eased(Easing::ALL[(easing + 1) % 5]));
                }
                keys.push(Keyframe::new(1.0, s(last)));
                PropertyTrack::new(Property::TranslateX, keys)
            },
        )
    }

    proptest::proptest! {
        #[test]
        fn hits_keyframes_exactly(t in arb_track()) {
            for k in &t.keyframes {
                proptest::prop_assert_eq!(interpolate_track(&t, k.offset), Some(k.value));
            }
        }

        #[test]
        fn continuous_in_u(t in arb_track(), u in 0.0f64..1.0) {
            let eps = 1e-12;
            let a = interpolate_track(&t, u).unwrap().as_scalar().unwrap();
            let b = interpolate_track(&t, (u + eps).min(1.0)).unwrap().as_scalar().unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-4);
        }

        #[test]
        fn constant_track_is_identity(v in -1e3f64..1e3, n in 2usize..6, u in 0.0f64..=1.0) {
            let keys = (0..n).map(|i| Keyframe::new(i as f64 / (n - 1) as f64, s(v)).eased(Easing::ALL[i % 5])).collect();
            let t = PropertyTrack::new(Property::Opacity, keys);
            proptest::prop_assert_eq!(interpolate_track(&t, u), Some(s(v)));
        }
    }
}
