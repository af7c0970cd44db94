//! Portable animation programs: export, re-import, and runtime artifacts.

mod bake;
mod script;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sway_core::coordination::{CoordinationError, CoordinationScheme, SchemeError};
use sway_core::{GroupClip, Point, Rect, Timeline, VectorDocument};

pub use bake::{bake_css, BakedOutput, ELEMENT_ATTR};
pub use script::{embedded_program, emit_runtime_script, PROGRAM_BEGIN, PROGRAM_END};

use crate::canonical::to_canonical_string;
use crate::clip_json::clip_from_value;

pub const FORMAT_VERSION: &str = "1.0.0";
const SUPPORTED_MAJOR: u64 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExportError {
    #[error("timeline has no tracks")]
    EmptyTimeline,
    #[error("track {track}: {error}")]
    InvalidScheme { track: usize, error: SchemeError },
    #[error("unsupported program format version {0:?}")]
    UnsupportedVersion(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("cannot bake: {}", .0.join("; "))]
    UnbakeableFeature(Vec<String>),
    #[error(transparent)]
    Coordination(#[from] CoordinationError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub session_id: String,
    pub version_id: u64,
    pub source_digest: String,
}

/// A composed animation with spatial parameters stored relative to the
/// viewBox. Weights are not stored; runtimes derive them from the live
/// document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnimationProgram {
    pub format_version: String,
    pub viewbox_ref: Rect,
    pub tracks: Vec<GroupClip>,
    pub provenance: Provenance,
}

impl AnimationProgram {
    pub fn to_json(&self) -> String {
        to_canonical_string(self).expect("programs serialize")
    }

    pub fn timeline(&self) -> Timeline {
        Timeline::new(self.provenance.version_id, self.tracks.clone())
    }
}

/// Maps a scheme whose spatial parameters are in user units to
/// viewBox-relative coordinates.
pub fn relative_scheme(view_box: Rect, user_units: &CoordinationScheme) -> CoordinationScheme {
    let rel = |p: &Point| view_box.to_relative(*p);
    match user_units {
        CoordinationScheme::LayoutRadius { center } => CoordinationScheme::LayoutRadius { center: rel(center) },
        CoordinationScheme::LayoutProjection { start, end } => CoordinationScheme::LayoutProjection { start: rel(start), end: rel(end) },
        CoordinationScheme::LayoutSketch { polyline } => CoordinationScheme::LayoutSketch { polyline: polyline.iter().map(rel).collect() },
        other => other.clone(),
    }
}

pub fn export_program(doc: &VectorDocument, timeline: &Timeline, session_id: &str) -> Result<AnimationProgram, ExportError> {
    if timeline.tracks.is_empty() {
        return Err(ExportError::EmptyTimeline);
    }
    for (track, t) in timeline.tracks.iter().enumerate() {
        t.coordination.validate().map_err(|error| ExportError::InvalidScheme { track, error })?;
    }
    Ok(AnimationProgram {
        format_version: FORMAT_VERSION.to_owned(),
        viewbox_ref: doc.view_box(),
        tracks: timeline.tracks.clone(),
        provenance: Provenance {
            session_id: session_id.to_owned(),
            version_id: timeline.version_id,
            source_digest: doc.source_digest().to_owned(),
        },
    })
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> ExportError {
    ExportError::SchemaViolation { path: path.into(), message: message.into() }
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, ExportError> {
    obj.get(key).ok_or_else(|| violation(format!("{path}{key}"), "missing field"))
}

fn number(obj: &Map<String, Value>, path: &str, key: &str, ok: fn(f64) -> bool, rule: &str) -> Result<f64, ExportError> {
    let v = field(obj, path, key)?.as_f64().ok_or_else(|| violation(format!("{path}{key}"), "expected a number"))?;
    if !v.is_finite() || !ok(v) {
        return Err(violation(format!("{path}{key}"), rule));
    }
    Ok(v)
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ExportError> {
    v.as_object().ok_or_else(|| violation(path, "expected an object"))
}

fn check_version(text: &str) -> Result<(), ExportError> {
    let parts: Vec<&str> = text.split('.').collect();
    let numeric = parts.len() == 3 && parts.iter().all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    if !numeric {
        return Err(violation("format_version", "expected a semantic version such as 1.0.0"));
    }
    match parts[0].parse::<u64>() {
        Ok(SUPPORTED_MAJOR) => Ok(()),
        _ => Err(ExportError::UnsupportedVersion(text.to_owned())),
    }
}

fn track_from_value(v: &Value, path: &str) -> Result<GroupClip, ExportError> {
    let obj = object(v, path)?;
    let prefix = format!("{path}.");
    let clip = clip_from_value(field(obj, &prefix, "clip")?, &format!("{path}.clip")).map_err(|ds| {
        let d = &ds[0];
        violation(d.path.clone(), d.diagnostic.to_string())
    })?;
    let delay = number(obj, &prefix, "delay", |v| v >= 0.0, "delay must be non-negative")?;
    let duration = number(obj, &prefix, "duration", |v| v > 0.0, "duration must be positive")?;
    let offset = number(obj, &prefix, "offset", |v| v >= 0.0, "offset must be non-negative")?;
    let cpath = format!("{path}.coordination");
    let coordination: CoordinationScheme =
        serde_json::from_value(field(obj, &prefix, "coordination")?.clone()).map_err(|e| violation(cpath.clone(), e.to_string()))?;
    coordination.validate().map_err(|e| violation(cpath, e.to_string()))?;
    Ok(GroupClip { clip, delay, duration, offset, coordination })
}

/// Reads a program, reporting the path of the first field that does not
/// match the format.
pub fn import_program(json_text: &str) -> Result<AnimationProgram, ExportError> {
    let root: Value = serde_json::from_str(json_text).map_err(|e| violation("", e.to_string()))?;
    let obj = object(&root, "")?;
    let version = field(obj, "", "format_version")?.as_str().ok_or_else(|| violation("format_version", "expected a string"))?;
    check_version(version)?;

    let vb = object(field(obj, "", "viewbox_ref")?, "viewbox_ref")?;
    let any = |_: f64| true;
    let viewbox_ref = Rect {
        min_x: number(vb, "viewbox_ref.", "min_x", any, "")?,
        min_y: number(vb, "viewbox_ref.", "min_y", any, "")?,
        max_x: number(vb, "viewbox_ref.", "max_x", any, "")?,
        max_y: number(vb, "viewbox_ref.", "max_y", any, "")?,
    };
    if !(viewbox_ref.width() > 0.0 && viewbox_ref.height() > 0.0) {
        return Err(violation("viewbox_ref", "viewBox must have positive width and height"));
    }

    let tracks = field(obj, "", "tracks")?.as_array().ok_or_else(|| violation("tracks", "expected an array"))?;
    let tracks = tracks.iter().enumerate().map(|(i, t)| track_from_value(t, &format!("tracks[{i}]"))).collect::<Result<Vec<_>, _>>()?;

    let provenance: Provenance =
        serde_json::from_value(field(obj, "", "provenance")?.clone()).map_err(|e| violation("provenance", e.to_string()))?;
    Ok(AnimationProgram { format_version: version.to_owned(), viewbox_ref, tracks, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::parse_document;
    use sway_core::clip::{Property, PropertyTrack, PropertyValue};
    use sway_core::coordination::Direction;
    use sway_core::ClipSpec;

    fn doc() -> crate::svg::SvgDocument {
        parse_document(
            r#"<svg viewBox="0 0 100 100"><circle class="dot" cx="10" cy="10" r="2"/><circle class="dot" cx="60" cy="40" r="2"/></svg>"#,
        )
        .unwrap()
    }

    fn timeline() -> Timeline {
        let clip = ClipSpec::new(".dot", "Fade").with_track(PropertyTrack::between(
            Property::Opacity,
            PropertyValue::Scalar(0.0),
            PropertyValue::Scalar(1.0),
        ));
        let mut a = GroupClip::with_defaults(clip.clone());
        a.coordination = CoordinationScheme::LayoutRadius { center: Point::new(0.5, 0.5) };
        let mut b = GroupClip::with_defaults(clip);
        b.delay = 123.456;
        b.coordination = CoordinationScheme::Random { seed: u64::MAX - 3 };
        let mut c = b.clone();
        c.coordination = CoordinationScheme::LayerCentric { direction: Direction::Descending };
        Timeline::new(4, vec![a, b, c])
    }

    #[test]
    fn user_points_become_relative() {
        let vb = Rect::from_origin_size(0.0, 0.0, 100.0, 100.0);
        let s = relative_scheme(vb, &CoordinationScheme::LayoutRadius { center: Point::new(50.0, 50.0) });
        assert_eq!(s, CoordinationScheme::LayoutRadius { center: Point::new(0.5, 0.5) });
        let wide = Rect::from_origin_size(10.0, 0.0, 200.0, 50.0);
        let s = relative_scheme(wide, &CoordinationScheme::LayoutSketch { polyline: vec![Point::new(10.0, 0.0), Point::new(110.0, 25.0)] });
        assert_eq!(s, CoordinationScheme::LayoutSketch { polyline: vec![Point::new(0.0, 0.0), Point::new(0.5, 0.5)] });
    }

    #[test]
    fn round_trip_is_a_fixpoint() {
        let d = doc();
        let program = export_program(&d, &timeline(), "s1").unwrap();
        let text = program.to_json();
        let back = import_program(&text).unwrap();
        assert_eq!(back, program);
        assert_eq!(back.timeline(), timeline());
        assert_eq!(back.to_json(), text);
        assert!(text.contains(r#""seed":"18446744073709551612""#));
    }

    #[test]
    fn import_errors() {
        let d = doc();
        let program = export_program(&d, &timeline(), "s1").unwrap();
        let mut v: Value = serde_json::from_str(&program.to_json()).unwrap();
        v["format_version"] = "99.0.0".into();
        assert_eq!(import_program(&v.to_string()), Err(ExportError::UnsupportedVersion("99.0.0".into())));
        v["format_version"] = "1.2.0".into();
        v["tracks"][0].as_object_mut().unwrap().remove("duration");
        assert!(matches!(import_program(&v.to_string()), Err(ExportError::SchemaViolation { path, .. }) if path == "tracks[0].duration"));
        let mut v: Value = serde_json::from_str(&program.to_json()).unwrap();
        v["tracks"][1]["clip"]["tracks"][0]["property"] = "teleport".into();
        assert!(
            matches!(import_program(&v.to_string()), Err(ExportError::SchemaViolation { path, .. }) if path == "tracks[1].clip.tracks[0].property")
        );
        let mut v: Value = serde_json::from_str(&program.to_json()).unwrap();
        v["tracks"][0]["coordination"]["center"] = serde_json::json!([2.0, 0.5]);
        assert!(
            matches!(import_program(&v.to_string()), Err(ExportError::SchemaViolation { path, .. }) if path == "tracks[0].coordination")
        );
    }

    #[test]
    fn empty_timeline_is_rejected() {
        assert_eq!(export_program(&doc(), &Timeline::default(), "s"), Err(ExportError::EmptyTimeline));
    }
}
