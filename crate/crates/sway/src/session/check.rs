use std::fmt;

use serde::Serialize;
use sway_core::clip::{interpolate_track, validate_clip};
use sway_core::coordination::{assign_weights, element_start_time, CoordinationScheme};
use sway_core::encoding::check_encoding_conflict_in;
use sway_core::Version;

use super::model::Session;
use crate::exporter::{export_program, import_program};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Validator and invariant results for one version. Encoding warnings are
/// advisory and listed separately.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.items.push(CheckItem { name: name.into(), passed, detail: detail.into() });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            let mark = if item.passed { "ok  " } else { "FAIL" };
            write!(f, "{mark} {}", item.name)?;
            if !item.detail.is_empty() {
                write!(f, ": {}", item.detail)?;
            }
            writeln!(f)?;
        }
        for w in &self.warnings {
            writeln!(f, "warn {w}")?;
        }
        Ok(())
    }
}

pub fn check_version(session: &Session, version: &Version) -> CheckReport {
    let mut report = CheckReport::default();
    let doc = session.document.model();

    for (k, track) in version.clips.iter().enumerate() {
        let label = format!("track {k} ({})", track.clip.title);
        let diagnostics = validate_clip(&track.clip, doc);
        let text: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
        report.push(format!("{label}: clip is valid"), diagnostics.is_empty(), text.join("; "));

        let timing_ok = track.delay >= 0.0
            && track.delay.is_finite()
            && track.duration > 0.0
            && track.duration.is_finite()
            && track.offset >= 0.0
            && track.offset.is_finite();
        report.push(
            format!("{label}: timing is valid"),
            timing_ok,
            format!("delay {} ms, duration {} ms, offset {} ms", track.delay, track.duration, track.offset),
        );

        let assignment = match assign_weights(doc, &track.clip.selector, &track.coordination) {
            Ok(a) => a,
            Err(e) => {
                report.push(format!("{label}: weights"), false, e.to_string());
                continue;
            }
        };
        let weights: Vec<f64> = assignment.weights.values().copied().collect();
        let in_range = weights.iter().all(|w| (0.0..=1.0).contains(w));
        report.push(format!("{label}: weights lie in [0, 1]"), in_range, format!("{} elements", weights.len()));
        if !matches!(track.coordination, CoordinationScheme::Random { .. }) {
            let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
            let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let spans = (min == 0.0 && max == 1.0) || weights.iter().all(|&w| w == 0.0);
            report.push(format!("{label}: weights are normalized"), spans, format!("min {min}, max {max}"));
        }
        let starts_ok = weights.iter().all(|&w| {
            let t = element_start_time(track.delay, track.offset, w);
            t >= track.delay && t <= track.delay + track.offset
        });
        report.push(format!("{label}: start times lie in [D, D + O]"), starts_ok, "");

        // At rest after the last pass, a one-shot clip holds its final keyframes.
        if !track.clip.looping {
            let end = track.clip.value_at(f64::MAX);
            let held = track.clip.tracks.iter().all(|t| end.get(&t.property).copied() == interpolate_track(t, 1.0));
            report.push(format!("{label}: final frame holds last keyframes"), held, "");
        }
    }

    if let Some(manifest) = &session.manifest {
        let clips: Vec<_> = version.clips.iter().map(|g| g.clip.clone()).collect();
        report.warnings = check_encoding_conflict_in(doc, manifest, &clips)
            .into_iter()
            .map(|w| format!("{} ({}): {}", w.clip_title, w.selector, w.rationale))
            .collect();
    }

    match export_program(doc, &version.timeline(), &session.id) {
        Ok(program) => {
            let text = program.to_json();
            let stable = import_program(&text).map(|p| p.to_json() == text).unwrap_or(false);
            report.push("program export round-trips", stable, "");
        }
        Err(e) => report.push("program export round-trips", false, e.to_string()),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::parse_document;
    use sway_core::clip::{Property, PropertyTrack, PropertyValue};
    use sway_core::ClipSpec;

    fn session(clips: Vec<ClipSpec>) -> (Session, Version) {
        let doc = parse_document(
            r#"<svg viewBox="0 0 10 10"><circle class="a" cx="2" cy="2" r="1"/><circle class="a" cx="6" cy="2" r="1"/></svg>"#,
        )
        .unwrap();
        let v = Version::from_clips(1, clips, 1, vec![]);
        let s = Session {
            id: "s".into(),
            document: doc,
            styles: None,
            manifest: None,
            history: vec![],
            versions: vec![v.clone()],
            active_version: Some(1),
        };
        (s, v)
    }

    #[test]
    fn valid_version_passes() {
        let clip = ClipSpec::new(".a", "Fade").with_track(PropertyTrack::between(
            Property::Opacity,
            PropertyValue::Scalar(0.0),
            PropertyValue::Scalar(1.0),
        ));
        let (s, v) = session(vec![clip]);
        let report = check_version(&s, &v);
        assert!(report.passed(), "{report}");
        assert!(report.to_string().contains("ok   track 0 (Fade): weights are normalized"));
    }

    #[test]
    fn missing_group_fails() {
        let clip = ClipSpec::new(".ghost", "Fade").with_track(PropertyTrack::between(
            Property::Opacity,
            PropertyValue::Scalar(0.0),
            PropertyValue::Scalar(1.0),
        ));
        let (s, v) = session(vec![clip]);
        let report = check_version(&s, &v);
        assert!(!report.passed());
        assert!(report.to_string().contains("FAIL track 0 (Fade): clip is valid: selector \".ghost\" matches no element"), "{report}");
    }
}
