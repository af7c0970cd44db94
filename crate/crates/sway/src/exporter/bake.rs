//! Static CSS keyframe baking. Weights are evaluated once, so the output no
//! longer reacts to edits of the document.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sway_core::clip::{interpolate_track, Easing, Property, PropertyTrack, PropertyValue};
use sway_core::coordination::{assign_weights, element_start_time, CoordinationError};
use sway_core::{GroupClip, Timeline};

use super::ExportError;
use crate::svg::{apply_tag_edits, fmt_matrix, fmt_num, pivot, SvgDocument, TagEdit};

/// Attribute that links an animated element to its CSS rule.
pub const ELEMENT_ATTR: &str = "data-sway-el";

/// Samples added inside every eased segment; linear segments need none.
const EASED_SAMPLES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct BakedOutput {
    /// The source document with element markers and an embedded `<style>`.
    pub svg: String,
    /// The stylesheet on its own.
    pub css: String,
}

fn stops(tracks: &[&PropertyTrack]) -> Vec<f64> {
    let mut out = vec![0.0, 1.0];
    for t in tracks {
        for w in t.keyframes.windows(2) {
            out.push(w[0].offset);
            out.push(w[1].offset);
            if w[0].easing_out != Easing::Linear {
                let span = w[1].offset - w[0].offset;
                out.extend((1..EASED_SAMPLES).map(|j| w[0].offset + span * j as f64 / EASED_SAMPLES as f64));
            }
        }
        out.extend(t.keyframes.iter().map(|k| k.offset));
    }
    out.retain(|u| (0.0..=1.0).contains(u));
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn percent(u: f64) -> String {
    format!("{}%", fmt_num(u * 100.0))
}

fn declaration(property: Property, value: PropertyValue) -> Option<String> {
    let text = match value {
        PropertyValue::Scalar(v) => fmt_num(v),
        PropertyValue::Color(c) => c.to_string(),
    };
    Some(match property {
        Property::Opacity => format!("opacity: {text}"),
        Property::FillColor => format!("fill: {text}"),
        Property::StrokeColor => format!("stroke: {text}"),
        Property::StrokeWidth => format!("stroke-width: {text}"),
        Property::FilterBlur => format!("filter: blur({text}px)"),
        _ => return None,
    })
}

fn style_keyframes(css: &mut String, name: &str, tracks: &[&PropertyTrack]) {
    writeln!(css, "@keyframes {name} {{").unwrap();
    for u in stops(tracks) {
        let decls: Vec<String> = tracks.iter().filter_map(|t| declaration(t.property, interpolate_track(t, u)?)).collect();
        writeln!(css, "  {} {{ {}; }}", percent(u), decls.join("; ")).unwrap();
    }
    css.push_str("}\n");
}

fn transform_keyframes(css: &mut String, name: &str, doc: &SvgDocument, index: usize, tracks: &[&PropertyTrack]) {
    let p = pivot(doc, index);
    let rest = doc.element(index).map(|e| e.local_transform).unwrap_or_default();
    let rest = fmt_matrix(&rest);
    writeln!(css, "@keyframes {name} {{").unwrap();
    for u in stops(tracks) {
        let value = |property: Property, default: f64| {
            tracks
                .iter()
                .find(|t| t.property == property)
                .and_then(|t| interpolate_track(t, u))
                .and_then(|v| v.as_scalar())
                .unwrap_or(default)
        };
        // Same function list at every stop, so browsers interpolate each
        // function numerically instead of decomposing matrices.
        writeln!(
            css,
            "  {} {{ transform: translate({}px, {}px) translate({}px, {}px) rotate({}deg) scale({}) translate({}px, {}px) {}; }}",
            percent(u),
            fmt_num(value(Property::TranslateX, 0.0)),
            fmt_num(value(Property::TranslateY, 0.0)),
            fmt_num(p.x),
            fmt_num(p.y),
            fmt_num(value(Property::Rotate, 0.0)),
            fmt_num(value(Property::Scale, 1.0)),
            fmt_num(-p.x),
            fmt_num(-p.y),
            rest
        )
        .unwrap();
    }
    css.push_str("}\n");
}

fn animation_entry(name: &str, track: &GroupClip, start: f64) -> String {
    let iterations = if track.clip.looping { "infinite" } else { "1" };
    format!("{name} {}ms linear {}ms {iterations} both", track.duration, start)
}

/// Bakes `timeline` into CSS animations on a copy of the document.
pub fn bake_css(doc: &SvgDocument, timeline: &Timeline) -> Result<BakedOutput, ExportError> {
    if timeline.tracks.is_empty() {
        return Err(ExportError::EmptyTimeline);
    }
    let mut problems = Vec::new();
    let mut assignments = Vec::new();
    for (k, track) in timeline.tracks.iter().enumerate() {
        match assign_weights(doc, &track.clip.selector, &track.coordination) {
            Ok(a) => assignments.push(Some(a)),
            Err(CoordinationError::EmptyGroup(sel)) => {
                problems.push(format!("track {k}: group {sel} matches no element"));
                assignments.push(None);
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut css = String::from("/* Generated by sway. Coordination weights were computed at export time and stay fixed. */\n");
    // element -> animation entries in track order
    let mut per_element: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut transform_owner: BTreeMap<usize, usize> = BTreeMap::new();

    for (k, (track, assignment)) in timeline.tracks.iter().zip(&assignments).enumerate() {
        let Some(assignment) = assignment else { continue };
        let (moves, styles): (Vec<&PropertyTrack>, Vec<&PropertyTrack>) =
            track.clip.tracks.iter().filter(|t| !t.keyframes.is_empty()).partition(|t| t.property.is_transform());
        let style_name = format!("sway-t{k}");
        if !styles.is_empty() {
            style_keyframes(&mut css, &style_name, &styles);
        }
        for (&index, &w) in &assignment.weights {
            if doc.tag_span(index).is_none() {
                problems.push(format!("track {k}: element {index} is instantiated through <use> and has no source tag"));
                continue;
            }
            let start = element_start_time(track.delay, track.offset, w);
            let entries = per_element.entry(index).or_default();
            if !styles.is_empty() {
                entries.push(animation_entry(&style_name, track, start));
            }
            if !moves.is_empty() {
                if let Some(other) = transform_owner.insert(index, k) {
                    problems.push(format!("tracks {other} and {k} both move element {index}"));
                    continue;
                }
                let name = format!("sway-t{k}-e{index}");
                transform_keyframes(&mut css, &name, doc, index, &moves);
                entries.push(animation_entry(&name, track, start));
            }
        }
    }
    if !problems.is_empty() {
        return Err(ExportError::UnbakeableFeature(problems));
    }

    for (index, entries) in &per_element {
        write!(css, "[{ELEMENT_ATTR}=\"{index}\"] {{ animation: {};", entries.join(", ")).unwrap();
        if transform_owner.contains_key(index) {
            css.push_str(" transform-box: view-box; transform-origin: 0px 0px;");
        }
        css.push_str(" }\n");
    }

    let edits = per_element.keys().map(|&index| (index, TagEdit { set: vec![(ELEMENT_ATTR, Some(index.to_string()))] })).collect();
    let style = format!("\n<style>\n{css}</style>");
    Ok(BakedOutput { svg: apply_tag_edits(doc, edits, Some(&style)), css })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::parse_document;
    use sway_core::clip::Keyframe;
    use sway_core::coordination::CoordinationScheme;
    use sway_core::{ClipSpec, Rgb};

    fn dots() -> SvgDocument {
        parse_document(
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100"><circle class="dot" cx="10" cy="10" r="5"/><circle class="dot" cx="30" cy="10" r="5" transform="translate(0 5)"/><circle class="dot" cx="50" cy="10" r="5"/></svg>"#,
        )
        .unwrap()
    }

    fn fade() -> GroupClip {
        let clip = ClipSpec::new(".dot", "Fade").with_track(PropertyTrack::between(
            Property::Opacity,
            PropertyValue::Scalar(0.0),
            PropertyValue::Scalar(1.0),
        ));
        GroupClip::with_defaults(clip)
    }

    #[test]
    fn delays_follow_start_times() {
        let doc = dots();
        let out = bake_css(&doc, &Timeline::new(1, vec![fade()])).unwrap();
        assert!(out.css.contains("[data-sway-el=\"0\"] { animation: sway-t0 1000ms linear 0ms 1 both; }"), "{}", out.css);
        assert!(out.css.contains("sway-t0 1000ms linear 250ms 1 both"), "{}", out.css);
        assert!(out.css.contains("sway-t0 1000ms linear 500ms 1 both"), "{}", out.css);
        assert!(out.css.contains("0% { opacity: 0; }") && out.css.contains("100% { opacity: 1; }"));
        let baked = parse_document(&out.svg).unwrap();
        assert_eq!(baked.elements().len(), doc.elements().len());
        assert!(out.svg.contains("<style>"));
    }

    #[test]
    fn eased_segments_are_sampled() {
        let track = PropertyTrack::new(
            Property::FillColor,
            vec![
                Keyframe::new(0.0, PropertyValue::Color(Rgb::new(0, 0, 0))).eased(Easing::EaseInQuad),
                Keyframe::new(1.0, PropertyValue::Color(Rgb::new(255, 255, 255))),
            ],
        );
        let mut g = fade();
        g.clip.tracks = vec![track];
        g.clip.looping = true;
        let out = bake_css(&dots(), &Timeline::new(1, vec![g])).unwrap();
        assert!(out.css.contains("50% { fill: #404040; }"), "{}", out.css);
        assert!(out.css.contains("infinite both"));
    }

    #[test]
    fn transforms_keep_rest_pose_and_pivot() {
        let mut g = fade();
        g.clip.tracks = vec![PropertyTrack::between(Property::Rotate, PropertyValue::Scalar(-30.0), PropertyValue::Scalar(0.0))];
        g.coordination = CoordinationScheme::default();
        let out = bake_css(&dots(), &Timeline::new(1, vec![g])).unwrap();
        assert!(out.css.contains("@keyframes sway-t0-e1"));
        assert!(
            out.css
                .contains("translate(0px, 0px) translate(30px, 15px) rotate(-30deg) scale(1) translate(-30px, -15px) matrix(1 0 0 1 0 5)"),
            "{}",
            out.css
        );
        assert!(out.css.contains("transform-box: view-box"));
    }

    #[test]
    fn unbakeable_cases() {
        let mut g = fade();
        g.clip.tracks = vec![PropertyTrack::between(Property::Scale, PropertyValue::Scalar(0.0), PropertyValue::Scalar(1.0))];
        let err = bake_css(&dots(), &Timeline::new(1, vec![g.clone(), g])).unwrap_err();
        assert!(matches!(err, ExportError::UnbakeableFeature(ref v) if v.len() == 3), "{err:?}");
        let mut missing = fade();
        missing.clip.selector = ".ghost".into();
        let err = bake_css(&dots(), &Timeline::new(1, vec![fade(), missing])).unwrap_err();
        assert!(matches!(err, ExportError::UnbakeableFeature(ref v) if v[0].contains(".ghost")), "{err:?}");

        let doc = parse_document(
            r##"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" viewBox="0 0 10 10"><defs><circle id="c" class="dot" r="1"/></defs><use xlink:href="#c"/></svg>"##,
        )
        .unwrap();
        assert!(matches!(bake_css(&doc, &Timeline::new(1, vec![fade()])), Err(ExportError::UnbakeableFeature(_))));
    }
}
