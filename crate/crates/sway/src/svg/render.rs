//! Writes a sampled frame back into the SVG source as static attributes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use sway_core::clip::{Property, PropertyValue};
use sway_core::{AffineTransform, FrameSnapshot, Point};

use super::{escape_attr, style_declarations, SvgDocument, REST_TRANSFORM_ATTR};

fn scalar(values: &BTreeMap<Property, PropertyValue>, property: Property, default: f64) -> f64 {
    values.get(&property).and_then(PropertyValue::as_scalar).unwrap_or(default)
}

pub(crate) fn fmt_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

pub(crate) fn fmt_matrix(t: &AffineTransform) -> String {
    format!("matrix({} {} {} {} {} {})", fmt_num(t.a), fmt_num(t.b), fmt_num(t.c), fmt_num(t.d), fmt_num(t.e), fmt_num(t.f))
}

/// Animation transform in the element's parent space: translate, then
/// rotate and scale about the element's box center.
pub(crate) fn frame_transform(doc: &SvgDocument, index: usize, values: &BTreeMap<Property, PropertyValue>) -> AffineTransform {
    let tx = scalar(values, Property::TranslateX, 0.0);
    let ty = scalar(values, Property::TranslateY, 0.0);
    let rot = scalar(values, Property::Rotate, 0.0);
    let s = scalar(values, Property::Scale, 1.0);
    if tx == 0.0 && ty == 0.0 && rot == 0.0 && s == 1.0 {
        return AffineTransform::IDENTITY;
    }
    let pivot = pivot(doc, index);
    AffineTransform::translate(tx, ty)
        .then_apply(&AffineTransform::translate(pivot.x, pivot.y))
        .then_apply(&AffineTransform::rotate(rot))
        .then_apply(&AffineTransform::scale(s, s))
        .then_apply(&AffineTransform::translate(-pivot.x, -pivot.y))
}

/// Center of the element's box in its parent's coordinates.
pub(crate) fn pivot(doc: &SvgDocument, index: usize) -> Point {
    match (doc.bounding_box(index), doc.parent_transform(index).ok().and_then(|t| t.inverse())) {
        (Ok(b), Some(inv)) => inv.apply(b.center()),
        _ => Point::new(0.0, 0.0),
    }
}

/// Attribute assignments for one start tag; `None` removes the attribute.
pub(crate) struct TagEdit {
    pub set: Vec<(&'static str, Option<String>)>,
}

/// Bakes `snapshot` into the document text. Elements without a source tag
/// (instantiated through `<use>`) are left unchanged. The original transform
/// is kept in a marker attribute so re-parsing and re-baking are stable.
pub fn render_static(doc: &SvgDocument, snapshot: &FrameSnapshot) -> String {
    let text = doc.text();
    let edits = snapshot.values.iter().filter_map(|(&index, values)| {
        let span = doc.tag_span(index)?;
        Some((index, element_edit(doc, index, values, &text[span])))
    });
    apply_tag_edits(doc, edits.collect(), None)
}

/// Applies attribute edits to element start tags, optionally inserting
/// `after_root` right after the root start tag.
pub(crate) fn apply_tag_edits(doc: &SvgDocument, edits: Vec<(usize, TagEdit)>, after_root: Option<&str>) -> String {
    let text = doc.text();
    let mut edits: Vec<(Range<usize>, String)> = edits
        .into_iter()
        .filter_map(|(index, edit)| {
            let span = doc.tag_span(index)?;
            let tag = rewrite_tag(&text[span.clone()], &edit)?;
            Some((span, tag))
        })
        .collect();
    if let Some(extra) = after_root {
        let end = doc.root_tag_span().end;
        edits.push((end..end, extra.to_owned()));
    }
    edits.sort_by_key(|(r, _)| (r.start, r.end));
    let mut out = String::with_capacity(text.len() + edits.len() * 64);
    let mut cursor = 0;
    for (range, tag) in edits {
        out.push_str(&text[cursor..range.start]);
        out.push_str(&tag);
        cursor = range.end;
    }
    out.push_str(&text[cursor..]);
    out
}

fn element_edit(doc: &SvgDocument, index: usize, values: &BTreeMap<Property, PropertyValue>, tag_text: &str) -> TagEdit {
    let mut set: Vec<(&'static str, Option<String>)> = Vec::new();
    let anim = frame_transform(doc, index, values);
    let attrs = parse_attributes(tag_text);
    let existing = |name: &str| attrs.iter().find(|a| a.0 == name).map(|a| a.1.clone());
    let rest_text = existing(REST_TRANSFORM_ATTR).or_else(|| existing("transform"));
    if !anim.is_identity() {
        let rest = doc.element(index).map(|e| e.local_transform).unwrap_or(AffineTransform::IDENTITY);
        set.push(("transform", Some(fmt_matrix(&anim.then_apply(&rest)))));
        set.push((REST_TRANSFORM_ATTR, Some(rest_text.unwrap_or_default())));
    } else if let Some(rest) = existing(REST_TRANSFORM_ATTR) {
        set.push(("transform", (!rest.is_empty()).then_some(rest)));
        set.push((REST_TRANSFORM_ATTR, None));
    }
    let mut style_removals = Vec::new();
    for (property, attr) in [
        (Property::Opacity, "opacity"),
        (Property::FillColor, "fill"),
        (Property::StrokeColor, "stroke"),
        (Property::StrokeWidth, "stroke-width"),
    ] {
        if let Some(v) = values.get(&property) {
            let text = match v {
                PropertyValue::Scalar(s) => fmt_num(*s),
                PropertyValue::Color(c) => c.to_string(),
            };
            set.push((attr, Some(text)));
            style_removals.push(attr);
        }
    }
    let blur = values.get(&Property::FilterBlur).and_then(PropertyValue::as_scalar);
    if blur.is_some() || !style_removals.is_empty() {
        if let Some(style) = existing("style").or_else(|| blur.map(|_| String::new())) {
            let mut decls: Vec<(String, String)> = style_declarations(&style)
                .into_iter()
                .filter(|(k, _)| !style_removals.contains(&k.as_str()) && !(blur.is_some() && k == "filter"))
                .collect();
            if let Some(b) = blur.filter(|b| *b != 0.0) {
                decls.push(("filter".into(), format!("blur({}px)", fmt_num(b))));
            }
            let mut s = String::new();
            for (k, v) in decls {
                if !s.is_empty() {
                    s.push_str("; ");
                }
                write!(s, "{k}: {v}").unwrap();
            }
            set.push(("style", (!s.is_empty()).then_some(s)));
        }
    }
    TagEdit { set }
}

/// Attributes of a start tag as (name, unescaped value, byte range of the
/// whole `name="value"` item).
fn parse_attributes(tag: &str) -> Vec<(String, String, Range<usize>)> {
    let bytes = tag.as_bytes();
    let mut out = Vec::new();
    let mut i = 1;
    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' && bytes[i] != b'/' {
        i += 1;
    }
    loop {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() || bytes[i] == b'>' || bytes[i] == b'/' {
            break;
        }
        let start = i;
        while i < bytes.len() && bytes[i] != b'=' && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let name = tag[start..i].to_owned();
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'=') {
            i += 1;
        }
        if i >= bytes.len() {
            break;
        }
        let quote = bytes[i];
        let value_start = i + 1;
        i = value_start;
        while i < bytes.len() && bytes[i] != quote {
            i += 1;
        }
        let raw = &tag[value_start..i.min(bytes.len())];
        i += 1;
        out.push((name, unescape(raw), start..i.min(bytes.len())));
    }
    out
}

fn unescape(raw: &str) -> String {
    if !raw.contains('&') {
        return raw.to_owned();
    }
    raw.replace("&quot;", "\"").replace("&apos;", "'").replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&")
}

fn rewrite_tag(tag: &str, edit: &TagEdit) -> Option<String> {
    if edit.set.is_empty() {
        return None;
    }
    let attrs = parse_attributes(tag);
    let mut pieces: Vec<(Range<usize>, String)> = Vec::new();
    let mut appended = String::new();
    for (name, value) in &edit.set {
        let item = value.as_ref().map(|v| format!("{name}=\"{}\"", escape_attr(v)));
        match (attrs.iter().find(|a| a.0 == *name), item) {
            (Some(a), Some(item)) => pieces.push((a.2.clone(), item)),
            (Some(a), None) => {
                // Remove the attribute along with its leading whitespace.
                let mut start = a.2.start;
                while start > 0 && tag.as_bytes()[start - 1].is_ascii_whitespace() {
                    start -= 1;
                }
                pieces.push((start..a.2.end, String::new()));
            }
            (None, Some(item)) => {
                appended.push(' ');
                appended.push_str(&item);
            }
            (None, None) => {}
        }
    }
    pieces.sort_by_key(|(r, _)| r.start);
    let body_end = if tag.ends_with("/>") { tag.len() - 2 } else { tag.len() - 1 };
    let mut trimmed_end = body_end;
    while trimmed_end > 0 && tag.as_bytes()[trimmed_end - 1].is_ascii_whitespace() {
        trimmed_end -= 1;
    }
    let mut out = String::with_capacity(tag.len() + appended.len());
    let mut cursor = 0;
    for (range, replacement) in pieces {
        out.push_str(&tag[cursor..range.start]);
        out.push_str(&replacement);
        cursor = range.end;
    }
    out.push_str(&tag[cursor..trimmed_end]);
    out.push_str(&appended);
    out.push_str(&tag[trimmed_end..]);
    Some(out)
}
