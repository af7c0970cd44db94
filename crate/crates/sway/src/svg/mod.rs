//! SVG input: parsing into the core document model, prompt condensation and
//! static frame baking.

mod condense;
mod render;

use std::collections::HashMap;
use std::ops::Range;
use std::str::FromStr;

use roxmltree::{Node, NodeType};
use sha2::{Digest, Sha256};
use sway_core::document::{DocumentError, ElementNode};
use sway_core::flatten::{self, PathSegment, DEFAULT_TOLERANCE};
use sway_core::{AffineTransform, Point, Rect, VectorDocument};

pub use condense::{condense_for_prompt, estimate_tokens, CondenseEntry, CondenseError, CondenseReport};
pub use render::render_static;
pub(crate) use render::{apply_tag_edits, fmt_matrix, fmt_num, pivot, TagEdit};

/// Attribute holding an element's transform before a frame was baked into it.
pub const REST_TRANSFORM_ATTR: &str = "data-sway-rest-transform";

const XLINK_NS: &str = "http://www.w3.org/1999/xlink";
const MAX_USE_DEPTH: usize = 16;

/// Containers whose content never renders directly.
const NON_RENDERED: &[&str] = &[
    "defs",
    "style",
    "script",
    "title",
    "desc",
    "metadata",
    "clipPath",
    "mask",
    "pattern",
    "linearGradient",
    "radialGradient",
    "filter",
    "symbol",
    "marker",
    "foreignObject",
];

const PRESENTATION: &[&str] =
    &["fill", "stroke", "opacity", "stroke-width", "fill-opacity", "stroke-opacity", "filter", "display", "visibility"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvgError {
    #[error("malformed SVG at {line}:{column}: {message}")]
    MalformedSvg { message: String, line: u32, column: u32 },
    #[error("document has no viewBox and no usable width/height")]
    MissingViewBox,
    #[error(transparent)]
    Model(#[from] DocumentError),
}

impl SvgError {
    fn malformed(message: impl Into<String>) -> Self {
        SvgError::MalformedSvg { message: message.into(), line: 1, column: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub tolerance: f64,
    pub styles: Option<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { tolerance: DEFAULT_TOLERANCE, styles: None }
    }
}

/// A parsed SVG: the source text, its model, and where each modeled
/// element's start tag sits in the source.
#[derive(Clone, Debug, PartialEq)]
pub struct SvgDocument {
    text: String,
    model: VectorDocument,
    spans: Vec<Option<Range<usize>>>,
    root_tag: Range<usize>,
    tolerance: f64,
}

impl SvgDocument {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn model(&self) -> &VectorDocument {
        &self.model
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Byte range of the element's start tag, or `None` for content
    /// instantiated through `<use>`.
    pub fn tag_span(&self, index: usize) -> Option<Range<usize>> {
        self.spans.get(index).cloned().flatten()
    }

    /// Byte range of the root `<svg ...>` start tag.
    pub fn root_tag_span(&self) -> Range<usize> {
        self.root_tag.clone()
    }
}

impl std::ops::Deref for SvgDocument {
    type Target = VectorDocument;

    fn deref(&self) -> &VectorDocument {
        &self.model
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn parse_document(text: &str) -> Result<SvgDocument, SvgError> {
    parse_document_with(text, &ParseOptions::default())
}

pub fn parse_document_with(text: &str, options: &ParseOptions) -> Result<SvgDocument, SvgError> {
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    let xml = roxmltree::Document::parse_with_options(text, opts).map_err(|e| {
        let pos = e.pos();
        SvgError::MalformedSvg { message: e.to_string(), line: pos.row, column: pos.col }
    })?;
    let root = xml.root_element();
    if root.tag_name().name() != "svg" {
        return Err(SvgError::malformed(format!("root element is <{}>, expected <svg>", root.tag_name().name())));
    }
    let view_box = root_view_box(&root)?;

    let ids: HashMap<&str, Node> = xml.descendants().filter_map(|n| Some((n.attribute("id")?, n))).collect();
    let mut builder = Builder { ids, view_box, tolerance: options.tolerance, elements: Vec::new(), spans: Vec::new(), worlds: Vec::new() };
    for child in root.children().filter(Node::is_element) {
        builder.visit(child, None, AffineTransform::IDENTITY, true, &mut Vec::new());
    }
    let root_tag = start_tag_range(&root);
    let Builder { elements, spans, .. } = builder;
    let model = VectorDocument::new(view_box, elements, options.styles.clone(), sha256_hex(text.as_bytes()))?;
    Ok(SvgDocument { text: text.to_owned(), model, spans, root_tag, tolerance: options.tolerance })
}

fn root_view_box(root: &Node) -> Result<Rect, SvgError> {
    if let Some(vb) = root.attribute("viewBox").and_then(|v| svgtypes::ViewBox::from_str(v).ok()) {
        if vb.w > 0.0 && vb.h > 0.0 {
            return Ok(Rect::from_origin_size(vb.x, vb.y, vb.w, vb.h));
        }
    }
    let absolute = |name: &str| {
        let len = svgtypes::Length::from_str(root.attribute(name)?).ok()?;
        if len.unit == svgtypes::LengthUnit::Percent {
            return None;
        }
        Some(length_to_user(len, 0.0)).filter(|v| *v > 0.0)
    };
    match (absolute("width"), absolute("height")) {
        (Some(w), Some(h)) => Ok(Rect::from_origin_size(0.0, 0.0, w, h)),
        _ => Err(SvgError::MissingViewBox),
    }
}

/// Converts a length to user units; percentages resolve against `reference`.
fn length_to_user(len: svgtypes::Length, reference: f64) -> f64 {
    use svgtypes::LengthUnit as U;
    let n = len.number;
    match len.unit {
        U::None | U::Px => n,
        U::Em => n * 16.0,
        U::Ex => n * 8.0,
        U::In => n * 96.0,
        U::Cm => n * 96.0 / 2.54,
        U::Mm => n * 96.0 / 25.4,
        U::Pt => n * 4.0 / 3.0,
        U::Pc => n * 16.0,
        U::Percent => n / 100.0 * reference,
    }
}

fn parse_transform(text: &str) -> AffineTransform {
    if text.trim().is_empty() {
        return AffineTransform::IDENTITY;
    }
    match svgtypes::Transform::from_str(text) {
        Ok(t) => AffineTransform::new(t.a, t.b, t.c, t.d, t.e, t.f),
        Err(_) => AffineTransform::IDENTITY,
    }
}

fn normalize_paint(value: &str) -> String {
    let v = value.trim();
    if v == "none" || v.starts_with("url(") || v == "currentColor" || v == "inherit" {
        return v.to_owned();
    }
    match svgtypes::Color::from_str(v) {
        Ok(c) => format!("#{:02x}{:02x}{:02x}", c.red, c.green, c.blue),
        Err(_) => v.to_owned(),
    }
}

/// Splits an inline `style` attribute into declarations.
pub(crate) fn style_declarations(style: &str) -> Vec<(String, String)> {
    style
        .split(';')
        .filter_map(|decl| {
            let (k, v) = decl.split_once(':')?;
            let (k, v) = (k.trim(), v.trim());
            (!k.is_empty()).then(|| (k.to_owned(), v.to_owned()))
        })
        .collect()
}

struct Builder<'a, 'input> {
    ids: HashMap<&'a str, Node<'a, 'input>>,
    view_box: Rect,
    tolerance: f64,
    elements: Vec<ElementNode>,
    spans: Vec<Option<Range<usize>>>,
    worlds: Vec<AffineTransform>,
}

impl<'a, 'input> Builder<'a, 'input> {
    /// Appends `node` (and its subtree) in pre-order. `extra` is applied
    /// before the node's own transform (used for `<use>` placement).
    fn visit(
        &mut self,
        node: Node<'a, 'input>,
        parent: Option<usize>,
        extra: AffineTransform,
        from_source: bool,
        use_stack: &mut Vec<&'a str>,
    ) {
        let tag = node.tag_name().name();
        if NON_RENDERED.contains(&tag) {
            return;
        }
        let index = self.elements.len();
        let mut el = ElementNode::new(index, tag);
        el.parent = parent;
        el.id = node.attribute("id").map(str::to_owned);
        if let Some(class) = node.attribute("class") {
            for c in class.split_whitespace() {
                if !el.classes.iter().any(|x| x == c) {
                    el.classes.push(c.to_owned());
                }
            }
        }
        for attr in node.attributes() {
            let name = attr.name();
            if attr.namespace().is_none() {
                if let Some(key) = name.strip_prefix("data-") {
                    if !key.is_empty() && name != REST_TRANSFORM_ATTR {
                        el.data_attributes.insert(key.to_owned(), attr.value().to_owned());
                    }
                } else if PRESENTATION.contains(&name) {
                    el.presentation.insert(name.to_owned(), attr.value().trim().to_owned());
                }
            }
        }
        if let Some(style) = node.attribute("style") {
            for (k, v) in style_declarations(style) {
                if PRESENTATION.contains(&k.as_str()) {
                    el.presentation.insert(k, v);
                }
            }
        }
        for key in ["fill", "stroke"] {
            if let Some(v) = el.presentation.get_mut(key) {
                *v = normalize_paint(v);
            }
        }

        let own = node
            .attribute(REST_TRANSFORM_ATTR)
            .or_else(|| node.attribute("transform"))
            .map(parse_transform)
            .unwrap_or(AffineTransform::IDENTITY);
        let mut local = extra.then_apply(&own);
        if tag == "svg" {
            local = local.then_apply(&self.nested_viewport(&node));
        }
        let use_target = if tag == "use" {
            let x = self.len_attr(&node, "x", self.view_box.width());
            let y = self.len_attr(&node, "y", self.view_box.height());
            local = local.then_apply(&AffineTransform::translate(x, y));
            node.attribute((XLINK_NS, "href"))
                .or_else(|| node.attribute("href"))
                .and_then(|h| h.strip_prefix('#'))
                .and_then(|id| Some((id, *self.ids.get(id)?)))
        } else {
            None
        };
        el.local_transform = local;

        let parent_world = parent.map_or(AffineTransform::IDENTITY, |p| self.worlds[p]);
        let world = parent_world.then_apply(&local);
        let stretch = world.max_stretch();
        let tolerance = if stretch > 1e-12 { self.tolerance / stretch } else { self.tolerance };
        el.outline = self.outline(&node, tag, tolerance);

        self.elements.push(el);
        self.worlds.push(world);
        self.spans.push(if from_source { Some(start_tag_range(&node)) } else { None });

        if let Some((id, target)) = use_target {
            if use_stack.len() < MAX_USE_DEPTH && !use_stack.contains(&id) {
                use_stack.push(id);
                if target.tag_name().name() == "symbol" {
                    for child in target.children().filter(Node::is_element) {
                        self.visit(child, Some(index), AffineTransform::IDENTITY, false, use_stack);
                    }
                } else {
                    self.visit(target, Some(index), AffineTransform::IDENTITY, false, use_stack);
                }
                use_stack.pop();
            }
        } else if !matches!(tag, "text" | "image" | "use") {
            for child in node.children().filter(Node::is_element) {
                self.visit(child, Some(index), AffineTransform::IDENTITY, from_source, use_stack);
            }
        }
        let end = self.elements.len();
        self.elements[index].subtree_end = end;
    }

    fn len_attr(&self, node: &Node, name: &str, reference: f64) -> f64 {
        node.attribute(name)
            .and_then(|v| svgtypes::Length::from_str(v).ok())
            .map(|l| length_to_user(l, reference))
            .filter(|v| v.is_finite())
            .unwrap_or(0.0)
    }

    /// Placement of a nested `<svg>` viewport (x/y plus viewBox fit,
    /// `xMidYMid meet`).
    fn nested_viewport(&self, node: &Node) -> AffineTransform {
        let x = self.len_attr(node, "x", self.view_box.width());
        let y = self.len_attr(node, "y", self.view_box.height());
        let mut t = AffineTransform::translate(x, y);
        let vb = node.attribute("viewBox").and_then(|v| svgtypes::ViewBox::from_str(v).ok());
        if let Some(vb) = vb.filter(|vb| vb.w > 0.0 && vb.h > 0.0) {
            let w = node.attribute("width").map_or(vb.w, |_| self.len_attr(node, "width", self.view_box.width()));
            let h = node.attribute("height").map_or(vb.h, |_| self.len_attr(node, "height", self.view_box.height()));
            let s = (w / vb.w).min(h / vb.h);
            if s.is_finite() && s > 0.0 {
                let dx = (w - vb.w * s) / 2.0 - vb.x * s;
                let dy = (h - vb.h * s) / 2.0 - vb.y * s;
                t = t.then_apply(&AffineTransform::new(s, 0.0, 0.0, s, dx, dy));
            }
        }
        t
    }

    fn outline(&self, node: &Node, tag: &str, tolerance: f64) -> Vec<Vec<Point>> {
        let (vw, vh) = (self.view_box.width(), self.view_box.height());
        let diag = (vw * vw + vh * vh).sqrt() / std::f64::consts::SQRT_2;
        let num = |name: &str, reference: f64| self.len_attr(node, name, reference);
        match tag {
            "rect" | "image" => {
                let (w, h) = (num("width", vw), num("height", vh));
                if w <= 0.0 || h <= 0.0 {
                    return Vec::new();
                }
                let rx_attr = node.attribute("rx").map(|_| num("rx", vw));
                let ry_attr = node.attribute("ry").map(|_| num("ry", vh));
                let (rx, ry) = match (rx_attr, ry_attr) {
                    (Some(rx), Some(ry)) => (rx, ry),
                    (Some(r), None) | (None, Some(r)) => (r, r),
                    (None, None) => (0.0, 0.0),
                };
                let (rx, ry) = if tag == "image" { (0.0, 0.0) } else { (rx, ry) };
                vec![flatten::rounded_rect(num("x", vw), num("y", vh), w, h, rx, ry, tolerance)]
            }
            "circle" => {
                let r = num("r", diag);
                if r <= 0.0 {
                    return Vec::new();
                }
                vec![flatten::ellipse(Point::new(num("cx", vw), num("cy", vh)), r, r, tolerance)]
            }
            "ellipse" => {
                let (rx, ry) = (num("rx", vw), num("ry", vh));
                if rx <= 0.0 || ry <= 0.0 {
                    return Vec::new();
                }
                vec![flatten::ellipse(Point::new(num("cx", vw), num("cy", vh)), rx, ry, tolerance)]
            }
            "line" => vec![vec![Point::new(num("x1", vw), num("y1", vh)), Point::new(num("x2", vw), num("y2", vh))]],
            "polyline" | "polygon" => {
                let mut pts: Vec<Point> = node
                    .attribute("points")
                    .map(|p| svgtypes::PointsParser::from(p).map(|(x, y)| Point::new(x, y)).collect())
                    .unwrap_or_default();
                if tag == "polygon" && pts.len() > 1 {
                    pts.push(pts[0]);
                }
                if pts.is_empty() {
                    Vec::new()
                } else {
                    vec![pts]
                }
            }
            "path" => {
                let Some(d) = node.attribute("d") else { return Vec::new() };
                let mut segments = Vec::new();
                // Path data is rendered up to the first error.
                for seg in svgtypes::SimplifyingPathParser::from(d) {
                    let Ok(seg) = seg else { break };
                    use svgtypes::SimplePathSegment as S;
                    segments.push(match seg {
                        S::MoveTo { x, y } => PathSegment::MoveTo(Point::new(x, y)),
                        S::LineTo { x, y } => PathSegment::LineTo(Point::new(x, y)),
                        S::Quadratic { x1, y1, x, y } => PathSegment::QuadTo(Point::new(x1, y1), Point::new(x, y)),
                        S::CurveTo { x1, y1, x2, y2, x, y } => {
                            PathSegment::CubicTo(Point::new(x1, y1), Point::new(x2, y2), Point::new(x, y))
                        }
                        S::ClosePath => PathSegment::Close,
                    });
                }
                flatten::flatten_path(&segments, tolerance)
            }
            _ => Vec::new(),
        }
    }
}

/// Byte range of `<name ...>` or `<name .../>` for an element node.
fn start_tag_range(node: &Node) -> Range<usize> {
    let range = node.range();
    let text = node.document().input_text();
    let bytes = text.as_bytes();
    let mut quote: Option<u8> = None;
    let mut i = range.start;
    while i < range.end {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => return range.start..i + 1,
            None => {}
        }
        i += 1;
    }
    range
}

/// Qualified name of an element or attribute as written in the source.
pub(crate) fn element_qname<'a>(node: &Node<'a, '_>) -> String {
    let name = node.tag_name();
    match name.namespace().and_then(|ns| node.lookup_prefix(ns)) {
        Some(prefix) if !prefix.is_empty() => format!("{prefix}:{}", name.name()),
        _ => name.name().to_owned(),
    }
}

pub(crate) fn is_non_rendered(tag: &str) -> bool {
    NON_RENDERED.contains(&tag)
}

pub(crate) fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn escape_text(value: &str) -> String {
    value.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub(crate) fn is_element_or_text(node: &Node) -> bool {
    matches!(node.node_type(), NodeType::Element | NodeType::Text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sway_core::Selector;

    #[test]
    fn minimal_document() {
        let doc = parse_document(r#"<svg viewBox="0 0 100 100"><circle class="petal" cx="10" cy="10" r="5"/></svg>"#).unwrap();
        assert_eq!(doc.len(), 1);
        assert_eq!(doc.elements()[0].classes, vec!["petal".to_string()]);
        assert_eq!(doc.view_box(), Rect::from_origin_size(0.0, 0.0, 100.0, 100.0));
        let b = doc.bounding_box(0).unwrap();
        assert!((b.min_x - 5.0).abs() < 1e-9 && (b.max_y - 15.0).abs() < 1e-9);
    }

    #[test]
    fn truncated_xml_is_malformed() {
        assert!(matches!(parse_document("<svg><circle"), Err(SvgError::MalformedSvg { .. })));
        assert!(matches!(parse_document("<html/>"), Err(SvgError::MalformedSvg { .. })));
    }

    #[test]
    fn viewbox_from_width_height() {
        let doc = parse_document(r#"<svg width="200px" height="50"><rect width="10" height="10"/></svg>"#).unwrap();
        assert_eq!(doc.view_box(), Rect::from_origin_size(0.0, 0.0, 200.0, 50.0));
        assert_eq!(parse_document(r#"<svg width="100%"><rect/></svg>"#), Err(SvgError::MissingViewBox));
        assert_eq!(parse_document("<svg/>"), Err(SvgError::MissingViewBox));
    }

    #[test]
    fn transforms_compose_through_groups() {
        let doc = parse_document(
            r#"<svg viewBox="0 0 100 100"><g transform="translate(10,0)"><rect class="box" width="10" height="10"/></g></svg>"#,
        )
        .unwrap();
        let box_index = doc.select_group(&Selector::from(".box"))[0];
        assert_eq!(doc.bounding_box(box_index).unwrap(), Rect::new(10.0, 0.0, 20.0, 10.0));
        assert_eq!(doc.midpoint(box_index).unwrap(), Point::new(15.0, 5.0));
        assert_eq!(doc.bounding_box(0).unwrap(), Rect::new(10.0, 0.0, 20.0, 10.0));
    }

    #[test]
    fn data_attributes_and_presentation() {
        let doc = parse_document(
            r#"<svg viewBox="0 0 100 100"><g fill="red"><rect data-value="42" style="opacity: 0.5; stroke: blue" width="30" height="40"/></g></svg>"#,
        )
        .unwrap();
        let rect = &doc.elements()[1];
        assert_eq!(rect.data_attributes.get("value").map(String::as_str), Some("42"));
        assert_eq!(rect.presentation.get("stroke").map(String::as_str), Some("#0000ff"));
        assert_eq!(doc.presentation(1, "fill", true), Some("#ff0000"));
        assert_eq!(doc.data_value(1, Some("value")).unwrap(), 42.0);
        assert_eq!(doc.data_value(1, None).unwrap(), 50.0);
    }

    #[test]
    fn use_and_nested_svg_are_inlined() {
        let doc = parse_document(
            r##"<svg viewBox="0 0 100 100" xmlns:xlink="http://www.w3.org/1999/xlink">
                 <defs><circle id="dot" class="dot" r="2"/></defs>
                 <use xlink:href="#dot" x="10" y="20"/>
                 <use href="#dot" x="50" y="50"/>
                 <svg x="60" y="0" width="20" height="20" viewBox="0 0 10 10"><rect class="inner" width="10" height="10"/></svg>
               </svg>"##,
        )
        .unwrap();
        let dots = doc.select_group(&".dot".into());
        assert_eq!(dots.len(), 2);
        assert_eq!(doc.midpoint(dots[0]).unwrap(), Point::new(10.0, 20.0));
        assert!(doc.tag_span(dots[0]).is_none());
        let inner = doc.select_group(&".inner".into())[0];
        assert_eq!(doc.bounding_box(inner).unwrap(), Rect::new(60.0, 0.0, 80.0, 20.0));
    }

    #[test]
    fn recursive_use_terminates() {
        let doc = parse_document(r##"<svg viewBox="0 0 10 10"><g id="a"><use href="#a"/><rect width="1" height="1"/></g></svg>"##).unwrap();
        assert!(doc.len() < 200);
    }

    #[test]
    fn rotated_rect_box_matches_boundary_sampling() {
        let doc = parse_document(r#"<svg viewBox="0 0 20 20"><rect width="10" height="4" transform="rotate(45 5 2)"/></svg>"#).unwrap();
        let b = doc.bounding_box(0).unwrap();
        let t = AffineTransform::rotate_about(45.0, Point::new(5.0, 2.0));
        let mut oracle: Option<Rect> = None;
        for i in 0..10_000 {
            let s = i as f64 / 10_000.0 * 28.0;
            let p = if s < 10.0 {
                Point::new(s, 0.0)
            } else if s < 14.0 {
                Point::new(10.0, s - 10.0)
            } else if s < 24.0 {
                Point::new(24.0 - s, 4.0)
            } else {
                Point::new(0.0, 28.0 - s)
            };
            let q = t.apply(p);
            oracle = Some(oracle.map_or(Rect::new(q.x, q.y, q.x, q.y), |mut r| {
                r.include(q);
                r
            }));
        }
        let o = oracle.unwrap();
        for (a, e) in [(b.min_x, o.min_x), (b.min_y, o.min_y), (b.max_x, o.max_x), (b.max_y, o.max_y)] {
            assert!((a - e).abs() <= DEFAULT_TOLERANCE, "{a} vs {e}");
        }
    }

    #[test]
    fn curved_path_box_within_tolerance() {
        let doc = parse_document(r#"<svg viewBox="0 0 100 100"><path d="M0 0 C 0 50 100 50 100 0 A 50 20 0 0 0 0 0 Z"/></svg>"#).unwrap();
        let b = doc.bounding_box(0).unwrap();
        // Cubic peaks at y = 37.5; the arc bulges upward by 20.
        assert!((b.max_y - 37.5).abs() <= DEFAULT_TOLERANCE);
        assert!((b.min_y + 20.0).abs() <= DEFAULT_TOLERANCE);
    }
}
