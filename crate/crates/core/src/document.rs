//! Parsed document model: elements in rendering order with their outlines,
//! classes and data attributes, plus the group queries the engine needs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::geom::{AffineTransform, Point, Rect};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DocumentError {
    #[error("viewBox must have positive width and height")]
    InvalidViewBox,
    #[error("element {index} is out of order or references an invalid parent/subtree")]
    InvalidTree { index: usize },
    #[error("element index {0} does not exist")]
    UnknownElement(usize),
    #[error("element {0} has no renderable outline")]
    DegenerateGeometry(usize),
    #[error("attribute data-{attribute} of element {index} is not a number: {value:?}")]
    NonNumericAttribute { index: usize, attribute: String, value: String },
}

/// A group identifier. Groups are CSS classes: `.petal` and `petal` both
/// name the class `petal`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct Selector(String);

impl Selector {
    pub fn new(text: impl Into<String>) -> Self {
        Selector(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn class_name(&self) -> &str {
        self.0.trim().trim_start_matches('.')
    }

    pub fn is_empty(&self) -> bool {
        self.class_name().is_empty()
    }

    pub fn matches(&self, element: &ElementNode) -> bool {
        let class = self.class_name();
        !class.is_empty() && element.classes.iter().any(|c| c == class)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Selector {
    fn from(s: &str) -> Self {
        Selector::new(s)
    }
}

impl From<String> for Selector {
    fn from(s: String) -> Self {
        Selector(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ElementNode {
    pub index: usize,
    pub tag: String,
    pub id: Option<String>,
    pub classes: Vec<String>,
    /// `data-*` attributes keyed without the `data-` prefix.
    pub data_attributes: BTreeMap<String, String>,
    /// Presentation properties (attributes and inline style) with colors
    /// normalized to `#rrggbb`.
    pub presentation: BTreeMap<String, String>,
    pub local_transform: AffineTransform,
    /// Flattened outline in the element's local space.
    pub outline: Vec<Vec<Point>>,
    pub parent: Option<usize>,
    /// One past the last descendant (elements are stored in pre-order).
    pub subtree_end: usize,
}

impl ElementNode {
    pub fn new(index: usize, tag: impl Into<String>) -> Self {
        ElementNode {
            index,
            tag: tag.into(),
            id: None,
            classes: Vec::new(),
            data_attributes: BTreeMap::new(),
            presentation: BTreeMap::new(),
            local_transform: AffineTransform::IDENTITY,
            outline: Vec::new(),
            parent: None,
            subtree_end: index + 1,
        }
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes.iter().any(|c| c == class)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorDocument {
    view_box: Rect,
    elements: Vec<ElementNode>,
    styles: Option<String>,
    source_digest: String,
    world: Vec<AffineTransform>,
    boxes: Vec<Option<Rect>>,
}

impl VectorDocument {
    /// Assembles a document from pre-order elements, checking tree
    /// consistency and precomputing root-space transforms and boxes.
    pub fn new(view_box: Rect, elements: Vec<ElementNode>, styles: Option<String>, source_digest: String) -> Result<Self, DocumentError> {
        if !(view_box.width() > 0.0 && view_box.height() > 0.0) {
            return Err(DocumentError::InvalidViewBox);
        }
        let n = elements.len();
        let mut world = Vec::with_capacity(n);
        for (i, el) in elements.iter().enumerate() {
            let parent_ok = match el.parent {
                None => true,
                Some(p) => p < i && i < elements[p].subtree_end,
            };
            if el.index != i || el.subtree_end <= i || el.subtree_end > n || !parent_ok {
                return Err(DocumentError::InvalidTree { index: i });
            }
            let parent_world = el.parent.map_or(AffineTransform::IDENTITY, |p| world[p]);
            world.push(parent_world.then_apply(&el.local_transform));
        }

        let mut boxes: Vec<Option<Rect>> =
            elements.iter().zip(&world).map(|(el, t)| Rect::from_points(el.outline.iter().flatten().map(|&p| t.apply(p)))).collect();
        for i in (0..n).rev() {
            if let (Some(p), Some(b)) = (elements[i].parent, boxes[i]) {
                boxes[p] = Some(match boxes[p] {
                    Some(pb) => pb.union(&b),
                    None => b,
                });
            }
        }

        Ok(VectorDocument { view_box, elements, styles, source_digest, world, boxes })
    }

    pub fn view_box(&self) -> Rect {
        self.view_box
    }

    pub fn elements(&self) -> &[ElementNode] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, index: usize) -> Result<&ElementNode, DocumentError> {
        self.elements.get(index).ok_or(DocumentError::UnknownElement(index))
    }

    pub fn styles(&self) -> Option<&str> {
        self.styles.as_deref()
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }

    /// Element-to-root transform (ancestor transforms applied).
    pub fn world_transform(&self, index: usize) -> Result<AffineTransform, DocumentError> {
        self.world.get(index).copied().ok_or(DocumentError::UnknownElement(index))
    }

    /// Transform from the element's parent space to root space.
    pub fn parent_transform(&self, index: usize) -> Result<AffineTransform, DocumentError> {
        let el = self.element(index)?;
        Ok(el.parent.map_or(AffineTransform::IDENTITY, |p| self.world[p]))
    }

    /// Indices of the elements carrying the selector's class, in document order.
    pub fn select_group(&self, selector: &Selector) -> Vec<usize> {
        self.elements.iter().filter(|e| selector.matches(e)).map(|e| e.index).collect()
    }

    /// Root-space box of the element's flattened outline, including descendants.
    pub fn bounding_box(&self, index: usize) -> Result<Rect, DocumentError> {
        self.element(index)?;
        self.boxes[index].ok_or(DocumentError::DegenerateGeometry(index))
    }

    pub fn midpoint(&self, index: usize) -> Result<Point, DocumentError> {
        Ok(self.bounding_box(index)?.center())
    }

    /// Numeric data value of an element: the named `data-*` attribute when
    /// present, otherwise the diagonal of its bounding box.
    pub fn data_value(&self, index: usize, attribute: Option<&str>) -> Result<f64, DocumentError> {
        let el = self.element(index)?;
        if let Some(name) = attribute {
            let key = name.strip_prefix("data-").unwrap_or(name);
            if let Some(raw) = el.data_attributes.get(key) {
                return match raw.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(DocumentError::NonNumericAttribute { index, attribute: String::from(key), value: raw.clone() }),
                };
            }
        }
        Ok(self.bounding_box(index)?.diagonal())
    }

    /// Looks up a presentation property, walking up the ancestors for
    /// inherited ones.
    pub fn presentation(&self, index: usize, name: &str, inherited: bool) -> Option<&str> {
        let mut cursor = Some(index);
        while let Some(i) = cursor {
            let el = self.elements.get(i)?;
            if let Some(v) = el.presentation.get(name) {
                if v != "inherit" {
                    return Some(v);
                }
            } else if !inherited {
                return None;
            }
            cursor = el.parent;
        }
        None
    }

    /// True when some element of `a` is, contains, or lies inside some
    /// element of `b`.
    pub fn groups_overlap(&self, a: &Selector, b: &Selector) -> bool {
        let ga = self.select_group(a);
        let gb = self.select_group(b);
        self.covers(&ga, &gb) || self.covers(&gb, &ga)
    }

    fn covers(&self, outer: &[usize], inner: &[usize]) -> bool {
        let mut covered = alloc::vec![false; self.elements.len()];
        for &i in outer {
            for flag in &mut covered[i..self.elements[i].subtree_end] {
                *flag = true;
            }
        }
        inner.iter().any(|&i| covered[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatten::{ellipse, rounded_rect, DEFAULT_TOLERANCE};
    use alloc::vec;

    fn circle(index: usize, cx: f64, cy: f64, r: f64, class: &str) -> ElementNode {
        let mut el = ElementNode::new(index, "circle");
        el.classes.push(class.into());
        el.outline = vec![ellipse(Point::new(cx, cy), r, r, DEFAULT_TOLERANCE)];
        el
    }

    fn vb() -> Rect {
        Rect::from_origin_size(0.0, 0.0, 100.0, 100.0)
    }

    #[test]
    fn circle_box_and_midpoint() {
        let doc = VectorDocument::new(vb(), vec![circle(0, 10.0, 10.0, 5.0, "petal")], None, String::new()).unwrap();
        let b = doc.bounding_box(0).unwrap();
        assert!((b.min_x - 5.0).abs() < 1e-9 && (b.max_x - 15.0).abs() < 1e-9);
        assert!((b.min_y - 5.0).abs() < 1e-9 && (b.max_y - 15.0).abs() < 1e-9);
        let m = doc.midpoint(0).unwrap();
        assert!((m.x - 10.0).abs() < 1e-9 && (m.y - 10.0).abs() < 1e-9);
        assert!((doc.data_value(0, None).unwrap() - 10.0 * core::f64::consts::SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn translated_rect_box() {
        let mut el = ElementNode::new(0, "rect");
        el.outline = vec![rounded_rect(0.0, 0.0, 10.0, 10.0, 0.0, 0.0, DEFAULT_TOLERANCE)];
        el.local_transform = AffineTransform::translate(10.0, 0.0);
        let doc = VectorDocument::new(vb(), vec![el], None, String::new()).unwrap();
        assert_eq!(doc.bounding_box(0).unwrap(), Rect::new(10.0, 0.0, 20.0, 10.0));
        assert_eq!(doc.midpoint(0).unwrap(), Point::new(15.0, 5.0));
    }

    #[test]
    fn group_box_is_union_of_children() {
        let mut g = ElementNode::new(0, "g");
        g.subtree_end = 3;
        let mut a = circle(1, 0.0, 0.0, 1.0, "dot");
        a.parent = Some(0);
        let mut b = circle(2, 10.0, 10.0, 1.0, "dot");
        b.parent = Some(0);
        let doc = VectorDocument::new(vb(), vec![g, a, b], None, String::new()).unwrap();
        let m = doc.midpoint(0).unwrap();
        assert!((m.x - 5.0).abs() < 1e-12 && (m.y - 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_group_is_degenerate() {
        let doc = VectorDocument::new(vb(), vec![ElementNode::new(0, "g")], None, String::new()).unwrap();
        assert_eq!(doc.bounding_box(0), Err(DocumentError::DegenerateGeometry(0)));
        assert_eq!(doc.midpoint(0), Err(DocumentError::DegenerateGeometry(0)));
        assert_eq!(doc.bounding_box(3), Err(DocumentError::UnknownElement(3)));
    }

    #[test]
    fn data_values() {
        let mut el = ElementNode::new(0, "rect");
        el.outline = vec![rounded_rect(0.0, 0.0, 30.0, 40.0, 0.0, 0.0, DEFAULT_TOLERANCE)];
        el.data_attributes.insert("value".into(), "42".into());
        el.data_attributes.insert("label".into(), "Norway".into());
        let doc = VectorDocument::new(vb(), vec![el], None, String::new()).unwrap();
        assert_eq!(doc.data_value(0, Some("value")).unwrap(), 42.0);
        assert_eq!(doc.data_value(0, Some("data-value")).unwrap(), 42.0);
        assert_eq!(doc.data_value(0, None).unwrap(), 50.0);
        assert_eq!(doc.data_value(0, Some("missing")).unwrap(), 50.0);
        assert!(matches!(doc.data_value(0, Some("label")), Err(DocumentError::NonNumericAttribute { .. })));
    }

    #[test]
    fn select_group_in_document_order() {
        let els = vec![
            circle(0, 0.0, 0.0, 1.0, "petal"),
            circle(1, 0.0, 0.0, 1.0, "stem"),
            circle(2, 0.0, 0.0, 1.0, "petal"),
            circle(3, 0.0, 0.0, 1.0, "petal"),
        ];
        let doc = VectorDocument::new(vb(), els, None, String::new()).unwrap();
        assert_eq!(doc.select_group(&".petal".into()), vec![0, 2, 3]);
        assert_eq!(doc.select_group(&"petal".into()), vec![0, 2, 3]);
        assert!(doc.select_group(&".nonexistent".into()).is_empty());
        assert!(doc.select_group(&".".into()).is_empty());
    }

    #[test]
    fn rejects_bad_trees() {
        assert_eq!(VectorDocument::new(Rect::new(0.0, 0.0, 0.0, 10.0), vec![], None, String::new()), Err(DocumentError::InvalidViewBox));
        let mut el = ElementNode::new(0, "g");
        el.parent = Some(0);
        assert!(VectorDocument::new(vb(), vec![el], None, String::new()).is_err());
    }

    #[test]
    fn overlap_through_ancestry() {
        let mut g = ElementNode::new(0, "g");
        g.classes.push("flower".into());
        g.subtree_end = 2;
        let mut p = circle(1, 0.0, 0.0, 1.0, "petal");
        p.parent = Some(0);
        let other = circle(2, 5.0, 5.0, 1.0, "dot");
        let doc = VectorDocument::new(vb(), vec![g, p, other], None, String::new()).unwrap();
        assert!(doc.groups_overlap(&".flower".into(), &".petal".into()));
        assert!(doc.groups_overlap(&".petal".into(), &".flower".into()));
        assert!(!doc.groups_overlap(&".dot".into(), &".petal".into()));
    }
}
