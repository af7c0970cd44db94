//! Shrinks an SVG to fit a prompt token budget by stripping attributes that
//! do not affect appearance and sampling repetitive elements.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use roxmltree::{Node, NodeType};
use sway_core::coordination::SplitMix64;

use super::{element_qname, escape_attr, escape_text, is_non_rendered, SvgDocument, SvgError};

const KEPT_ATTRIBUTES: &[&str] = &[
    "id",
    "class",
    "transform",
    "style",
    "fill",
    "stroke",
    "opacity",
    "stroke-width",
    "fill-opacity",
    "stroke-opacity",
    "x",
    "y",
    "width",
    "height",
    "cx",
    "cy",
    "r",
    "rx",
    "ry",
    "x1",
    "y1",
    "x2",
    "y2",
    "points",
    "d",
    "viewBox",
    "href",
];

const SEARCH_STEPS: usize = 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CondenseError {
    #[error("token budget must be positive")]
    ZeroBudget,
    #[error("budget of {budget} tokens is too small: one exemplar per element kind needs {required}")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error(transparent)]
    Svg(#[from] SvgError),
}

/// Token estimate used for prompt budgeting: a quarter token per byte, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CondenseEntry {
    pub label: String,
    pub kept: usize,
    pub total: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CondenseReport {
    pub entries: Vec<CondenseEntry>,
}

impl CondenseReport {
    pub fn is_passthrough(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.entries.iter().map(|e| e.total - e.kept).sum()
    }

    pub fn lines(&self) -> Vec<String> {
        self.entries.iter().map(|e| format!("{}: kept {} of {}", e.label, e.kept, e.total)).collect()
    }
}

impl fmt::Display for CondenseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Signature {
    tag: String,
    classes: Vec<String>,
}

fn signature(node: &Node) -> Signature {
    let mut classes: Vec<String> = node.attribute("class").unwrap_or("").split_whitespace().map(str::to_owned).collect();
    classes.sort();
    classes.dedup();
    Signature { tag: node.tag_name().name().to_owned(), classes }
}

/// One sampled element, keyed by its node id inside the parsed tree.
struct Candidate {
    depth: usize,
    sig: usize,
    priority: u64,
    parent: Option<usize>,
}

struct Plan<'a, 'input> {
    root: Node<'a, 'input>,
    /// Sampled elements in document order, indexed by position.
    candidates: Vec<Candidate>,
    position: HashMap<roxmltree::NodeId, usize>,
    forced: HashSet<usize>,
    signatures: Vec<Signature>,
    max_depth: usize,
}

impl<'a, 'input> Plan<'a, 'input> {
    fn new(root: Node<'a, 'input>, seed: u64) -> Self {
        let mut plan =
            Plan { root, candidates: Vec::new(), position: HashMap::new(), forced: HashSet::new(), signatures: Vec::new(), max_depth: 0 };
        let mut sig_ids: HashMap<Signature, usize> = HashMap::new();
        let mut rng = SplitMix64::new(seed);
        let mut stack: Vec<(Node, usize, Option<usize>)> = root.children().filter(Node::is_element).rev().map(|n| (n, 1, None)).collect();
        while let Some((node, depth, parent)) = stack.pop() {
            if is_non_rendered(node.tag_name().name()) {
                continue;
            }
            let sig = signature(&node);
            let next = sig_ids.len();
            let sig = *sig_ids.entry(sig.clone()).or_insert_with(|| {
                plan.signatures.push(sig);
                next
            });
            let pos = plan.candidates.len();
            plan.candidates.push(Candidate { depth, sig, priority: rng.next_u64(), parent });
            plan.position.insert(node.id(), pos);
            plan.max_depth = plan.max_depth.max(depth);
            for child in node.children().filter(Node::is_element).collect::<Vec<_>>().into_iter().rev() {
                stack.push((child, depth + 1, Some(pos)));
            }
        }

        // The lowest-priority instance of every signature is always kept,
        // together with its ancestors.
        let mut exemplar: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, c) in plan.candidates.iter().enumerate() {
            let best = exemplar.entry(c.sig).or_insert(i);
            if c.priority < plan.candidates[*best].priority {
                *best = i;
            }
        }
        for &i in exemplar.values() {
            let mut cur = Some(i);
            while let Some(p) = cur {
                if !plan.forced.insert(p) {
                    break;
                }
                cur = plan.candidates[p].parent;
            }
        }
        plan
    }

    /// Elements kept when each (depth, signature) bucket of surviving
    /// elements retains a `fraction` of its members.
    fn keep_set(&self, fraction: f64) -> Vec<bool> {
        let n = self.candidates.len();
        let mut keep = vec![false; n];
        let mut by_depth: Vec<Vec<usize>> = vec![Vec::new(); self.max_depth + 1];
        for (i, c) in self.candidates.iter().enumerate() {
            by_depth[c.depth].push(i);
        }
        for level in &by_depth {
            let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &i in level {
                let alive = self.candidates[i].parent.is_none_or(|p| keep[p]);
                if alive {
                    buckets.entry(self.candidates[i].sig).or_default().push(i);
                }
            }
            for members in buckets.values_mut() {
                let quota = ((fraction * members.len() as f64).ceil() as usize).clamp(1, members.len());
                members.sort_by_key(|&i| self.candidates[i].priority);
                let forced = members.iter().filter(|i| self.forced.contains(i)).count();
                let mut extra = quota.saturating_sub(forced);
                for &i in members.iter() {
                    if self.forced.contains(&i) {
                        keep[i] = true;
                    } else if extra > 0 {
                        keep[i] = true;
                        extra -= 1;
                    }
                }
            }
        }
        keep
    }

    fn render(&self, keep: &[bool]) -> String {
        let mut out = String::new();
        self.write_node(self.root, keep, true, &mut out);
        out
    }

    fn write_node(&self, node: Node, keep: &[bool], strip: bool, out: &mut String) {
        match node.node_type() {
            NodeType::Text => {
                let text = node.text().unwrap_or("");
                if !text.trim().is_empty() {
                    out.push_str(&escape_text(text));
                }
                return;
            }
            NodeType::Element => {}
            _ => return,
        }
        if let Some(&pos) = self.position.get(&node.id()) {
            if !keep[pos] {
                return;
            }
        }
        let tag = element_qname(&node);
        let strip = strip && !is_non_rendered(node.tag_name().name());
        out.push('<');
        out.push_str(&tag);
        for ns in node.namespaces() {
            let declared_here = node.parent_element().is_none_or(|p| !p.namespaces().any(|q| q == ns));
            if declared_here {
                match ns.name() {
                    Some(prefix) => write!(out, " xmlns:{prefix}=\"{}\"", escape_attr(ns.uri())).unwrap(),
                    None => write!(out, " xmlns=\"{}\"", escape_attr(ns.uri())).unwrap(),
                }
            }
        }
        let is_root = node.parent_element().is_none();
        for attr in node.attributes() {
            let name = attr.name();
            let keep_attr = !strip
                || KEPT_ATTRIBUTES.contains(&name)
                || name.starts_with("data-")
                || (is_root && matches!(name, "width" | "height" | "preserveAspectRatio"));
            if !keep_attr {
                continue;
            }
            let qname = match attr.namespace().and_then(|ns| node.lookup_prefix(ns)) {
                Some(prefix) if !prefix.is_empty() => format!("{prefix}:{name}"),
                _ => name.to_owned(),
            };
            write!(out, " {qname}=\"{}\"", escape_attr(attr.value())).unwrap();
        }
        let children: Vec<Node> = node.children().filter(super::is_element_or_text).collect();
        if children.is_empty() {
            out.push_str("/>");
            return;
        }
        out.push('>');
        for child in children {
            self.write_node(child, keep, strip, out);
        }
        write!(out, "</{tag}>").unwrap();
    }

    fn report(&self, keep: &[bool]) -> CondenseReport {
        let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for (i, c) in self.candidates.iter().enumerate() {
            let sig = &self.signatures[c.sig];
            let labels: Vec<String> = if sig.classes.is_empty() { vec![format!("<{}>", sig.tag)] } else { sig.classes.clone() };
            for label in labels {
                let entry = counts.entry(label).or_default();
                entry.1 += 1;
                if keep[i] {
                    entry.0 += 1;
                }
            }
        }
        CondenseReport { entries: counts.into_iter().map(|(label, (kept, total))| CondenseEntry { label, kept, total }).collect() }
    }
}

/// Returns the document unchanged when it already fits `budget` tokens;
/// otherwise a stripped, seeded sample of it that does, with per-class
/// counts of what was kept.
pub fn condense_for_prompt(doc: &SvgDocument, budget: usize, seed: u64) -> Result<(String, CondenseReport), CondenseError> {
    if budget == 0 {
        return Err(CondenseError::ZeroBudget);
    }
    let text = doc.text();
    if estimate_tokens(text) <= budget {
        return Ok((text.to_owned(), CondenseReport::default()));
    }
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    let xml = roxmltree::Document::parse_with_options(text, opts).map_err(|e| SvgError::MalformedSvg {
        message: e.to_string(),
        line: e.pos().row,
        column: e.pos().col,
    })?;
    let plan = Plan::new(xml.root_element(), seed);

    let fits = |fraction: f64| {
        let keep = plan.keep_set(fraction);
        let out = plan.render(&keep);
        (estimate_tokens(&out) <= budget, out, keep)
    };

    let (ok, out, keep) = fits(1.0);
    if ok {
        return Ok((out, plan.report(&keep)));
    }
    let (ok, mut best, mut best_keep) = fits(0.0);
    if !ok {
        return Err(CondenseError::BudgetTooSmall { budget, required: estimate_tokens(&best) });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..SEARCH_STEPS {
        let mid = (lo + hi) / 2.0;
        let (ok, out, keep) = fits(mid);
        if ok {
            lo = mid;
            best = out;
            best_keep = keep;
        } else {
            hi = mid;
        }
    }
    Ok((best, plan.report(&best_keep)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::parse_document;

    fn dots(n: usize) -> String {
        let mut s = String::from(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1000 1000">"#);
        for i in 0..n {
            write!(
                s,
                r#"<circle class="dot" cx="{}" cy="{}" r="3" fill="steelblue" onclick="x()" aria-label="dot {i}"/>"#,
                i % 100 * 10,
                i / 100 * 10
            )
            .unwrap();
        }
        s.push_str(r#"<rect class="frame" width="1000" height="1000" fill="none"/></svg>"#);
        s
    }

    #[test]
    fn token_estimate_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abc"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }

    #[test]
    fn small_document_passes_through() {
        let text = r#"<svg viewBox="0 0 10 10"><!-- hi --><rect width="1" height="1" foo="bar"/></svg>"#;
        let doc = parse_document(text).unwrap();
        let (out, report) = condense_for_prompt(&doc, 16384, 1).unwrap();
        assert_eq!(out, text);
        assert!(report.is_passthrough());
    }

    #[test]
    fn thousand_dots_are_sampled() {
        let doc = parse_document(&dots(1000)).unwrap();
        let (out, report) = condense_for_prompt(&doc, 2000, 7).unwrap();
        assert!(estimate_tokens(&out) <= 2000);
        let dot = report.entries.iter().find(|e| e.label == "dot").unwrap();
        assert_eq!(dot.total, 1000);
        assert!(dot.kept >= 1 && dot.kept < 1000);
        assert!(report.lines().contains(&format!("dot: kept {} of 1000", dot.kept)));
        let frame = report.entries.iter().find(|e| e.label == "frame").unwrap();
        assert_eq!(frame.kept, 1);
        assert!(!out.contains("onclick") && !out.contains("aria-label"));
        let again = parse_document(&out).unwrap();
        assert_eq!(again.select_group(&".dot".into()).len(), dot.kept);
    }

    #[test]
    fn same_seed_same_bytes() {
        let doc = parse_document(&dots(500)).unwrap();
        let a = condense_for_prompt(&doc, 1500, 42).unwrap();
        let b = condense_for_prompt(&doc, 1500, 42).unwrap();
        assert_eq!(a, b);
        let c = condense_for_prompt(&doc, 1500, 43).unwrap();
        assert_eq!(a.0.len() / 100, c.0.len() / 100);
    }

    #[test]
    fn tiny_budget_fails() {
        let doc = parse_document(&dots(50)).unwrap();
        assert!(matches!(condense_for_prompt(&doc, 1, 0), Err(CondenseError::BudgetTooSmall { budget: 1, .. })));
        assert_eq!(condense_for_prompt(&doc, 0, 0), Err(CondenseError::ZeroBudget));
    }

    #[test]
    fn nested_kinds_each_keep_an_exemplar() {
        let mut s =
            String::from(r#"<svg viewBox="0 0 100 100" xmlns:xlink="http://www.w3.org/1999/xlink"><defs><circle id="c" r="1"/></defs>"#);
        for i in 0..200 {
            s.push_str(r#"<g class="flower">"#);
            for _ in 0..5 {
                write!(s, r#"<path class="petal" d="M{i} 0 L{i} 5 L3 3 Z" fill="red"/>"#).unwrap();
            }
            if i == 123 {
                s.push_str(r##"<use class="stamen" xlink:href="#c"/>"##);
            }
            s.push_str("</g>");
        }
        s.push_str("</svg>");
        let doc = parse_document(&s).unwrap();
        let (out, report) = condense_for_prompt(&doc, 1200, 3).unwrap();
        assert!(estimate_tokens(&out) <= 1200);
        let again = parse_document(&out).unwrap();
        for class in [".flower", ".petal", ".stamen"] {
            assert!(!again.select_group(&class.into()).is_empty(), "{class} lost\n{report}");
        }
        assert!(out.contains("xlink:href=\"#c\""));
    }
}
