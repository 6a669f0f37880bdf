//! Page simplification and complexity classification.
//!
//! [`simplify`] removes every element whose removal leaves the rendered
//! screenshot unchanged. Elements are tried one at a time in document order
//! against a baseline screenshot of the whitespace-normalized page; a
//! removal is kept only when the oracle reports the screenshots equal.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{is_html_whitespace, DomTree, Element, Node, NodeId};
use crate::render::{visually_equal, DecodeError, RenderError, Renderer, VisualOracleConfig};
use crate::style::{parse_declarations, StyleSheet};

pub use crate::render::{RendererCommand, VisualOracleConfig as OracleConfig};

/// Tags never removed by [`simplify`].
pub const FUNDAMENTAL_TAGS: [&str; 5] = ["html", "head", "body", "title", "meta"];

/// Elements whose text keeps its whitespace.
const PREFORMATTED: &[&str] = &["script", "style", "pre", "textarea"];

/// Prefix of the classes generated by [`externalize_inline_styles`].
pub const EXTERNALIZED_CLASS_PREFIX: &str = "iwb-s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Removed,
    Kept,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    /// Id in the whitespace-normalized input tree.
    pub node_id: NodeId,
    pub tag: String,
    pub verdict: Verdict,
    pub oracle_equal: bool,
    /// Elements in the subtree that was tried, the node included.
    pub subtree_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplificationLog {
    pub attempts: Vec<Attempt>,
    pub initial_count: usize,
    pub final_count: usize,
}

impl SimplificationLog {
    pub fn removed(&self) -> impl Iterator<Item = &Attempt> {
        self.attempts.iter().filter(|a| a.verdict == Verdict::Removed)
    }

    /// Elements removed, descendants of removed nodes included.
    pub fn removed_elements(&self) -> usize {
        self.removed().map(|a| a.subtree_size).sum()
    }
}

#[derive(Debug, Error)]
pub enum SimplifyError {
    #[error("renderer failed after {} attempts: {source}", log.attempts.len())]
    Renderer {
        #[source]
        source: RenderError,
        log: SimplificationLog,
    },
    #[error("oracle could not read a screenshot: {0}")]
    Decode(#[from] DecodeError),
    #[error("work directory i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid oracle configuration: differing pixel fraction must lie in [0, 1]")]
    InvalidOracle,
}

/// Collapses whitespace runs in text to single spaces. Comments and
/// whitespace-only text are already gone after parsing.
pub fn strip_invisibles(tree: &DomTree) -> DomTree {
    fn visit(el: &mut Element) {
        if PREFORMATTED.contains(&el.tag.as_str()) {
            return;
        }
        for item in &mut el.content {
            match item {
                Node::Text(t) => *t = collapse_whitespace(t),
                Node::Element(child) => visit(child),
            }
        }
    }
    let mut root = tree.to_element();
    visit(&mut root);
    DomTree::from_element(root)
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_run = false;
    for c in s.chars() {
        if is_html_whitespace(c) {
            if !in_run {
                out.push(' ');
            }
            in_run = true;
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

/// Moves every nonempty `style` attribute into a generated class rule.
///
/// Elements get classes `iwb-s1`, `iwb-s2`, ... in document order and the
/// returned CSS holds one `.iwb-sN{...}` rule per class, meant to be placed
/// after the document's own stylesheets. A declaration that some matching
/// rule with higher specificity than a single class would override is
/// emitted `!important`, so the cascade result is unchanged.
pub fn externalize_inline_styles(tree: &DomTree) -> (DomTree, String) {
    let sheet = StyleSheet::from_document(tree);
    let mut root = tree.to_element();
    let mut css = String::new();
    let mut counter = 0usize;
    let mut id = 0usize;
    root.walk_mut(&mut |el| {
        let node = id;
        id += 1;
        let Some(style) = el.attributes.get("style") else { return };
        if style.trim().is_empty() {
            return;
        }
        let (decls, _) = parse_declarations(style);
        el.attributes.shift_remove("style");
        if decls.is_empty() {
            return;
        }
        counter += 1;
        let class = format!("{EXTERNALIZED_CLASS_PREFIX}{counter}");
        el.add_class(&class);

        let matching: Vec<_> = sheet.rules.iter().filter(|r| r.selector.matches(tree, node)).collect();
        let body: Vec<String> = decls
            .iter()
            .map(|d| {
                let overridden = !d.important
                    && !matching.iter().any(|r| r.important.contains(&d.property))
                    && matching
                        .iter()
                        .any(|r| r.declarations.contains_key(&d.property) && r.selector.specificity() > (0, 1, 0));
                let bang = if d.important || overridden { " !important" } else { "" };
                format!("{}:{}{}", d.property, d.value, bang)
            })
            .collect();
        if !css.is_empty() {
            css.push('\n');
        }
        let _ = write!(css, ".{class}{{{}}}", body.join(";"));
    });
    (DomTree::from_element(root), css)
}

/// Appends `css` as a `<style>` element at the end of `<head>`.
pub fn attach_stylesheet(tree: &DomTree, css: &str) -> DomTree {
    if css.is_empty() {
        return tree.clone();
    }
    let mut root = tree.to_element();
    if let Some(head) = root.children_mut().next() {
        head.content.push(Node::Element(Element::new("style").with_text(css)));
    }
    DomTree::from_element(root)
}

fn has_fundamental_descendant(tree: &DomTree, id: NodeId) -> bool {
    tree.subtree(id).skip(1).any(|d| FUNDAMENTAL_TAGS.contains(&tree.node(d).tag.as_str()))
}

/// Visually validated element removal.
///
/// Renders a baseline screenshot of `strip_invisibles(tree)`, then for each
/// element in document order (skipping fundamental tags, elements inside an
/// already removed subtree and elements that contain a fundamental tag)
/// renders the page without that element and keeps the removal iff the
/// oracle finds the screenshots equal. The renderer runs exactly
/// `1 + attempts` times. Scratch files go to `workdir`.
pub fn simplify<R: Renderer>(
    tree: &DomTree,
    mut renderer: R,
    oracle: &VisualOracleConfig,
    workdir: &Path,
) -> Result<(DomTree, SimplificationLog), SimplifyError> {
    if !oracle.is_valid() {
        return Err(SimplifyError::InvalidOracle);
    }
    std::fs::create_dir_all(workdir)?;
    let base = strip_invisibles(tree);
    let mut log = SimplificationLog { initial_count: base.len(), ..Default::default() };

    let baseline_html = workdir.join("baseline.html");
    let baseline_png = workdir.join("baseline.png");
    std::fs::write(&baseline_html, base.serialize())?;
    if let Err(source) = renderer.render(&baseline_html, &baseline_png) {
        return Err(SimplifyError::Renderer { source, log });
    }

    let candidate_html = workdir.join("candidate.html");
    let candidate_png = workdir.join("candidate.png");
    let mut removed = BTreeSet::new();
    for id in base.traverse() {
        let node = base.node(id);
        if FUNDAMENTAL_TAGS.contains(&node.tag.as_str())
            || base.ancestors(id).any(|a| removed.contains(&a.node_id))
            || has_fundamental_descendant(&base, id)
        {
            continue;
        }
        let mut trial = removed.clone();
        trial.insert(id);
        std::fs::write(&candidate_html, base.without(&trial).serialize())?;
        if let Err(source) = renderer.render(&candidate_html, &candidate_png) {
            return Err(SimplifyError::Renderer { source, log });
        }
        let equal = visually_equal(&baseline_png, &candidate_png, oracle)?;
        if equal {
            removed = trial;
        }
        log.attempts.push(Attempt {
            node_id: id,
            tag: node.tag.clone(),
            verdict: if equal { Verdict::Removed } else { Verdict::Kept },
            oracle_equal: equal,
            subtree_size: base.subtree(id).len(),
        });
    }
    let simplified = base.without(&removed);
    log.final_count = simplified.len();
    Ok((simplified, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Simple,
    Medium,
    Complex,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Simple, Level::Medium, Level::Complex];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Simple => "simple",
            Level::Medium => "medium",
            Level::Complex => "complex",
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown level {s:?}; expected simple, medium or complex"))
    }
}

/// Advisory JavaScript usage label; does not affect the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JsUsage {
    NoneOrMinimal,
    Moderate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityLevel {
    pub level: Level,
    pub element_count: usize,
    pub attribute_count: usize,
    pub event_count: usize,
    pub js_usage: JsUsage,
}

/// Simple up to 20 elements and 20 attributes, complex from 61 of either,
/// medium otherwise.
pub fn level_for(element_count: usize, attribute_count: usize) -> Level {
    if element_count >= 61 || attribute_count >= 61 {
        Level::Complex
    } else if element_count <= 20 && attribute_count <= 20 {
        Level::Simple
    } else {
        Level::Medium
    }
}

pub fn js_usage_for(event_count: usize) -> JsUsage {
    match event_count {
        0..=2 => JsUsage::NoneOrMinimal,
        3..=10 => JsUsage::Moderate,
        _ => JsUsage::High,
    }
}

/// Counts elements (html/head/body excluded), their attributes and bound
/// `on*` events.
pub fn classify(tree: &DomTree) -> ComplexityLevel {
    let (mut elements, mut attributes, mut events) = (0, 0, 0);
    for node in tree.content_elements() {
        elements += 1;
        attributes += node.attributes.len();
        events += node.event_bindings.len();
    }
    ComplexityLevel {
        level: level_for(elements, attributes),
        element_count: elements,
        attribute_count: attributes,
        event_count: events,
        js_usage: js_usage_for(events),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;
    use crate::metrics::StyledTree;

    #[test]
    fn collapses_internal_whitespace() {
        let t = parse_html("<p>a   b\n c</p><pre>x   y</pre>").unwrap();
        let s = strip_invisibles(&t);
        assert_eq!(s.find_by_tag("p").next().unwrap().text, "a b c");
        assert_eq!(s.find_by_tag("pre").next().unwrap().text, "x   y");
        let clean = parse_html("<div><p>a b</p></div>").unwrap();
        assert!(strip_invisibles(&clean).structurally_eq(&clean));
        let blank = parse_html("<p>  </p>").unwrap();
        assert_eq!(strip_invisibles(&blank).find_by_tag("p").next().unwrap().text, "");
    }

    #[test]
    fn externalizes_single_style() {
        let t = parse_html(r#"<p style="color:red">x</p>"#).unwrap();
        let (out, css) = externalize_inline_styles(&t);
        let p = out.find_by_tag("p").next().unwrap();
        assert_eq!(p.attr("class"), Some("iwb-s1"));
        assert_eq!(p.attr("style"), None);
        assert_eq!(css, ".iwb-s1{color:red}");
    }

    #[test]
    fn no_inline_styles_is_identity() {
        let t = parse_html("<div class=a><p>x</p></div>").unwrap();
        let (out, css) = externalize_inline_styles(&t);
        assert!(out.structurally_eq(&t));
        assert!(css.is_empty());
    }

    fn assert_styles_preserved(html: &str) {
        let t = parse_html(html).unwrap();
        let (out, css) = externalize_inline_styles(&t);
        let before = StyledTree::new(&t);
        let mut sheet = StyleSheet::from_document(&out);
        sheet.append(&css);
        let after = StyledTree::with_sheet(&out, &sheet);
        for id in 0..t.len() {
            assert_eq!(
                crate::style::style_similarity::<f64>(&before.styles[id], &after.styles[id]),
                1.0,
                "node {id} ({}) in {html}",
                t.node(id).tag
            );
            assert_eq!(before.styles[id], after.styles[id]);
        }
        // The same holds with the sheet attached to the document.
        let attached = attach_stylesheet(&out, &css);
        let styled = StyledTree::new(&attached);
        let kept: Vec<_> = attached
            .traverse()
            .into_iter()
            .filter(|&i| !(attached.node(i).tag == "style" && attached.node(i).text == css))
            .collect();
        assert_eq!(kept.len(), t.len());
        for (orig, new) in (0..t.len()).zip(kept) {
            assert_eq!(before.styles[orig], styled.styles[new]);
        }
    }

    #[test]
    fn two_styled_elements_in_document_order() {
        let html = r#"<div style="width:10px"><p style="color:red;font-size:12px" class="x">a</p></div>"#;
        let t = parse_html(html).unwrap();
        let (out, css) = externalize_inline_styles(&t);
        assert_eq!(out.find_by_tag("div").next().unwrap().attr("class"), Some("iwb-s1"));
        assert_eq!(out.find_by_tag("p").next().unwrap().attr("class"), Some("x iwb-s2"));
        assert_eq!(css, ".iwb-s1{width:10px}\n.iwb-s2{color:red;font-size:12px}");
        assert_styles_preserved(html);
    }

    #[test]
    fn externalized_styles_survive_stronger_rules() {
        assert_styles_preserved(
            r#"<style>#i{color:blue} .card p{color:gray} p{margin-top:4px}</style>
               <div class="card"><p id="i" style="color:red;margin-top:8px">a</p><p style="color:green">b</p></div>"#,
        );
        assert_styles_preserved(
            r#"<style>p{color:blue !important}</style><p style="color:red">a</p><p style="color:red !important">b</p>"#,
        );
    }

    #[test]
    fn complexity_levels() {
        assert_eq!(level_for(15, 10), Level::Simple);
        assert_eq!(level_for(45, 30), Level::Medium);
        assert_eq!(level_for(100, 80), Level::Complex);
        assert_eq!(level_for(20, 20), Level::Simple);
        assert_eq!(level_for(21, 21), Level::Medium);
        assert_eq!(level_for(60, 60), Level::Medium);
        assert_eq!(level_for(61, 20), Level::Complex);
        assert_eq!(level_for(20, 61), Level::Complex);
        assert_eq!(level_for(0, 0), Level::Simple);
        assert_eq!(level_for(21, 0), Level::Medium);
    }

    #[test]
    fn classify_counts_content_elements() {
        let t =
            parse_html(r#"<html lang="en"><body class="b"><div id="a" onclick="x()"><p>1</p></div><br></body></html>"#)
                .unwrap();
        let c = classify(&t);
        assert_eq!(c.element_count, 3);
        assert_eq!(c.attribute_count, 2);
        assert_eq!(c.event_count, 1);
        assert_eq!(c.level, Level::Simple);
        assert_eq!(c.js_usage, JsUsage::NoneOrMinimal);
        assert_eq!(js_usage_for(3), JsUsage::Moderate);
        assert_eq!(js_usage_for(10), JsUsage::Moderate);
        assert_eq!(js_usage_for(11), JsUsage::High);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("medium".parse::<Level>(), Ok(Level::Medium));
        assert!("hard".parse::<Level>().is_err());
    }
}
