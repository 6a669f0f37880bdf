//! Declared-style resolution and the filtered style maps compared by the
//! style perspective.

mod css;
mod selector;

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;

pub use css::{parse_css, parse_declarations, CssDiagnostic, Declaration, StyleRule};
pub use selector::{parse_selector, Compound, Selector, Specificity};

use crate::dom::{DomTree, NodeId};
use crate::scalar::Scalar;

/// Values treated as "not styled".
pub const DEFAULT_VALUES: [&str; 7] = ["none", "0", "normal", "0px", "auto", "rgba(0, 0, 0, 0)", "rgb(0, 0, 0)"];

/// Properties compared by the style perspective.
pub const KEEP_PROPERTIES: &[&str] = &[
    "color",
    "display",
    "font-family",
    "font-size",
    "height",
    "line-height",
    "margin-top",
    "text-align",
    "width",
    "background-color",
    "border-bottom-color",
    "border-bottom-left-radius",
    "border-bottom-right-radius",
    "border-bottom-style",
    "border-bottom-width",
    "border-image-outset",
    "border-image-repeat",
    "border-image-slice",
    "border-image-source",
    "border-image-width",
    "border-left-color",
    "border-left-style",
    "border-left-width",
    "border-right-color",
    "border-right-style",
    "border-right-width",
    "border-top-color",
    "border-top-left-radius",
    "border-top-right-radius",
    "border-top-style",
    "border-top-width",
    "box-shadow",
    "z-index",
    "margin-bottom",
    "margin-left",
    "margin-right",
    "padding-bottom",
    "padding-left",
    "padding-right",
    "padding-top",
    "position",
    "font-weight",
    "overflow-x",
    "overflow-y",
    "outline-color",
    "outline-style",
    "outline-width",
    "text-indent",
    "vertical-align",
    "background-attachment",
    "background-clip",
    "background-image",
    "background-origin",
    "background-position-x",
    "background-position-y",
    "background-repeat",
    "background-size",
    "border-style",
    "border-width",
    "box-sizing",
    "cursor",
    "font-feature-settings",
    "font-kerning",
    "font-optical-sizing",
    "font-variant-alternates",
    "font-variant-caps",
    "font-variant-east-asian",
    "font-variant-ligatures",
    "font-variant-numeric",
    "font-variant-position",
    "font-variation-settings",
    "letter-spacing",
    "opacity",
    "text-decoration",
    "text-decoration-color",
    "text-decoration-style",
    "text-emphasis-color",
    "text-emphasis-position",
    "text-overflow",
    "text-rendering",
    "text-shadow",
    "text-transform",
    "white-space-collapse",
    "word-spacing",
    "writing-mode",
    "align-items",
    "appearance",
    "background",
    "border",
    "flex-direction",
    "flex-shrink",
    "flex-wrap",
    "grid-auto-flow",
    "justify-content",
    "object-fit",
    "object-position",
    "overflow",
    "padding",
    "text-emphasis",
    "transform",
    "transition",
    "animation",
    "visibility",
    "white-space",
    "-webkit-font-smoothing",
    "-webkit-rtl-ordering",
    "-webkit-tap-highlight-color",
];

pub fn is_kept_property(property: &str) -> bool {
    KEEP_PROPERTIES.contains(&property)
}

/// Filtered style of one element: keep-list properties with non-default,
/// normalized values.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct StyleMap {
    pub properties: BTreeMap<String, String>,
}

impl StyleMap {
    pub fn get(&self, property: &str) -> Option<&str> {
        self.properties.get(property).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.properties.is_empty()
    }
}

/// All rules that apply to a document, in one source order.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StyleSheet {
    pub rules: Vec<StyleRule>,
    pub diagnostics: Vec<CssDiagnostic>,
}

impl StyleSheet {
    /// Rules from every `<style>` element, in document order.
    pub fn from_document(tree: &DomTree) -> StyleSheet {
        let mut sheet = StyleSheet::default();
        for node in tree.find_by_tag("style") {
            sheet.append(&node.text);
        }
        sheet
    }

    /// Appends stylesheet text after the existing rules.
    pub fn append(&mut self, css: &str) {
        let next = self.rules.last().map_or(0, |r| r.source_order + 1);
        css::append_rules(css, next, &mut self.rules, &mut self.diagnostics);
    }
}

/// Raw declared style of `node`: matching rules by (specificity, source
/// order), then the inline style; `!important` declarations in a second
/// pass with the same ordering.
pub fn declared_style(tree: &DomTree, rules: &[StyleRule], node: NodeId) -> IndexMap<String, String> {
    // (important, inline, specificity, order)
    type Key = (bool, bool, Specificity, usize);
    let mut entries: Vec<(Key, &str, &str)> = Vec::new();
    for rule in rules.iter().filter(|r| r.selector.matches(tree, node)) {
        let spec = rule.selector.specificity();
        for (prop, value) in &rule.declarations {
            let important = rule.important.contains(prop);
            entries.push(((important, false, spec, rule.source_order), prop, value));
        }
    }
    let inline = tree.node(node).attr("style").map(|s| parse_declarations(s).0).unwrap_or_default();
    for (i, d) in inline.iter().enumerate() {
        entries.push(((d.important, true, (0, 0, 0), i), &d.property, &d.value));
    }
    entries.sort_by_key(|e| e.0);
    let mut out = IndexMap::new();
    for (_, prop, value) in entries {
        out.shift_remove(prop);
        out.insert(prop.to_string(), value.to_string());
    }
    out
}

/// Trims and lowercases a value outside quoted strings and `url(...)`.
pub fn normalize_value(value: &str) -> String {
    let value = value.trim();
    let mut out = String::with_capacity(value.len());
    let mut rest = value;
    while let Some(c) = rest.chars().next() {
        let verbatim_end = if c == '"' || c == '\'' {
            rest[1..].find(c).map_or(rest.len(), |i| i + 2)
        } else if rest.get(..4).is_some_and(|p| p.eq_ignore_ascii_case("url(")) {
            out.push_str("url(");
            rest = &rest[4..];
            rest.find(')').map_or(rest.len(), |i| i + 1)
        } else {
            out.push(c.to_ascii_lowercase());
            rest = &rest[c.len_utf8()..];
            continue;
        };
        out.push_str(&rest[..verbatim_end]);
        rest = &rest[verbatim_end..];
    }
    out
}

pub fn is_default_value(value: &str) -> bool {
    DEFAULT_VALUES.contains(&value.trim())
}

/// Restricts to the keep-list and drops default values.
pub fn filter_style<'a>(raw: impl IntoIterator<Item = (&'a String, &'a String)>) -> StyleMap {
    let properties = raw
        .into_iter()
        .filter(|(p, _)| is_kept_property(p))
        .map(|(p, v)| (p.clone(), normalize_value(v)))
        .filter(|(_, v)| !is_default_value(v))
        .collect();
    StyleMap { properties }
}

/// Fraction of properties (over the union of keys) with equal values; 1 for
/// two empty maps.
pub fn style_similarity<S: Scalar>(a: &StyleMap, b: &StyleMap) -> S {
    let matching = a.properties.iter().filter(|(p, v)| b.properties.get(*p) == Some(*v)).count();
    let union = a.len() + b.properties.keys().filter(|p| !a.properties.contains_key(*p)).count();
    S::ratio_or(matching, union, S::one())
}

/// Filtered style of every node, indexed by node id.
pub fn resolve_styles(tree: &DomTree, sheet: &StyleSheet) -> Vec<StyleMap> {
    (0..tree.len()).map(|id| filter_style(&declared_style(tree, &sheet.rules, id))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;
    use num_rational::Ratio;

    fn map(pairs: &[(&str, &str)]) -> IndexMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn style_of(html: &str, tag: &str) -> IndexMap<String, String> {
        let tree = parse_html(html).unwrap();
        let sheet = StyleSheet::from_document(&tree);
        let id = tree.find_by_tag(tag).next().unwrap().node_id;
        declared_style(&tree, &sheet.rules, id)
    }

    #[test]
    fn inline_wins() {
        let s = style_of(r#"<style>p{color:red}</style><p style="color:blue">x</p>"#, "p");
        assert_eq!(s, map(&[("color", "blue")]));
    }

    #[test]
    fn nothing_matches() {
        assert!(style_of("<style>div{color:red}</style><p>x</p>", "p").is_empty());
    }

    #[test]
    fn class_beats_tag() {
        let s = style_of(r#"<style>p{color:red} .x{color:green}</style><p class="x">x</p>"#, "p");
        assert_eq!(s, map(&[("color", "green")]));
        // Order does not matter across specificity levels.
        let s = style_of(r#"<style>.x{color:green} p{color:red}</style><p class="x">x</p>"#, "p");
        assert_eq!(s, map(&[("color", "green")]));
        let s = style_of(r#"<style>#i{color:blue} .x{color:green}</style><p class="x" id="i">x</p>"#, "p");
        assert_eq!(s, map(&[("color", "blue")]));
        // Ties go to the later rule.
        let s = style_of(r#"<style>.x{color:green} .y{color:teal}</style><p class="x y">x</p>"#, "p");
        assert_eq!(s, map(&[("color", "teal")]));
    }

    #[test]
    fn important_outranks_inline() {
        let s = style_of(r#"<style>p{color:red !important}</style><p style="color:blue">x</p>"#, "p");
        assert_eq!(s, map(&[("color", "red")]));
        let s = style_of(r#"<style>p{color:red !important}</style><p style="color:blue !important">x</p>"#, "p");
        assert_eq!(s, map(&[("color", "blue")]));
    }

    #[test]
    fn filter_keeps_list_members_only() {
        let raw = map(&[("color", "red"), ("cursor", "pointer"), ("foo", "bar")]);
        let f = filter_style(&raw);
        assert_eq!(f.properties.keys().collect::<Vec<_>>(), ["color", "cursor"]);
    }

    #[test]
    fn filter_drops_every_default() {
        for d in DEFAULT_VALUES {
            let raw = map(&[("margin-top", d)]);
            assert!(filter_style(&raw).is_empty(), "{d}");
            let padded = map(&[("color", &format!("  {d} "))]);
            assert!(filter_style(&padded).is_empty(), "{d}");
        }
        assert!(filter_style(&IndexMap::new()).is_empty());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_value("  RED "), "red");
        assert_eq!(normalize_value("URL(\"A.PNG\") No-Repeat"), "url(\"A.PNG\") no-repeat");
        assert_eq!(normalize_value("url(A.png)"), "url(A.png)");
        assert_eq!(normalize_value("'Open Sans', Arial"), "'Open Sans', arial");
        assert_eq!(normalize_value("RGB(0, 0, 0)"), "rgb(0, 0, 0)");
    }

    #[test]
    fn similarity_examples() {
        let a = filter_style(&map(&[("color", "red"), ("font-size", "12px")]));
        let b = filter_style(&map(&[("color", "red"), ("font-size", "14px")]));
        assert_eq!(style_similarity::<Ratio<i64>>(&a, &b), Ratio::new(1, 2));
        assert_eq!(style_similarity::<f64>(&a, &a), 1.0);
        assert_eq!(style_similarity::<f64>(&StyleMap::default(), &StyleMap::default()), 1.0);
        let c = filter_style(&map(&[("width", "10px")]));
        assert_eq!(style_similarity::<Ratio<i64>>(&a, &c), Ratio::new(0, 3));
    }
}
