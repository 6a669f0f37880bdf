//! The six per-element perspective scores.

use std::collections::BTreeMap;

use crate::dom::{DomNode, DomTree, PREDEFINED_EVENTS};
use crate::scalar::Scalar;
use crate::style::{style_similarity, StyleMap};

use super::attributes::{attribute_table, TEXT_CONTENT};
use super::lcs::lcs_length;

/// 1 when the tags are identical, else 0.
pub fn tag_score<S: Scalar>(a: &DomNode, b: &DomNode) -> S {
    if a.tag == b.tag {
        S::one()
    } else {
        S::zero()
    }
}

/// Character-LCS ratio `2·|LCS| / (|a| + |b|)`; 1 when both are empty.
pub fn text_similarity<S: Scalar>(a: &str, b: &str) -> S {
    if a == b {
        return S::one();
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    S::ratio_or(2 * lcs_length(&a, &b), a.len() + b.len(), S::one())
}

/// Weighted agreement over the tag's table entries present on either node.
/// Tags without a table, or with an empty one, compare all raw attributes
/// by exact equality.
pub fn attribute_score<S: Scalar>(a: &DomNode, b: &DomNode) -> S {
    let Some(table) = attribute_table(&a.tag).filter(|t| !t.is_empty()) else {
        return raw_attribute_score(a, b);
    };
    let mut total = S::zero();
    let mut weights = 0usize;
    for &(attr, comparison) in table {
        let w = comparison.weight();
        let score = if attr == TEXT_CONTENT {
            if a.text.is_empty() && b.text.is_empty() {
                continue;
            }
            text_similarity::<S>(&a.text, &b.text)
        } else {
            match (a.attr(attr), b.attr(attr)) {
                (None, None) => continue,
                (x, y) if x == y => S::one(),
                _ => S::zero(),
            }
        };
        weights += w;
        total = total + S::from_count(w) * score;
    }
    if weights == 0 {
        S::one()
    } else {
        total / S::from_count(weights)
    }
}

fn raw_attribute_score<S: Scalar>(a: &DomNode, b: &DomNode) -> S {
    let matching = a.attributes.iter().filter(|(k, v)| b.attributes.get(*k) == Some(*v)).count();
    let union = a.attributes.len() + b.attributes.keys().filter(|k| !a.attributes.contains_key(*k)).count();
    S::ratio_or(matching, union, S::one())
}

/// Fraction of the six predefined events on which the nodes agree (bound on
/// both or on neither).
pub fn javascript_score<S: Scalar>(a: &DomNode, b: &DomNode) -> S {
    let agree =
        PREDEFINED_EVENTS.iter().filter(|e| a.event_bindings.contains(**e) == b.event_bindings.contains(**e)).count();
    S::ratio_or(agree, PREDEFINED_EVENTS.len(), S::one())
}

/// Dice coefficient over the multisets of direct-child tags; 1 when both are
/// childless.
pub fn children_score<S: Scalar>(a: &DomNode, b: &DomNode, tree_a: &DomTree, tree_b: &DomTree) -> S {
    fn counts<'t>(node: &DomNode, tree: &'t DomTree) -> BTreeMap<&'t str, usize> {
        let mut m = BTreeMap::new();
        for &c in &node.children {
            *m.entry(tree.node(c).tag.as_str()).or_default() += 1;
        }
        m
    }
    let ca = counts(a, tree_a);
    let cb = counts(b, tree_b);
    let common: usize = ca.iter().map(|(t, n)| (*n).min(cb.get(t).copied().unwrap_or(0))).sum();
    S::ratio_or(2 * common, a.children.len() + b.children.len(), S::one())
}

/// Style perspective: agreement of the filtered declared styles.
pub fn style_score<S: Scalar>(a: &StyleMap, b: &StyleMap) -> S {
    style_similarity(a, b)
}
