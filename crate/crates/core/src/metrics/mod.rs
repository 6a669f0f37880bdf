//! Element Accuracy and Layout Accuracy.
//!
//! Element Accuracy pairs every candidate element with at most one reference
//! element of the same tag, averages six perspective scores per pair, and
//! counts the pairs whose average is strictly above the threshold, over the
//! number of reference elements. Layout Accuracy is the LCS of the two
//! pre-order tag sequences over the reference sequence length.

mod attributes;
mod lcs;
mod perspectives;

use serde::Serialize;
use thiserror::Error;

pub use attributes::{attribute_table, Comparison, TEXT_CONTENT};
pub use lcs::lcs_length;
pub use perspectives::{attribute_score, children_score, javascript_score, style_score, tag_score, text_similarity};

use crate::dom::{DomTree, NodeId};
use crate::scalar::Scalar;
use crate::style::{resolve_styles, StyleMap, StyleSheet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("reference layout sequence is empty")]
    EmptyReference,
    #[error("rankings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("ranking of length {len} is not a permutation of 1..={len}")]
    NotAPermutation { len: usize },
    #[error("rankings need at least two entries")]
    TooShort,
}

/// The six perspective scores of one element pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Perspectives<S> {
    pub tag: S,
    pub text: S,
    pub attribute: S,
    pub style: S,
    pub javascript: S,
    pub children: S,
}

impl<S: Scalar> Perspectives<S> {
    pub fn zero() -> Self {
        let z = S::zero();
        Perspectives { tag: z, text: z, attribute: z, style: z, javascript: z, children: z }
    }

    pub fn as_array(&self) -> [S; 6] {
        [self.tag, self.text, self.attribute, self.style, self.javascript, self.children]
    }

    /// Plain mean of the six scores.
    pub fn average(&self) -> S {
        let sum = self.as_array().into_iter().fold(S::zero(), |acc, s| acc + s);
        sum / S::from_count(6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementScore<S> {
    pub test_node: NodeId,
    pub label_node: Option<NodeId>,
    pub tag: String,
    pub perspectives: Perspectives<S>,
    pub average: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalConfig<S> {
    /// Strict lower bound on an element's average score.
    pub threshold: S,
}

impl<S: Scalar> Default for EvalConfig<S> {
    fn default() -> Self {
        EvalConfig { threshold: S::from_count(9) / S::from_count(10) }
    }
}

impl<S: Scalar> EvalConfig<S> {
    pub fn with_threshold(threshold: S) -> Self {
        EvalConfig { threshold }
    }

    pub fn is_valid(&self) -> bool {
        self.threshold >= S::zero() && self.threshold <= S::one()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport<S> {
    pub element_accuracy: S,
    pub layout_accuracy: S,
    pub element_scores: Vec<ElementScore<S>>,
    pub label_count: usize,
    pub test_count: usize,
    pub matched_above_threshold: usize,
}

/// Pre-order tag sequence of a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayoutSequence {
    pub tokens: Vec<String>,
}

impl LayoutSequence {
    pub fn from_tree(tree: &DomTree) -> LayoutSequence {
        let tokens = tree.traverse().into_iter().map(|id| tree.node(id).tag.clone()).collect();
        LayoutSequence { tokens }
    }
}

/// A document with its resolved styles, ready to be compared.
#[derive(Debug, Clone)]
pub struct StyledTree<'a> {
    pub tree: &'a DomTree,
    pub styles: Vec<StyleMap>,
}

impl<'a> StyledTree<'a> {
    /// Resolves styles from the document's own `<style>` elements.
    pub fn new(tree: &'a DomTree) -> Self {
        let sheet = StyleSheet::from_document(tree);
        StyledTree { tree, styles: resolve_styles(tree, &sheet) }
    }

    pub fn with_sheet(tree: &'a DomTree, sheet: &StyleSheet) -> Self {
        StyledTree { tree, styles: resolve_styles(tree, sheet) }
    }
}

/// Elements that take part in element matching: everything but the
/// html/head/body skeleton, in document order.
pub fn scored_elements(tree: &DomTree) -> Vec<NodeId> {
    tree.content_elements().map(|n| n.node_id).collect()
}

pub fn score_pair<S: Scalar>(test: &StyledTree<'_>, t: NodeId, label: &StyledTree<'_>, l: NodeId) -> Perspectives<S> {
    let a = test.tree.node(t);
    let b = label.tree.node(l);
    Perspectives {
        tag: tag_score(a, b),
        text: text_similarity(&a.text, &b.text),
        attribute: attribute_score(b, a),
        style: style_score(&test.styles[t], &label.styles[l]),
        javascript: javascript_score(a, b),
        children: children_score(a, b, test.tree, label.tree),
    }
}

/// One-to-one greedy matching between candidate (`test`) and reference
/// (`label`) elements of equal tag, by descending average score; ties go to
/// the earlier reference element, then the earlier candidate element.
///
/// Returns one score per candidate element in document order. Unmatched
/// candidates get all-zero perspectives.
pub fn match_elements<S: Scalar>(test: &StyledTree<'_>, label: &StyledTree<'_>) -> Vec<ElementScore<S>> {
    let test_ids = scored_elements(test.tree);
    let label_ids = scored_elements(label.tree);

    let mut candidates = Vec::new();
    for &t in &test_ids {
        let tag = &test.tree.node(t).tag;
        for &l in label_ids.iter().filter(|&&l| &label.tree.node(l).tag == tag) {
            let p = score_pair::<S>(test, t, label, l);
            candidates.push((p.average(), l, t, p));
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    });

    let mut test_match = vec![None; test.tree.len()];
    let mut label_used = vec![false; label.tree.len()];
    for (_, l, t, p) in candidates {
        if test_match[t].is_none() && !label_used[l] {
            test_match[t] = Some((l, p));
            label_used[l] = true;
        }
    }

    test_ids
        .into_iter()
        .map(|t| {
            let (label_node, perspectives) = match test_match[t] {
                Some((l, p)) => (Some(l), p),
                None => (None, Perspectives::zero()),
            };
            ElementScore {
                test_node: t,
                label_node,
                tag: test.tree.node(t).tag.clone(),
                average: perspectives.average(),
                perspectives,
            }
        })
        .collect()
}

/// Matched elements whose average is strictly above the threshold.
pub fn count_above_threshold<S: Scalar>(scores: &[ElementScore<S>], config: &EvalConfig<S>) -> usize {
    scores.iter().filter(|s| s.label_node.is_some() && s.average > config.threshold).count()
}

/// `|{j : E_j > T, matched}| / label_count`. With no reference elements the
/// result is 1 if the candidate is also empty and 0 otherwise.
pub fn element_accuracy<S: Scalar>(scores: &[ElementScore<S>], label_count: usize, config: &EvalConfig<S>) -> S {
    if label_count == 0 {
        return if scores.is_empty() { S::one() } else { S::zero() };
    }
    S::ratio_or(count_above_threshold(scores, config), label_count, S::zero())
}

/// `LCS(reference, candidate) / len(reference)`.
pub fn layout_accuracy<S: Scalar>(reference: &LayoutSequence, candidate: &LayoutSequence) -> Result<S, MetricError> {
    if reference.tokens.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let common = lcs_length(&reference.tokens, &candidate.tokens);
    Ok(S::ratio_or(common, reference.tokens.len(), S::zero()))
}

/// Pearson correlation of two rankings without ties, i.e. Spearman's rho:
/// `1 − 6·Σd² / (n·(n²−1))`.
pub fn rank_correlation<S: Scalar>(a: &[usize], b: &[usize]) -> Result<S, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(MetricError::TooShort);
    }
    for r in [a, b] {
        let mut seen = vec![false; n + 1];
        for &x in r {
            if x == 0 || x > n || std::mem::replace(&mut seen[x], true) {
                return Err(MetricError::NotAPermutation { len: n });
            }
        }
    }
    let d2: usize = a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y).pow(2)).sum();
    Ok(S::one() - S::from_count(6 * d2) / S::from_count(n * (n * n - 1)))
}

/// Full comparison of a candidate document against a reference document.
pub fn evaluate<S: Scalar>(reference: &DomTree, candidate: &DomTree, config: &EvalConfig<S>) -> EvalReport<S> {
    evaluate_styled(&StyledTree::new(reference), &StyledTree::new(candidate), config)
}

pub fn evaluate_styled<S: Scalar>(
    reference: &StyledTree<'_>,
    candidate: &StyledTree<'_>,
    config: &EvalConfig<S>,
) -> EvalReport<S> {
    let element_scores = match_elements(candidate, reference);
    let label_count = scored_elements(reference.tree).len();
    let test_count = element_scores.len();
    let matched_above_threshold = count_above_threshold(&element_scores, config);
    let element_accuracy = element_accuracy(&element_scores, label_count, config);
    let layout_accuracy =
        layout_accuracy(&LayoutSequence::from_tree(reference.tree), &LayoutSequence::from_tree(candidate.tree))
            .expect("parsed documents always have a skeleton");
    EvalReport { element_accuracy, layout_accuracy, element_scores, label_count, test_count, matched_above_threshold }
}
