//! Set-of-Mark injection by HTML rewriting.
//!
//! Every visual element under `<body>` gets an outline and a small numeric
//! badge so that a screenshot of the rewritten page shows numbered, boxed
//! elements. [`strip_som`] undoes the rewrite exactly.

use serde::Serialize;
use thiserror::Error;

use crate::dom::{is_void, DomTree, Element, Node, NodeId};

/// Class added to every annotated element.
pub const SOM_CLASS: &str = "iwb-som";
/// Class of the injected badge elements.
pub const SOM_LABEL_CLASS: &str = "iwb-som-label";
/// Declaration appended to the inline style of annotated elements.
pub const SOM_OUTLINE: &str = "outline: 2px solid #e53935";
const LABEL_STYLE: &str = "position: relative; z-index: 2147483647; background: #e53935; color: #ffffff; font: bold 12px/14px monospace; padding: 0 3px";

/// Elements without a visual box; never annotated.
const NON_VISUAL: &[&str] = &["script", "style", "title", "meta", "link"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SomError {
    #[error("document already carries Set-of-Mark markers")]
    AlreadyAnnotated,
}

#[derive(Debug, Clone, Serialize)]
pub struct SomAnnotation {
    /// (label number, node id in the input tree), numbers from 1 in document
    /// order.
    pub labels: Vec<(usize, NodeId)>,
    #[serde(skip)]
    pub rewritten: DomTree,
}

fn label_element(number: usize) -> Element {
    Element::new("span")
        .with_attr("class", SOM_LABEL_CLASS)
        .with_attr("style", LABEL_STYLE)
        .with_text(number.to_string())
}

fn append_outline(el: &mut Element) {
    match el.attributes.get_mut("style") {
        Some(style) => {
            style.push(';');
            style.push_str(SOM_OUTLINE);
        }
        None => {
            el.attributes.insert("style".to_string(), SOM_OUTLINE.to_string());
        }
    }
}

fn remove_outline(el: &mut Element) {
    let Some(style) = el.attributes.get("style") else { return };
    if style == SOM_OUTLINE {
        el.attributes.shift_remove("style");
    } else if let Some(original) = style.strip_suffix(&format!(";{SOM_OUTLINE}")) {
        let original = original.to_string();
        el.attributes.insert("style".to_string(), original);
    }
}

/// Annotates every visual element in `<body>`.
///
/// The badge is the first child of the element. Void elements and
/// `textarea` cannot hold element children, so theirs is inserted
/// immediately before them.
pub fn som_inject(tree: &DomTree) -> Result<SomAnnotation, SomError> {
    if tree.nodes().iter().any(|n| n.has_class(SOM_CLASS) || n.has_class(SOM_LABEL_CLASS)) {
        return Err(SomError::AlreadyAnnotated);
    }
    let mut labels = Vec::new();
    let mut root = tree.to_element();
    let body_id = tree.body();
    // Ids of the input tree follow the pre-order walk; `next_id` tracks them.
    let mut next_id = 0usize;

    fn annotate(
        el: &mut Element,
        next_id: &mut usize,
        in_body: bool,
        body_id: NodeId,
        labels: &mut Vec<(usize, NodeId)>,
    ) {
        let id = *next_id;
        *next_id += 1;
        let inside = in_body || id == body_id;
        let mut content = Vec::with_capacity(el.content.len());
        for item in std::mem::take(&mut el.content) {
            match item {
                Node::Text(t) => content.push(Node::Text(t)),
                Node::Element(mut child) => {
                    let child_id = *next_id;
                    let annotate_child = inside && !NON_VISUAL.contains(&child.tag.as_str());
                    let number = labels.len() + 1;
                    if annotate_child {
                        labels.push((number, child_id));
                    }
                    annotate(&mut child, next_id, inside, body_id, labels);
                    if annotate_child {
                        child.add_class(SOM_CLASS);
                        append_outline(&mut child);
                        if is_void(&child.tag) || child.tag == "textarea" {
                            content.push(Node::Element(label_element(number)));
                        } else {
                            child.content.insert(0, Node::Element(label_element(number)));
                        }
                    }
                    content.push(Node::Element(child));
                }
            }
        }
        el.content = content;
    }

    annotate(&mut root, &mut next_id, false, body_id, &mut labels);
    Ok(SomAnnotation { labels, rewritten: DomTree::from_element(root) })
}

/// Removes badges, marker classes and injected outlines. Idempotent.
pub fn strip_som(tree: &DomTree) -> DomTree {
    let mut root = tree.to_element();
    root.retain_descendants(&mut |el| !el.has_class(SOM_LABEL_CLASS));
    root.walk_mut(&mut |el| {
        if el.has_class(SOM_CLASS) {
            el.remove_class(SOM_CLASS);
            remove_outline(el);
        }
    });
    DomTree::from_element(root)
}
