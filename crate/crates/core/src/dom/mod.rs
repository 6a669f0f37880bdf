//! Normalized DOM used by every other module.
//!
//! A [`DomTree`] is an immutable arena of [`DomNode`]s whose ids are assigned
//! in pre-order, so `node_id` order is document order. Edits go through the
//! owned [`Element`] form and are re-flattened with [`DomTree::from_element`].

mod element;
mod parser;
mod serialize;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use element::{Element, Node};
pub use parser::{parse_html, parse_html_bytes, parse_html_with, ParseError, ParseOptions};

use crate::style::parse_declarations;

pub type NodeId = usize;

/// The six event bindings compared by the JavaScript perspective.
pub const PREDEFINED_EVENTS: [&str; 6] = ["onclick", "onload", "onmouseover", "onmouseout", "onchange", "onsubmit"];

/// Elements that never have content.
pub const VOID_ELEMENTS: &[&str] =
    &["area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr"];

/// Elements whose content is not parsed as markup.
pub const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style"];

pub fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

pub fn is_raw_text(tag: &str) -> bool {
    RAW_TEXT_ELEMENTS.contains(&tag)
}

/// Ordered content of a node: text runs interleaved with child elements.
///
/// Only used to serialize text where it was written; metrics look at
/// [`DomNode::text`] and [`DomNode::children`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Content {
    Text(String),
    Child(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomNode {
    pub node_id: NodeId,
    pub tag: String,
    pub attributes: IndexMap<String, String>,
    /// Concatenated direct text children.
    pub text: String,
    pub inline_style: IndexMap<String, String>,
    pub event_bindings: BTreeSet<String>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    #[serde(skip)]
    pub(crate) content: Vec<Content>,
}

impl DomNode {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.attr("class").unwrap_or("").split_ascii_whitespace()
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes().any(|c| c == class)
    }

    pub fn id_attr(&self) -> Option<&str> {
        self.attr("id")
    }
}

/// Predefined events bound on `node`. Other `on*` attributes stay in
/// `event_bindings` but are not reported here.
pub fn extract_events(node: &DomNode) -> BTreeSet<&'static str> {
    PREDEFINED_EVENTS.iter().copied().filter(|e| node.event_bindings.contains(*e)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DomTree {
    nodes: Vec<DomNode>,
    source_hash: String,
}

impl DomTree {
    /// Flattens a normalized `<html>` element into an arena.
    ///
    /// The element must be an `html` element whose children are exactly a
    /// `head` and a `body`; every builder in this crate maintains that.
    pub fn from_element(root: Element) -> DomTree {
        let source_hash = digest(&serialize::element_to_html(&root));
        Self::from_element_with_hash(root, source_hash)
    }

    pub(crate) fn from_element_with_hash(root: Element, source_hash: String) -> DomTree {
        debug_assert_eq!(root.tag, "html");
        let mut nodes = Vec::new();
        flatten(root, None, &mut nodes);
        DomTree { nodes, source_hash }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn head(&self) -> NodeId {
        self.nodes[0].children[0]
    }

    pub fn body(&self) -> NodeId {
        self.nodes[0].children[1]
    }

    pub fn node(&self, id: NodeId) -> &DomNode {
        &self.nodes[id]
    }

    pub fn get(&self, id: NodeId) -> Option<&DomNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> &[DomNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }

    /// Pre-order (document order) listing of every element.
    pub fn traverse(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev().copied());
        }
        out
    }

    /// Ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = &DomNode> {
        std::iter::successors(self.nodes[id].parent, |&p| self.nodes[p].parent).map(|p| &self.nodes[p])
    }

    /// Ids of the subtree rooted at `id`, including `id`. Contiguous because
    /// ids are pre-order.
    pub fn subtree(&self, id: NodeId) -> std::ops::Range<NodeId> {
        let mut end = id + 1;
        let mut cur = id;
        while let Some(&last) = self.nodes[cur].children.last() {
            cur = last;
            end = last + 1;
        }
        id..end
    }

    /// Elements that carry page content: everything except html/head/body.
    pub fn content_elements(&self) -> impl Iterator<Item = &DomNode> {
        let skeleton = [self.root(), self.head(), self.body()];
        self.nodes.iter().filter(move |n| !skeleton.contains(&n.node_id))
    }

    pub fn find_by_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a DomNode> + 'a {
        self.nodes.iter().filter(move |n| n.tag == tag)
    }

    /// Owned, editable copy of the subtree at `id`.
    pub fn to_element_at(&self, id: NodeId) -> Element {
        let node = &self.nodes[id];
        let content = node
            .content
            .iter()
            .map(|c| match c {
                Content::Text(t) => Node::Text(t.clone()),
                Content::Child(child) => Node::Element(self.to_element_at(*child)),
            })
            .collect();
        Element { tag: node.tag.clone(), attributes: node.attributes.clone(), content }
    }

    pub fn to_element(&self) -> Element {
        self.to_element_at(self.root())
    }

    /// Copy of the tree with the subtrees rooted at `removed` dropped.
    pub fn without(&self, removed: &BTreeSet<NodeId>) -> DomTree {
        fn build(tree: &DomTree, id: NodeId, removed: &BTreeSet<NodeId>) -> Element {
            let node = tree.node(id);
            let content = node
                .content
                .iter()
                .filter_map(|c| match c {
                    Content::Text(t) => Some(Node::Text(t.clone())),
                    Content::Child(child) if removed.contains(child) => None,
                    Content::Child(child) => Some(Node::Element(build(tree, *child, removed))),
                })
                .collect();
            Element { tag: node.tag.clone(), attributes: node.attributes.clone(), content }
        }
        DomTree::from_element(build(self, self.root(), removed))
    }

    /// Same tags, attributes, text and nesting.
    pub fn structurally_eq(&self, other: &DomTree) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| {
                a.tag == b.tag && a.attributes == b.attributes && a.text == b.text && a.children == b.children
            })
    }

    /// Human-readable outline, one element per line; handy in test failures.
    pub fn outline(&self) -> String {
        let mut out = String::new();
        for id in self.traverse() {
            let depth = self.ancestors(id).count();
            let node = &self.nodes[id];
            let _ = write!(out, "{}{}", "  ".repeat(depth), node.tag);
            for (k, v) in &node.attributes {
                let _ = write!(out, " {k}={v:?}");
            }
            if !node.text.is_empty() {
                let _ = write!(out, " text={:?}", node.text);
            }
            out.push('\n');
        }
        out
    }

    pub fn serialize(&self) -> String {
        serialize::serialize(self)
    }
}

/// Free-function form of [`DomTree::traverse`].
pub fn traverse(tree: &DomTree) -> Vec<NodeId> {
    tree.traverse()
}

/// Free-function form of [`DomTree::serialize`].
pub fn serialize(tree: &DomTree) -> String {
    tree.serialize()
}

pub(crate) fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn flatten(element: Element, parent: Option<NodeId>, nodes: &mut Vec<DomNode>) -> NodeId {
    let id = nodes.len();
    let raw = is_raw_text(&element.tag);
    let mut text = String::new();
    for item in &element.content {
        if let Node::Text(t) = item {
            text.push_str(t);
        }
    }
    let text = if raw { text } else { trim_html_whitespace(&text).to_string() };
    let inline_style = element
        .attributes
        .get("style")
        .map(|s| parse_declarations(s).0.into_iter().map(|d| (d.property, d.value)).collect())
        .unwrap_or_default();
    let event_bindings = element.attributes.keys().filter(|k| k.len() > 2 && k.starts_with("on")).cloned().collect();
    nodes.push(DomNode {
        node_id: id,
        tag: element.tag,
        attributes: element.attributes,
        text,
        inline_style,
        event_bindings,
        children: Vec::new(),
        parent,
        content: Vec::new(),
    });
    let mut children = Vec::new();
    let mut content = Vec::new();
    for item in element.content {
        match item {
            Node::Text(t) => content.push(Content::Text(t)),
            Node::Element(child) => {
                let child_id = flatten(child, Some(id), nodes);
                children.push(child_id);
                content.push(Content::Child(child_id));
            }
        }
    }
    nodes[id].children = children;
    nodes[id].content = content;
    id
}

pub(crate) fn is_html_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c')
}

pub(crate) fn trim_html_whitespace(s: &str) -> &str {
    s.trim_matches(is_html_whitespace)
}
