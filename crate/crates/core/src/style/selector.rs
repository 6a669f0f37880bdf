//! The selector subset: type, `.class`, `#id`, `*`, compounds of those, and
//! descendant chains.

use std::fmt;

use serde::Serialize;

use crate::dom::{DomNode, DomTree, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Compound {
    /// `None` for `*` or a compound without a type selector.
    pub tag: Option<String>,
    pub classes: Vec<String>,
    pub ids: Vec<String>,
}

/// Descendant chain; the last compound is the subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selector {
    pub compounds: Vec<Compound>,
}

/// (ids, classes, types), compared lexicographically.
pub type Specificity = (usize, usize, usize);

impl Selector {
    pub fn specificity(&self) -> Specificity {
        self.compounds.iter().fold((0, 0, 0), |(a, b, c), comp| {
            (a + comp.ids.len(), b + comp.classes.len(), c + usize::from(comp.tag.is_some()))
        })
    }

    pub fn matches(&self, tree: &DomTree, id: NodeId) -> bool {
        let Some((subject, ancestors)) = self.compounds.split_last() else { return false };
        if !subject.matches(tree.node(id)) {
            return false;
        }
        // Greedy right-to-left matching is exact for descendant-only chains.
        let mut remaining = ancestors.iter().rev().peekable();
        for ancestor in tree.ancestors(id) {
            match remaining.peek() {
                Some(comp) if comp.matches(ancestor) => {
                    remaining.next();
                }
                Some(_) => {}
                None => break,
            }
        }
        remaining.peek().is_none()
    }
}

impl Compound {
    pub fn matches(&self, node: &DomNode) -> bool {
        self.tag.as_deref().is_none_or(|t| t == node.tag)
            && self.ids.iter().all(|id| node.id_attr() == Some(id.as_str()))
            && self.classes.iter().all(|c| node.has_class(c))
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.compounds.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match &c.tag {
                Some(t) => f.write_str(t)?,
                None if c.classes.is_empty() && c.ids.is_empty() => f.write_str("*")?,
                None => {}
            }
            for id in &c.ids {
                write!(f, "#{id}")?;
            }
            for class in &c.classes {
                write!(f, ".{class}")?;
            }
        }
        Ok(())
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_' || !c.is_ascii()
}

/// Parses one selector (no commas). `None` when it falls outside the subset.
pub fn parse_selector(text: &str) -> Option<Selector> {
    let compounds = text.split_ascii_whitespace().map(parse_compound).collect::<Option<Vec<_>>>()?;
    (!compounds.is_empty()).then_some(Selector { compounds })
}

fn parse_compound(text: &str) -> Option<Compound> {
    let mut comp = Compound::default();
    let mut chars = text.char_indices().peekable();
    let ident = |start: usize, chars: &mut std::iter::Peekable<std::str::CharIndices>| {
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if !is_ident_char(c) {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        (end > start).then(|| text[start..end].to_string())
    };
    match chars.peek() {
        Some(&(_, '*')) => {
            chars.next();
        }
        Some(&(i, c)) if is_ident_char(c) => {
            comp.tag = Some(ident(i, &mut chars)?.to_ascii_lowercase());
        }
        _ => {}
    }
    while let Some((_, c)) = chars.next() {
        let start = chars.peek().map(|&(i, _)| i)?;
        match c {
            '.' => comp.classes.push(ident(start, &mut chars)?),
            '#' => comp.ids.push(ident(start, &mut chars)?),
            _ => return None,
        }
    }
    Some(comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;

    #[test]
    fn parses_subset() {
        assert_eq!(parse_selector("div.a.b#x").unwrap().to_string(), "div#x.a.b");
        assert_eq!(parse_selector("*").unwrap().specificity(), (0, 0, 0));
        assert_eq!(parse_selector("#a .b p").unwrap().specificity(), (1, 1, 1));
        assert_eq!(parse_selector("P").unwrap().compounds[0].tag.as_deref(), Some("p"));
    }

    #[test]
    fn rejects_unsupported() {
        for s in ["a:hover", "a > b", "input[type=text]", "p::before", "a + b", "a ~ b", "", ".", "#"] {
            assert!(parse_selector(s).is_none(), "{s}");
        }
    }

    #[test]
    fn descendant_matching() {
        let t = parse_html(r#"<div class="a"><section><p id="x">1</p></section></div><p>2</p>"#).unwrap();
        let ps: Vec<_> = t.find_by_tag("p").map(|n| n.node_id).collect();
        let sel = parse_selector(".a p").unwrap();
        assert!(sel.matches(&t, ps[0]));
        assert!(!sel.matches(&t, ps[1]));
        assert!(parse_selector("div section #x").unwrap().matches(&t, ps[0]));
        assert!(!parse_selector("section div p").unwrap().matches(&t, ps[0]));
        assert!(parse_selector("body p").unwrap().matches(&t, ps[1]));
    }
}
