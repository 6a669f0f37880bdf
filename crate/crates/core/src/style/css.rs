//! CSS text to rules.

use indexmap::IndexMap;
use serde::Serialize;

use super::selector::{parse_selector, Selector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Declaration {
    pub property: String,
    pub value: String,
    pub important: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleRule {
    pub selector: Selector,
    pub declarations: IndexMap<String, String>,
    /// Properties declared `!important`.
    pub important: Vec<String>,
    pub source_order: usize,
}

/// Something skipped while reading CSS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CssDiagnostic {
    AtRule(String),
    UnsupportedSelector(String),
    MalformedDeclaration(String),
    UnterminatedBlock,
}

/// Parses a stylesheet. At-rules are skipped whole, unsupported selectors
/// and malformed declarations are skipped individually and reported.
pub fn parse_css(css: &str) -> (Vec<StyleRule>, Vec<CssDiagnostic>) {
    let mut rules = Vec::new();
    let mut diagnostics = Vec::new();
    append_rules(css, 0, &mut rules, &mut diagnostics);
    (rules, diagnostics)
}

/// Parses `css` numbering rules from `first_order`; used to concatenate
/// several stylesheets with a single source order.
pub(crate) fn append_rules(
    css: &str,
    first_order: usize,
    rules: &mut Vec<StyleRule>,
    diagnostics: &mut Vec<CssDiagnostic>,
) -> usize {
    let text = strip_comments(css);
    let mut order = first_order;
    let mut rest = text.as_str();
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        if rest.starts_with('@') {
            let (name, after) = skip_at_rule(rest);
            diagnostics.push(CssDiagnostic::AtRule(name));
            rest = after;
            continue;
        }
        let Some(open) = rest.find('{') else {
            diagnostics.push(CssDiagnostic::UnterminatedBlock);
            break;
        };
        let prelude = rest[..open].trim();
        let Some(len) = block_len(&rest[open..]) else {
            diagnostics.push(CssDiagnostic::UnterminatedBlock);
            break;
        };
        let body = &rest[open + 1..open + len - 1];
        rest = &rest[open + len..];

        let (decls, bad) = parse_declarations(body);
        diagnostics.extend(bad.into_iter().map(CssDiagnostic::MalformedDeclaration));
        let mut declarations = IndexMap::new();
        let mut important = Vec::new();
        for d in decls {
            if d.important {
                important.push(d.property.clone());
            } else {
                important.retain(|p| p != &d.property);
            }
            declarations.shift_remove(&d.property);
            declarations.insert(d.property, d.value);
        }
        for part in split_top_level(prelude, ',') {
            let part = part.trim();
            match parse_selector(part) {
                Some(selector) => {
                    rules.push(StyleRule {
                        selector,
                        declarations: declarations.clone(),
                        important: important.clone(),
                        source_order: order,
                    });
                    order += 1;
                }
                None => diagnostics.push(CssDiagnostic::UnsupportedSelector(part.to_string())),
            }
        }
    }
    order
}

/// Parses a declaration list (`a: b; c: d`). Returns the declarations and
/// the text of every malformed one.
pub fn parse_declarations(text: &str) -> (Vec<Declaration>, Vec<String>) {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for raw in split_top_level(text, ';') {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let Some((name, value)) = raw.split_once(':') else {
            bad.push(raw.to_string());
            continue;
        };
        let property = name.trim().to_ascii_lowercase();
        let mut value = value.trim();
        let valid_name =
            !property.is_empty() && property.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let mut important = false;
        if let Some(i) = value.to_ascii_lowercase().rfind("!important") {
            if value[i + "!important".len()..].trim().is_empty() {
                important = true;
                value = value[..i].trim_end();
            }
        }
        if !valid_name || value.is_empty() {
            bad.push(raw.to_string());
            continue;
        }
        out.push(Declaration { property, value: value.to_string(), important });
    }
    (out, bad)
}

fn strip_comments(css: &str) -> String {
    let mut out = String::with_capacity(css.len());
    let mut rest = css;
    while let Some(i) = rest.find("/*") {
        out.push_str(&rest[..i]);
        match rest[i + 2..].find("*/") {
            Some(j) => rest = &rest[i + 2 + j + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

/// Length of the `{...}` block at the start of `s`, braces included.
fn block_len(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote = None;
    for (i, c) in s.char_indices() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'') => quote = Some(c),
            (None, '{') => depth += 1,
            (None, '}') => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Skips an at-rule: through the first `;` if it comes before any block,
/// otherwise through the balanced block.
fn skip_at_rule(s: &str) -> (String, &str) {
    let name: String = s[1..].chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '-').collect();
    let semi = s.find(';');
    let open = s.find('{');
    let end = match (semi, open) {
        (Some(sc), Some(op)) if sc < op => sc + 1,
        (Some(sc), None) => sc + 1,
        (_, Some(op)) => block_len(&s[op..]).map_or(s.len(), |len| op + len),
        (None, None) => s.len(),
    };
    (format!("@{name}"), &s[end..])
}

/// Splits on `sep` outside parentheses and quotes.
pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut quote = None;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'') => quote = Some(c),
            (None, '(') => depth += 1,
            (None, ')') => depth -= 1,
            (None, c) if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::style::selector::Compound;

    #[test]
    fn single_rule() {
        let (rules, diags) = parse_css("p { color: red; }");
        assert!(diags.is_empty());
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].selector.to_string(), "p");
        assert_eq!(rules[0].declarations.get("color").map(String::as_str), Some("red"));
    }

    #[test]
    fn empty_sheet() {
        assert_eq!(parse_css("").0, vec![]);
    }

    #[test]
    fn descendant_rule() {
        let (rules, _) = parse_css(".a b { font-size: 12px }");
        assert_eq!(rules.len(), 1);
        let sel = &rules[0].selector;
        assert_eq!(
            sel.compounds,
            vec![
                Compound { tag: None, classes: vec!["a".into()], ids: vec![] },
                Compound { tag: Some("b".into()), classes: vec![], ids: vec![] },
            ]
        );
        assert_eq!(rules[0].declarations.get("font-size").map(String::as_str), Some("12px"));
    }

    #[test]
    fn at_rules_and_bad_declarations_are_reported() {
        let css = "@import url(x.css);\n@media (max-width: 600px) { p { color: blue } }\n/* c */ p { color: red; ; bogus; : x; width: 10px !important }\na:hover { color: green }";
        let (rules, diags) = parse_css(css);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].declarations.len(), 2);
        assert_eq!(rules[0].important, vec!["width".to_string()]);
        assert!(diags.contains(&CssDiagnostic::AtRule("@import".into())));
        assert!(diags.contains(&CssDiagnostic::AtRule("@media".into())));
        assert!(diags.contains(&CssDiagnostic::MalformedDeclaration("bogus".into())));
        assert!(diags.contains(&CssDiagnostic::UnsupportedSelector("a:hover".into())));
    }

    #[test]
    fn selector_lists_expand_in_order() {
        let (rules, _) = parse_css("h1, .x { margin-top: 4px } div { color: red }");
        let orders: Vec<_> = rules.iter().map(|r| (r.selector.to_string(), r.source_order)).collect();
        assert_eq!(orders, [("h1".to_string(), 0), (".x".to_string(), 1), ("div".to_string(), 2)]);
    }

    #[test]
    fn semicolons_inside_urls() {
        let (decls, bad) = parse_declarations("background-image: url(\"a;b.png\"); color: red");
        assert!(bad.is_empty());
        assert_eq!(decls[0].value, "url(\"a;b.png\")");
        assert_eq!(decls[1].property, "color");
    }
}
