//! Per-tag attribute comparison tables.

/// Importance of an attribute when comparing two elements of the same tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Strong,
    Weak,
}

impl Comparison {
    /// Strong comparisons count twice as much as weak ones.
    pub fn weight(self) -> usize {
        match self {
            Comparison::Strong => 2,
            Comparison::Weak => 1,
        }
    }
}

/// Pseudo-attribute standing for the element's direct text.
pub const TEXT_CONTENT: &str = "text content";

use Comparison::{Strong as S, Weak as W};

const COMMON: &[(&str, Comparison)] = &[("class", W), ("id", W), ("style", W)];
const COMMON_WITH_TEXT: &[(&str, Comparison)] = &[(TEXT_CONTENT, S), ("class", W), ("id", W), ("style", W)];
const CELL: &[(&str, Comparison)] =
    &[(TEXT_CONTENT, S), ("class", W), ("id", W), ("style", W), ("colspan", W), ("rowspan", W)];

/// The table for `tag`, or `None` for tags without one. `br` has an empty
/// table.
pub fn attribute_table(tag: &str) -> Option<&'static [(&'static str, Comparison)]> {
    let table: &[(&str, Comparison)] = match tag {
        "a" => &[
            (TEXT_CONTENT, S),
            ("href", W),
            ("target", W),
            ("rel", W),
            ("download", W),
            ("hreflang", W),
            ("media", W),
            ("type", W),
        ],
        "img" => &[("alt", S), ("src", W), ("srcset", W), ("sizes", W)],
        "button" => &[(TEXT_CONTENT, S), ("type", W), ("onclick", W), ("disabled", W), ("name", W), ("value", W)],
        "input" => &[
            ("value", S),
            ("placeholder", S),
            ("required", S),
            ("checked", S),
            ("readonly", S),
            ("type", W),
            ("name", W),
            ("min", W),
            ("max", W),
            ("step", W),
            ("pattern", W),
        ],
        "div" | "ul" | "table" | "thead" | "tbody" | "tr" | "footer" | "header" | "article" | "section" | "nav"
        | "aside" | "figure" | "main" | "hr" => COMMON,
        "h1" | "p" | "li" | "span" | "figcaption" => COMMON_WITH_TEXT,
        "td" => CELL,
        "th" => {
            &[(TEXT_CONTENT, S), ("class", W), ("id", W), ("style", W), ("colspan", W), ("rowspan", W), ("scope", W)]
        }
        "label" => &[(TEXT_CONTENT, S), ("for", S), ("class", W), ("id", W), ("style", W)],
        "select" => &[("name", W), ("required", W), ("multiple", W), ("class", W), ("id", W), ("style", W)],
        "option" => &[(TEXT_CONTENT, S), ("value", S), ("selected", S)],
        "textarea" => &[
            ("placeholder", S),
            ("required", S),
            ("readonly", S),
            ("name", W),
            ("rows", W),
            ("cols", W),
            ("class", W),
            ("id", W),
            ("style", W),
        ],
        "br" => &[],
        "link" => &[("href", W), ("rel", W), ("media", W), ("type", W)],
        "meta" => &[("content", S), ("name", W), ("http-equiv", W), ("charset", W)],
        "script" => &[("src", W), ("type", W), ("async", W), ("defer", W)],
        _ => return None,
    };
    Some(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_cover_listed_tags() {
        let listed = [
            "a",
            "img",
            "button",
            "input",
            "div",
            "h1",
            "p",
            "ul",
            "li",
            "span",
            "table",
            "thead",
            "tbody",
            "tr",
            "td",
            "th",
            "label",
            "select",
            "option",
            "textarea",
            "footer",
            "header",
            "article",
            "section",
            "nav",
            "aside",
            "figure",
            "figcaption",
            "main",
            "hr",
            "br",
            "link",
            "meta",
            "script",
        ];
        for tag in listed {
            assert!(attribute_table(tag).is_some(), "{tag}");
        }
        assert_eq!(attribute_table("br"), Some(&[][..]));
        for tag in ["html", "head", "body", "h2", "form", "ol"] {
            assert!(attribute_table(tag).is_none(), "{tag}");
        }
    }

    #[test]
    fn strong_entries() {
        let strong = |tag| {
            attribute_table(tag)
                .unwrap()
                .iter()
                .filter(|(_, c)| *c == Comparison::Strong)
                .map(|(a, _)| *a)
                .collect::<Vec<_>>()
        };
        assert_eq!(strong("input"), ["value", "placeholder", "required", "checked", "readonly"]);
        assert_eq!(strong("label"), [TEXT_CONTENT, "for"]);
        assert_eq!(strong("meta"), ["content"]);
        assert_eq!(strong("select"), Vec::<&str>::new());
    }
}
