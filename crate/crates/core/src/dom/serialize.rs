use super::element::{Element, Node};
use super::{is_raw_text, is_void, Content, DomTree, NodeId};

pub(super) fn serialize(tree: &DomTree) -> String {
    let mut out = String::new();
    write_node(tree, tree.root(), &mut out);
    out
}

fn write_node(tree: &DomTree, id: NodeId, out: &mut String) {
    let node = tree.node(id);
    open_tag(&node.tag, node.attributes.iter(), out);
    if is_void(&node.tag) {
        return;
    }
    let raw = is_raw_text(&node.tag);
    for item in &node.content {
        match item {
            Content::Text(t) => write_text(t, raw, out),
            Content::Child(c) => write_node(tree, *c, out),
        }
    }
    close_tag(&node.tag, out);
}

pub(super) fn element_to_html(el: &Element) -> String {
    let mut out = String::new();
    write_element(el, &mut out);
    out
}

fn write_element(el: &Element, out: &mut String) {
    open_tag(&el.tag, el.attributes.iter(), out);
    if is_void(&el.tag) {
        return;
    }
    let raw = is_raw_text(&el.tag);
    for item in &el.content {
        match item {
            Node::Text(t) => write_text(t, raw, out),
            Node::Element(c) => write_element(c, out),
        }
    }
    close_tag(&el.tag, out);
}

fn open_tag<'a>(tag: &str, attrs: impl Iterator<Item = (&'a String, &'a String)>, out: &mut String) {
    out.push('<');
    out.push_str(tag);
    for (k, v) in attrs {
        out.push(' ');
        out.push_str(k);
        out.push_str("=\"");
        escape_into(v, true, out);
        out.push('"');
    }
    out.push('>');
}

fn close_tag(tag: &str, out: &mut String) {
    out.push_str("</");
    out.push_str(tag);
    out.push('>');
}

fn write_text(text: &str, raw: bool, out: &mut String) {
    if raw {
        out.push_str(text);
    } else {
        escape_into(text, false, out);
    }
}

fn escape_into(s: &str, attribute: bool, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '"' if attribute => out.push_str("&quot;"),
            '<' if !attribute => out.push_str("&lt;"),
            '>' if !attribute => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::dom::parse_html;

    #[test]
    fn empty_document() {
        assert_eq!(parse_html("").unwrap().serialize(), "<html><head></head><body></body></html>");
    }

    #[test]
    fn quotes_in_attributes_round_trip() {
        let t = parse_html(r#"<a title='say "hi" & go'>x</a>"#).unwrap();
        let html = t.serialize();
        assert!(html.contains(r#"title="say &quot;hi&quot; &amp; go""#), "{html}");
        let again = parse_html(&html).unwrap();
        assert!(t.structurally_eq(&again));
        assert_eq!(again.find_by_tag("a").next().unwrap().attr("title"), Some(r#"say "hi" & go"#));
    }

    #[test]
    fn text_escaping_round_trip() {
        let t = parse_html("<p>1 &lt; 2 &amp;&amp; 3 &gt; 2</p>").unwrap();
        let again = parse_html(&t.serialize()).unwrap();
        assert_eq!(again.find_by_tag("p").next().unwrap().text, "1 < 2 && 3 > 2");
    }
}
