//! Cross-checks the tree builder against html5ever (through `scraper`) on
//! inputs where the two are meant to agree.

use iwbench::dom::parse_html;
use scraper::{ElementRef, Html};

fn reference_tags(html: &str) -> Vec<String> {
    let doc = Html::parse_document(html);
    doc.root_element().descendants().filter_map(ElementRef::wrap).map(|e| e.value().name().to_string()).collect()
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Direct text of every element in document order.
fn reference_text(html: &str) -> Vec<String> {
    let doc = Html::parse_document(html);
    doc.root_element()
        .descendants()
        .filter_map(ElementRef::wrap)
        .map(|e| squash(&e.children().filter_map(|c| c.value().as_text().map(|t| t.to_string())).collect::<String>()))
        .collect()
}

fn ours(html: &str) -> (Vec<String>, Vec<String>) {
    let tree = parse_html(html).unwrap();
    let order = tree.traverse();
    let tags = order.iter().map(|&id| tree.node(id).tag.clone()).collect();
    let text = order.iter().map(|&id| squash(&tree.node(id).text)).collect();
    (tags, text)
}

const CASES: &[&str] = &[
    "<div><p>a</div>",
    "<p>a<p>b",
    "<ul><li>a<li>b</ul><p>c",
    "<h1>x</h1><p>y<div>z</div>",
    "<select><option>a<option>b</select>",
    "<dl><dt>a<dd>b<dt>c</dl>",
    "<title>x</title><p>y",
    "<p>a</span>b</p>",
    "<br><img src=x><input name=q><hr>",
    "<!DOCTYPE html><html lang=en><head><meta charset=utf-8><title>t</title></head><body><main><section><h2>s</h2></section></main></body></html>",
    "<style>p { color: red }</style><script>if (a < b) {}</script><p>x",
    "<a href=#>one</a> <b>two <i>three</i></b>",
    "<p>a &amp; b &lt;c&gt; &#169;</p>",
    "<!-- c --><div><!-- d --><span>e</span></div>",
    "<form><label for=a>L</label><textarea id=a>t <b></textarea><button>go</button></form>",
];

#[test]
fn tag_sequences_match_html5ever() {
    for case in CASES {
        let (tags, _) = ours(case);
        assert_eq!(tags, reference_tags(case), "{case}");
    }
}

#[test]
fn text_matches_html5ever() {
    for case in CASES {
        let (_, text) = ours(case);
        assert_eq!(text, reference_text(case), "{case}");
    }
}
