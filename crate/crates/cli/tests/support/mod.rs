//! Seeded synthetic pages shared by the CLI test targets.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use iwbench::dom::parse_html;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn block(kind: usize, k: usize) -> String {
    match kind {
        0 => format!("<h1 class=\"title\">Heading {k}</h1>"),
        1 => format!("<p style=\"color: #333; margin: 4px\">Paragraph {k} <span class=\"tag\">word</span> end.</p>"),
        2 => format!("<a href=\"/page/{k}\" title=\"Link {k}\">Link {k}</a>"),
        3 => format!("<img src=\"img{k}.png\" alt=\"Image {k}\">"),
        4 => format!("<ul><li>Item {k}a</li><li>Item {k}b</li></ul>"),
        5 => format!("<button type=\"button\" onclick=\"go({k})\">Go {k}</button>"),
        6 => format!("<div class=\"card\" id=\"card{k}\"><h3>Card {k}</h3><p>Body</p></div>"),
        7 => format!("<table><tr><th>Key</th><td>{k}</td></tr></table>"),
        8 => format!(
            "<form action=\"/search\"><input type=\"text\" name=\"q{k}\" placeholder=\"Search\">\
             <select name=\"s{k}\"><option value=\"1\">One</option></select></form>"
        ),
        _ => format!("<section><h2>Section {k}</h2><p>Text &amp; more</p></section>"),
    }
}

/// A page of `blocks` randomly chosen content blocks.
pub fn synthetic_page(seed: u64, blocks: usize) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let body: String = (0..blocks).map(|k| block(rng.gen_range(0..10), k)).collect::<Vec<_>>().join("\n");
    format!(
        "<!DOCTYPE html>\n<html><head><title>Page {seed}</title>\
         <style>.card {{ padding: 8px; border: 1px solid #ccc }} p {{ line-height: 1.5 }} #card0 {{ color: red }}</style>\
         </head><body><main>\n{body}\n</main></body></html>\n"
    )
}

/// Block counts of the standard corpus, small to large.
pub const CORPUS_SIZES: [usize; 24] =
    [2, 3, 2, 3, 2, 3, 2, 4, 8, 10, 12, 9, 11, 13, 10, 9, 25, 30, 35, 28, 32, 40, 27, 33];

pub fn corpus() -> Vec<String> {
    CORPUS_SIZES.iter().enumerate().map(|(i, &n)| synthetic_page(i as u64, n)).collect()
}

/// `page` with up to three random content elements removed.
pub fn degrade(page: &str, seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let tree = parse_html(page).unwrap();
    let ids: Vec<_> = tree.content_elements().map(|n| n.node_id).collect();
    let k = rng.gen_range(0..=3).min(ids.len());
    let removed: BTreeSet<_> = ids.choose_multiple(&mut rng, k).copied().collect();
    tree.without(&removed).serialize()
}

/// A page of `elements` spans carrying `attributes` attributes in total.
pub fn counted_page(elements: usize, attributes: usize) -> String {
    let body: String = (0..elements)
        .map(|i| {
            let attrs: String =
                (0..attributes).filter(|a| a % elements == i).map(|a| format!(" data-a{a}=\"v\"")).collect();
            format!("<span{attrs}>s{i}</span>")
        })
        .collect();
    format!("<html><head></head><body>{body}</body></html>")
}

pub fn write(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}
