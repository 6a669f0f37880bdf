//! Tolerant HTML tokenizer and tree builder.
//!
//! Not a full HTML5 tree builder. It handles what generated pages actually
//! contain: implicit html/head/body, unclosed elements (closed at the parent
//! boundary), the common implied end tags (p, li, option, table parts), raw
//! text in script/style and escapable text in title/textarea.

use indexmap::IndexMap;
use thiserror::Error;

use super::element::{Element, Node};
use super::{digest, is_html_whitespace, is_raw_text, is_void, DomTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
    InvalidUtf8 { offset: usize },
    #[error("element nesting exceeds the depth limit of {limit}")]
    TooDeep { limit: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub max_depth: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { max_depth: 512 }
    }
}

pub fn parse_html(source: &str) -> Result<DomTree, ParseError> {
    parse_html_with(source, ParseOptions::default())
}

pub fn parse_html_bytes(source: &[u8]) -> Result<DomTree, ParseError> {
    let text = std::str::from_utf8(source).map_err(|e| ParseError::InvalidUtf8 { offset: e.valid_up_to() })?;
    parse_html(text)
}

pub fn parse_html_with(source: &str, options: ParseOptions) -> Result<DomTree, ParseError> {
    let tokens = tokenize(source);
    let root = TreeBuilder::new(options).build(tokens)?;
    Ok(DomTree::from_element_with_hash(root, digest(source)))
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, PartialEq)]
enum Token {
    Start { name: String, attrs: IndexMap<String, String>, self_closing: bool },
    End { name: String },
    Text(String),
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    out: Vec<Token>,
}

fn tokenize(src: &str) -> Vec<Token> {
    let mut t = Tokenizer { src, pos: 0, out: Vec::new() };
    t.run();
    t.out
}

impl<'a> Tokenizer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn run(&mut self) {
        let mut text_start = self.pos;
        while self.pos < self.src.len() {
            let rest = self.rest();
            if !rest.starts_with('<') {
                self.bump();
                continue;
            }
            let mut chars = rest[1..].chars();
            let markup = match chars.next() {
                Some(c) if c.is_ascii_alphabetic() => true,
                Some('/') => matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()),
                Some('!') | Some('?') => true,
                _ => false,
            };
            if !markup {
                self.bump();
                continue;
            }
            self.flush_text(text_start);
            self.markup();
            text_start = self.pos;
        }
        self.flush_text(text_start);
    }

    fn flush_text(&mut self, start: usize) {
        if start < self.pos {
            let raw = &self.src[start..self.pos];
            self.out.push(Token::Text(decode_entities(raw)));
        }
    }

    fn skip_past(&mut self, needle: &str) {
        match self.rest().find(needle) {
            Some(i) => self.pos += i + needle.len(),
            None => self.pos = self.src.len(),
        }
    }

    fn markup(&mut self) {
        let rest = self.rest();
        if rest.starts_with("<!--") {
            self.pos += 4;
            self.skip_past("-->");
        } else if rest.starts_with("<!") || rest.starts_with("<?") {
            self.skip_past(">");
        } else if rest.starts_with("</") {
            self.pos += 2;
            let name = self.tag_name();
            self.skip_past(">");
            self.out.push(Token::End { name });
        } else {
            self.pos += 1;
            self.start_tag();
        }
    }

    fn tag_name(&mut self) -> String {
        let mut name = String::new();
        while let Some(c) = self.peek() {
            if is_html_whitespace(c) || c == '/' || c == '>' {
                break;
            }
            name.push(c.to_ascii_lowercase());
            self.bump();
        }
        name
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if is_html_whitespace(c)) {
            self.bump();
        }
    }

    fn start_tag(&mut self) {
        let name = self.tag_name();
        let mut attrs = IndexMap::new();
        let mut self_closing = false;
        loop {
            self.skip_ws();
            match self.peek() {
                None => return, // EOF inside a tag drops it
                Some('>') => {
                    self.bump();
                    break;
                }
                Some('/') => {
                    self.bump();
                    if self.peek() == Some('>') {
                        self.bump();
                        self_closing = true;
                        break;
                    }
                }
                Some(_) => {
                    let (key, value) = self.attribute();
                    if !key.is_empty() {
                        attrs.entry(key).or_insert(value);
                    }
                }
            }
        }
        let raw = is_raw_text(&name);
        let escapable = matches!(name.as_str(), "title" | "textarea");
        self.out.push(Token::Start { name: name.clone(), attrs, self_closing });
        if self_closing || !(raw || escapable) {
            return;
        }
        // Content runs to the matching end tag, case-insensitively.
        let lower = self.rest().to_ascii_lowercase();
        let close = format!("</{name}");
        let end = lower.find(&close).map_or(self.src.len(), |i| self.pos + i);
        let body = &self.src[self.pos..end];
        if !body.is_empty() {
            let text = if raw { body.to_string() } else { decode_entities(body) };
            self.out.push(Token::Text(text));
        }
        self.pos = end;
        if self.pos < self.src.len() {
            self.pos += close.len();
            self.skip_past(">");
        }
        self.out.push(Token::End { name });
    }

    fn attribute(&mut self) -> (String, String) {
        let mut key = String::new();
        // A leading '=' is part of the name, as in the HTML tokenizer.
        if self.peek() == Some('=') {
            key.push('=');
            self.bump();
        }
        while let Some(c) = self.peek() {
            if is_html_whitespace(c) || matches!(c, '=' | '>' | '/') {
                break;
            }
            key.push(c.to_ascii_lowercase());
            self.bump();
        }
        self.skip_ws();
        if self.peek() != Some('=') {
            return (key, String::new());
        }
        self.bump();
        self.skip_ws();
        let value = match self.peek() {
            Some(q @ ('"' | '\'')) => {
                self.bump();
                let start = self.pos;
                let end = self.rest().find(q).map_or(self.src.len(), |i| start + i);
                let raw = &self.src[start..end];
                self.pos = (end + 1).min(self.src.len());
                raw
            }
            _ => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if is_html_whitespace(c) || c == '>' {
                        break;
                    }
                    self.bump();
                }
                &self.src[start..self.pos]
            }
        };
        (key, decode_entities(value))
    }
}

const NAMED_ENTITIES: &[(&str, &str)] = &[
    ("amp", "&"),
    ("lt", "<"),
    ("gt", ">"),
    ("quot", "\""),
    ("apos", "'"),
    ("nbsp", "\u{a0}"),
    ("copy", "\u{a9}"),
    ("reg", "\u{ae}"),
    ("trade", "\u{2122}"),
    ("mdash", "\u{2014}"),
    ("ndash", "\u{2013}"),
    ("hellip", "\u{2026}"),
    ("laquo", "\u{ab}"),
    ("raquo", "\u{bb}"),
    ("lsquo", "\u{2018}"),
    ("rsquo", "\u{2019}"),
    ("ldquo", "\u{201c}"),
    ("rdquo", "\u{201d}"),
    ("middot", "\u{b7}"),
    ("bull", "\u{2022}"),
    ("times", "\u{d7}"),
    ("euro", "\u{20ac}"),
    ("pound", "\u{a3}"),
    ("yen", "\u{a5}"),
    ("deg", "\u{b0}"),
    ("larr", "\u{2190}"),
    ("rarr", "\u{2192}"),
    ("uarr", "\u{2191}"),
    ("darr", "\u{2193}"),
];

/// Decodes character references. Unknown or malformed references stay as
/// written.
pub(crate) fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        match decode_one(rest) {
            Some((decoded, used)) => {
                out.push_str(&decoded);
                rest = &rest[used..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_one(s: &str) -> Option<(String, usize)> {
    let semi = s[..s.len().min(34)].find(';')?;
    let body = &s[1..semi];
    let decoded = if let Some(num) = body.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse::<u32>().ok()?,
        };
        char::from_u32(code).filter(|&c| c != '\0')?.to_string()
    } else {
        NAMED_ENTITIES.iter().find(|(n, _)| *n == body)?.1.to_string()
    };
    Some((decoded, semi + 1))
}

// ---------------------------------------------------------------------------
// Tree builder
// ---------------------------------------------------------------------------

const HEAD_CONTENT: &[&str] = &["title", "meta", "link", "style", "script", "base", "noscript", "template"];

/// Start tags that close an open `<p>`.
const CLOSES_P: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "details",
    "div",
    "dl",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hgroup",
    "hr",
    "main",
    "menu",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "ul",
];

/// Elements that stop the search for an element to implicitly close.
const SCOPE_BOUNDARY: &[&str] = &["table", "td", "th", "caption", "button", "object", "marquee", "template"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Head,
    Body,
}

struct TreeBuilder {
    options: ParseOptions,
    html: Element,
    head: Element,
    body: Element,
    section: Section,
    /// Open elements below head or body, innermost last.
    stack: Vec<Element>,
}

impl TreeBuilder {
    fn new(options: ParseOptions) -> Self {
        TreeBuilder {
            options,
            html: Element::new("html"),
            head: Element::new("head"),
            body: Element::new("body"),
            section: Section::Head,
            stack: Vec::new(),
        }
    }

    fn build(mut self, tokens: Vec<Token>) -> Result<Element, ParseError> {
        for token in tokens {
            match token {
                Token::Start { name, attrs, self_closing } => self.start(name, attrs, self_closing)?,
                Token::End { name } => self.end(&name),
                Token::Text(text) => self.text(text),
            }
        }
        self.close_all();
        let mut html = self.html;
        html.content.push(Node::Element(self.head));
        html.content.push(Node::Element(self.body));
        Ok(html)
    }

    fn container(&mut self) -> &mut Element {
        match self.stack.last_mut() {
            Some(top) => top,
            None => match self.section {
                Section::Head => &mut self.head,
                Section::Body => &mut self.body,
            },
        }
    }

    fn pop(&mut self) {
        if let Some(el) = self.stack.pop() {
            self.container().content.push(Node::Element(el));
        }
    }

    fn close_all(&mut self) {
        while !self.stack.is_empty() {
            self.pop();
        }
    }

    fn enter_body(&mut self) {
        if self.section == Section::Head {
            self.close_all();
            self.section = Section::Body;
        }
    }

    fn position(&self, tag: &str, stop_at: &[&str]) -> Option<usize> {
        for (i, el) in self.stack.iter().enumerate().rev() {
            if el.tag == tag {
                return Some(i);
            }
            if stop_at.contains(&el.tag.as_str()) {
                return None;
            }
        }
        None
    }

    fn close_through(&mut self, index: usize) {
        while self.stack.len() > index {
            self.pop();
        }
    }

    fn close_first_of(&mut self, tags: &[&str], stop_at: &[&str]) {
        for (i, el) in self.stack.iter().enumerate().rev() {
            if tags.contains(&el.tag.as_str()) {
                self.close_through(i);
                return;
            }
            if stop_at.contains(&el.tag.as_str()) {
                return;
            }
        }
    }

    fn implied_end_tags(&mut self, name: &str) {
        if CLOSES_P.contains(&name) {
            if let Some(i) = self.position("p", SCOPE_BOUNDARY) {
                self.close_through(i);
            }
        }
        match name {
            "li" => self.close_first_of(&["li"], &["ul", "ol", "menu", "table"]),
            "dt" | "dd" => self.close_first_of(&["dt", "dd"], &["dl", "table"]),
            "option" => self.close_first_of(&["option"], &["select", "datalist", "optgroup"]),
            "optgroup" => self.close_first_of(&["optgroup", "option"], &["select"]),
            "tr" => self.close_first_of(&["tr"], &["table", "thead", "tbody", "tfoot"]),
            "td" | "th" => self.close_first_of(&["td", "th"], &["tr", "table"]),
            "thead" | "tbody" | "tfoot" => self.close_first_of(&["thead", "tbody", "tfoot"], &["table"]),
            _ => {}
        }
    }

    fn start(&mut self, name: String, attrs: IndexMap<String, String>, self_closing: bool) -> Result<(), ParseError> {
        let merge = |target: &mut Element, attrs: IndexMap<String, String>| {
            for (k, v) in attrs {
                target.attributes.entry(k).or_insert(v);
            }
        };
        match name.as_str() {
            "html" => {
                merge(&mut self.html, attrs);
                return Ok(());
            }
            "head" => {
                if self.section == Section::Head {
                    merge(&mut self.head, attrs);
                }
                return Ok(());
            }
            "body" => {
                self.enter_body();
                merge(&mut self.body, attrs);
                return Ok(());
            }
            _ => {}
        }
        if self.section == Section::Head && !HEAD_CONTENT.contains(&name.as_str()) {
            // Anything but metadata inside an open head element (e.g. markup
            // inside <noscript>) stays put; otherwise the body starts here.
            if self.stack.is_empty() {
                self.enter_body();
            }
        }
        if self.section == Section::Body {
            self.implied_end_tags(&name);
        }
        // html plus head/body, plus the open stack, plus this element.
        if self.stack.len() + 3 > self.options.max_depth {
            return Err(ParseError::TooDeep { limit: self.options.max_depth });
        }
        let element = Element { tag: name, attributes: attrs, content: Vec::new() };
        let closes_now = self_closing || is_void(&element.tag);
        self.stack.push(element);
        if closes_now {
            self.pop();
        }
        Ok(())
    }

    fn end(&mut self, name: &str) {
        match name {
            "html" | "body" => {}
            "head" => self.enter_body(),
            _ => {
                if let Some(i) = self.position(name, &[]) {
                    self.close_through(i);
                }
            }
        }
    }

    fn text(&mut self, text: String) {
        if text.chars().all(is_html_whitespace) {
            return;
        }
        if self.section == Section::Head && self.stack.is_empty() {
            self.enter_body();
        }
        self.container().content.push(Node::Text(text));
    }
}
