use indexmap::IndexMap;

/// Owned element used while building or rewriting a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub tag: String,
    pub attributes: IndexMap<String, String>,
    pub content: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Text(String),
    Element(Element),
}

impl Element {
    pub fn new(tag: impl Into<String>) -> Element {
        Element { tag: tag.into(), attributes: IndexMap::new(), content: Vec::new() }
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Element {
        self.attributes.insert(name.into(), value.into());
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Element {
        self.content.push(Node::Text(text.into()));
        self
    }

    pub fn with_child(mut self, child: Element) -> Element {
        self.content.push(Node::Element(child));
        self
    }

    pub fn children(&self) -> impl Iterator<Item = &Element> {
        self.content.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    pub fn children_mut(&mut self) -> impl Iterator<Item = &mut Element> {
        self.content.iter_mut().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    /// Applies `f` to this element and every descendant, parents first.
    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Element)) {
        f(self);
        for child in self.children_mut() {
            child.walk_mut(f);
        }
    }

    /// Recursively drops child elements for which `keep` returns false.
    pub fn retain_descendants(&mut self, keep: &mut impl FnMut(&Element) -> bool) {
        self.content.retain(|n| match n {
            Node::Element(e) => keep(e),
            Node::Text(_) => true,
        });
        for child in self.children_mut() {
            child.retain_descendants(keep);
        }
    }

    pub fn class_list(&self) -> Vec<&str> {
        self.attributes.get("class").map(|c| c.split_ascii_whitespace().collect()).unwrap_or_default()
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.class_list().contains(&class)
    }

    /// Appends `class` to the class attribute, creating it if needed.
    pub fn add_class(&mut self, class: &str) {
        match self.attributes.get_mut("class") {
            Some(existing) => {
                existing.push(' ');
                existing.push_str(class);
            }
            None => {
                self.attributes.insert("class".to_string(), class.to_string());
            }
        }
    }

    /// Removes `class`. A trailing occurrence added by [`Element::add_class`]
    /// is stripped so the original attribute text comes back unchanged.
    pub fn remove_class(&mut self, class: &str) {
        let Some(existing) = self.attributes.get("class") else { return };
        if !existing.split_ascii_whitespace().any(|c| c == class) {
            return;
        }
        let suffix = format!(" {class}");
        let replacement = if existing == class {
            None
        } else if let Some(prefix) = existing.strip_suffix(&suffix) {
            Some(prefix.to_string())
        } else {
            let kept: Vec<&str> = existing.split_ascii_whitespace().filter(|c| *c != class).collect();
            (!kept.is_empty()).then(|| kept.join(" "))
        };
        match replacement {
            Some(value) => {
                self.attributes.insert("class".to_string(), value);
            }
            None => {
                self.attributes.shift_remove("class");
            }
        }
    }
}
