//! Main-content extraction. HTML is parsed into a lenient tree; boilerplate
//! subtrees are dropped and the block with the most non-link text in its own
//! and its child paragraphs wins.

use super::IngestError;
use crate::corpus::{Document, IngestStatus, MediaType};

const DROPPED: &[&str] = &[
    "script", "style", "noscript", "nav", "header", "footer", "aside", "form", "iframe", "svg", "template", "head",
    "button", "select", "menu",
];
const BLOCKS: &[&str] = &[
    "p", "div", "article", "section", "main", "body", "html", "h1", "h2", "h3", "h4", "h5", "h6", "li", "ul", "ol",
    "blockquote", "pre", "td", "th", "tr", "table", "figcaption", "figure", "dd", "dt", "dl",
];
const VOID: &[&str] = &["br", "hr", "img", "meta", "link", "input", "area", "base", "col", "embed", "source", "wbr"];
const RAW_TEXT: &[&str] = &["script", "style", "textarea", "title"];

#[derive(Debug)]
enum Node {
    Element { name: String, children: Vec<usize> },
    Text(String),
}

#[derive(Debug)]
struct Tree {
    nodes: Vec<Node>,
    parent: Vec<Option<usize>>,
}

impl Tree {
    fn push(&mut self, node: Node, parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(node);
        self.parent.push(parent);
        if let Some(p) = parent {
            if let Node::Element { children, .. } = &mut self.nodes[p] {
                children.push(id);
            }
        }
        id
    }

    fn name(&self, id: usize) -> Option<&str> {
        match &self.nodes[id] {
            Node::Element { name, .. } => Some(name),
            Node::Text(_) => None,
        }
    }

    fn children(&self, id: usize) -> &[usize] {
        match &self.nodes[id] {
            Node::Element { children, .. } => children,
            Node::Text(_) => &[],
        }
    }
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let end = rest.find(';').filter(|&e| e <= 10);
        let decoded = end.and_then(|e| {
            let ent = &rest[1..e];
            let ch = match ent {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                "mdash" => Some('—'),
                "ndash" => Some('–'),
                "rsquo" | "lsquo" => Some('\''),
                "rdquo" | "ldquo" => Some('"'),
                _ if ent.starts_with("#x") || ent.starts_with("#X") => {
                    u32::from_str_radix(&ent[2..], 16).ok().and_then(char::from_u32)
                }
                _ if ent.starts_with('#') => ent[1..].parse().ok().and_then(char::from_u32),
                _ => None,
            };
            ch.map(|c| (c, e))
        });
        match decoded {
            Some((c, e)) => {
                out.push(c);
                rest = &rest[e + 1..];
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

fn tag_name(tag: &str) -> String {
    tag.trim_start_matches('/')
        .split(|c: char| c.is_whitespace() || c == '/' || c == '>')
        .next()
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn parse(html: &str) -> Tree {
    let mut tree = Tree { nodes: Vec::new(), parent: Vec::new() };
    let root = tree.push(Node::Element { name: "#root".into(), children: Vec::new() }, None);
    let mut stack = vec![root];
    let mut rest = html;
    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            tree.push(Node::Text(decode_entities(rest)), stack.last().copied());
            break;
        };
        if lt > 0 {
            tree.push(Node::Text(decode_entities(&rest[..lt])), stack.last().copied());
        }
        rest = &rest[lt..];
        if let Some(body) = rest.strip_prefix("<!--") {
            rest = body.find("-->").map_or("", |e| &body[e + 3..]);
            continue;
        }
        let Some(gt) = rest.find('>') else {
            // Stray '<' without a closing '>' is text.
            tree.push(Node::Text(decode_entities(rest)), stack.last().copied());
            break;
        };
        let tag = &rest[1..gt];
        rest = &rest[gt + 1..];
        if tag.starts_with('!') || tag.starts_with('?') {
            continue;
        }
        let name = tag_name(tag);
        if name.is_empty() {
            continue;
        }
        if tag.starts_with('/') {
            if let Some(pos) = stack.iter().rposition(|&id| tree.name(id) == Some(name.as_str())) {
                if pos > 0 {
                    stack.truncate(pos);
                }
            }
            continue;
        }
        // A new paragraph closes an open one.
        if name == "p" && stack.len() > 1 && stack.last().is_some_and(|&top| tree.name(top) == Some("p")) {
            stack.pop();
        }
        let parent = stack.last().copied();
        let id = tree.push(Node::Element { name: name.clone(), children: Vec::new() }, parent);
        if VOID.contains(&name.as_str()) || tag.ends_with('/') {
            continue;
        }
        if RAW_TEXT.contains(&name.as_str()) {
            let close = format!("</{name}");
            let end = rest.to_ascii_lowercase().find(&close).unwrap_or(rest.len());
            tree.push(Node::Text(rest[..end].to_string()), Some(id));
            rest = &rest[end..];
            rest = rest.find('>').map_or("", |e| &rest[e + 1..]);
            continue;
        }
        stack.push(id);
    }
    tree
}

fn is_dropped(tree: &Tree, id: usize) -> bool {
    tree.name(id).is_some_and(|n| DROPPED.contains(&n))
}

fn is_block(tree: &Tree, id: usize) -> bool {
    tree.name(id).is_some_and(|n| BLOCKS.contains(&n))
}

/// Visible non-link text length of `id` excluding nested blocks.
fn own_text_len(tree: &Tree, id: usize) -> usize {
    tree.children(id)
        .iter()
        .map(|&c| match &tree.nodes[c] {
            Node::Text(t) => t.split_whitespace().map(|w| w.chars().count()).sum(),
            Node::Element { name, .. } => {
                if is_dropped(tree, c) || is_block(tree, c) || name == "a" {
                    0
                } else {
                    own_text_len(tree, c)
                }
            }
        })
        .sum()
}

fn collect_text(tree: &Tree, id: usize, out: &mut Vec<String>, line: &mut String) {
    for &c in tree.children(id) {
        match &tree.nodes[c] {
            Node::Text(t) => {
                for w in t.split_whitespace() {
                    if !line.is_empty() {
                        line.push(' ');
                    }
                    line.push_str(w);
                }
            }
            Node::Element { name, .. } => {
                if is_dropped(tree, c) {
                    continue;
                }
                let block = is_block(tree, c) || name == "br";
                if block && !line.is_empty() {
                    out.push(std::mem::take(line));
                }
                collect_text(tree, c, out, line);
                if block && !line.is_empty() {
                    out.push(std::mem::take(line));
                }
            }
        }
    }
}

fn main_text(html: &str) -> String {
    let tree = parse(html);
    let mut score = vec![0.0f64; tree.nodes.len()];
    let mut live = vec![true; tree.nodes.len()];
    for id in 0..tree.nodes.len() {
        let parent_dead = tree.parent[id].is_some_and(|p| !live[p]);
        live[id] = !parent_dead && !is_dropped(&tree, id);
    }
    for id in 0..tree.nodes.len() {
        if !live[id] || !is_block(&tree, id) {
            continue;
        }
        let own = own_text_len(&tree, id) as f64;
        if own == 0.0 {
            continue;
        }
        score[id] += own;
        if let Some(p) = tree.parent[id] {
            score[p] += own;
            if let Some(gp) = tree.parent[p] {
                score[gp] += own / 2.0;
            }
        }
    }
    // Fall back to the whole document when there are no blocks.
    let best = (1..tree.nodes.len())
        .filter(|&id| live[id] && is_block(&tree, id))
        .fold(None, |best: Option<usize>, id| match best {
            Some(b) if score[b] >= score[id] => Some(b),
            _ if score[id] > 0.0 => Some(id),
            _ => best,
        })
        .unwrap_or(0);
    let mut lines = Vec::new();
    let mut line = String::new();
    collect_text(&tree, best, &mut lines, &mut line);
    if !line.is_empty() {
        lines.push(line);
    }
    lines.join("\n\n")
}

/// Fills `extracted_text`; plain text passes through unchanged.
pub fn extract_main_content(mut doc: Document) -> Result<Document, IngestError> {
    doc.extracted_text = match doc.media {
        MediaType::Plain => doc.raw_content.clone(),
        MediaType::Html => main_text(&doc.raw_content),
    };
    if doc.extracted_text.trim().is_empty() {
        return Err(IngestError::EmptyAfterExtraction(doc.doc_id));
    }
    doc.ingest_status = IngestStatus::Extracted;
    Ok(doc)
}
