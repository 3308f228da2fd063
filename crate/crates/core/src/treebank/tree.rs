use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// A constituency tree. Preterminals are the leaves: `(NN dog)` is one node
/// with label `NN` and token `dog`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    pub label: String,
    pub children: Vec<ParseTree>,
    pub token: Option<String>,
    /// Half-open leaf-index interval covered by this node.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced parentheses: '(' at byte {offset} is never closed")]
    Unclosed { offset: usize },
    #[error("unexpected ')' at byte {offset}")]
    UnexpectedClose { offset: usize },
    #[error("empty label at byte {offset} where a nonterminal is required")]
    EmptyLabel { offset: usize },
    #[error("constituent at byte {offset} has neither token nor children")]
    EmptyConstituent { offset: usize },
    #[error("constituent at byte {offset} mixes a bare token with subtrees")]
    MixedContent { offset: usize },
    #[error("text outside any tree at byte {offset}")]
    StrayToken { offset: usize },
}

impl ParseTree {
    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Self {
        ParseTree { label: label.into(), children: Vec::new(), token: Some(token.into()), span: (0, 1) }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        let mut t = ParseTree { label: label.into(), children, token: None, span: (0, 0) };
        t.reindex();
        t
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Recompute spans bottom-up starting at leaf 0.
    pub fn reindex(&mut self) {
        fn go(t: &mut ParseTree, next: &mut usize) {
            let start = *next;
            if t.children.is_empty() {
                *next += 1;
            } else {
                for c in &mut t.children {
                    go(c, next);
                }
            }
            t.span = (start, *next);
        }
        let mut next = 0;
        go(self, &mut next);
    }

    /// Leaves in order.
    pub fn leaves(&self) -> Vec<&ParseTree> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a ParseTree, out: &mut Vec<&'a ParseTree>) {
            if t.is_leaf() {
                out.push(t);
            } else {
                for c in &t.children {
                    go(c, out);
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn tokens(&self) -> Vec<String> {
        self.leaves().iter().map(|l| l.token.clone().unwrap_or_default()).collect()
    }

    /// Syntactic category with PTB function tags and indices removed:
    /// `NP-SBJ-1` is `NP`, `PP=2` is `PP`, `-NONE-` stays as is.
    pub fn category(&self) -> &str {
        category(&self.label)
    }

    /// Drop `-NONE-` leaves and any constituent left without leaves, then
    /// recompute spans. Returns `None` if nothing remains.
    pub fn strip_empty(&self) -> Option<ParseTree> {
        fn go(t: &ParseTree) -> Option<ParseTree> {
            if t.is_leaf() {
                return (t.label != "-NONE-").then(|| t.clone());
            }
            let children: Vec<_> = t.children.iter().filter_map(go).collect();
            if children.is_empty() {
                return None;
            }
            Some(ParseTree { label: t.label.clone(), children, token: None, span: (0, 0) })
        }
        let mut out = go(self)?;
        out.reindex();
        Some(out)
    }

    /// Canonical single-line bracketing without a wrapper pair.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

pub(crate) fn category(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    let end = label.find(['-', '=']).unwrap_or(label.len());
    &label[..end]
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        if let Some(tok) = &self.token {
            write!(f, " {tok}")?;
        }
        for c in &self.children {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lex<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> Vec<(Lex<'_>, usize)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((Lex::Open, i));
                i += 1;
            }
            b')' => {
                out.push((Lex::Close, i));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' && bytes[i] != b')' {
                    i += 1;
                }
                out.push((Lex::Atom(&text[start..i]), start));
            }
        }
    }
    out
}

/// Read every top-level tree in `text`. An outer wrapper pair with an empty
/// label, as in `( (S ...) )`, is removed.
pub fn parse_ptb(text: &str) -> Result<Vec<ParseTree>, ParseError> {
    let toks = lex(text);
    let mut pos = 0;
    let mut trees = Vec::new();
    while pos < toks.len() {
        match toks[pos] {
            (Lex::Open, _) => {
                let mut t = parse_node(&toks, &mut pos)?;
                t.reindex();
                trees.push(t);
            }
            (Lex::Close, offset) => return Err(ParseError::UnexpectedClose { offset }),
            (Lex::Atom(_), offset) => return Err(ParseError::StrayToken { offset }),
        }
    }
    Ok(trees)
}

fn parse_node(toks: &[(Lex<'_>, usize)], pos: &mut usize) -> Result<ParseTree, ParseError> {
    let open = toks[*pos].1;
    *pos += 1;
    let mut label = String::new();
    if let Some((Lex::Atom(a), _)) = toks.get(*pos) {
        label = (*a).to_string();
        *pos += 1;
    }
    let mut token: Option<String> = None;
    let mut children = Vec::new();
    loop {
        match toks.get(*pos) {
            None => return Err(ParseError::Unclosed { offset: open }),
            Some((Lex::Close, _)) => {
                *pos += 1;
                break;
            }
            Some((Lex::Open, _)) => children.push(parse_node(toks, pos)?),
            Some((Lex::Atom(a), _)) => {
                if token.is_some() {
                    return Err(ParseError::MixedContent { offset: open });
                }
                token = Some((*a).to_string());
                *pos += 1;
            }
        }
    }
    if token.is_some() && !children.is_empty() {
        return Err(ParseError::MixedContent { offset: open });
    }
    if label.is_empty() {
        if token.is_none() && children.len() == 1 {
            return Ok(children.pop().unwrap());
        }
        return Err(ParseError::EmptyLabel { offset: open });
    }
    if token.is_none() && children.is_empty() {
        return Err(ParseError::EmptyConstituent { offset: open });
    }
    Ok(ParseTree { label, children, token, span: (0, 0) })
}
