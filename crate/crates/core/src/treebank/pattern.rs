//! A tregex subset: node predicates (category label or `/regex/`), optional
//! `=name` captures, and five relations.
//!
//! ```text
//! EXPR := NODE (REL ATOM)*
//! ATOM := NODE | '(' EXPR ')'
//! NODE := LABEL | /regex/ , optionally followed by =name
//! REL  := <  <<  .  ..  $
//! ```
//!
//! As in tregex, every relation in `A < B . C` applies to `A`; nest with
//! parentheses: `VP < (NP=io . NP=do)`. Relation symbols must be separated
//! from a preceding label by whitespace since labels may contain `$` and `.`
//! (`PRP$`).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use regex::Regex;
use thiserror::Error;

use super::tree::{category, ParseTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// `A < B`: B is a child of A.
    Child,
    /// `A << B`: B is a proper descendant of A.
    Descendant,
    /// `A . B`: the last leaf of A is immediately followed by the first leaf of B.
    ImmediatelyPrecedes,
    /// `A .. B`: every leaf of A comes before every leaf of B.
    Precedes,
    /// `A $ B`: A and B are distinct children of one parent.
    Sister,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Child => "<",
            Relation::Descendant => "<<",
            Relation::ImmediatelyPrecedes => ".",
            Relation::Precedes => "..",
            Relation::Sister => "$",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => Relation::Child,
            "<<" => Relation::Descendant,
            "." => Relation::ImmediatelyPrecedes,
            ".." => Relation::Precedes,
            "$" => Relation::Sister,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum NodePredicate {
    /// Whole label equality.
    Exact(String),
    /// Category equality after stripping function tags: `NP` matches `NP-SBJ-1`.
    Category(String),
    Regex {
        source: String,
        re: Regex,
    },
}

impl PartialEq for NodePredicate {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (NodePredicate::Exact(a), NodePredicate::Exact(b)) => a == b,
            (NodePredicate::Category(a), NodePredicate::Category(b)) => a == b,
            (NodePredicate::Regex { source: a, .. }, NodePredicate::Regex { source: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl NodePredicate {
    pub fn matches(&self, label: &str) -> bool {
        match self {
            NodePredicate::Exact(l) => label == l,
            NodePredicate::Category(c) => label == c || category(label) == c,
            NodePredicate::Regex { re, .. } => re.is_match(label),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreePattern {
    pub predicate: NodePredicate,
    pub relations: Vec<(Relation, TreePattern)>,
    pub capture: Option<String>,
}

impl TreePattern {
    pub fn node(predicate: NodePredicate) -> Self {
        TreePattern { predicate, relations: Vec::new(), capture: None }
    }

    /// Number of pattern nodes.
    pub fn size(&self) -> usize {
        1 + self.relations.iter().map(|(_, p)| p.size()).sum::<usize>()
    }

    /// Pattern nodes in preorder; index `i` of a match binding refers to
    /// entry `i` here.
    pub fn preorder(&self) -> Vec<&TreePattern> {
        let mut out = vec![self];
        for (_, p) in &self.relations {
            out.extend(p.preorder());
        }
        out
    }

    pub fn captures(&self) -> Vec<&str> {
        self.preorder().iter().filter_map(|p| p.capture.as_deref()).collect()
    }
}

impl fmt::Display for TreePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.predicate {
            NodePredicate::Exact(l) | NodePredicate::Category(l) => f.write_str(l)?,
            NodePredicate::Regex { source, .. } => write!(f, "/{source}/")?,
        }
        if let Some(c) = &self.capture {
            write!(f, "={c}")?;
        }
        for (rel, p) in &self.relations {
            if p.relations.is_empty() {
                write!(f, " {} {p}", rel.symbol())?;
            } else {
                write!(f, " {} ({p})", rel.symbol())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("unknown relation '{found}' at byte {offset}")]
    UnknownRelation { found: String, offset: usize },
    #[error("duplicate capture name '{name}' at byte {offset}")]
    DuplicateCapture { name: String, offset: usize },
    #[error("expected a node at byte {offset}")]
    ExpectedNode { offset: usize },
    #[error("unterminated regex starting at byte {offset}")]
    UnterminatedRegex { offset: usize },
    #[error("invalid regex at byte {offset}: {message}")]
    BadRegex { offset: usize, message: String },
    #[error("missing ')' for group opened at byte {offset}")]
    UnclosedGroup { offset: usize },
    #[error("empty capture name at byte {offset}")]
    EmptyCapture { offset: usize },
}

const REL_CHARS: &[u8] = b"<>.$%!@#&*+,;:?|~^";

struct PatternParser<'a> {
    src: &'a str,
    pos: usize,
    captures: Vec<String>,
}

impl<'a> PatternParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src.as_bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<TreePattern, PatternError> {
        let mut head = self.node()?;
        loop {
            self.skip_ws();
            match self.peek() {
                None | Some(b')') => return Ok(head),
                _ => {}
            }
            let rel = self.relation()?;
            self.skip_ws();
            let child = if self.peek() == Some(b'(') {
                let open = self.pos;
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(PatternError::UnclosedGroup { offset: open });
                }
                self.pos += 1;
                inner
            } else {
                self.node()?
            };
            head.relations.push((rel, child));
        }
    }

    fn relation(&mut self) -> Result<Relation, PatternError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && REL_CHARS.contains(&bytes[self.pos]) {
            self.pos += 1;
        }
        let sym = &self.src[start..self.pos];
        if let Some(rel) = Relation::from_symbol(sym) {
            return Ok(rel);
        }
        let found = if sym.is_empty() {
            self.src[start..].split_whitespace().next().unwrap_or("").to_string()
        } else {
            sym.to_string()
        };
        Err(PatternError::UnknownRelation { found, offset: start })
    }

    fn node(&mut self) -> Result<TreePattern, PatternError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let predicate = match self.peek() {
            Some(b'/') => {
                let body_start = self.pos + 1;
                let mut i = body_start;
                while i < bytes.len() && bytes[i] != b'/' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(PatternError::UnterminatedRegex { offset: start });
                }
                let source = self.src[body_start..i].to_string();
                self.pos = i + 1;
                let re = Regex::new(&source)
                    .map_err(|e| PatternError::BadRegex { offset: start, message: e.to_string() })?;
                NodePredicate::Regex { source, re }
            }
            Some(c) if is_label_start(c) => {
                while self.pos < bytes.len() && is_label_char(bytes[self.pos]) {
                    self.pos += 1;
                }
                NodePredicate::Category(self.src[start..self.pos].to_string())
            }
            _ => return Err(PatternError::ExpectedNode { offset: start }),
        };
        let mut pattern = TreePattern::node(predicate);
        if self.peek() == Some(b'=') {
            let eq = self.pos;
            self.pos += 1;
            let name_start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            let name = &self.src[name_start..self.pos];
            if name.is_empty() {
                return Err(PatternError::EmptyCapture { offset: eq });
            }
            if self.captures.iter().any(|c| c == name) {
                return Err(PatternError::DuplicateCapture { name: name.to_string(), offset: name_start });
            }
            self.captures.push(name.to_string());
            pattern.capture = Some(name.to_string());
        }
        Ok(pattern)
    }
}

fn is_label_start(c: u8) -> bool {
    !c.is_ascii_whitespace() && !b"()/=".contains(&c) && !REL_CHARS.contains(&c)
}

fn is_label_char(c: u8) -> bool {
    !c.is_ascii_whitespace() && !b"()/=<>".contains(&c)
}

/// Parse the surface syntax into a [`TreePattern`].
pub fn compile_pattern(src: &str) -> Result<TreePattern, PatternError> {
    let mut p = PatternParser { src, pos: 0, captures: Vec::new() };
    let pat = p.expr()?;
    p.skip_ws();
    if p.pos < src.len() {
        // Only a stray ')' can stop `expr` early.
        return Err(PatternError::UnknownRelation { found: ")".to_string(), offset: p.pos });
    }
    Ok(pat)
}

/// Preorder-indexed view of a tree with parent links, used by the matcher
/// and by extraction code that needs to walk upwards.
pub struct TreeView<'a> {
    nodes: Vec<&'a ParseTree>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Descendants of `i` are exactly the ids in `i + 1..subtree_end[i]`.
    subtree_end: Vec<usize>,
}

pub type NodeId = usize;

/// One binding of every pattern node (in pattern preorder) to a tree node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match {
    pub binding: Vec<NodeId>,
    pub captures: BTreeMap<String, NodeId>,
}

impl<'a> TreeView<'a> {
    pub fn new(tree: &'a ParseTree) -> Self {
        let mut view =
            TreeView { nodes: Vec::new(), parent: Vec::new(), children: Vec::new(), subtree_end: Vec::new() };
        fn go<'a>(v: &mut TreeView<'a>, t: &'a ParseTree, parent: Option<usize>) -> usize {
            let id = v.nodes.len();
            v.nodes.push(t);
            v.parent.push(parent);
            v.children.push(Vec::new());
            v.subtree_end.push(0);
            for c in &t.children {
                let cid = go(v, c, Some(id));
                v.children[id].push(cid);
            }
            v.subtree_end[id] = v.nodes.len();
            id
        }
        go(&mut view, tree, None);
        view
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &'a ParseTree {
        self.nodes[id]
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    /// Position of `id` among its parent's children.
    pub fn child_index(&self, id: NodeId) -> Option<usize> {
        let p = self.parent[id]?;
        self.children[p].iter().position(|&c| c == id)
    }

    pub fn holds(&self, rel: Relation, a: NodeId, b: NodeId) -> bool {
        let (sa, sb) = (self.nodes[a].span, self.nodes[b].span);
        match rel {
            Relation::Child => self.parent[b] == Some(a),
            Relation::Descendant => b > a && b < self.subtree_end[a],
            Relation::ImmediatelyPrecedes => sa.1 == sb.0,
            Relation::Precedes => sa.1 <= sb.0,
            Relation::Sister => a != b && self.parent[a].is_some() && self.parent[a] == self.parent[b],
        }
    }

    fn candidates(&self, rel: Relation, a: NodeId) -> Vec<NodeId> {
        match rel {
            Relation::Child => self.children[a].clone(),
            Relation::Descendant => (a + 1..self.subtree_end[a]).collect(),
            Relation::Sister => match self.parent[a] {
                Some(p) => self.children[p].iter().copied().filter(|&c| c != a).collect(),
                None => Vec::new(),
            },
            _ => (0..self.nodes.len()).filter(|&b| self.holds(rel, a, b)).collect(),
        }
    }

    /// All bindings of `pattern` in this tree, sorted by binding (document
    /// order of the root first).
    pub fn find(&self, pattern: &TreePattern) -> Vec<Match> {
        let flat = pattern.preorder();
        let mut out = Vec::new();
        for n in 0..self.nodes.len() {
            if !pattern.predicate.matches(&self.nodes[n].label) {
                continue;
            }
            for binding in self.bind(pattern, n) {
                let captures =
                    flat.iter().zip(&binding).filter_map(|(p, &id)| p.capture.clone().map(|c| (c, id))).collect();
                out.push(Match { binding, captures });
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Bindings of the pattern subtree rooted at `p`, with `p` bound to `n`
    /// (whose predicate has already been checked).
    fn bind(&self, p: &TreePattern, n: NodeId) -> Vec<Vec<NodeId>> {
        let mut partial: Vec<Vec<NodeId>> = vec![vec![n]];
        for (rel, sub) in &p.relations {
            let mut sub_bindings = Vec::new();
            for m in self.candidates(*rel, n) {
                if sub.predicate.matches(&self.nodes[m].label) {
                    sub_bindings.extend(self.bind(sub, m));
                }
            }
            if sub_bindings.is_empty() {
                return Vec::new();
            }
            let mut next = Vec::with_capacity(partial.len() * sub_bindings.len());
            for prefix in &partial {
                for sb in &sub_bindings {
                    let mut b = prefix.clone();
                    b.extend_from_slice(sb);
                    next.push(b);
                }
            }
            partial = next;
        }
        partial
    }
}

/// Capture name to matched subtree.
pub type CaptureMap<'a> = BTreeMap<String, &'a ParseTree>;

/// Every binding of `pattern` in `tree`, as capture maps, in document order
/// of the root binding.
pub fn match_pattern<'a>(tree: &'a ParseTree, pattern: &TreePattern) -> Vec<CaptureMap<'a>> {
    let view = TreeView::new(tree);
    view.find(pattern).into_iter().map(|m| m.captures.into_iter().map(|(k, id)| (k, view.node(id))).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_ptb;

    fn tree(s: &str) -> ParseTree {
        parse_ptb(s).unwrap().remove(0)
    }

    #[test]
    fn compiles_grouped_captures() {
        let p = compile_pattern("VP < (NP=io . NP=do)").unwrap();
        assert_eq!(p.size(), 3);
        assert_eq!(p.captures(), ["io", "do"]);
        assert_eq!(p.relations.len(), 1);
        assert_eq!(p.relations[0].0, Relation::Child);
        assert_eq!(p.relations[0].1.relations[0].0, Relation::ImmediatelyPrecedes);
        assert_eq!(p.to_string(), "VP < (NP=io . NP=do)");
    }

    #[test]
    fn compiles_dominance_and_chains() {
        let p = compile_pattern("NP << NN").unwrap();
        assert_eq!(p.relations[0].0, Relation::Descendant);
        let p = compile_pattern("VP < /^VB/=v < NP .. PP $ ADVP").unwrap();
        let rels: Vec<_> = p.relations.iter().map(|r| r.0).collect();
        assert_eq!(rels, [Relation::Child, Relation::Child, Relation::Precedes, Relation::Sister]);
        assert!(compile_pattern("PRP$ $ NN").is_ok());
    }

    #[test]
    fn rejects_bad_patterns() {
        assert_eq!(
            compile_pattern("VP % NP").unwrap_err(),
            PatternError::UnknownRelation { found: "%".into(), offset: 3 }
        );
        assert_eq!(
            compile_pattern("NP=a < NN=a").unwrap_err(),
            PatternError::DuplicateCapture { name: "a".into(), offset: 10 }
        );
        assert!(matches!(compile_pattern("VP NP"), Err(PatternError::UnknownRelation { .. })));
        assert!(matches!(compile_pattern("VP < (NP"), Err(PatternError::UnclosedGroup { .. })));
        assert!(matches!(compile_pattern("/NP"), Err(PatternError::UnterminatedRegex { .. })));
        assert!(matches!(compile_pattern("/(/"), Err(PatternError::BadRegex { .. })));
        assert!(matches!(compile_pattern("VP <"), Err(PatternError::ExpectedNode { .. })));
    }

    #[test]
    fn child_match() {
        let t = tree("(S (NP (NN dog)))");
        assert_eq!(match_pattern(&t, &compile_pattern("NP < NN").unwrap()).len(), 1);
    }

    #[test]
    fn immediate_precedence_match() {
        let t = tree("(S (NP (NN a)) (NP (NN b)))");
        let ms = match_pattern(&t, &compile_pattern("NP=x . NP=y").unwrap());
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0]["x"].tokens(), ["a"]);
        assert_eq!(ms[0]["y"].tokens(), ["b"]);
    }

    #[test]
    fn absent_label_matches_nothing() {
        let t = tree("(S (NP (NN dog)) (VP (VBD ran)))");
        assert!(match_pattern(&t, &compile_pattern("ZZZ").unwrap()).is_empty());
    }

    #[test]
    fn function_tags_use_category() {
        let t = tree("(S (NP-SBJ (NN dog)) (VP (VBD ran)))");
        assert_eq!(match_pattern(&t, &compile_pattern("S < NP=s").unwrap()).len(), 1);
        assert!(match_pattern(&t, &compile_pattern("S < N").unwrap()).is_empty());
        assert_eq!(match_pattern(&t, &compile_pattern("/^VB/").unwrap()).len(), 1);
    }

    #[test]
    fn sisters_and_descendants() {
        let t = tree("(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (NN cat))))");
        let v = TreeView::new(&t);
        assert_eq!(v.find(&compile_pattern("NP $ VP").unwrap()).len(), 1);
        assert_eq!(v.find(&compile_pattern("S << NN").unwrap()).len(), 2);
        assert_eq!(v.find(&compile_pattern("NN .. NN").unwrap()).len(), 1);
        // Distinct pattern nodes may bind the same tree node.
        assert_eq!(v.find(&compile_pattern("NP < NN < NN").unwrap()).len(), 2);
    }
}
