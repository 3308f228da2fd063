//! Random trees, random patterns and an exhaustive matcher that shares no
//! code with the crate's matcher: relations are recomputed from parent
//! links and leaf intervals of its own, and every assignment of pattern
//! nodes to tree nodes is enumerated.

use rand::Rng;
use regex::Regex;
use rolebench_core::treebank::{parse_ptb, ParseTree};

const PHRASES: [&str; 5] = ["S", "NP", "VP", "PP", "NP-SBJ"];
const TAGS: [&str; 4] = ["NN", "DT", "VBD", "TO"];
const PATTERN_LABELS: [&str; 9] = ["S", "NP", "VP", "PP", "NN", "DT", "VBD", "TO", "SBAR"];
const REGEXES: [&str; 5] = [".", "^N", "P$", "^V", "^(DT|TO)$"];
const RELATIONS: [&str; 5] = ["<", "<<", ".", "..", "$"];

/// A random bracketed tree with at most `max_nodes` nodes.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> ParseTree {
    fn phrase<R: Rng>(rng: &mut R, budget: &mut usize, depth: usize, out: &mut String) {
        *budget -= 1;
        let n_children = if *budget < 2 || depth > 4 { 0 } else { rng.random_range(1..=3) };
        if n_children == 0 {
            out.push_str(&format!("({} w{})", TAGS[rng.random_range(0..TAGS.len())], rng.random_range(0..9)));
            return;
        }
        out.push_str(&format!("({}", PHRASES[rng.random_range(0..PHRASES.len())]));
        for _ in 0..n_children {
            if *budget == 0 {
                break;
            }
            out.push(' ');
            if *budget >= 2 && rng.random_bool(0.6) {
                phrase(rng, budget, depth + 1, out);
            } else {
                *budget -= 1;
                out.push_str(&format!("({} w{})", TAGS[rng.random_range(0..TAGS.len())], rng.random_range(0..9)));
            }
        }
        out.push(')');
    }
    let mut budget = rng.random_range((max_nodes / 2).max(2)..=max_nodes);
    let mut s = String::new();
    phrase(rng, &mut budget, 0, &mut s);
    parse_ptb(&s).expect("generated trees are well formed").remove(0)
}

#[derive(Debug, Clone)]
pub enum Pred {
    Label(String),
    Regex(String),
}

#[derive(Debug, Clone)]
pub struct Pat {
    pub pred: Pred,
    pub capture: Option<String>,
    pub rels: Vec<(&'static str, Pat)>,
}

impl Pat {
    fn count_rels(&self) -> usize {
        self.rels.iter().map(|(_, p)| 1 + p.count_rels()).sum()
    }

    pub fn render(&self) -> String {
        let mut s = match &self.pred {
            Pred::Label(l) => l.clone(),
            Pred::Regex(r) => format!("/{r}/"),
        };
        if let Some(c) = &self.capture {
            s.push('=');
            s.push_str(c);
        }
        for (rel, p) in &self.rels {
            if p.rels.is_empty() {
                s.push_str(&format!(" {rel} {}", p.render()));
            } else {
                s.push_str(&format!(" {rel} ({})", p.render()));
            }
        }
        s
    }

    fn preorder(&self) -> Vec<&Pat> {
        let mut out = vec![self];
        for (_, p) in &self.rels {
            out.extend(p.preorder());
        }
        out
    }
}

/// A random pattern with at most `max_rels` relations.
pub fn random_pattern<R: Rng>(rng: &mut R, max_rels: usize) -> Pat {
    let mut names = 0;
    let mut node = |rng: &mut R| {
        let pred = if rng.random_bool(0.35) {
            Pred::Regex(REGEXES[rng.random_range(0..REGEXES.len())].into())
        } else {
            Pred::Label(PATTERN_LABELS[rng.random_range(0..PATTERN_LABELS.len())].into())
        };
        let capture = rng.random_bool(0.5).then(|| {
            names += 1;
            format!("c{names}")
        });
        Pat { pred, capture, rels: Vec::new() }
    };
    let n_rels = rng.random_range(0..=max_rels);
    let mut root = node(rng);
    for _ in 0..n_rels {
        // Attach to a random existing pattern node.
        let target = rng.random_range(0..root.preorder().len());
        let rel = RELATIONS[rng.random_range(0..RELATIONS.len())];
        let child = node(rng);
        fn attach(p: &mut Pat, idx: &mut usize, rel: &'static str, child: &mut Option<Pat>) {
            if *idx == 0 {
                if let Some(c) = child.take() {
                    p.rels.push((rel, c));
                }
                return;
            }
            *idx -= 1;
            for (_, q) in &mut p.rels {
                attach(q, idx, rel, child);
            }
        }
        attach(&mut root, &mut { target }, rel, &mut Some(child));
    }
    debug_assert!(root.count_rels() <= max_rels);
    root
}

struct Flat {
    labels: Vec<String>,
    parent: Vec<Option<usize>>,
    /// Half-open leaf interval.
    leaves: Vec<(usize, usize)>,
}

fn flatten(t: &ParseTree) -> Flat {
    fn go(t: &ParseTree, parent: Option<usize>, next_leaf: &mut usize, f: &mut Flat) {
        let id = f.labels.len();
        f.labels.push(t.label.clone());
        f.parent.push(parent);
        f.leaves.push((0, 0));
        let start = *next_leaf;
        if t.children.is_empty() {
            *next_leaf += 1;
        }
        for c in &t.children {
            go(c, Some(id), next_leaf, f);
        }
        f.leaves[id] = (start, *next_leaf);
    }
    let mut f = Flat { labels: Vec::new(), parent: Vec::new(), leaves: Vec::new() };
    go(t, None, &mut 0, &mut f);
    f
}

fn is_ancestor(f: &Flat, a: usize, mut b: usize) -> bool {
    while let Some(p) = f.parent[b] {
        if p == a {
            return true;
        }
        b = p;
    }
    false
}

fn relation_holds(f: &Flat, rel: &str, a: usize, b: usize) -> bool {
    match rel {
        "<" => f.parent[b] == Some(a),
        "<<" => is_ancestor(f, a, b),
        "." => f.leaves[a].1 == f.leaves[b].0,
        ".." => f.leaves[a].1 <= f.leaves[b].0,
        "$" => a != b && f.parent[a].is_some() && f.parent[a] == f.parent[b],
        _ => unreachable!(),
    }
}

fn pred_holds(p: &Pred, label: &str) -> bool {
    match p {
        Pred::Label(l) => label == l || label.split(['-', '=']).next() == Some(l.as_str()),
        Pred::Regex(r) => Regex::new(r).unwrap().is_match(label),
    }
}

/// Every binding of pattern nodes (in preorder) to tree nodes, sorted.
pub fn brute_force(tree: &ParseTree, pat: &Pat) -> Vec<Vec<usize>> {
    let f = flatten(tree);
    let nodes = pat.preorder();
    // Preorder index of each pattern node's parent and the relation to it.
    let mut edges: Vec<Option<(usize, &str)>> = vec![None; nodes.len()];
    fn index_edges<'p>(p: &'p Pat, me: usize, next: &mut usize, edges: &mut Vec<Option<(usize, &'p str)>>) {
        for (rel, q) in &p.rels {
            let id = *next;
            *next += 1;
            edges[id] = Some((me, rel));
            index_edges(q, id, next, edges);
        }
    }
    index_edges(pat, 0, &mut 1, &mut edges);

    let mut out = Vec::new();
    let mut current = Vec::with_capacity(nodes.len());
    fn assign(
        k: usize,
        nodes: &[&Pat],
        edges: &[Option<(usize, &str)>],
        f: &Flat,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if k == nodes.len() {
            out.push(current.clone());
            return;
        }
        for t in 0..f.labels.len() {
            if !pred_holds(&nodes[k].pred, &f.labels[t]) {
                continue;
            }
            if let Some((parent, rel)) = edges[k] {
                if !relation_holds(f, rel, current[parent], t) {
                    continue;
                }
            }
            current.push(t);
            assign(k + 1, nodes, edges, f, current, out);
            current.pop();
        }
    }
    assign(0, &nodes, &edges, &f, &mut current, &mut out);
    out.sort();
    out.dedup();
    out
}
