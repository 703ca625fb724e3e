//! Concept hierarchy with Wu–Palmer similarity.
//!
//! A [`Taxonomy`] is a rooted DAG read from an edge list. Depths and the
//! shortest upward distance from every concept to each of its ancestors are
//! computed once at load time; all queries afterwards are read-only, so a
//! loaded taxonomy can be shared freely between threads.
//!
//! Depth counts nodes: the root has depth 1 and every other concept sits one
//! below its shallowest parent.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::io::BufRead;

use thiserror::Error;

use crate::answers;
use crate::membership::OovPolicy;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: cycle through {concept:?}")]
    Cycle { line: usize, concept: String },
    #[error("line {line}: second root {concept:?} (root already declared as {first:?})")]
    MultipleRoots {
        line: usize,
        concept: String,
        first: String,
    },
    #[error("line {line}: parent {parent:?} of {child:?} is never declared")]
    DanglingParent {
        line: usize,
        child: String,
        parent: String,
    },
    #[error("line {line}: duplicate edge {child:?} -> {parent:?}")]
    DuplicateEdge {
        line: usize,
        child: String,
        parent: String,
    },
    #[error("line {line}: root {root:?} cannot have a parent")]
    RootHasParent { line: usize, root: String },
    #[error("no root declared")]
    MissingRoot,
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("line {line}: token {token:?} is mapped more than once")]
    DuplicateSense { line: usize, token: String },
    #[error("line {line}: sense {concept:?} is not in the taxonomy")]
    UnknownSense { line: usize, concept: String },
}

/// Dense handle for a concept of one particular [`Taxonomy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(u32);

impl ConceptId {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    index: HashMap<String, ConceptId>,
    parents: Vec<Vec<ConceptId>>,
    root: ConceptId,
    depth: Vec<u32>,
    /// Per concept: every ancestor (itself included) with the length in
    /// edges of the shortest upward path to it. Sorted by id.
    ancestors: Vec<Vec<(ConceptId, u32)>>,
}

/// Deepest common subsumer of two concepts together with the shortest edge
/// distances from each concept up to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsumer {
    pub concept: ConceptId,
    pub dist_first: u32,
    pub dist_second: u32,
}

struct Edge {
    parent: usize,
    line: usize,
}

/// Reads the edge-list format: `<child> <parent>` per line, a bare
/// identifier declares the root, `#` starts a comment line.
pub fn load_taxonomy<R: BufRead>(source: R) -> Result<Taxonomy, TaxonomyError> {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    // line on which a concept was first declared as child or root
    let mut declared: Vec<Option<usize>> = Vec::new();
    let mut edges: Vec<Vec<Edge>> = Vec::new();
    let mut root: Option<(usize, usize)> = None;

    let mut intern = |name: &str,
                      names: &mut Vec<String>,
                      declared: &mut Vec<Option<usize>>,
                      edges: &mut Vec<Vec<Edge>>|
     -> usize {
        match index.entry(name.to_owned()) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                names.push(name.to_owned());
                declared.push(None);
                edges.push(Vec::new());
                *e.insert(names.len() - 1)
            }
        }
    };

    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields.as_slice() {
            [concept] => {
                let id = intern(concept, &mut names, &mut declared, &mut edges);
                if let Some((first, _)) = root {
                    return Err(TaxonomyError::MultipleRoots {
                        line: lineno,
                        concept: concept.to_string(),
                        first: names[first].clone(),
                    });
                }
                if let Some(edge) = edges[id].first() {
                    return Err(TaxonomyError::RootHasParent {
                        line: edge.line,
                        root: concept.to_string(),
                    });
                }
                root = Some((id, lineno));
                declared[id].get_or_insert(lineno);
            }
            [child, parent] => {
                let c = intern(child, &mut names, &mut declared, &mut edges);
                let p = intern(parent, &mut names, &mut declared, &mut edges);
                if matches!(root, Some((r, _)) if r == c) {
                    return Err(TaxonomyError::RootHasParent {
                        line: lineno,
                        root: child.to_string(),
                    });
                }
                if edges[c].iter().any(|e| e.parent == p) {
                    return Err(TaxonomyError::DuplicateEdge {
                        line: lineno,
                        child: child.to_string(),
                        parent: parent.to_string(),
                    });
                }
                edges[c].push(Edge {
                    parent: p,
                    line: lineno,
                });
                declared[c].get_or_insert(lineno);
            }
            _ => {
                return Err(TaxonomyError::Malformed {
                    line: lineno,
                    text: line.clone(),
                })
            }
        }
    }

    // Report dangling parents at the first line that references them.
    let mut dangling: Option<(usize, usize, usize)> = None;
    for (child, list) in edges.iter().enumerate() {
        for e in list {
            if declared[e.parent].is_none() && dangling.is_none_or(|(line, _, _)| e.line < line) {
                dangling = Some((e.line, child, e.parent));
            }
        }
    }
    if let Some((line, child, parent)) = dangling {
        return Err(TaxonomyError::DanglingParent {
            line,
            child: names[child].clone(),
            parent: names[parent].clone(),
        });
    }

    if let Some((line, concept)) = find_cycle(&edges) {
        return Err(TaxonomyError::Cycle {
            line,
            concept: names[concept].clone(),
        });
    }

    let (root, _) = root.ok_or(TaxonomyError::MissingRoot)?;
    let parents = edges
        .into_iter()
        .map(|list| {
            let mut ps: Vec<ConceptId> = list
                .into_iter()
                .map(|e| ConceptId(e.parent as u32))
                .collect();
            ps.sort_unstable();
            ps
        })
        .collect();
    let index = index
        .into_iter()
        .map(|(k, v)| (k, ConceptId(v as u32)))
        .collect();
    Ok(Taxonomy::build(
        names,
        index,
        parents,
        ConceptId(root as u32),
    ))
}

/// Depth-first search along parent edges. Returns the line of an edge that
/// closes a cycle and the concept it points back to.
fn find_cycle(edges: &[Vec<Edge>]) -> Option<(usize, usize)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; edges.len()];
    for start in 0..edges.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        mark[start] = Mark::Open;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(edge) = edges[node].get(*next) {
                *next += 1;
                match mark[edge.parent] {
                    Mark::Open => return Some((edge.line, edge.parent)),
                    Mark::New => {
                        mark[edge.parent] = Mark::Open;
                        stack.push((edge.parent, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

impl Taxonomy {
    /// Computes depths and ancestor distances. `parents` must describe an
    /// acyclic graph in which every non-root concept has a parent.
    fn build(
        names: Vec<String>,
        index: HashMap<String, ConceptId>,
        parents: Vec<Vec<ConceptId>>,
        root: ConceptId,
    ) -> Self {
        let n = names.len();
        let mut children: Vec<Vec<ConceptId>> = vec![Vec::new(); n];
        let mut pending: Vec<usize> = vec![0; n];
        for (c, ps) in parents.iter().enumerate() {
            pending[c] = ps.len();
            for p in ps {
                children[p.idx()].push(ConceptId(c as u32));
            }
        }

        // Kahn order from the root: a concept is visited after all parents.
        let mut depth = vec![0u32; n];
        let mut ancestors: Vec<Vec<(ConceptId, u32)>> = vec![Vec::new(); n];
        let mut queue = VecDeque::from([root]);
        while let Some(c) = queue.pop_front() {
            let ps = &parents[c.idx()];
            let mut merged: HashMap<ConceptId, u32> = HashMap::new();
            merged.insert(c, 0);
            let mut d = u32::MAX;
            for p in ps {
                d = d.min(depth[p.idx()]);
                for &(a, dist) in &ancestors[p.idx()] {
                    merged
                        .entry(a)
                        .and_modify(|e| *e = (*e).min(dist + 1))
                        .or_insert(dist + 1);
                }
            }
            depth[c.idx()] = if ps.is_empty() { 1 } else { d + 1 };
            let mut list: Vec<(ConceptId, u32)> = merged.into_iter().collect();
            list.sort_unstable();
            ancestors[c.idx()] = list;
            for &child in &children[c.idx()] {
                pending[child.idx()] -= 1;
                if pending[child.idx()] == 0 {
                    queue.push_back(child);
                }
            }
        }

        Taxonomy {
            names,
            index,
            parents,
            root,
            depth,
            ancestors,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn root(&self) -> &str {
        &self.names[self.root.idx()]
    }

    pub fn id(&self, concept: &str) -> Option<ConceptId> {
        self.index.get(concept).copied()
    }

    fn require(&self, concept: &str) -> Result<ConceptId, TaxonomyError> {
        self.id(concept)
            .ok_or_else(|| TaxonomyError::UnknownConcept(concept.to_owned()))
    }

    pub fn name(&self, id: ConceptId) -> &str {
        &self.names[id.idx()]
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.index.contains_key(concept)
    }

    /// Concept names in declaration order.
    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Direct parents as declared in the source.
    pub fn parents(&self, concept: &str) -> Result<impl Iterator<Item = &str>, TaxonomyError> {
        let id = self.require(concept)?;
        Ok(self.parents[id.idx()].iter().map(|p| self.name(*p)))
    }

    pub fn depth(&self, concept: &str) -> Result<u32, TaxonomyError> {
        Ok(self.depth_of(self.require(concept)?))
    }

    pub fn depth_of(&self, id: ConceptId) -> u32 {
        self.depth[id.idx()]
    }

    pub fn subsumer(&self, a: ConceptId, b: ConceptId) -> Subsumer {
        let (xs, ys) = (&self.ancestors[a.idx()], &self.ancestors[b.idx()]);
        let (mut i, mut j) = (0, 0);
        let mut best: Option<Subsumer> = None;
        while i < xs.len() && j < ys.len() {
            match xs[i].0.cmp(&ys[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let cand = Subsumer {
                        concept: xs[i].0,
                        dist_first: xs[i].1,
                        dist_second: ys[j].1,
                    };
                    best = Some(match best {
                        Some(cur) if !self.deeper(cand.concept, cur.concept) => cur,
                        _ => cand,
                    });
                    i += 1;
                    j += 1;
                }
            }
        }
        // The root is a common ancestor of everything.
        best.expect("concepts share the root")
    }

    /// Greater depth wins; equal depths go to the lexicographically smaller name.
    fn deeper(&self, a: ConceptId, b: ConceptId) -> bool {
        match self.depth_of(a).cmp(&self.depth_of(b)) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.name(a) < self.name(b),
        }
    }

    /// Least common subsumer: the deepest concept that is an ancestor of both
    /// (a concept counts as its own ancestor).
    pub fn lcs(&self, c1: &str, c2: &str) -> Result<&str, TaxonomyError> {
        let s = self.subsumer(self.require(c1)?, self.require(c2)?);
        Ok(self.name(s.concept))
    }

    pub fn wup_similarity(&self, c1: &str, c2: &str) -> Result<f64, TaxonomyError> {
        Ok(self.wup_of(self.require(c1)?, self.require(c2)?))
    }

    /// `2·N3 / (N1 + N2 + 2·N3)` with `N3` the depth of the subsumer and
    /// `N1`, `N2` the edge distances from each concept up to it.
    pub fn wup_of(&self, a: ConceptId, b: ConceptId) -> f64 {
        let s = self.subsumer(a, b);
        let shared = 2.0 * f64::from(self.depth_of(s.concept));
        shared / (f64::from(s.dist_first + s.dist_second) + shared)
    }
}

/// Maps normalized words to the taxonomy concepts they may name.
#[derive(Debug, Clone, Default)]
pub struct SenseMap {
    senses: HashMap<String, Vec<ConceptId>>,
}

impl SenseMap {
    /// Every concept names itself (its identifier, normalized).
    pub fn identity(tax: &Taxonomy) -> Self {
        let mut senses: HashMap<String, Vec<ConceptId>> = HashMap::new();
        for (i, name) in tax.names.iter().enumerate() {
            for tok in answers::normalize(name).iter() {
                senses
                    .entry(tok.to_owned())
                    .or_default()
                    .push(ConceptId(i as u32));
            }
        }
        SenseMap { senses }
    }

    pub fn senses(&self, word: &str) -> &[ConceptId] {
        self.senses.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.senses.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.senses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.senses.is_empty()
    }
}

/// Reads `<token> <concept>[,<concept>...]` lines against a loaded taxonomy.
pub fn load_senses<R: BufRead>(source: R, tax: &Taxonomy) -> Result<SenseMap, TaxonomyError> {
    let mut senses: HashMap<String, Vec<ConceptId>> = HashMap::new();
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = || TaxonomyError::Malformed {
            line: lineno,
            text: line.clone(),
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [token, concepts] = fields.as_slice() else {
            return Err(malformed());
        };
        let bag = answers::normalize(token);
        let mut toks = bag.iter();
        let (Some(token), None) = (toks.next(), toks.next()) else {
            return Err(malformed());
        };
        let mut ids = Vec::new();
        for concept in concepts.split(',').filter(|c| !c.is_empty()) {
            let id = tax.id(concept).ok_or_else(|| TaxonomyError::UnknownSense {
                line: lineno,
                concept: concept.to_owned(),
            })?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        if ids.is_empty() {
            return Err(malformed());
        }
        match senses.entry(token.to_owned()) {
            Entry::Occupied(_) => {
                return Err(TaxonomyError::DuplicateSense {
                    line: lineno,
                    token: token.to_owned(),
                })
            }
            Entry::Vacant(e) => {
                e.insert(ids);
            }
        }
    }
    Ok(SenseMap { senses })
}

/// Word-level Wu–Palmer similarity: the best score over all sense pairs.
/// Words without senses fall back to `oov`.
pub fn word_similarity(
    tax: &Taxonomy,
    senses: &SenseMap,
    w1: &str,
    w2: &str,
    oov: OovPolicy,
) -> f64 {
    let (s1, s2) = (senses.senses(w1), senses.senses(w2));
    if s1.is_empty() || s2.is_empty() {
        return oov.score(w1, w2);
    }
    let mut best = 0.0f64;
    for &a in s1 {
        for &b in s2 {
            best = best.max(tax.wup_of(a, b));
        }
    }
    best
}
