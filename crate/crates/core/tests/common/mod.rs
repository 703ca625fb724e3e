//! Brute-force reference implementations and seeded instance generators.
//!
//! Nothing here calls into the crate's scoring code. The taxonomy helpers
//! only read the raw parent edges of a loaded [`Taxonomy`] and recompute
//! everything else by enumerating root paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wups::taxonomy::{load_taxonomy, Taxonomy};
use wups::AnswerBag;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_taxonomy() -> Taxonomy {
    let src = std::fs::read_to_string(fixture("taxonomy.txt")).unwrap();
    load_taxonomy(src.as_bytes()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Taxonomy oracle

/// Every upward path from each concept to the root, as concept names
/// starting with the concept itself.
pub struct RootPaths {
    paths: BTreeMap<String, Vec<Vec<String>>>,
}

impl RootPaths {
    pub fn enumerate(tax: &Taxonomy) -> Self {
        fn walk(
            tax: &Taxonomy,
            c: &str,
            memo: &mut BTreeMap<String, Vec<Vec<String>>>,
        ) -> Vec<Vec<String>> {
            if let Some(p) = memo.get(c) {
                return p.clone();
            }
            let parents: Vec<String> = tax.parents(c).unwrap().map(str::to_owned).collect();
            let mut out = Vec::new();
            if parents.is_empty() {
                out.push(vec![c.to_owned()]);
            }
            for p in parents {
                for tail in walk(tax, &p, memo) {
                    let mut path = vec![c.to_owned()];
                    path.extend(tail);
                    out.push(path);
                }
            }
            memo.insert(c.to_owned(), out.clone());
            out
        }
        let mut paths = BTreeMap::new();
        let names: Vec<String> = tax.concepts().map(str::to_owned).collect();
        for c in &names {
            walk(tax, c, &mut paths);
        }
        RootPaths { paths }
    }

    pub fn paths(&self, c: &str) -> &[Vec<String>] {
        self.paths.get(c).map(Vec::as_slice).expect("known concept")
    }

    /// Node count of the shortest root path.
    pub fn depth(&self, c: &str) -> usize {
        self.paths(c).iter().map(Vec::len).min().unwrap()
    }

    pub fn ancestors(&self, c: &str) -> BTreeSet<String> {
        self.paths(c).iter().flatten().cloned().collect()
    }

    /// Fewest edges from `c` up to `ancestor` along any root path.
    pub fn distance(&self, c: &str, ancestor: &str) -> usize {
        self.paths(c)
            .iter()
            .filter_map(|p| p.iter().position(|x| x == ancestor))
            .min()
            .expect("is an ancestor")
    }
}

pub fn brute_lcs(paths: &RootPaths, c1: &str, c2: &str) -> String {
    let common: Vec<String> = paths
        .ancestors(c1)
        .intersection(&paths.ancestors(c2))
        .cloned()
        .collect();
    let best_depth = common.iter().map(|c| paths.depth(c)).max().unwrap();
    // BTreeSet order makes the first hit the lexicographically smallest.
    common
        .into_iter()
        .find(|c| paths.depth(c) == best_depth)
        .unwrap()
}

pub fn brute_wup(paths: &RootPaths, c1: &str, c2: &str) -> f64 {
    let lcs = brute_lcs(paths, c1, c2);
    let n3 = paths.depth(&lcs) as f64;
    let n1 = paths.distance(c1, &lcs) as f64;
    let n2 = paths.distance(c2, &lcs) as f64;
    2.0 * n3 / (n1 + n2 + 2.0 * n3)
}

// ---------------------------------------------------------------------------
// Per-question score oracle

/// Literal transcription of the per-question score, operating on plain
/// token lists.
pub fn brute_wups_single(
    answer: &[String],
    truth: &[String],
    mu: &dyn Fn(&str, &str) -> f64,
) -> f64 {
    let mut first = 1.0;
    for a in answer {
        let mut best = 0.0;
        for t in truth {
            let m = mu(a, t);
            if m > best {
                best = m;
            }
        }
        first *= best;
    }
    let mut second = 1.0;
    for t in truth {
        let mut best = 0.0;
        for a in answer {
            let m = mu(a, t);
            if m > best {
                best = m;
            }
        }
        second *= best;
    }
    if first < second {
        first
    } else {
        second
    }
}

pub fn tokens(bag: &AnswerBag) -> Vec<String> {
    bag.iter().map(str::to_owned).collect()
}

/// Set equality of two token lists.
pub fn same_terms(a: &[String], b: &[String]) -> bool {
    let x: BTreeSet<&String> = a.iter().collect();
    let y: BTreeSet<&String> = b.iter().collect();
    x == y
}

pub fn brute_exact(a: &str, t: &str) -> f64 {
    if a == t {
        1.0
    } else {
        0.0
    }
}

/// Raw vectors parsed independently of the crate's loader.
pub struct BruteVectors(pub HashMap<String, Vec<f64>>);

impl BruteVectors {
    pub fn parse(src: &str) -> Self {
        let mut map = HashMap::new();
        for line in src.lines() {
            let mut it = line.split_whitespace();
            let Some(tok) = it.next() else { continue };
            let v: Vec<f64> = it.map(|x| x.parse().unwrap()).collect();
            map.insert(tok.to_owned(), v);
        }
        BruteVectors(map)
    }

    /// Clamped cosine with exact-match fallback for unknown tokens.
    pub fn mu(&self, a: &str, t: &str) -> f64 {
        match (self.0.get(a), self.0.get(t)) {
            (Some(x), Some(y)) => {
                if a == t {
                    return 1.0;
                }
                let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
                let nx: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
                let ny: f64 = y.iter().map(|q| q * q).sum::<f64>().sqrt();
                (dot / (nx * ny)).clamp(0.0, 1.0)
            }
            _ => brute_exact(a, t),
        }
    }
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Debug, Clone, Copy)]
pub struct RandomTaxonomySpec {
    pub n_concepts: usize,
    pub max_parents: usize,
    pub seed: u64,
}

#[derive(Debug)]
pub struct InvalidSpec(pub &'static str);

/// Seeded random DAG: node `i` takes its parents from nodes `0..i`, so the
/// result is acyclic with node 0 as the only root. Names are short random
/// letter prefixes plus the index, which produces frequent depth ties with
/// non-trivial lexicographic order.
pub fn gen_taxonomy_source(spec: RandomTaxonomySpec) -> Result<String, InvalidSpec> {
    if spec.n_concepts == 0 || spec.n_concepts > 50 {
        return Err(InvalidSpec("n_concepts must be in 1..=50"));
    }
    if spec.max_parents == 0 {
        return Err(InvalidSpec("max_parents must be positive"));
    }
    gen_dag_source(spec.n_concepts, spec.max_parents, spec.seed)
        .map_err(|_| InvalidSpec("generation failed"))
}

/// Unbounded variant used for the performance workload.
pub fn gen_dag_source(n: usize, max_parents: usize, seed: u64) -> Result<String, ()> {
    let mut r = rng(seed);
    let letters = b"abcdefghij";
    let names: Vec<String> = (0..n)
        .map(|i| format!("{}{i}", letters[r.gen_range(0..letters.len())] as char))
        .collect();
    let mut out = format!("{}\n", names[0]);
    for i in 1..n {
        let k = r.gen_range(1..=max_parents.min(i));
        let mut pool: Vec<usize> = (0..i).collect();
        pool.shuffle(&mut r);
        let mut lines: Vec<String> = pool[..k]
            .iter()
            .map(|&p| format!("{} {}\n", names[i], names[p]))
            .collect();
        lines.sort();
        out.extend(lines);
    }
    Ok(out)
}

pub fn gen_taxonomy(spec: RandomTaxonomySpec) -> Result<Taxonomy, InvalidSpec> {
    let src = gen_taxonomy_source(spec)?;
    load_taxonomy(src.as_bytes()).map_err(|_| InvalidSpec("generated source rejected"))
}

pub fn gen_bag(r: &mut ChaCha8Rng, vocab: &[&str], max_len: usize) -> AnswerBag {
    let len = r.gen_range(0..=max_len);
    (0..len).map(|_| *vocab.choose(r).unwrap()).collect()
}

/// Seeded `(answer, truth)` pairs drawn from `vocab`, bags of 0 to 3 terms.
pub fn gen_bags(seed: u64, vocab: &[&str], count: usize) -> Vec<(AnswerBag, AnswerBag)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| (gen_bag(&mut r, vocab, 3), gen_bag(&mut r, vocab, 3)))
        .collect()
}

/// Seeded embedding file over `vocab` with small integer components, some
/// negative, never all zero.
pub fn gen_embeddings(seed: u64, vocab: &[&str], dim: usize) -> String {
    let mut r = rng(seed);
    let mut out = String::new();
    for w in vocab {
        let mut v: Vec<i32> = (0..dim).map(|_| r.gen_range(-3..=3)).collect();
        if v.iter().all(|x| *x == 0) {
            v[0] = 1;
        }
        let comps: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("{w} {}\n", comps.join(" ")));
    }
    out
}
