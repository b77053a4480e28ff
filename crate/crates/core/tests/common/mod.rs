//! Seeded generators shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::fs;
use std::path::Path;

use aoci::model::{Budget, Dimension, IMPORTANCE_LEVELS};
use aoci::{CodeEntry, DecodedTag, EntryTag, Header, Index, TableEntry, TableTag, TagDictionary};
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

const UPPER: &[char] = &[
    'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'O', 'P', 'Q', 'R', 'S', 'T', 'U', 'V', 'W',
    'X', 'Y', 'Z',
];
/// Feature and scale codes draw from disjoint alphabets so every generated
/// tag has exactly one decomposition.
const FEATURE_ALPHABET: &[char] = &[
    'N', 'O', 'P', 'Q', 'R', 'S', 'T', 'U', 'V', 'W', 'X', 'a', 'b', 'c', 'd',
];
const SCALE_ALPHABET: &[char] = &[
    'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'g', 'h',
];

const WORDS: &[&str] = &[
    "JWT",
    "token",
    "verify",
    "cache",
    "closure-table",
    "GetTree",
    "user_id",
    "a/b",
    "x.y",
    "(z)",
    "café",
    "k=v",
    "v2:beta",
    "rate",
    "limit",
    "SHA256",
    "[opt]",
    "é",
    "→",
    "#tag",
    "@scope",
    "--",
    "100%",
    "CRUD",
];
const LABELS: &[&str] = &[
    "Handler",
    "Service",
    "Data access",
    "Core",
    "Auth logic",
    "JWT",
    "Tiny",
    "x",
];
const DIRS: &[&str] = &["src", "pkg/jwt", "model", "internal/api", "web/src/views", "cmd"];
const EXTS: &[&str] = &["go", "ts", "py", "vue", "yaml", "sql"];

/// `count` distinct codes of length `len`.
fn codes(rng: &mut StdRng, alphabet: &[char], len: usize, count: usize) -> Vec<String> {
    let room = alphabet.len().pow(len as u32);
    let count = count.min(room);
    let mut out: Vec<String> = Vec::with_capacity(count);
    while out.len() < count {
        let code: String = (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect();
        if !out.contains(&code) {
            out.push(code);
        }
    }
    out
}

fn add_all(dict: &mut TagDictionary, rng: &mut StdRng, dim: Dimension, list: &[String]) {
    for code in list {
        dict.add_code(dim, code, LABELS.choose(rng).unwrap()).unwrap();
    }
}

/// A dictionary whose dimensions are prefix-free (fixed code length per
/// dimension) with disjoint D and E alphabets.
pub fn random_dictionary(rng: &mut StdRng) -> TagDictionary {
    let mut d = TagDictionary::new();
    let mut draw = |alphabet: &[char], max_len: usize, min: usize, max: usize| {
        let len = rng.random_range(1..=max_len);
        let count = rng.random_range(min..=max);
        codes(rng, alphabet, len, count)
    };
    let a = draw(UPPER, 2, 1, 5);
    let b = draw(UPPER, 2, 1, 5);
    let f = draw(FEATURE_ALPHABET, 2, 0, 5);
    let e = draw(SCALE_ALPHABET, 1, 0, 4);
    add_all(&mut d, rng, Dimension::A, &a);
    add_all(&mut d, rng, Dimension::B, &b);
    add_all(&mut d, rng, Dimension::D, &f);
    add_all(&mut d, rng, Dimension::E, &e);

    if rng.random_bool(0.5) {
        let mut levels = IMPORTANCE_LEVELS.to_vec();
        levels.shuffle(rng);
        levels.truncate(rng.random_range(1..=6));
        levels.sort_unstable_by(|x, y| y.cmp(x));
        for l in levels {
            d.add_importance(l).unwrap();
        }
    }
    for &level in d.importance_levels().to_vec().iter() {
        if rng.random_bool(0.3) {
            let min = rng.random_range(0..100);
            d.set_budget(
                level,
                Budget {
                    min,
                    max: min + rng.random_range(0..100),
                },
            )
            .unwrap();
        }
    }
    for dim in Dimension::TABLE {
        let (len, count) = (rng.random_range(1..=3), rng.random_range(0..=4));
        let list = codes(rng, UPPER, len, count);
        add_all(&mut d, rng, dim, &list);
    }
    d
}

pub fn random_text(rng: &mut StdRng, allow_pipe: bool) -> String {
    let n = rng.random_range(0..8);
    let mut words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    if allow_pipe && rng.random_bool(0.2) {
        words.push("a|b");
    }
    let sep = if rng.random_bool(0.5) { " " } else { ", " };
    words.join(sep)
}

pub fn random_decoded(rng: &mut StdRng, dict: &TagDictionary, scale_absent: f64) -> DecodedTag {
    let pick = |rng: &mut StdRng, dim| -> String {
        let keys: Vec<&String> = dict.codes(dim).keys().collect();
        (*keys.choose(rng).unwrap()).clone()
    };
    let feature_count = if dict.codes(Dimension::D).is_empty() {
        0
    } else {
        rng.random_range(0..=3)
    };
    let scale = if dict.codes(Dimension::E).is_empty() || rng.random_bool(scale_absent) {
        None
    } else {
        Some(pick(rng, Dimension::E))
    };
    DecodedTag {
        layer: pick(rng, Dimension::A),
        module: pick(rng, Dimension::B),
        importance: *dict.importance_levels().choose(rng).unwrap(),
        features: (0..feature_count).map(|_| pick(rng, Dimension::D)).collect(),
        scale,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IndexShape {
    pub entries: usize,
    /// Probability that a tagged entry has no E code.
    pub scale_absent: f64,
    pub tagged: f64,
    pub tables: usize,
    /// Allow references that do not resolve.
    pub dangling: bool,
}

impl Default for IndexShape {
    fn default() -> Self {
        Self {
            entries: 20,
            scale_absent: 0.1,
            tagged: 0.85,
            tables: 2,
            dangling: false,
        }
    }
}

pub fn random_paths(rng: &mut StdRng, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("{}/f{i}.{}", DIRS.choose(rng).unwrap(), EXTS.choose(rng).unwrap()))
        .collect()
}

/// A reference designating `path`: exact, extensionless, or its directory.
fn reference_to(rng: &mut StdRng, path: &str) -> String {
    match rng.random_range(0..3) {
        0 => path.to_string(),
        1 => path.rsplit_once('.').map_or(path, |(stem, _)| stem).to_string(),
        _ => path.rsplit_once('/').map_or(path, |(dir, _)| dir).to_string(),
    }
}

pub fn random_index_with(rng: &mut StdRng, dict: TagDictionary, shape: IndexShape) -> Index {
    let paths = random_paths(rng, shape.entries);
    let mut entries = Vec::with_capacity(paths.len());
    for path in &paths {
        let mut e = CodeEntry::new(path.clone());
        if rng.random_bool(shape.tagged) {
            e.tag = Some(if rng.random_bool(0.05) && !dict.codes(Dimension::E).is_empty() {
                let scales: Vec<&String> = dict.codes(Dimension::E).keys().collect();
                EntryTag::ScaleOnly((*scales.choose(rng).unwrap()).clone())
            } else {
                EntryTag::Full(random_decoded(rng, &dict, shape.scale_absent))
            });
        }
        e.function = random_text(rng, false);
        e.api = random_text(rng, false);
        e.synopsis = random_text(rng, true);
        for _ in 0..rng.random_range(0..=3) {
            let target = paths.choose(rng).unwrap();
            let r = if shape.dangling && rng.random_bool(0.1) {
                format!("missing/{}", rng.random_range(0..1000))
            } else {
                reference_to(rng, target)
            };
            e.relations.push(r);
        }
        entries.push(e);
    }

    let table_dims_ready = Dimension::TABLE[..3].iter().all(|&d| !dict.codes(d).is_empty());
    let tables = (0..shape.tables)
        .map(|i| {
            let tag = table_dims_ready.then(|| {
                let pick = |rng: &mut StdRng, dim| -> String {
                    let keys: Vec<&String> = dict.codes(dim).keys().collect();
                    (*keys.choose(rng).unwrap()).clone()
                };
                let feats: Vec<&String> = dict.codes(Dimension::TableFeature).keys().collect();
                TableTag {
                    domain: pick(rng, Dimension::TableDomain),
                    ttype: pick(rng, Dimension::TableType),
                    scale: pick(rng, Dimension::TableScale),
                    features: (0..rng.random_range(0..=feats.len().min(3)))
                        .map(|_| (*feats.choose(rng).unwrap()).clone())
                        .collect(),
                }
            });
            TableEntry {
                name: format!("t_{i}"),
                tag,
                fields_text: random_text(rng, true),
            }
        })
        .collect();

    let header = Header {
        version: rng.random_range(1..=3),
        project: random_text(rng, true),
        overview: (0..rng.random_range(0..=2)).map(|_| random_text(rng, true)).collect(),
        stack: random_text(rng, true),
        dictionary: dict,
    };
    Index::new(header, entries, tables).expect("generated index is valid")
}

pub fn random_index(rng: &mut StdRng, shape: IndexShape) -> Index {
    let dict = random_dictionary(rng);
    random_index_with(rng, dict, shape)
}

pub const SYNTHETIC_RULES: &str = "
[project]
name = synthetic
stack = Go

[layer]
handler/** = H
service/** = S
repository/** = P
model/** = M
middleware/** = W

[module]
**/auth/** = A
**/org/** = O
**/billing/** = K
** = C
";

/// Writes a Go-like repository of `files` files spread over layers and
/// modules, each importing a few packages from lower layers.
pub fn write_synthetic_repo(root: &Path, files: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    let layers = ["handler", "service", "repository", "model", "middleware"];
    let modules = ["auth", "org", "billing", "core"];
    let mut paths = Vec::with_capacity(files);
    for i in 0..files {
        let layer_idx = rng.random_range(0..layers.len());
        let layer = layers[layer_idx];
        let module = modules.choose(&mut rng).unwrap();
        let path = format!("{layer}/{module}/f{i:04}.go");
        let mut text = format!("package {module}\n\nimport (\n\t\"fmt\"\n");
        for _ in 0..rng.random_range(0..4) {
            let dep = layers[rng.random_range(layer_idx..layers.len())];
            let m = modules.choose(&mut rng).unwrap();
            text.push_str(&format!("\t\"example.com/app/{dep}/{m}\"\n"));
        }
        text.push_str(")\n\n");
        text.push_str(&format!("func Run{i}() {{ fmt.Println({i}) }}\n"));
        for l in 0..rng.random_range(0..400) {
            text.push_str(&format!("// line {l}\n"));
        }
        let full = root.join(&path);
        fs::create_dir_all(full.parent().unwrap()).unwrap();
        fs::write(full, text).unwrap();
        paths.push(path);
    }
    paths.sort();
    paths
}
