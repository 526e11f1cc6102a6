mod common;

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synroute_chem::{parse_smiles, Fingerprint};
use synroute_core::index::{IndexError, INDEX_VERSION, VOCAB_CAP};
use synroute_core::{BuildingBlockLibrary, Hit, IndexSet, SlotIndex};

/// Independent tokenizer: bracket atoms, two-letter halogens, `%nn` ring
/// labels, otherwise single characters.
fn tokens(s: &str) -> Vec<String> {
    let c: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < c.len() {
        let end = if c[i] == '[' {
            c[i..].iter().position(|&x| x == ']').map_or(c.len(), |p| i + p + 1)
        } else if c[i] == '%' && i + 2 < c.len() {
            i + 3
        } else if (c[i] == 'C' && c.get(i + 1) == Some(&'l')) || (c[i] == 'B' && c.get(i + 1) == Some(&'r')) {
            i + 2
        } else {
            i + 1
        };
        out.push(c[i..end].iter().collect());
        i = end;
    }
    out
}

fn grams(s: &str) -> BTreeMap<String, f64> {
    let t = tokens(s);
    let mut m = BTreeMap::new();
    for n in [2, 3] {
        for w in t.windows(n) {
            *m.entry(w.join("\u{1f}")).or_insert(0.0) += 1.0;
        }
    }
    m
}

struct Oracle {
    vocab: Vec<String>,
    idf: Vec<f64>,
    docs: Vec<Vec<f64>>,
}

impl Oracle {
    fn new(texts: &[&str]) -> Self {
        let counts: Vec<BTreeMap<String, f64>> = texts.iter().map(|t| grams(t)).collect();
        let mut total: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for c in &counts {
            for (g, n) in c {
                let e = total.entry(g).or_default();
                e.0 += n;
                e.1 += 1.0;
            }
        }
        let mut ranked: Vec<(&str, f64, f64)> = total.into_iter().map(|(g, (n, df))| (g, n, df)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
        ranked.truncate(VOCAB_CAP);
        let n = texts.len() as f64;
        let vocab: Vec<String> = ranked.iter().map(|r| r.0.to_string()).collect();
        let idf: Vec<f64> = ranked.iter().map(|r| ((1.0 + n) / (1.0 + r.2)).ln() + 1.0).collect();
        let mut o = Oracle {
            vocab,
            idf,
            docs: Vec::new(),
        };
        o.docs = texts.iter().map(|t| o.vector(t)).collect();
        o
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let g = grams(text);
        self.vocab
            .iter()
            .zip(&self.idf)
            .map(|(t, w)| g.get(t).copied().unwrap_or(0.0) * w)
            .collect()
    }

    fn cosines(&self, query: &str) -> Vec<f64> {
        let q = self.vector(query);
        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.docs
            .iter()
            .map(|d| {
                let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dot: f64 = q.iter().zip(d).map(|(a, b)| a * b).sum();
                if qn == 0.0 || dn == 0.0 {
                    0.0
                } else {
                    dot / (qn * dn)
                }
            })
            .collect()
    }
}

fn popcount_tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words().iter().zip(b.words()) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Checks `hits` against oracle `scores` (by member position): same
/// length, each score within 1e-12 of the oracle's sorted score at that
/// rank and of the doc's own oracle score.
fn assert_ranking(hits: &[Hit], members: &[usize], scores: &[f64], k: usize, keep_zero: bool, ctx: &str) {
    let mut want: Vec<(usize, f64)> = members
        .iter()
        .zip(scores)
        .filter(|(_, &s)| keep_zero || s > 0.0)
        .map(|(&d, &s)| (d, s))
        .collect();
    want.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    want.truncate(k);
    assert_eq!(hits.len(), want.len(), "{ctx}");
    let by_doc: BTreeMap<usize, f64> = members.iter().copied().zip(scores.iter().copied()).collect();
    for (i, (h, w)) in hits.iter().zip(&want).enumerate() {
        assert!((h.score - w.1).abs() <= 1e-12, "{ctx} rank {i}: {} vs {}", h.score, w.1);
        assert!((h.score - by_doc[&h.doc]).abs() <= 1e-12, "{ctx} doc {}", h.doc);
    }
    // score descending, equal scores by ascending library id
    for w in hits.windows(2) {
        assert!(
            w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc < w[1].doc),
            "{ctx}"
        );
    }
}

fn queries(library: &BuildingBlockLibrary, rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let smiles: Vec<&str> = library.entries().iter().map(|e| e.smiles.as_str()).collect();
    (0..n)
        .map(|i| {
            let s = *smiles.choose(rng).unwrap();
            match i % 4 {
                0 => s.to_string(),
                1 => {
                    // delete one character: usually invalid SMILES
                    let cut = rng.random_range(0..s.len());
                    format!("{}{}", &s[..cut], &s[cut + 1..])
                }
                2 => format!("{s}{}", smiles.choose(rng).unwrap()),
                _ => {
                    let a = rng.random_range(0..s.len());
                    let b = rng.random_range(a..=s.len());
                    s[a..b].to_string()
                }
            }
        })
        .collect()
}

#[test]
fn rankings_match_brute_force() {
    let (library, templates) = common::shipped();
    let set = IndexSet::build(&library, &templates);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for (&(t, s), idx) in set.iter() {
        let texts: Vec<&str> = idx
            .members()
            .iter()
            .map(|&d| library.get(d).canonical.as_str())
            .collect();
        let oracle = Oracle::new(&texts);
        assert_eq!(idx.tfidf().vocab().ngrams(), oracle.vocab.as_slice());
        for q in queries(&library, &mut rng, 40) {
            for k in [1, 5, 1000] {
                let ctx = format!("R{t} slot {s} query {q:?} k {k}");
                assert_ranking(
                    &idx.query_tfidf(&q, k),
                    idx.members(),
                    &oracle.cosines(&q),
                    k,
                    false,
                    &ctx,
                );
                if let Ok(mol) = parse_smiles(&q) {
                    let qf = synroute_chem::morgan_fingerprint(&mol, 2, 256);
                    let fps: Vec<f64> = idx
                        .members()
                        .iter()
                        .map(|&d| popcount_tanimoto(&qf, &library.get(d).fp))
                        .collect();
                    assert_ranking(&idx.query_fp(&mol, k), idx.members(), &fps, k, true, &ctx);
                }
            }
        }
    }
}

#[test]
fn top_k_is_a_prefix_of_top_k_plus_one() {
    let (library, templates) = common::shipped();
    let set = IndexSet::build(&library, &templates);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (_, idx) in set.iter().take(6) {
        for q in queries(&library, &mut rng, 10) {
            let full = idx.query_tfidf(&q, usize::MAX);
            for k in 1..full.len().min(12) {
                assert_eq!(idx.query_tfidf(&q, k), full[..k]);
            }
        }
    }
}

#[test]
fn members_are_exactly_the_compatible_entries() {
    let (library, templates) = common::shipped();
    let set = IndexSet::build(&library, &templates);
    for (&(t, s), idx) in set.iter() {
        let tpl = templates.get(t);
        let want: Vec<usize> = (0..library.len())
            .filter(|&d| tpl.is_compatible(s, &library.get(d).mol))
            .collect();
        assert_eq!(idx.members(), want.as_slice());
        // every hit of a broad query is a member
        let members: HashSet<usize> = idx.members().iter().copied().collect();
        for h in idx.query_tfidf("c1ccccc1C(=O)O", usize::MAX) {
            assert!(members.contains(&h.doc));
        }
    }
}

#[test]
fn index_bytes_are_deterministic_and_round_trip() {
    let (library, templates) = common::shipped();
    let a = IndexSet::build(&library, &templates);
    let b = IndexSet::build(&library, &templates);
    let tmp = tempfile::tempdir().unwrap();
    let paths = a.save_dir(&templates, tmp.path()).unwrap();
    assert_eq!(paths.len(), a.len());
    let loaded = IndexSet::load_dir(&templates, tmp.path()).unwrap();
    for ((ka, ia), (kb, ib)) in a.iter().zip(b.iter()) {
        assert_eq!(ka, kb);
        assert_eq!(ia.to_bytes(), ib.to_bytes());
        let il = loaded.get(ka.0, ka.1).unwrap();
        assert_eq!(il.to_bytes(), ia.to_bytes());
        for q in ["CC(=O)O", "Brc1ccccc1", "C(", "NCc1ccccc1"] {
            assert_eq!(il.query_tfidf(q, 10), ia.query_tfidf(q, 10));
            assert_eq!(il.combined_query(q, 5), ia.combined_query(q, 5));
        }
    }
}

#[test]
fn damaged_files_are_rejected() {
    let (library, templates) = common::shipped();
    let idx = SlotIndex::build(&library, templates.get(0), 0).unwrap();
    let bytes = idx.to_bytes();
    for cut in [0, 3, 6, bytes.len() / 2, bytes.len() - 1] {
        assert!(
            matches!(SlotIndex::from_bytes(&bytes[..cut]), Err(IndexError::Io(_))),
            "cut {cut}"
        );
    }
    let mut bumped = bytes.clone();
    bumped[4..6].copy_from_slice(&(INDEX_VERSION + 1).to_le_bytes());
    assert!(matches!(
        SlotIndex::from_bytes(&bumped),
        Err(IndexError::VersionMismatch { found, expected }) if found == INDEX_VERSION + 1 && expected == INDEX_VERSION
    ));
    let mut trailing = bytes;
    trailing.push(0);
    assert!(SlotIndex::from_bytes(&trailing).is_err());
}

#[test]
fn combined_query_bounds_and_fallback() {
    let (library, templates) = common::shipped();
    let set = IndexSet::build(&library, &templates);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (_, idx) in set.iter() {
        for q in queries(&library, &mut rng, 12) {
            let k = 3;
            let got = idx.combined_query(&q, k);
            let distinct: HashSet<usize> = got.iter().copied().collect();
            assert_eq!(distinct.len(), got.len());
            assert!(got.len() <= 2 * k);
            if parse_smiles(&q).is_ok() {
                assert!(got.len() >= k.min(idx.len()), "{q}");
                let fp: Vec<usize> = idx
                    .query_fp(&parse_smiles(&q).unwrap(), k)
                    .iter()
                    .map(|h| h.doc)
                    .collect();
                assert_eq!(&got[..fp.len()], fp.as_slice());
            } else {
                let tf: Vec<usize> = idx.query_tfidf(&q, k).iter().map(|h| h.doc).collect();
                assert_eq!(got, tf, "{q}");
            }
        }
    }
}
