//! SMILES tokenization and token n-grams. Works on arbitrary text so that
//! invalid model output can still be searched and compared.

use std::collections::BTreeMap;

/// Separator between tokens inside an n-gram key. Never produced by the
/// tokenizer itself.
pub const NGRAM_SEP: char = '\u{1f}';

/// Splits SMILES into tokens: bracket atoms, `Cl`/`Br` and `%nn` ring
/// closures are atomic, every other character is its own token.
pub fn tokenize_smiles(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '[' {
            if let Some(len) = chars[i..].iter().position(|&x| x == ']') {
                out.push(chars[i..=i + len].iter().collect());
                i += len + 1;
                continue;
            }
        }
        if (c == 'C' && chars.get(i + 1) == Some(&'l')) || (c == 'B' && chars.get(i + 1) == Some(&'r')) {
            out.push(chars[i..i + 2].iter().collect());
            i += 2;
            continue;
        }
        if c == '%'
            && chars.get(i + 1).is_some_and(char::is_ascii_digit)
            && chars.get(i + 2).is_some_and(char::is_ascii_digit)
        {
            out.push(chars[i..i + 3].iter().collect());
            i += 3;
            continue;
        }
        out.push(c.to_string());
        i += 1;
    }
    out
}

/// Consecutive token runs of length `n`, joined with [`NGRAM_SEP`].
pub fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = String> + '_ {
    tokens.windows(n).map(|w| w.join(&NGRAM_SEP.to_string()))
}

/// Bigram and trigram counts of a SMILES string.
pub fn ngram_counts(text: &str) -> BTreeMap<String, u32> {
    let tokens = tokenize_smiles(text);
    let mut counts = BTreeMap::new();
    for n in [2, 3] {
        for g in ngrams(&tokens, n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Cosine similarity of token-bigram count vectors. Identical strings score
/// 1.0; strings without bigrams score 0.0 against anything else.
pub fn smiles_string_similarity(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let bigrams = |s: &str| {
        let mut m: BTreeMap<String, u64> = BTreeMap::new();
        for g in ngrams(&tokenize_smiles(s), 2) {
            *m.entry(g).or_insert(0) += 1;
        }
        m
    };
    let (va, vb) = (bigrams(a), bigrams(b));
    let dot: u64 = va.iter().filter_map(|(g, &x)| vb.get(g).map(|&y| x * y)).sum();
    if dot == 0 {
        return 0.0;
    }
    let na: u64 = va.values().map(|x| x * x).sum();
    let nb: u64 = vb.values().map(|x| x * x).sum();
    (dot as f64 / ((na as f64).sqrt() * (nb as f64).sqrt())).min(1.0)
}
