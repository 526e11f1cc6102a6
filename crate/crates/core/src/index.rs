//! Per-(template, slot) building-block search: an exact TF-IDF cosine index
//! over SMILES token n-grams and a linear Tanimoto scan over 256-bit Morgan
//! fingerprints.
//!
//! Weighting: tf is the raw n-gram count, idf = ln((1 + N) / (1 + df)) + 1,
//! cosine over the weighted vectors. Rankings sort by descending score, then
//! ascending library doc id.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use synroute_chem::{morgan_fingerprint, parse_smiles, tanimoto, Fingerprint, Molecule, ReactionTemplate};
use thiserror::Error;

use crate::compat::{compatible_bbs, CompatibilityTable};
use crate::library::{BuildingBlockLibrary, BB_FP_BITS, BB_FP_RADIUS};
use crate::templates::TemplateSet;
use crate::tokenize::ngram_counts;

/// Maximum vocabulary size per slot index.
pub const VOCAB_CAP: usize = 1024;
/// N-gram lengths used for the vocabulary.
pub const NGRAM_LENGTHS: [usize; 2] = [2, 3];

pub const INDEX_MAGIC: &[u8; 4] = b"SRIX";
pub const INDEX_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("no library entry fits slot {slot} of template {template}")]
    EmptySlot { template: String, slot: usize },
    #[error("index file version {found}, expected {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("index i/o: {0}")]
    Io(#[from] io::Error),
}

/// One ranked retrieval result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Library document id.
    pub doc: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramVocab {
    ngrams: Vec<String>,
    idf: Vec<f64>,
    doc_count: usize,
    lookup: HashMap<String, u32>,
}

impl NgramVocab {
    /// Top `VOCAB_CAP` n-grams by total count (ties lexicographic), with idf
    /// weights from the per-document presence counts.
    pub fn build(docs: &[BTreeMap<String, u32>]) -> Self {
        let mut total: BTreeMap<&str, (u64, u32)> = BTreeMap::new();
        for d in docs {
            for (g, &c) in d {
                let e = total.entry(g.as_str()).or_insert((0, 0));
                e.0 += c as u64;
                e.1 += 1;
            }
        }
        let mut ranked: Vec<(&str, u64, u32)> = total.into_iter().map(|(g, (c, df))| (g, c, df)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(VOCAB_CAP);
        let n = docs.len();
        let ngrams: Vec<String> = ranked.iter().map(|r| r.0.to_string()).collect();
        let idf = ranked.iter().map(|r| idf(n, r.2 as usize)).collect();
        Self::from_parts(ngrams, idf, n)
    }

    fn from_parts(ngrams: Vec<String>, idf: Vec<f64>, doc_count: usize) -> Self {
        let lookup = ngrams.iter().enumerate().map(|(i, g)| (g.clone(), i as u32)).collect();
        NgramVocab {
            ngrams,
            idf,
            doc_count,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn ngrams(&self) -> &[String] {
        &self.ngrams
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn term_id(&self, ngram: &str) -> Option<usize> {
        self.lookup.get(ngram).map(|&i| i as usize)
    }

    /// Sparse tf-idf vector of `text` restricted to the vocabulary, sorted by
    /// term id.
    pub fn weigh(&self, text: &str) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = ngram_counts(text)
            .into_iter()
            .filter_map(|(g, c)| self.term_id(&g).map(|t| (t, c as f64 * self.idf[t])))
            .collect();
        v.sort_by_key(|&(t, _)| t);
        v
    }
}

pub fn idf(doc_count: usize, df: usize) -> f64 {
    ((1 + doc_count) as f64 / (1 + df) as f64).ln() + 1.0
}

/// Euclidean norm accumulated in term order.
pub fn l2_norm(v: &[(usize, f64)]) -> f64 {
    v.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfIndex {
    vocab: NgramVocab,
    /// Per term: (member position, unnormalized weight), ascending position.
    postings: Vec<Vec<(u32, f64)>>,
    doc_norms: Vec<f64>,
}

impl TfIdfIndex {
    pub fn build(texts: &[&str]) -> Self {
        let counts: Vec<BTreeMap<String, u32>> = texts.iter().map(|t| ngram_counts(t)).collect();
        let vocab = NgramVocab::build(&counts);
        let mut postings = vec![Vec::new(); vocab.len()];
        let mut doc_norms = Vec::with_capacity(texts.len());
        for (d, text) in texts.iter().enumerate() {
            let v = vocab.weigh(text);
            for &(t, w) in &v {
                postings[t].push((d as u32, w));
            }
            doc_norms.push(l2_norm(&v));
        }
        TfIdfIndex {
            vocab,
            postings,
            doc_norms,
        }
    }

    pub fn vocab(&self) -> &NgramVocab {
        &self.vocab
    }

    pub fn doc_norms(&self) -> &[f64] {
        &self.doc_norms
    }

    pub fn postings(&self) -> &[Vec<(u32, f64)>] {
        &self.postings
    }

    /// Cosine scores of all members with a nonzero score, by position.
    pub fn scores(&self, query: &str) -> Vec<(usize, f64)> {
        let q = self.vocab.weigh(query);
        let qn = l2_norm(&q);
        if qn == 0.0 {
            return Vec::new();
        }
        let mut acc = vec![0.0f64; self.doc_norms.len()];
        let mut touched = vec![false; self.doc_norms.len()];
        for &(t, qw) in &q {
            for &(d, dw) in &self.postings[t] {
                acc[d as usize] += qw * dw;
                touched[d as usize] = true;
            }
        }
        (0..acc.len())
            .filter(|&d| touched[d] && acc[d] > 0.0 && self.doc_norms[d] > 0.0)
            .map(|d| (d, acc[d] / (qn * self.doc_norms[d])))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpIndex {
    fingerprints: Vec<Fingerprint>,
}

impl FpIndex {
    pub fn fingerprints(&self) -> &[Fingerprint] {
        &self.fingerprints
    }
}

/// Retrieval structures for the compatible building blocks of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotIndex {
    template_id: String,
    template_text: String,
    slot: usize,
    /// Library doc ids of the members, ascending.
    members: Vec<usize>,
    member_smiles: Vec<String>,
    by_canonical: HashMap<String, usize>,
    tfidf: TfIdfIndex,
    fp: FpIndex,
}

fn rank(mut hits: Vec<Hit>, k: usize) -> Vec<Hit> {
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
    hits.truncate(k);
    hits
}

impl SlotIndex {
    /// Indexes the library entries compatible with `slot` of `template`.
    pub fn build(library: &BuildingBlockLibrary, template: &ReactionTemplate, slot: usize) -> Result<Self, IndexError> {
        let members = compatible_bbs(library, template, slot);
        Self::from_members(library, template, slot, members)
    }

    pub fn build_with(table: &CompatibilityTable<'_>, template: usize, slot: usize) -> Result<Self, IndexError> {
        let t = table.templates().get(template);
        Self::from_members(table.library(), t, slot, table.get(template, slot).to_vec())
    }

    fn from_members(
        library: &BuildingBlockLibrary,
        template: &ReactionTemplate,
        slot: usize,
        members: Vec<usize>,
    ) -> Result<Self, IndexError> {
        if members.is_empty() {
            return Err(IndexError::EmptySlot {
                template: template.id.clone(),
                slot,
            });
        }
        let member_smiles: Vec<String> = members.iter().map(|&d| library.get(d).canonical.clone()).collect();
        let texts: Vec<&str> = member_smiles.iter().map(String::as_str).collect();
        let tfidf = TfIdfIndex::build(&texts);
        let fp = FpIndex {
            fingerprints: members.iter().map(|&d| library.get(d).fp.clone()).collect(),
        };
        Ok(Self::assemble(
            template.id.clone(),
            template.smarts_text().to_string(),
            slot,
            members,
            member_smiles,
            tfidf,
            fp,
        ))
    }

    fn assemble(
        template_id: String,
        template_text: String,
        slot: usize,
        members: Vec<usize>,
        member_smiles: Vec<String>,
        tfidf: TfIdfIndex,
        fp: FpIndex,
    ) -> Self {
        let by_canonical = member_smiles.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        SlotIndex {
            template_id,
            template_text,
            slot,
            members,
            member_smiles,
            by_canonical,
            tfidf,
            fp,
        }
    }

    pub fn template_id(&self) -> &str {
        &self.template_id
    }

    pub fn template_text(&self) -> &str {
        &self.template_text
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Canonical SMILES of the member with this library doc id.
    pub fn member_smiles(&self, doc: usize) -> Option<&str> {
        self.members
            .binary_search(&doc)
            .ok()
            .map(|p| self.member_smiles[p].as_str())
    }

    /// Library doc id of the member with this canonical SMILES.
    pub fn find_member(&self, canonical: &str) -> Option<usize> {
        self.by_canonical.get(canonical).map(|&p| self.members[p])
    }

    pub fn tfidf(&self) -> &TfIdfIndex {
        &self.tfidf
    }

    pub fn fp(&self) -> &FpIndex {
        &self.fp
    }

    /// Top `k` members by tf-idf cosine; members with zero score are not
    /// returned.
    pub fn query_tfidf(&self, query: &str, k: usize) -> Vec<Hit> {
        let hits = self
            .tfidf
            .scores(query)
            .into_iter()
            .map(|(p, score)| Hit {
                doc: self.members[p],
                score,
            })
            .collect();
        rank(hits, k)
    }

    /// Top `k` members by 256-bit Tanimoto to `mol`.
    pub fn query_fp(&self, mol: &Molecule, k: usize) -> Vec<Hit> {
        let q = morgan_fingerprint(mol, BB_FP_RADIUS, BB_FP_BITS);
        self.query_fp_bits(&q, k)
    }

    pub fn query_fp_bits(&self, q: &Fingerprint, k: usize) -> Vec<Hit> {
        let hits = self
            .fp
            .fingerprints
            .iter()
            .zip(&self.members)
            .map(|(f, &doc)| Hit {
                doc,
                score: tanimoto(q, f).expect("equal widths"),
            })
            .collect();
        rank(hits, k)
    }

    /// Fingerprint hits then tf-idf hits, deduplicated; tf-idf only when the
    /// query does not parse.
    pub fn combined_query(&self, query: &str, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::with_capacity(2 * k);
        if let Ok(mol) = parse_smiles(query) {
            out.extend(self.query_fp(&mol, k).into_iter().map(|h| h.doc));
        }
        for h in self.query_tfidf(query, k) {
            if !out.contains(&h.doc) {
                out.push(h.doc);
            }
        }
        out
    }

    /// Serialized form; identical indexes give identical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        self.write_to(&mut w).expect("writing to a Vec cannot fail");
        w
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(INDEX_MAGIC)?;
        w.write_all(&INDEX_VERSION.to_le_bytes())?;
        put_str(w, &self.template_id)?;
        put_str(w, &self.template_text)?;
        put_u32(w, self.slot as u32)?;
        put_u32(w, self.members.len() as u32)?;
        for (doc, smi) in self.members.iter().zip(&self.member_smiles) {
            put_u32(w, *doc as u32)?;
            put_str(w, smi)?;
        }
        let vocab = &self.tfidf.vocab;
        put_u32(w, vocab.doc_count as u32)?;
        put_u32(w, vocab.len() as u32)?;
        for (g, idf) in vocab.ngrams.iter().zip(&vocab.idf) {
            put_str(w, g)?;
            put_f64(w, *idf)?;
        }
        for list in &self.tfidf.postings {
            put_u32(w, list.len() as u32)?;
            for &(d, wt) in list {
                put_u32(w, d)?;
                put_f64(w, wt)?;
            }
        }
        for &n in &self.tfidf.doc_norms {
            put_f64(w, n)?;
        }
        put_u32(w, BB_FP_BITS as u32)?;
        put_u32(w, BB_FP_RADIUS)?;
        for f in &self.fp.fingerprints {
            for &word in f.words() {
                w.write_all(&word.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = bytes;
        let idx = Self::read_from(&mut r)?;
        if !r.is_empty() {
            return Err(invalid("trailing bytes after index").into());
        }
        Ok(idx)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, IndexError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != INDEX_MAGIC {
            return Err(invalid("not an index file").into());
        }
        let mut v = [0u8; 2];
        r.read_exact(&mut v)?;
        let version = u16::from_le_bytes(v);
        if version != INDEX_VERSION {
            return Err(IndexError::VersionMismatch {
                found: version,
                expected: INDEX_VERSION,
            });
        }
        let template_id = get_str(r)?;
        let template_text = get_str(r)?;
        let slot = get_u32(r)? as usize;
        let n = get_u32(r)? as usize;
        let mut members = Vec::with_capacity(n.min(1 << 20));
        let mut member_smiles = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            members.push(get_u32(r)? as usize);
            member_smiles.push(get_str(r)?);
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("member ids not ascending").into());
        }
        let doc_count = get_u32(r)? as usize;
        let nv = get_u32(r)? as usize;
        if nv > VOCAB_CAP {
            return Err(invalid("vocabulary larger than cap").into());
        }
        let mut ngrams = Vec::with_capacity(nv);
        let mut idfs = Vec::with_capacity(nv);
        for _ in 0..nv {
            ngrams.push(get_str(r)?);
            idfs.push(get_f64(r)?);
        }
        let mut postings = Vec::with_capacity(nv);
        for _ in 0..nv {
            let len = get_u32(r)? as usize;
            let mut list = Vec::with_capacity(len.min(n));
            for _ in 0..len {
                let d = get_u32(r)?;
                if d as usize >= n {
                    return Err(invalid("posting references unknown member").into());
                }
                list.push((d, get_f64(r)?));
            }
            postings.push(list);
        }
        let mut doc_norms = Vec::with_capacity(n);
        for _ in 0..n {
            doc_norms.push(get_f64(r)?);
        }
        let nbits = get_u32(r)? as usize;
        let radius = get_u32(r)?;
        if nbits != BB_FP_BITS || radius != BB_FP_RADIUS {
            return Err(invalid("unexpected fingerprint parameters").into());
        }
        let mut fingerprints = Vec::with_capacity(n);
        for _ in 0..n {
            let mut words = vec![0u64; nbits.div_ceil(64)];
            for word in &mut words {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                *word = u64::from_le_bytes(b);
            }
            fingerprints.push(Fingerprint::from_words(nbits, radius, words));
        }
        let tfidf = TfIdfIndex {
            vocab: NgramVocab::from_parts(ngrams, idfs, doc_count),
            postings,
            doc_norms,
        };
        Ok(Self::assemble(
            template_id,
            template_text,
            slot,
            members,
            member_smiles,
            tfidf,
            FpIndex { fingerprints },
        ))
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

fn put_u32(w: &mut impl Write, x: u32) -> io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn put_f64(w: &mut impl Write, x: f64) -> io::Result<()> {
    w.write_all(&x.to_bits().to_le_bytes())
}

fn put_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn get_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_bits(u64::from_le_bytes(b)))
}

fn get_str(r: &mut impl Read) -> io::Result<String> {
    let len = get_u32(r)? as usize;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated string"));
    }
    String::from_utf8(buf).map_err(|_| invalid("string is not UTF-8"))
}

/// All slot indexes of a template set. Slots without compatible building
/// blocks have no index.
#[derive(Debug, Clone, Default)]
pub struct IndexSet {
    /// Keyed by (template index, slot).
    slots: BTreeMap<(usize, usize), SlotIndex>,
    empty: Vec<(usize, usize)>,
}

impl IndexSet {
    pub fn build(library: &BuildingBlockLibrary, templates: &TemplateSet) -> Self {
        let table = CompatibilityTable::new(library, templates);
        Self::build_with(&table)
    }

    /// Builds every slot index in parallel; the result does not depend on
    /// scheduling.
    pub fn build_with(table: &CompatibilityTable<'_>) -> Self {
        use rayon::prelude::*;
        let keys = table.templates().slots();
        let built: Vec<((usize, usize), Option<SlotIndex>)> = keys
            .par_iter()
            .map(|&(t, s)| ((t, s), SlotIndex::build_with(table, t, s).ok()))
            .collect();
        let mut set = IndexSet::default();
        for (key, idx) in built {
            match idx {
                Some(i) => {
                    set.slots.insert(key, i);
                }
                None => set.empty.push(key),
            }
        }
        set
    }

    pub fn get(&self, template: usize, slot: usize) -> Option<&SlotIndex> {
        self.slots.get(&(template, slot))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &SlotIndex)> {
        self.slots.iter()
    }

    /// (template index, slot) pairs that had no compatible building block.
    pub fn empty_slots(&self) -> &[(usize, usize)] {
        &self.empty
    }

    pub fn file_name(template_id: &str, slot: usize) -> String {
        format!("{template_id}.slot{slot}.srix")
    }

    /// Writes one file per slot index into `dir`; returns the paths written.
    pub fn save_dir(&self, templates: &TemplateSet, dir: &Path) -> Result<Vec<PathBuf>, IndexError> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (&(t, s), idx) in &self.slots {
            let path = dir.join(Self::file_name(&templates.get(t).id, s));
            idx.save(&path)?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// Loads the indexes for `templates` from `dir`. Missing files mean an
    /// empty slot; files built from a different template text are rejected.
    pub fn load_dir(templates: &TemplateSet, dir: &Path) -> Result<Self, IndexError> {
        let mut set = IndexSet::default();
        for (t, s) in templates.slots() {
            let tpl = templates.get(t);
            let path = dir.join(Self::file_name(&tpl.id, s));
            if !path.exists() {
                set.empty.push((t, s));
                continue;
            }
            let idx = SlotIndex::load(&path)?;
            if idx.template_text != tpl.smarts_text() || idx.slot != s {
                return Err(invalid(&format!("{} was built for a different template", path.display())).into());
            }
            set.slots.insert((t, s), idx);
        }
        Ok(set)
    }
}
