//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed. Built with `harness = false` so the lines
//! show up under a plain `cargo test`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synroute_chem::matcher::{atom_matches, bond_matches};
use synroute_chem::{
    canonical_smiles, canonicalize, match_substructure, morgan_fingerprint, murcko_scaffold, parse_smiles, tanimoto,
    Fingerprint, Molecule, Pattern,
};
use synroute_core::index::{NGRAM_LENGTHS, VOCAB_CAP};
use synroute_core::library::{BB_FP_BITS, BB_FP_RADIUS};
use synroute_core::llm::{sampling_plan, Task};
use synroute_core::reconstruct::{candidate_reactants, CandidateKind, ANALOG_FP_BITS, ANALOG_FP_RADIUS};
use synroute_core::route::MAX_ROUTE_STEPS;
use synroute_core::validate::faults::{self, Fault};
use synroute_core::validate::{BenchmarkReport, Count};
use synroute_core::{
    benchmark_corpus, parse_response, reconstruct, BuildingBlockLibrary, CompatibilityTable, GeneratorConfig, Hit,
    IndexSet, LlmResponse, ReconContext, ReconstructionConfig, ResponseStep, RouteGenerator, RouteShape,
    SynthesisRoute, TemplateSet,
};

type Outcome = Result<String, String>;
/// Plan name with its (temperature, top_p, repeats) settings.
type PlanRow = (&'static str, &'static [(f64, f64, u32)]);
type Criterion = (&'static str, fn() -> Outcome);

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn shipped() -> (BuildingBlockLibrary, TemplateSet) {
    (
        BuildingBlockLibrary::load(&data("library.smi")).unwrap(),
        TemplateSet::load(&data("rxn2.tsv")).unwrap(),
    )
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn routes(n_linear: usize, n_branching: usize, seed: u64) -> (Vec<SynthesisRoute>, BuildingBlockLibrary, TemplateSet) {
    let (library, templates) = shipped();
    let table = CompatibilityTable::new(&library, &templates);
    let generator = RouteGenerator::new(&table, GeneratorConfig::default());
    let mut all = generator.generate_routes(n_linear, seed, RouteShape::Linear).unwrap();
    all.extend(
        generator
            .generate_routes(n_branching, seed + 1, RouteShape::Branching)
            .unwrap(),
    );
    (all, library, templates)
}

// ---------------------------------------------------------------- closure

fn closure() -> Outcome {
    let start = Instant::now();
    let (routes, library, templates) = routes(500, 100, 1);
    let texts: Vec<String> = routes.iter().map(|r| r.to_response().raw_text).collect();
    let report = benchmark_corpus(&texts, &templates);
    for (label, c) in report.rows() {
        ensure(c.passed == c.total, || format!("{label} {}/{}", c.passed, c.total))?;
    }
    let indexes = IndexSet::build(&library, &templates);
    let ctx = ReconContext {
        library: &library,
        templates: &templates,
        indexes: &indexes,
    };
    let cfg = ReconstructionConfig::new(5, 25);
    let results: Vec<(bool, f64)> = {
        use rayon::prelude::*;
        texts
            .par_iter()
            .zip(&routes)
            .map(|(t, r)| {
                let resp = parse_response(t).unwrap();
                let res = reconstruct(&resp, Some(&r.final_product), &ctx, &cfg).unwrap();
                (res.reconstructed, res.best_similarity().unwrap_or(0.0))
            })
            .collect()
    };
    let ok = results.iter().filter(|r| r.0).count();
    let mean = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    ensure(ok == routes.len(), || format!("reconstructed {ok}/{}", routes.len()))?;
    ensure(mean == 1.0, || format!("mean similarity {mean}"))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "600 routes, 6 metrics 100%, reconstructed 600/600, similarity {mean:.3}, {secs:.1}s"
    ))
}

// -------------------------------------------------------- fault injection

/// Clean per-response counts from route structure alone.
fn clean_counts(r: &SynthesisRoute) -> BenchmarkReport {
    let n = r.steps.len();
    let strings = r.steps.iter().map(|s| s.reactants.len() + 1).sum::<usize>() + r.building_blocks.len();
    let full = |t| Count { passed: t, total: t };
    BenchmarkReport {
        valid_json: full(1),
        template_mem: full(n),
        matched_reactants: full(n),
        valid_smiles: full(strings),
        good_products: full(n),
        bb_selection: full(1),
    }
}

fn predicted(fault: Fault, clean: BenchmarkReport) -> BenchmarkReport {
    let mut p = clean;
    let fail = |c: &mut Count| c.passed -= 1;
    match fault {
        Fault::BreakJson => {
            p = BenchmarkReport {
                valid_json: Count { passed: 0, total: 1 },
                ..Default::default()
            }
        }
        Fault::MutateTemplate => {
            fail(&mut p.template_mem);
            fail(&mut p.matched_reactants);
            fail(&mut p.good_products);
        }
        Fault::DropBuildingBlock => {
            fail(&mut p.bb_selection);
            p.valid_smiles.passed -= 1;
            p.valid_smiles.total -= 1;
        }
        Fault::BreakSmiles => {
            fail(&mut p.valid_smiles);
            fail(&mut p.good_products);
        }
        Fault::SwapReactants => {
            fail(&mut p.matched_reactants);
            fail(&mut p.good_products);
        }
        Fault::MutateProduct => fail(&mut p.good_products),
    }
    p
}

fn fault_injection() -> Outcome {
    let (routes, _, templates) = routes(200, 0, 2);
    let n = routes.len();
    let per_fault = n / 10;
    let mut texts: Vec<String> = routes.iter().map(|r| r.to_response().raw_text).collect();
    let mut assigned: Vec<Option<Fault>> = vec![None; n];
    // swaps are the only operator that may not apply, so place them first
    let mut order = faults::ALL.to_vec();
    order.sort_by_key(|f| *f != Fault::SwapReactants);
    for fault in order {
        let mut used = 0;
        for i in 0..n {
            if used == per_fault {
                break;
            }
            if assigned[i].is_some() {
                continue;
            }
            if let Some(bad) = faults::apply(fault, &texts[i], &templates) {
                texts[i] = bad;
                assigned[i] = Some(fault);
                used += 1;
            }
        }
        ensure(used == per_fault, || format!("{fault:?} applied to {used}"))?;
    }
    let mut want = BenchmarkReport::default();
    for (r, f) in routes.iter().zip(&assigned) {
        let clean = clean_counts(r);
        want.merge(&f.map_or(clean, |f| predicted(f, clean)));
    }
    let got = benchmark_corpus(&texts, &templates);
    for ((label, g), (_, w)) in got.rows().iter().zip(want.rows().iter()) {
        ensure(g == w, || {
            format!("{label}: got {}/{} want {}/{}", g.passed, g.total, w.passed, w.total)
        })?;
    }
    ensure(
        got.valid_json
            == Count {
                passed: 180,
                total: 200,
            },
        || "valid json".into(),
    )?;
    let line: Vec<String> = got
        .rows()
        .iter()
        .map(|(l, c)| format!("{l} {}/{}", c.passed, c.total))
        .collect();
    Ok(format!("6 x {per_fault} of {n} corrupted, exact: {}", line.join(", ")))
}

// -------------------------------------------------------- retrieval oracle

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
        let mut total: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for t in texts {
            for (g, n) in grams(t) {
                let e = total.entry(g).or_default();
                e.0 += n;
                e.1 += 1.0;
            }
        }
        let mut ranked: Vec<(String, f64, f64)> = total.into_iter().map(|(g, (n, df))| (g, n, df)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        ranked.truncate(1024);
        let n = texts.len() as f64;
        let mut o = Oracle {
            idf: ranked.iter().map(|r| ((1.0 + n) / (1.0 + r.2)).ln() + 1.0).collect(),
            vocab: ranked.into_iter().map(|r| r.0).collect(),
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
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let qn = norm(&q);
        self.docs
            .iter()
            .map(|d| {
                let dn = norm(d);
                if qn == 0.0 || dn == 0.0 {
                    0.0
                } else {
                    q.iter().zip(d).map(|(a, b)| a * b).sum::<f64>() / (qn * dn)
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
        f64::from(inter) / f64::from(union)
    }
}

fn check_ranking(hits: &[Hit], members: &[usize], scores: &[f64], k: usize, keep_zero: bool) -> Result<(), String> {
    let mut want: Vec<(usize, f64)> = members
        .iter()
        .zip(scores)
        .filter(|(_, &s)| keep_zero || s > 0.0)
        .map(|(&d, &s)| (d, s))
        .collect();
    want.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    want.truncate(k);
    ensure(hits.len() == want.len(), || {
        format!("{} hits, oracle {}", hits.len(), want.len())
    })?;
    let by_doc: BTreeMap<usize, f64> = members.iter().copied().zip(scores.iter().copied()).collect();
    for (h, w) in hits.iter().zip(&want) {
        ensure((h.score - w.1).abs() <= 1e-12, || {
            format!("score {} vs {}", h.score, w.1)
        })?;
        ensure((h.score - by_doc[&h.doc]).abs() <= 1e-12, || {
            format!("doc {} misscored", h.doc)
        })?;
    }
    for w in hits.windows(2) {
        ensure(
            w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc < w[1].doc),
            || "tie order".into(),
        )?;
    }
    Ok(())
}

fn retrieval_oracle() -> Outcome {
    let start = Instant::now();
    let (library, templates) = shipped();
    let set = IndexSet::build(&library, &templates);
    let smiles: Vec<&str> = library.entries().iter().map(|e| e.smiles.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut slots, mut checks) = (0, 0);
    for (&(t, s), idx) in set.iter() {
        slots += 1;
        let texts: Vec<&str> = idx
            .members()
            .iter()
            .map(|&d| library.get(d).canonical.as_str())
            .collect();
        let oracle = Oracle::new(&texts);
        ensure(idx.tfidf().vocab().ngrams() == oracle.vocab.as_slice(), || {
            format!("vocab R{t}/{s}")
        })?;
        for i in 0..200 {
            let base = *smiles.choose(&mut rng).unwrap();
            let q = match i % 4 {
                0 => base.to_string(),
                1 => {
                    let cut = rng.random_range(0..base.len());
                    format!("{}{}", &base[..cut], &base[cut + 1..])
                }
                2 => format!("{base}{}", smiles.choose(&mut rng).unwrap()),
                _ => {
                    let a = rng.random_range(0..base.len());
                    base[a..rng.random_range(a..=base.len())].to_string()
                }
            };
            for k in [1, 5, usize::MAX] {
                check_ranking(&idx.query_tfidf(&q, k), idx.members(), &oracle.cosines(&q), k, false)
                    .map_err(|e| format!("tf-idf slot {t}/{s} query {q:?}: {e}"))?;
                if let Ok(mol) = parse_smiles(&q) {
                    let qf = morgan_fingerprint(&mol, BB_FP_RADIUS, BB_FP_BITS);
                    let fps: Vec<f64> = idx
                        .members()
                        .iter()
                        .map(|&d| popcount_tanimoto(&qf, &library.get(d).fp))
                        .collect();
                    check_ranking(&idx.query_fp(&mol, k), idx.members(), &fps, k, true)
                        .map_err(|e| format!("fp slot {t}/{s} query {q:?}: {e}"))?;
                }
                checks += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{slots} slots x 200 queries, {checks} rankings within 1e-12, {secs:.1}s"
    ))
}

// ---------------------------------------------------------- matcher oracle

fn brute_force(p: &Pattern, m: &Molecule) -> BTreeSet<Vec<usize>> {
    fn go(p: &Pattern, m: &Molecule, partial: &mut Vec<usize>, used: &mut [bool], out: &mut BTreeSet<Vec<usize>>) {
        if partial.len() == p.num_atoms() {
            let ok = p.bonds().iter().all(|pb| {
                m.bond_between(partial[pb.a], partial[pb.b])
                    .is_some_and(|mb| bond_matches(&pb.expr, m, mb))
            });
            if ok {
                out.insert(partial.clone());
            }
            return;
        }
        for j in 0..m.num_atoms() {
            if used[j] || !atom_matches(&p.atoms()[partial.len()].expr, m, j) {
                continue;
            }
            used[j] = true;
            partial.push(j);
            go(p, m, partial, used, out);
            partial.pop();
            used[j] = false;
        }
    }
    let mut out = BTreeSet::new();
    go(p, m, &mut Vec::new(), &mut vec![false; m.num_atoms()], &mut out);
    out
}

/// Library molecules plus every route product, deduplicated by canonical form.
fn corpus_molecules() -> Vec<Molecule> {
    let (routes, library, _) = routes(500, 100, 3);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let products = routes.iter().flat_map(|r| r.steps.iter().map(|s| s.product.as_str()));
    for smi in library.entries().iter().map(|e| e.canonical.as_str()).chain(products) {
        if seen.insert(smi.to_string()) {
            out.push(parse_smiles(smi).unwrap());
        }
    }
    out
}

fn matcher_oracle() -> Outcome {
    let mut patterns = Vec::new();
    for file in ["rxn1.tsv", "rxn2.tsv"] {
        for t in TemplateSet::load(&data(file)).unwrap().templates() {
            patterns.extend(t.reactant_patterns().iter().cloned());
            patterns.extend(t.product_patterns().iter().cloned());
        }
    }
    let small: Vec<Molecule> = corpus_molecules()
        .into_iter()
        .filter(|m| m.num_heavy_atoms() <= 8)
        .collect();
    ensure(small.len() >= 20, || format!("only {} small molecules", small.len()))?;
    let (mut pairs, mut nonempty) = (0, 0);
    for (pi, p) in patterns.iter().enumerate() {
        for m in &small {
            let got: BTreeSet<Vec<usize>> = match_substructure(p, m)
                .into_iter()
                .map(|mt| mt.atom_assignment)
                .collect();
            let want = brute_force(p, m);
            ensure(got == want, || format!("pattern {pi} on {}", canonical_smiles(m)))?;
            pairs += 1;
            nonempty += usize::from(!want.is_empty());
        }
    }
    Ok(format!(
        "{} patterns x {} molecules, {pairs} pairs equal ({nonempty} non-empty)",
        patterns.len(),
        small.len()
    ))
}

// -------------------------------------------------- chemistry invariants

fn chemistry_invariants() -> Outcome {
    let mols = corpus_molecules();
    ensure(mols.len() >= 1000, || format!("corpus has {} molecules", mols.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let fps: Vec<Fingerprint> = mols.iter().map(|m| morgan_fingerprint(m, 2, 2048)).collect();
    for (m, fp) in mols.iter().zip(&fps) {
        let canon = canonical_smiles(m);
        let again = parse_smiles(&canon).map_err(|e| format!("{canon}: {e}"))?;
        ensure(canonical_smiles(&again) == canon, || format!("round trip {canon}"))?;
        ensure(
            again.num_atoms() == m.num_atoms() && again.num_bonds() == m.num_bonds(),
            || canon.clone(),
        )?;
        let scaffold = murcko_scaffold(m);
        ensure(
            canonical_smiles(&murcko_scaffold(&scaffold)) == canonical_smiles(&scaffold),
            || format!("scaffold of {canon}"),
        )?;
        let mut order: Vec<usize> = (0..m.num_atoms()).collect();
        for _ in 0..100 {
            order.shuffle(&mut rng);
            let p = m.permuted(&order);
            ensure(canonical_smiles(&p) == canon, || format!("permutation of {canon}"))?;
            ensure(morgan_fingerprint(&p, 2, 2048) == *fp, || {
                format!("fingerprint of {canon}")
            })?;
        }
    }
    for _ in 0..5000 {
        let (i, j) = (rng.random_range(0..mols.len()), rng.random_range(0..mols.len()));
        let (a, b) = (&fps[i], &fps[j]);
        let ab = tanimoto(a, b).unwrap();
        ensure(ab == tanimoto(b, a).unwrap(), || "asymmetric".into())?;
        ensure((0.0..=1.0).contains(&ab), || format!("out of range {ab}"))?;
        ensure((ab == 1.0) == (a == b), || "1.0 without equal bits".into())?;
        ensure(ab == popcount_tanimoto(a, b), || "popcount mismatch".into())?;
        ensure(tanimoto(a, a).unwrap() == 1.0, || "self".into())?;
    }
    Ok(format!(
        "{} molecules x 100 permutations, round trip, 5000 Tanimoto pairs, scaffold idempotence",
        mols.len()
    ))
}

// --------------------------------------------------------- paper constants

fn constants() -> Outcome {
    ensure(VOCAB_CAP == 1024, || "vocab cap".into())?;
    ensure(NGRAM_LENGTHS == [2, 3], || "n-gram lengths".into())?;
    ensure((BB_FP_BITS, BB_FP_RADIUS) == (256, 2), || "bb fingerprint".into())?;
    ensure((ANALOG_FP_BITS, ANALOG_FP_RADIUS) == (4096, 2), || {
        "analog fingerprint".into()
    })?;
    ensure(MAX_ROUTE_STEPS == 5, || "max steps".into())?;
    let plans: [PlanRow; 6] = [
        ("frozen-only", &[(0.1, 0.1, 1)]),
        ("low-only", &[(0.6, 0.5, 5)]),
        ("medium-only", &[(1.0, 0.7, 5)]),
        ("high-only", &[(1.5, 0.9, 5)]),
        ("frugal", &[(0.1, 0.1, 1), (0.6, 0.5, 1), (1.0, 0.7, 1), (1.5, 0.9, 1)]),
        ("greedy", &[(0.1, 0.1, 1), (0.6, 0.5, 2), (1.0, 0.7, 3), (1.5, 0.9, 4)]),
    ];
    for (name, want) in plans {
        let got: Vec<(f64, f64, u32)> = sampling_plan(name)
            .unwrap()
            .settings
            .iter()
            .map(|s| (s.temperature, s.top_p, s.repeats))
            .collect();
        ensure(got == want, || format!("plan {name}: {got:?}"))?;
    }
    let tasks = [
        (Task::LlmBenchmark, 5, 25),
        (Task::SynthesisPlanning, 5, 25),
        (Task::SynthesizableAnalog, 10, 50),
        (Task::HitExpansion, 20, 100),
    ];
    for (task, k, n_syn) in tasks {
        let d = task.defaults();
        ensure((d.k, d.n_syn) == (k, n_syn), || format!("{} defaults", task.name()))?;
    }
    Ok("vocab 1024, n-grams [2,3], fp 256/r2 and 4096/r2, 5 steps, 6 plans, 4 task defaults".into())
}

// ---------------------------------------------------------------- fallback

fn fallback() -> Outcome {
    let (library, templates) = shipped();
    let set = IndexSet::build(&library, &templates);
    let t = templates.index_of_id("R01").unwrap();
    let idx = set.get(t, 0).ok_or("no R01 acid index")?;
    let query = "OC(=O)c1ccc(F";
    ensure(parse_smiles(query).is_err(), || "query parses".into())?;
    let tf: Vec<usize> = idx.query_tfidf(query, 5).iter().map(|h| h.doc).collect();
    let got = idx.combined_query(query, 5);
    ensure(got == tf, || format!("combined {got:?} vs tf-idf {tf:?}"))?;
    ensure(!got.is_empty(), || "no candidates".into())?;
    let cands = candidate_reactants(query, templates.get(t), 0, Some(idx), &library, 5);
    ensure(
        !cands.is_empty() && cands.iter().all(|c| c.kind == CandidateKind::Neighbor),
        || "candidates not all neighbors".into(),
    )?;
    // a whole response with an unparseable reactant still executes
    let resp = LlmResponse::new(
        vec![ResponseStep {
            reaction_template: templates.get(t).smarts_text().to_string(),
            reactants: vec![query.to_string(), "NCc1ccccc1".to_string()],
            product: "O=C(NCc1ccccc1)c1ccc(F)cc1".to_string(),
        }],
        vec![query.to_string(), "NCc1ccccc1".to_string()],
    );
    let ctx = ReconContext {
        library: &library,
        templates: &templates,
        indexes: &set,
    };
    let r = reconstruct(&resp, None, &ctx, &ReconstructionConfig::new(5, 25)).map_err(|e| e.to_string())?;
    ensure(!r.routes.is_empty(), || "no routes".into())?;
    Ok(format!(
        "{} tf-idf candidates, {} routes, best similarity {:.3}",
        got.len(),
        r.routes.len(),
        r.best_similarity().unwrap()
    ))
}

// ------------------------------------------------------------- degradation

fn degradation() -> Outcome {
    let (full, templates) = shipped();
    let target = canonicalize("O=C(NCc1ccccc1)c1ccc(F)cc1").unwrap();
    let analog = canonicalize("O=C(NCc1ccccc1)c1ccc(Cl)cc1").unwrap();
    let deleted = canonicalize("OC(=O)c1ccc(F)cc1").unwrap();
    ensure(full.contains_canonical(&deleted), || "planted acid missing".into())?;
    ensure(
        full.contains_canonical(&canonicalize("OC(=O)c1ccc(Cl)cc1").unwrap()),
        || "planted analog missing".into(),
    )?;
    let fp = |s: &str| morgan_fingerprint(&parse_smiles(s).unwrap(), ANALOG_FP_RADIUS, ANALOG_FP_BITS);
    let floor = tanimoto(&fp(&target), &fp(&analog)).unwrap();

    let library = full.without(&[deleted.as_str()]);
    let indexes = IndexSet::build(&library, &templates);
    let ctx = ReconContext {
        library: &library,
        templates: &templates,
        indexes: &indexes,
    };
    let r01 = templates.get(templates.index_of_id("R01").unwrap());
    let resp = LlmResponse::new(
        vec![ResponseStep {
            reaction_template: r01.smarts_text().to_string(),
            reactants: vec![deleted.clone(), "NCc1ccccc1".to_string()],
            product: target.clone(),
        }],
        vec![deleted.clone(), "NCc1ccccc1".to_string()],
    );
    let r = reconstruct(&resp, Some(&target), &ctx, &ReconstructionConfig::new(5, 25)).map_err(|e| e.to_string())?;
    let best_lib = r
        .routes
        .iter()
        .filter(|x| x.uses_only_library_bbs)
        .map(|x| x.similarity_to_target)
        .fold(f64::NEG_INFINITY, f64::max);
    ensure(best_lib >= floor, || format!("library-only best {best_lib} < {floor}"))?;
    ensure(
        r.routes
            .iter()
            .any(|x| x.uses_only_library_bbs && x.final_product == analog),
        || "analog route missing".into(),
    )?;
    Ok(format!("library-only best {best_lib:.3} >= analog Tanimoto {floor:.3}"))
}

// -------------------------------------------------------------- end to end

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut snaps = Vec::new();
    for (run, jobs) in [(0, "1"), (1, "1"), (2, "4")] {
        let out = tmp.path().join(format!("run{run}"));
        let o = Command::new(env!("CARGO_BIN_EXE_synroute"))
            .args(["--library", data("library.smi").to_str().unwrap()])
            .args(["--templates", data("rxn2.tsv").to_str().unwrap()])
            .args(["--jobs", jobs, "--out", out.to_str().unwrap()])
            .args([
                "pipeline",
                data("demo/targets.txt").to_str().unwrap(),
                "--plan",
                "greedy",
            ])
            .args(["--mock-dir", data("demo/mock").to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
        snaps.push(snapshot(&out));
    }
    ensure(snaps[0] == snaps[1], || "runs differ".into())?;
    ensure(snaps[0] == snaps[2], || "--jobs 1 and 4 differ".into())?;
    let out = tmp.path().join("run0");
    let responses = fs::read_to_string(out.join("responses.jsonl")).unwrap();
    ensure(responses.lines().count() == 100, || "expected 100 responses".into())?;
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    ensure(summary["targets"] == 10, || format!("{summary}"))?;
    Ok(format!(
        "10 targets x 10 greedy inferences, {} files byte-identical over 3 runs, reconstructed {}/10",
        snaps[0].len(),
        summary["total"]
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("closure", closure),
        ("fault injection", fault_injection),
        ("retrieval oracle", retrieval_oracle),
        ("matcher oracle", matcher_oracle),
        ("chemistry invariants", chemistry_invariants),
        ("constants", constants),
        ("invalid-query fallback", fallback),
        ("degradation analog", degradation),
        ("end-to-end mock pipeline", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
