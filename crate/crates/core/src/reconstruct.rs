//! Turns a predicted route into executable syntheses.
//!
//! Steps run in forward order (the reverse of the response). A reactant that
//! names the product of an earlier executed step is bound to the product the
//! partial route actually made; any other reactant is replaced by candidate
//! building blocks: the exact library molecule, then nearest neighbors from
//! the slot index, then the predicted molecule itself if it is valid, fits the
//! slot and is not in the library. Each candidate combination is executed and
//! the product closest to the predicted one (token-bigram cosine) is kept.
//! A beam of at most `n_syn` partial routes survives each step, ranked by
//! that step's score alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use synroute_chem::{
    canonical_smiles, morgan_fingerprint, murcko_scaffold, parse_smiles, tanimoto, ChemError, Fingerprint, Molecule,
    ReactionTemplate,
};
use thiserror::Error;

use crate::index::{IndexSet, SlotIndex};
use crate::library::BuildingBlockLibrary;
use crate::response::{parse_response, LlmResponse};
use crate::templates::TemplateSet;
use crate::tokenize::smiles_string_similarity;

/// Fingerprint width for target/analog similarity.
pub const ANALOG_FP_BITS: usize = 4096;
/// Fingerprint radius for target/analog similarity.
pub const ANALOG_FP_RADIUS: u32 = 2;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("cannot parse target {smiles:?}: {source}")]
    TargetParse {
        smiles: String,
        #[source]
        source: ChemError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    /// Neighbors taken from each retriever.
    pub k: usize,
    /// Partial routes kept per step; `usize::MAX` means unbounded.
    pub n_syn: usize,
    pub analog_fp_bits: usize,
    pub analog_fp_radius: u32,
}

impl ReconstructionConfig {
    pub fn new(k: usize, n_syn: usize) -> Self {
        assert!(k >= 1 && n_syn >= 1, "k and n_syn must be positive");
        ReconstructionConfig {
            k,
            n_syn,
            analog_fp_bits: ANALOG_FP_BITS,
            analog_fp_radius: ANALOG_FP_RADIUS,
        }
    }

    /// Candidate combinations executed per step across the whole beam.
    pub fn expansion_cap(&self) -> usize {
        self.n_syn.saturating_mul(2 * self.k + 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Exact,
    Neighbor,
    Novel,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub smiles: String,
    pub mol: Molecule,
    pub kind: CandidateKind,
    /// Library doc id, None for novel candidates.
    pub doc: Option<usize>,
}

/// Candidates for a predicted building block in one slot, best first.
pub fn candidate_reactants(
    predicted: &str,
    template: &ReactionTemplate,
    slot: usize,
    index: Option<&SlotIndex>,
    library: &BuildingBlockLibrary,
    k: usize,
) -> Vec<Candidate> {
    let parsed = parse_smiles(predicted).ok();
    let canonical = parsed.as_ref().map(canonical_smiles);
    let mut out: Vec<Candidate> = Vec::new();
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut push_doc = |doc: usize, kind: CandidateKind, out: &mut Vec<Candidate>| {
        if seen.insert(doc) {
            let e = library.get(doc);
            out.push(Candidate {
                smiles: e.canonical.clone(),
                mol: e.mol.clone(),
                kind,
                doc: Some(doc),
            });
        }
    };
    if let Some(index) = index {
        if let Some(doc) = canonical.as_deref().and_then(|c| index.find_member(c)) {
            push_doc(doc, CandidateKind::Exact, &mut out);
        }
        for doc in index.combined_query(predicted, k) {
            push_doc(doc, CandidateKind::Neighbor, &mut out);
        }
    }
    if let (Some(mol), Some(c)) = (parsed, canonical) {
        if !library.contains_canonical(&c) && template.is_compatible(slot, &mol) {
            out.push(Candidate {
                smiles: c,
                mol,
                kind: CandidateKind::Novel,
                doc: None,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedStep {
    pub template_id: String,
    pub reaction_template: String,
    pub reactants: Vec<String>,
    pub product: String,
    /// Token-bigram similarity of `product` to the predicted product.
    pub product_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedRoute {
    /// Forward order.
    pub steps: Vec<ExecutedStep>,
    pub final_product: String,
    /// Leaf reactants (building blocks) in first-use order.
    pub building_blocks: Vec<String>,
    pub uses_only_library_bbs: bool,
    pub novel_bbs: Vec<String>,
    pub similarity_to_target: f64,
    pub scaffold_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub target: String,
    pub routes: Vec<ExecutedRoute>,
    pub reconstructed: bool,
    /// Index into `routes` of the most similar product.
    pub best_analog: Option<usize>,
    pub diagnostics: Vec<String>,
}

impl ReconstructionResult {
    pub fn best(&self) -> Option<&ExecutedRoute> {
        self.best_analog.map(|i| &self.routes[i])
    }

    pub fn best_similarity(&self) -> Option<f64> {
        self.best().map(|r| r.similarity_to_target)
    }
}

/// What reconstruction needs besides the response.
#[derive(Clone, Copy)]
pub struct ReconContext<'a> {
    pub library: &'a BuildingBlockLibrary,
    pub templates: &'a TemplateSet,
    pub indexes: &'a IndexSet,
}

#[derive(Clone)]
enum SlotSource {
    /// Product of the forward step with this index.
    Intermediate(usize),
    Candidates(Vec<Candidate>),
}

#[derive(Clone)]
struct Partial {
    steps: Vec<ExecutedStep>,
    /// Per forward step: the product this route made, if executed.
    made: Vec<Option<(String, Molecule)>>,
    leaves: Vec<(String, CandidateKind)>,
    score: f64,
}

/// Picks the product most similar to `predicted`: highest score, then one
/// equal to the predicted canonical form, then lexicographically first.
fn select_product(
    products: BTreeMap<String, Molecule>,
    predicted: &str,
    predicted_canon: Option<&str>,
) -> Option<(String, Molecule, f64)> {
    let mut best: Option<(String, Molecule, f64, bool)> = None;
    for (smi, mol) in products {
        let score = smiles_string_similarity(&smi, predicted);
        let exact = predicted_canon == Some(smi.as_str());
        let better = match &best {
            None => true,
            Some((_, _, bs, bexact)) => score > *bs || (score == *bs && exact && !*bexact),
        };
        if better {
            best = Some((smi, mol, score, exact));
        }
    }
    best.map(|(s, m, sc, _)| (s, m, sc))
}

/// Candidate index tuples ordered by rank sum, then lexicographically.
fn combinations(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out.sort_by(|a, b| {
        a.iter()
            .sum::<usize>()
            .cmp(&b.iter().sum::<usize>())
            .then_with(|| a.cmp(b))
    });
    out
}

/// Executes the response's route against the library. `target` defaults to
/// the product of the response's first reaction.
pub fn reconstruct(
    resp: &LlmResponse,
    target: Option<&str>,
    ctx: &ReconContext<'_>,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult, ReconstructError> {
    let target_text = target
        .map(str::to_string)
        .or_else(|| resp.reactions.first().map(|s| s.product.clone()))
        .unwrap_or_default();
    let target_mol = parse_smiles(&target_text).map_err(|source| ReconstructError::TargetParse {
        smiles: target_text.clone(),
        source,
    })?;
    let forward: Vec<_> = resp.reactions.iter().rev().collect();
    let mut diagnostics = Vec::new();
    let mut beam = vec![Partial {
        steps: Vec::new(),
        made: vec![None; forward.len()],
        leaves: Vec::new(),
        score: 1.0,
    }];
    let mut executed_any = false;
    // Predicted product strings (raw and canonical) of executed steps.
    let mut executed_products: Vec<(usize, String, Option<String>)> = Vec::new();

    for (i, step) in forward.iter().enumerate() {
        let Some(t) = ctx.templates.index_of_text(&step.reaction_template) else {
            diagnostics.push(format!("step {}: unknown template, skipped", i + 1));
            continue;
        };
        let template = ctx.templates.get(t);
        if step.reactants.len() != template.num_slots() {
            diagnostics.push(format!(
                "step {}: {} reactants for a {}-slot template, skipped",
                i + 1,
                step.reactants.len(),
                template.num_slots()
            ));
            continue;
        }
        let sources: Vec<SlotSource> = step
            .reactants
            .iter()
            .enumerate()
            .map(|(slot, r)| {
                let rc = parse_smiles(r).ok().map(|m| canonical_smiles(&m));
                let earlier = executed_products
                    .iter()
                    .rev()
                    .find(|(_, raw, canon)| raw == r || (rc.is_some() && *canon == rc))
                    .map(|(j, _, _)| *j);
                match earlier {
                    Some(j) => SlotSource::Intermediate(j),
                    None => SlotSource::Candidates(candidate_reactants(
                        r,
                        template,
                        slot,
                        ctx.indexes.get(t, slot),
                        ctx.library,
                        cfg.k,
                    )),
                }
            })
            .collect();
        let sizes: Vec<usize> = sources
            .iter()
            .map(|s| match s {
                SlotSource::Intermediate(_) => 1,
                SlotSource::Candidates(c) => c.len(),
            })
            .collect();
        let combos = combinations(&sizes);
        let predicted_canon = parse_smiles(&step.product).ok().map(|m| canonical_smiles(&m));

        let cap = cfg.expansion_cap();
        let mut expansions = 0usize;
        let mut next: Vec<Partial> = Vec::new();
        'beam: for partial in &beam {
            for combo in &combos {
                if expansions >= cap {
                    break 'beam;
                }
                expansions += 1;
                let mut reactants: Vec<(String, Molecule)> = Vec::with_capacity(combo.len());
                let mut leaves: Vec<(String, CandidateKind)> = Vec::new();
                for (src, &pick) in sources.iter().zip(combo) {
                    match src {
                        SlotSource::Intermediate(j) => match &partial.made[*j] {
                            Some(p) => reactants.push(p.clone()),
                            None => continue 'beam,
                        },
                        SlotSource::Candidates(c) => {
                            reactants.push((c[pick].smiles.clone(), c[pick].mol.clone()));
                            leaves.push((c[pick].smiles.clone(), c[pick].kind));
                        }
                    }
                }
                let refs: Vec<&Molecule> = reactants.iter().map(|(_, m)| m).collect();
                let Ok(products) = template.apply(&refs) else { continue };
                let Some((smi, mol, score)) = select_product(products, &step.product, predicted_canon.as_deref())
                else {
                    continue;
                };
                let mut np = partial.clone();
                np.steps.push(ExecutedStep {
                    template_id: template.id.clone(),
                    reaction_template: template.smarts_text().to_string(),
                    reactants: reactants.into_iter().map(|(s, _)| s).collect(),
                    product: smi.clone(),
                    product_similarity: score,
                });
                np.made[i] = Some((smi, mol));
                np.leaves.extend(leaves);
                np.score = score;
                next.push(np);
            }
        }
        // Stable: ties keep parent rank, then combination rank.
        next.sort_by(|a, b| b.score.total_cmp(&a.score));
        next.truncate(cfg.n_syn);
        beam = next;
        executed_any = true;
        executed_products.push((i, step.product.clone(), predicted_canon));
        if beam.is_empty() {
            diagnostics.push(format!("step {}: no candidate combination reacted", i + 1));
            break;
        }
    }

    let target_canon = canonical_smiles(&target_mol);
    let routes: Vec<ExecutedRoute> = if executed_any {
        beam.into_iter().map(|p| finish(p, ctx.library)).collect()
    } else {
        diagnostics.push("no step could be executed".to_string());
        Vec::new()
    };
    let mut result = ReconstructionResult {
        target: target_canon,
        routes,
        reconstructed: false,
        best_analog: None,
        diagnostics,
    };
    score_with(&mut result, &target_mol, cfg);
    Ok(result)
}

fn finish(p: Partial, library: &BuildingBlockLibrary) -> ExecutedRoute {
    let final_product = p.steps.last().map(|s| s.product.clone()).unwrap_or_default();
    let mut building_blocks = Vec::new();
    let mut novel_bbs = Vec::new();
    for (smi, _) in &p.leaves {
        if !building_blocks.contains(smi) {
            building_blocks.push(smi.clone());
            if !library.contains_canonical(smi) {
                novel_bbs.push(smi.clone());
            }
        }
    }
    ExecutedRoute {
        steps: p.steps,
        final_product,
        building_blocks,
        uses_only_library_bbs: novel_bbs.is_empty(),
        novel_bbs,
        similarity_to_target: 0.0,
        scaffold_similarity: 0.0,
    }
}

fn analog_fp(mol: &Molecule, cfg: &ReconstructionConfig) -> Fingerprint {
    morgan_fingerprint(mol, cfg.analog_fp_radius, cfg.analog_fp_bits)
}

/// Morgan and scaffold Tanimoto of every route product to the target; sets
/// `reconstructed` and `best_analog`.
pub fn score_result(
    result: &mut ReconstructionResult,
    target: &str,
    cfg: &ReconstructionConfig,
) -> Result<(), ReconstructError> {
    let mol = parse_smiles(target).map_err(|source| ReconstructError::TargetParse {
        smiles: target.to_string(),
        source,
    })?;
    result.target = canonical_smiles(&mol);
    score_with(result, &mol, cfg);
    Ok(())
}

fn score_with(result: &mut ReconstructionResult, target: &Molecule, cfg: &ReconstructionConfig) {
    let target_canon = canonical_smiles(target);
    let tfp = analog_fp(target, cfg);
    let tsfp = analog_fp(&murcko_scaffold(target), cfg);
    let mut best: Option<(usize, f64)> = None;
    result.reconstructed = false;
    for (i, route) in result.routes.iter_mut().enumerate() {
        let Ok(pmol) = parse_smiles(&route.final_product) else {
            continue;
        };
        route.similarity_to_target = tanimoto(&analog_fp(&pmol, cfg), &tfp).expect("equal widths");
        route.scaffold_similarity = tanimoto(&analog_fp(&murcko_scaffold(&pmol), cfg), &tsfp).expect("equal widths");
        if route.final_product == target_canon {
            result.reconstructed = true;
        }
        if best.is_none_or(|(_, s)| route.similarity_to_target > s) {
            best = Some((i, route.similarity_to_target));
        }
    }
    result.best_analog = best.map(|(i, _)| i);
}

/// One response to reconstruct for a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub target_smiles: String,
    /// Raw response text; None when inference failed.
    #[serde(default)]
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub target: String,
    pub responses: usize,
    pub unparseable: usize,
    pub reconstructed: bool,
    pub reconstructed_library_only: bool,
    pub reconstructed_novel: bool,
    /// Best Morgan similarity over all routes; None without routes.
    pub best_similarity: Option<f64>,
    pub best_scaffold_similarity: Option<f64>,
    pub best_route: Option<ExecutedRoute>,
    pub routes: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub targets: usize,
    pub library_bb: usize,
    pub new_bb: usize,
    pub total: usize,
    /// Mean best similarity over targets with at least one route.
    pub morgan_similarity: Option<f64>,
    pub targets_with_routes: usize,
}

impl BatchSummary {
    pub fn to_table(&self) -> String {
        let sim = self
            .morgan_similarity
            .map(|s| format!("{s:.3}"))
            .unwrap_or_else(|| "-".into());
        format!(
            "{:<8} {:>11} {:>7} {:>7} {:>12}\n{:<8} {:>11} {:>7} {:>7} {:>12}\n",
            "Targets",
            "Library BB",
            "New BB",
            "Total",
            "Morgan Sim.",
            self.targets,
            self.library_bb,
            self.new_bb,
            self.total,
            sim
        )
    }
}

/// Reconstructs every response of one target and merges the results.
pub fn reconstruct_target(
    target: &str,
    responses: &[Option<String>],
    ctx: &ReconContext<'_>,
    cfg: &ReconstructionConfig,
) -> TargetSummary {
    let mut summary = TargetSummary {
        target: parse_smiles(target)
            .map(|m| canonical_smiles(&m))
            .unwrap_or_else(|_| target.to_string()),
        responses: responses.len(),
        unparseable: 0,
        reconstructed: false,
        reconstructed_library_only: false,
        reconstructed_novel: false,
        best_similarity: None,
        best_scaffold_similarity: None,
        best_route: None,
        routes: 0,
        diagnostics: Vec::new(),
    };
    for (n, text) in responses.iter().enumerate() {
        let Some(text) = text else {
            summary.unparseable += 1;
            summary.diagnostics.push(format!("response {}: no text", n + 1));
            continue;
        };
        let resp = match parse_response(text) {
            Ok(r) => r,
            Err(e) => {
                summary.unparseable += 1;
                summary.diagnostics.push(format!("response {}: {e}", n + 1));
                continue;
            }
        };
        let result = match reconstruct(&resp, Some(target), ctx, cfg) {
            Ok(r) => r,
            Err(e) => {
                summary.diagnostics.push(format!("response {}: {e}", n + 1));
                continue;
            }
        };
        summary
            .diagnostics
            .extend(result.diagnostics.iter().map(|d| format!("response {}: {d}", n + 1)));
        summary.routes += result.routes.len();
        for route in &result.routes {
            if route.final_product == summary.target {
                summary.reconstructed = true;
                if route.uses_only_library_bbs {
                    summary.reconstructed_library_only = true;
                } else {
                    summary.reconstructed_novel = true;
                }
            }
        }
        if let Some(best) = result.best() {
            if summary.best_similarity.is_none_or(|s| best.similarity_to_target > s) {
                summary.best_similarity = Some(best.similarity_to_target);
                summary.best_scaffold_similarity = Some(best.scaffold_similarity);
                summary.best_route = Some(best.clone());
            }
        }
    }
    summary
}

/// Groups records by target (first-appearance order), reconstructs targets
/// in parallel and aggregates the counts.
pub fn batch_reconstruct(
    records: &[ResponseRecord],
    ctx: &ReconContext<'_>,
    cfg: &ReconstructionConfig,
) -> (Vec<TargetSummary>, BatchSummary) {
    use rayon::prelude::*;
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<Option<String>>> = BTreeMap::new();
    for r in records {
        let g = groups.entry(r.target_smiles.clone()).or_insert_with(|| {
            order.push(r.target_smiles.clone());
            Vec::new()
        });
        g.push(r.response.clone());
    }
    let per_target: Vec<TargetSummary> = order
        .par_iter()
        .map(|t| reconstruct_target(t, &groups[t], ctx, cfg))
        .collect();
    let summary = summarize(&per_target);
    (per_target, summary)
}

pub fn summarize(per_target: &[TargetSummary]) -> BatchSummary {
    let with_routes: Vec<f64> = per_target.iter().filter_map(|t| t.best_similarity).collect();
    BatchSummary {
        targets: per_target.len(),
        library_bb: per_target.iter().filter(|t| t.reconstructed_library_only).count(),
        new_bb: per_target.iter().filter(|t| t.reconstructed_novel).count(),
        total: per_target.iter().filter(|t| t.reconstructed).count(),
        morgan_similarity: if with_routes.is_empty() {
            None
        } else {
            Some(with_routes.iter().sum::<f64>() / with_routes.len() as f64)
        },
        targets_with_routes: with_routes.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::ResponseStep;

    fn setup() -> (BuildingBlockLibrary, TemplateSet) {
        let lib =
            BuildingBlockLibrary::from_smiles(["CC(=O)O", "CCC(=O)O", "OC(=O)c1ccccc1", "NCC", "NCCC", "NC1CCCCC1"])
                .unwrap();
        let set =
            TemplateSet::parse("A\tamide\t[C:1](=[O:2])[OH].[N;H1,H2;!$(NC=O):3]>>[C:1](=[O:2])-[N:3]\n").unwrap();
        (lib, set)
    }

    fn response(set: &TemplateSet, acid: &str, amine: &str, product: &str) -> LlmResponse {
        LlmResponse::new(
            vec![ResponseStep {
                reaction_template: set.get(0).smarts_text().into(),
                reactants: vec![acid.into(), amine.into()],
                product: product.into(),
            }],
            vec![acid.into(), amine.into()],
        )
    }

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn exact_reconstruction() {
        let (lib, set) = setup();
        let idx = IndexSet::build(&lib, &set);
        let ctx = ReconContext {
            library: &lib,
            templates: &set,
            indexes: &idx,
        };
        let target = canon("CCNC(C)=O");
        let resp = response(&set, "CC(=O)O", "NCC", &target);
        let r = reconstruct(&resp, None, &ctx, &ReconstructionConfig::new(5, 25)).unwrap();
        assert!(r.reconstructed);
        assert_eq!(r.best_similarity(), Some(1.0));
        assert_eq!(r.routes[0].final_product, target);
        assert!(r.routes[0].uses_only_library_bbs);
    }

    #[test]
    fn novel_bb_used() {
        let (lib, set) = setup();
        let idx = IndexSet::build(&lib, &set);
        let ctx = ReconContext {
            library: &lib,
            templates: &set,
            indexes: &idx,
        };
        let target = canon("CCCCNC(C)=O");
        let resp = response(&set, "CC(=O)O", "NCCCC", &target);
        let r = reconstruct(&resp, None, &ctx, &ReconstructionConfig::new(2, 25)).unwrap();
        assert!(r.reconstructed);
        let best = r.best().unwrap();
        assert_eq!(best.novel_bbs, vec![canon("NCCCC")]);
        assert!(!best.uses_only_library_bbs);
    }

    #[test]
    fn candidates_order() {
        let (lib, set) = setup();
        let idx = SlotIndex::build(&lib, set.get(0), 1).unwrap();
        let c = candidate_reactants("NCC", set.get(0), 1, Some(&idx), &lib, 2);
        assert_eq!(c[0].kind, CandidateKind::Exact);
        assert_eq!(c[0].smiles, canon("NCC"));
        let c = candidate_reactants("NCCCCC", set.get(0), 1, Some(&idx), &lib, 2);
        assert_eq!(c.last().unwrap().kind, CandidateKind::Novel);
        assert!(c[..c.len() - 1].iter().all(|x| x.kind == CandidateKind::Neighbor));
        let c = candidate_reactants("NC(", set.get(0), 1, Some(&idx), &lib, 2);
        assert!(!c.is_empty());
        assert!(c.iter().all(|x| x.kind == CandidateKind::Neighbor));
    }

    #[test]
    fn dead_route() {
        let (lib, set) = setup();
        let idx = IndexSet::build(&lib, &set);
        let ctx = ReconContext {
            library: &lib,
            templates: &set,
            indexes: &idx,
        };
        let resp = response(&set, "C", "C", "CC");
        let r = reconstruct(&resp, None, &ctx, &ReconstructionConfig::new(1, 1)).unwrap();
        // Neighbors exist, so something still reacts; with an unknown template
        // nothing can.
        assert!(!r.routes.is_empty());
        let mut bad = resp.clone();
        bad.reactions[0].reaction_template.push('x');
        let r = reconstruct(&bad, None, &ctx, &ReconstructionConfig::new(1, 1)).unwrap();
        assert!(r.routes.is_empty());
        assert!(!r.reconstructed);
        assert_eq!(r.best_analog, None);
    }

    #[test]
    fn scaffold_similarity_toluene_xylene() {
        let cfg = ReconstructionConfig::new(1, 1);
        let mut r = ReconstructionResult {
            target: String::new(),
            routes: vec![ExecutedRoute {
                steps: vec![],
                final_product: canon("Cc1ccccc1"),
                building_blocks: vec![],
                uses_only_library_bbs: true,
                novel_bbs: vec![],
                similarity_to_target: 0.0,
                scaffold_similarity: 0.0,
            }],
            reconstructed: false,
            best_analog: None,
            diagnostics: vec![],
        };
        score_result(&mut r, "Cc1ccccc1C", &cfg).unwrap();
        assert_eq!(r.routes[0].scaffold_similarity, 1.0);
        assert!(r.routes[0].similarity_to_target < 1.0);
        assert!(matches!(
            score_result(&mut r, "C(", &cfg),
            Err(ReconstructError::TargetParse { .. })
        ));
    }

    #[test]
    fn combination_order() {
        assert_eq!(
            combinations(&[2, 2]),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(combinations(&[1, 0]), Vec::<Vec<usize>>::new());
    }
}
