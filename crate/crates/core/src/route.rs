//! Random synthesis routes over a building-block library and a template set,
//! and their serialization as instruction/input/output training pairs.
//!
//! Sampling model:
//! - the first template is drawn with weight equal to its number of
//!   reactant combinations (product of slot compatibility counts), its
//!   building blocks uniformly per slot;
//! - each later step draws uniformly among the (template, slot) pairs the
//!   current intermediate fits, fills the other slots uniformly and picks one
//!   product uniformly;
//! - a route ends when nothing applies or [`MAX_ROUTE_STEPS`] is reached.
//!
//! Branching routes grow two linear sub-routes and join an intermediate of
//! each in one bimolecular step.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use synroute_chem::{canonical_smiles, parse_smiles, Molecule};
use thiserror::Error;

use crate::compat::CompatibilityTable;
use crate::response::{LlmResponse, ResponseStep};

/// Longest route the generator produces.
pub const MAX_ROUTE_STEPS: usize = 5;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("no template has compatible building blocks for every slot")]
    NoViableStart,
    #[error("no branching route found in {0} attempts")]
    NoBranchingFound(usize),
    #[error("corpus i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteShape {
    Linear,
    Branching,
}

impl std::str::FromStr for RouteShape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(RouteShape::Linear),
            "branching" => Ok(RouteShape::Branching),
            _ => Err(format!("unknown route shape {s:?} (linear, branching)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionStep {
    /// Index into the template set.
    pub template: usize,
    pub template_id: String,
    pub template_text: String,
    /// Canonical SMILES in slot order.
    pub reactants: Vec<String>,
    pub product: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisRoute {
    /// Forward synthesis order.
    pub steps: Vec<ReactionStep>,
    /// Reactants that are not products of any step, in first-use order.
    pub building_blocks: Vec<String>,
    pub final_product: String,
    pub shape: RouteShape,
}

/// Reactants of `steps` that no step produces, deduplicated, in order of
/// first appearance.
pub fn leaf_reactants<'s>(steps: impl IntoIterator<Item = (&'s [String], &'s str)> + Clone) -> Vec<String> {
    let products: BTreeSet<&str> = steps.clone().into_iter().map(|(_, p)| p).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (reactants, _) in steps {
        for r in reactants {
            if !products.contains(r.as_str()) && seen.insert(r.as_str()) {
                out.push(r.clone());
            }
        }
    }
    out
}

impl SynthesisRoute {
    fn from_steps(steps: Vec<ReactionStep>, shape: RouteShape) -> Self {
        let building_blocks = leaf_reactants(steps.iter().map(|s| (s.reactants.as_slice(), s.product.as_str())));
        let final_product = steps.last().expect("routes have steps").product.clone();
        SynthesisRoute {
            steps,
            building_blocks,
            final_product,
            shape,
        }
    }

    /// Retrosynthetic response: last step first.
    pub fn to_response(&self) -> LlmResponse {
        let reactions = self
            .steps
            .iter()
            .rev()
            .map(|s| ResponseStep {
                reaction_template: s.template_text.clone(),
                reactants: s.reactants.clone(),
                product: s.product.clone(),
            })
            .collect();
        LlmResponse::new(reactions, self.building_blocks.clone())
    }

    /// Whether some step consumes two products of earlier steps.
    pub fn has_join(&self) -> bool {
        let mut made = BTreeSet::new();
        for s in &self.steps {
            if s.reactants.iter().filter(|r| made.contains(r.as_str())).count() >= 2 {
                return true;
            }
            made.insert(s.product.as_str());
        }
        false
    }

    /// Whether every step after the first consumes the previous product.
    pub fn is_linear_chain(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].reactants.contains(&w[0].product))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptResponsePair {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

pub fn route_to_pair(route: &SynthesisRoute, instruction: &str) -> PromptResponsePair {
    PromptResponsePair {
        instruction: instruction.to_string(),
        input: route.final_product.clone(),
        output: route.to_response().raw_text,
    }
}

/// Optional product predicate (e.g. a drug-likeness filter).
pub type ProductFilter = Arc<dyn Fn(&Molecule) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct GeneratorConfig {
    pub max_steps: usize,
    /// Attempts per branching route before giving up.
    pub branching_attempts: usize,
    /// Restarts per route when the initial reaction yields nothing.
    pub start_attempts: usize,
    pub product_filter: Option<ProductFilter>,
    /// Drop corpus pairs whose target already appeared.
    pub dedup_targets: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            max_steps: MAX_ROUTE_STEPS,
            branching_attempts: 500,
            start_attempts: 200,
            product_filter: None,
            dedup_targets: false,
        }
    }
}

impl std::fmt::Debug for GeneratorConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorConfig")
            .field("max_steps", &self.max_steps)
            .field("branching_attempts", &self.branching_attempts)
            .field("start_attempts", &self.start_attempts)
            .field("product_filter", &self.product_filter.is_some())
            .field("dedup_targets", &self.dedup_targets)
            .finish()
    }
}

/// A molecule in hand during generation.
#[derive(Clone)]
struct Held {
    smiles: String,
    mol: Molecule,
}

pub struct RouteGenerator<'a> {
    table: &'a CompatibilityTable<'a>,
    config: GeneratorConfig,
    start_weights: Option<WeightedIndex<u64>>,
    start_templates: Vec<usize>,
}

impl<'a> RouteGenerator<'a> {
    pub fn new(table: &'a CompatibilityTable<'a>, config: GeneratorConfig) -> Self {
        table.fill_all();
        let templates = table.templates();
        let mut start_templates = Vec::new();
        let mut weights = Vec::new();
        for t in 0..templates.len() {
            let w = table.combinations(t).min(u64::MAX as u128) as u64;
            if w > 0 {
                start_templates.push(t);
                weights.push(w);
            }
        }
        let start_weights = WeightedIndex::new(&weights).ok();
        RouteGenerator {
            table,
            config,
            start_weights,
            start_templates,
        }
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    /// Probability of each template being drawn first, by template index.
    pub fn start_probabilities(&self) -> Vec<f64> {
        let n = self.table.templates().len();
        let total: f64 = (0..n).map(|t| self.table.combinations(t) as f64).sum();
        (0..n)
            .map(|t| {
                if total == 0.0 {
                    0.0
                } else {
                    self.table.combinations(t) as f64 / total
                }
            })
            .collect()
    }

    /// Draws the first template index.
    pub fn draw_start_template(&self, rng: &mut ChaCha8Rng) -> Result<usize, RouteError> {
        let dist = self.start_weights.as_ref().ok_or(RouteError::NoViableStart)?;
        Ok(self.start_templates[dist.sample(rng)])
    }

    fn library_bb(&self, template: usize, slot: usize, rng: &mut ChaCha8Rng) -> Held {
        let docs = self.table.get(template, slot);
        let e = self.table.library().get(docs[rng.random_range(0..docs.len())]);
        Held {
            smiles: e.canonical.clone(),
            mol: e.mol.clone(),
        }
    }

    fn product_ok(&self, mol: &Molecule) -> bool {
        self.config.product_filter.as_ref().is_none_or(|f| f(mol))
    }

    /// Applies `template` and picks one acceptable product uniformly.
    fn react(
        &self,
        template: usize,
        reactants: &[Held],
        taken: &BTreeSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> Option<Held> {
        let tpl = self.table.templates().get(template);
        let refs: Vec<&Molecule> = reactants.iter().map(|h| &h.mol).collect();
        let products = tpl.apply(&refs).ok()?;
        let options: Vec<(String, Molecule)> = products
            .into_iter()
            .filter(|(s, m)| !taken.contains(s) && self.product_ok(m))
            .collect();
        if options.is_empty() {
            return None;
        }
        let (smiles, mol) = options[rng.random_range(0..options.len())].clone();
        Some(Held { smiles, mol })
    }

    fn step(&self, template: usize, reactants: &[Held], product: &Held) -> ReactionStep {
        let tpl = self.table.templates().get(template);
        ReactionStep {
            template,
            template_id: tpl.id.clone(),
            template_text: tpl.smarts_text().to_string(),
            reactants: reactants.iter().map(|h| h.smiles.clone()).collect(),
            product: product.smiles.clone(),
        }
    }

    /// Every molecule string already in the route.
    fn taken(steps: &[ReactionStep]) -> BTreeSet<String> {
        let mut t = BTreeSet::new();
        for s in steps {
            t.extend(s.reactants.iter().cloned());
            t.insert(s.product.clone());
        }
        t
    }

    fn products(steps: &[ReactionStep]) -> BTreeSet<String> {
        steps.iter().map(|s| s.product.clone()).collect()
    }

    /// First step of a route, or None if the drawn reaction gave nothing.
    fn start(&self, rng: &mut ChaCha8Rng) -> Result<Option<(ReactionStep, Held)>, RouteError> {
        let t = self.draw_start_template(rng)?;
        let n = self.table.templates().get(t).num_slots();
        let reactants: Vec<Held> = (0..n).map(|s| self.library_bb(t, s, rng)).collect();
        let taken: BTreeSet<String> = reactants.iter().map(|h| h.smiles.clone()).collect();
        Ok(self
            .react(t, &reactants, &taken, rng)
            .map(|p| (self.step(t, &reactants, &p), p)))
    }

    /// (template, slot) pairs `mol` fits whose other slots are fillable.
    fn continuations(&self, mol: &Molecule) -> Vec<(usize, usize)> {
        let templates = self.table.templates();
        templates
            .slots()
            .into_iter()
            .filter(|&(t, s)| {
                let tpl = templates.get(t);
                (0..tpl.num_slots()).all(|o| o == s || !self.table.get(t, o).is_empty()) && tpl.is_compatible(s, mol)
            })
            .collect()
    }

    /// Extends a linear chain from `current` until nothing applies or the
    /// step budget is spent.
    fn extend_linear(&self, steps: &mut Vec<ReactionStep>, mut current: Held, budget: usize, rng: &mut ChaCha8Rng) {
        const DRAWS_PER_STEP: usize = 8;
        while steps.len() < budget {
            let options = self.continuations(&current.mol);
            if options.is_empty() {
                return;
            }
            let mut advanced = false;
            for _ in 0..DRAWS_PER_STEP {
                let (t, s) = options[rng.random_range(0..options.len())];
                let n = self.table.templates().get(t).num_slots();
                let reactants: Vec<Held> = (0..n)
                    .map(|o| {
                        if o == s {
                            current.clone()
                        } else {
                            self.library_bb(t, o, rng)
                        }
                    })
                    .collect();
                let products = Self::products(steps);
                // A new building block must not coincide with an intermediate.
                if reactants
                    .iter()
                    .enumerate()
                    .any(|(o, h)| o != s && (products.contains(&h.smiles) || h.smiles == current.smiles))
                {
                    continue;
                }
                let mut taken = Self::taken(steps);
                taken.extend(reactants.iter().map(|h| h.smiles.clone()));
                if let Some(p) = self.react(t, &reactants, &taken, rng) {
                    steps.push(self.step(t, &reactants, &p));
                    current = p;
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                return;
            }
        }
    }

    fn linear_with_budget(&self, rng: &mut ChaCha8Rng, budget: usize) -> Result<Vec<ReactionStep>, RouteError> {
        for _ in 0..self.config.start_attempts {
            if let Some((first, product)) = self.start(rng)? {
                let mut steps = vec![first];
                self.extend_linear(&mut steps, product, budget, rng);
                return Ok(steps);
            }
        }
        Err(RouteError::NoViableStart)
    }

    /// A linear route drawn from `rng`.
    pub fn sample_linear(&self, rng: &mut ChaCha8Rng) -> Result<SynthesisRoute, RouteError> {
        let steps = self.linear_with_budget(rng, self.config.max_steps.max(1))?;
        Ok(SynthesisRoute::from_steps(steps, RouteShape::Linear))
    }

    pub fn sample_route(&self, seed: u64) -> Result<SynthesisRoute, RouteError> {
        self.sample_linear(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// A route in which one step joins intermediates of two sub-routes.
    pub fn sample_branching(&self, rng: &mut ChaCha8Rng) -> Result<SynthesisRoute, RouteError> {
        let max = self.config.max_steps;
        if max < 3 {
            return Err(RouteError::NoBranchingFound(0));
        }
        let templates = self.table.templates();
        let binary: Vec<usize> = (0..templates.len())
            .filter(|&t| templates.get(t).num_slots() == 2)
            .collect();
        for _ in 0..self.config.branching_attempts {
            let la = rng.random_range(1..=max - 2);
            let a = self.linear_with_budget(rng, la)?;
            let lb = rng.random_range(1..=max - 1 - a.len());
            let b = self.linear_with_budget(rng, lb)?;
            let mols_a = held_products(&a);
            let mols_b = held_products(&b);
            // (prefix of a, prefix of b, template, slot taken by a's product)
            let mut joins: Vec<(usize, usize, usize, usize)> = Vec::new();
            for (i, ha) in mols_a.iter().enumerate() {
                for (j, hb) in mols_b.iter().enumerate() {
                    if ha.smiles == hb.smiles {
                        continue;
                    }
                    for &t in &binary {
                        let tpl = templates.get(t);
                        for s in 0..2 {
                            if tpl.is_compatible(s, &ha.mol) && tpl.is_compatible(1 - s, &hb.mol) {
                                joins.push((i, j, t, s));
                            }
                        }
                    }
                }
            }
            if joins.is_empty() {
                continue;
            }
            let (i, j, t, s) = joins[rng.random_range(0..joins.len())];
            let mut steps: Vec<ReactionStep> = a[..=i].to_vec();
            steps.extend_from_slice(&b[..=j]);
            if !disjoint_roles(&steps) {
                continue;
            }
            let (ha, hb) = (mols_a[i].clone(), mols_b[j].clone());
            let reactants = if s == 0 { vec![ha, hb] } else { vec![hb, ha] };
            let taken = Self::taken(&steps);
            let Some(p) = self.react(t, &reactants, &taken, rng) else {
                continue;
            };
            steps.push(self.step(t, &reactants, &p));
            self.extend_linear(&mut steps, p, max, rng);
            if !disjoint_roles(&steps) {
                continue;
            }
            return Ok(SynthesisRoute::from_steps(steps, RouteShape::Branching));
        }
        Err(RouteError::NoBranchingFound(self.config.branching_attempts))
    }

    pub fn sample_branching_route(&self, seed: u64) -> Result<SynthesisRoute, RouteError> {
        self.sample_branching(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample(&self, shape: RouteShape, rng: &mut ChaCha8Rng) -> Result<SynthesisRoute, RouteError> {
        match shape {
            RouteShape::Linear => self.sample_linear(rng),
            RouteShape::Branching => self.sample_branching(rng),
        }
    }

    /// `n` routes; route `i` uses stream `i` of the master seed, so the
    /// result does not depend on thread count.
    pub fn generate_routes(&self, n: usize, seed: u64, shape: RouteShape) -> Result<Vec<SynthesisRoute>, RouteError> {
        use rayon::prelude::*;
        let draw = |i: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            self.sample(shape, &mut rng)
        };
        if !self.config.dedup_targets {
            return (0..n).into_par_iter().map(draw).collect();
        }
        let mut out = Vec::with_capacity(n);
        let mut seen = BTreeSet::new();
        let mut next = 0usize;
        // Bounded so that a tiny chemical space cannot loop forever.
        let limit = n.saturating_mul(50).max(1000);
        while out.len() < n && next < limit {
            let batch = (n - out.len()).max(16);
            let routes: Vec<Result<SynthesisRoute, RouteError>> =
                (next..next + batch).into_par_iter().map(draw).collect();
            next += batch;
            for r in routes {
                let r = r?;
                if out.len() < n && seen.insert(r.final_product.clone()) {
                    out.push(r);
                }
            }
        }
        Ok(out)
    }

    pub fn generate_corpus(
        &self,
        n: usize,
        seed: u64,
        shape: RouteShape,
        instruction: &str,
    ) -> Result<Vec<PromptResponsePair>, RouteError> {
        Ok(self
            .generate_routes(n, seed, shape)?
            .iter()
            .map(|r| route_to_pair(r, instruction))
            .collect())
    }
}

/// No building block of `steps` equals any product, and products are
/// distinct.
fn disjoint_roles(steps: &[ReactionStep]) -> bool {
    let mut products = BTreeSet::new();
    for s in steps {
        if !products.insert(s.product.as_str()) {
            return false;
        }
    }
    let made_before: BTreeMap<&str, usize> = steps.iter().enumerate().map(|(i, s)| (s.product.as_str(), i)).collect();
    // A reactant equal to some product must be consumed after it is made.
    steps.iter().enumerate().all(|(k, s)| {
        s.reactants
            .iter()
            .all(|r| made_before.get(r.as_str()).is_none_or(|&i| i < k))
    })
}

fn held_products(steps: &[ReactionStep]) -> Vec<Held> {
    steps
        .iter()
        .map(|s| Held {
            smiles: s.product.clone(),
            mol: parse_smiles(&s.product).expect("generated products parse"),
        })
        .collect()
}

/// Writes pairs as JSON lines.
pub fn write_corpus(pairs: &[PromptResponsePair], out: &mut impl Write) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut *out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(pairs: &[PromptResponsePair], path: &Path) -> Result<(), RouteError> {
    let mut buf = Vec::new();
    write_corpus(pairs, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Re-applies every step; returns the index of the first step whose
/// recorded product is not among the template's products.
pub fn replay_route(route: &SynthesisRoute, templates: &crate::templates::TemplateSet) -> Result<(), usize> {
    for (k, s) in route.steps.iter().enumerate() {
        let mols: Option<Vec<Molecule>> = s.reactants.iter().map(|r| parse_smiles(r).ok()).collect();
        let Some(mols) = mols else { return Err(k) };
        let refs: Vec<&Molecule> = mols.iter().collect();
        let ok = templates
            .get(s.template)
            .apply_forward(&refs)
            .map(|ps| ps.contains(&s.product))
            .unwrap_or(false);
        if !ok || parse_smiles(&s.product).map(|m| canonical_smiles(&m)).ok().as_deref() != Some(&s.product) {
            return Err(k);
        }
    }
    Ok(())
}
