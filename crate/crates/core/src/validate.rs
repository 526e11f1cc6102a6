//! The six response benchmarks.
//!
//! Denominators:
//! - Valid JSON: responses;
//! - Template Mem., Matched Reactants, Good Products: reaction steps of
//!   parseable responses;
//! - Valid SMILES: every reactant, product and building-block string of
//!   parseable responses, per occurrence;
//! - BB Selection: parseable responses.
//!
//! A metric with an empty denominator reports 1.0.

use std::collections::BTreeSet;

use serde::Serialize;
use synroute_chem::{canonical_smiles, parse_smiles, Molecule};

use crate::response::{parse_response, LlmResponse};
use crate::templates::TemplateSet;

/// Canonical SMILES when the text parses, the text itself otherwise.
pub fn canonical_or_raw(text: &str) -> String {
    parse_smiles(text)
        .map(|m| canonical_smiles(&m))
        .unwrap_or_else(|_| text.to_string())
}

/// Per-step template lookup: Some(template index) when the step's template
/// text is in the set.
pub fn check_template_memorization(resp: &LlmResponse, templates: &TemplateSet) -> Vec<Option<usize>> {
    resp.reactions
        .iter()
        .map(|s| templates.index_of_text(&s.reaction_template))
        .collect()
}

/// Building-block list equals {reactants} minus {products}, as sets.
pub fn check_bb_selection(resp: &LlmResponse) -> bool {
    let products: BTreeSet<String> = resp.reactions.iter().map(|s| canonical_or_raw(&s.product)).collect();
    let expected: BTreeSet<String> = resp
        .reactions
        .iter()
        .flat_map(|s| s.reactants.iter())
        .map(|r| canonical_or_raw(r))
        .filter(|r| !products.contains(r))
        .collect();
    let listed: BTreeSet<String> = resp.building_blocks.iter().map(|b| canonical_or_raw(b)).collect();
    listed == expected
}

/// Validity flag of every SMILES string: per step its reactants then its
/// product, then the building blocks.
pub fn check_valid_smiles(resp: &LlmResponse) -> Vec<bool> {
    let mut flags = Vec::with_capacity(resp.smiles_count());
    for s in &resp.reactions {
        flags.extend(s.reactants.iter().map(|r| parse_smiles(r).is_ok()));
        flags.push(parse_smiles(&s.product).is_ok());
    }
    flags.extend(resp.building_blocks.iter().map(|b| parse_smiles(b).is_ok()));
    flags
}

fn step_reactants(
    resp: &LlmResponse,
    step: usize,
    template: Option<usize>,
    templates: &TemplateSet,
) -> Option<(usize, Vec<Molecule>)> {
    let t = template?;
    let s = &resp.reactions[step];
    if s.reactants.len() != templates.get(t).num_slots() {
        return None;
    }
    let mols: Option<Vec<Molecule>> = s.reactants.iter().map(|r| parse_smiles(r).ok()).collect();
    mols.map(|m| (t, m))
}

/// Per step: every reactant matches its slot of the named template.
pub fn check_matched_reactants(resp: &LlmResponse, templates: &TemplateSet) -> Vec<bool> {
    let known = check_template_memorization(resp, templates);
    (0..resp.reactions.len())
        .map(|k| match step_reactants(resp, k, known[k], templates) {
            Some((t, mols)) => mols
                .iter()
                .enumerate()
                .all(|(slot, m)| templates.get(t).is_compatible(slot, m)),
            None => false,
        })
        .collect()
}

/// Per step: the predicted product is among the template's products.
pub fn check_good_products(resp: &LlmResponse, templates: &TemplateSet) -> Vec<bool> {
    let known = check_template_memorization(resp, templates);
    (0..resp.reactions.len())
        .map(|k| {
            let Some((t, mols)) = step_reactants(resp, k, known[k], templates) else {
                return false;
            };
            let Ok(product) = parse_smiles(&resp.reactions[k].product) else {
                return false;
            };
            let refs: Vec<&Molecule> = mols.iter().collect();
            templates
                .get(t)
                .apply(&refs)
                .map(|ps| ps.contains_key(&canonical_smiles(&product)))
                .unwrap_or(false)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Count {
    pub passed: usize,
    pub total: usize,
}

impl Count {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }

    fn add(&mut self, other: Count) {
        self.passed += other.passed;
        self.total += other.total;
    }

    fn of(flags: impl IntoIterator<Item = bool>) -> Count {
        let mut c = Count::default();
        for f in flags {
            c.total += 1;
            c.passed += f as usize;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BenchmarkReport {
    pub valid_json: Count,
    pub template_mem: Count,
    pub bb_selection: Count,
    pub valid_smiles: Count,
    pub matched_reactants: Count,
    pub good_products: Count,
}

/// Row labels in display order.
pub const REPORT_LABELS: [&str; 6] = [
    "Valid JSON",
    "Template Mem.",
    "BB Selection",
    "Valid SMILES",
    "Matched Reactants",
    "Good Products",
];

#[derive(Serialize)]
struct MetricJson<'a> {
    metric: &'a str,
    passed: usize,
    total: usize,
    fraction: f64,
}

impl BenchmarkReport {
    pub fn rows(&self) -> [(&'static str, Count); 6] {
        [
            (REPORT_LABELS[0], self.valid_json),
            (REPORT_LABELS[1], self.template_mem),
            (REPORT_LABELS[2], self.bb_selection),
            (REPORT_LABELS[3], self.valid_smiles),
            (REPORT_LABELS[4], self.matched_reactants),
            (REPORT_LABELS[5], self.good_products),
        ]
    }

    pub fn merge(&mut self, other: &BenchmarkReport) {
        self.valid_json.add(other.valid_json);
        self.template_mem.add(other.template_mem);
        self.bb_selection.add(other.bb_selection);
        self.valid_smiles.add(other.valid_smiles);
        self.matched_reactants.add(other.matched_reactants);
        self.good_products.add(other.good_products);
    }

    pub fn to_json(&self) -> String {
        let keys = [
            "valid_json",
            "template_mem",
            "bb_selection",
            "valid_smiles",
            "matched_reactants",
            "good_products",
        ];
        let mut map = serde_json::Map::new();
        for (key, (label, c)) in keys.iter().zip(self.rows()) {
            map.insert(
                key.to_string(),
                serde_json::to_value(MetricJson {
                    metric: label,
                    passed: c.passed,
                    total: c.total,
                    fraction: c.fraction(),
                })
                .expect("metric serializes"),
            );
        }
        serde_json::to_string_pretty(&map).expect("report serializes")
    }

    /// Aligned text table, one row per metric.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<18} {:>8} {:>15}\n", "Benchmark", "Percent", "Count");
        for (label, c) in self.rows() {
            out.push_str(&format!(
                "{:<18} {:>7.2}% {:>15}\n",
                label,
                100.0 * c.fraction(),
                format!("{}/{}", c.passed, c.total)
            ));
        }
        out
    }
}

/// Report for one raw response text.
pub fn benchmark_response(text: &str, templates: &TemplateSet) -> BenchmarkReport {
    let mut r = BenchmarkReport {
        valid_json: Count { passed: 0, total: 1 },
        ..Default::default()
    };
    let Ok(resp) = parse_response(text) else {
        return r;
    };
    r.valid_json.passed = 1;
    r.template_mem = Count::of(
        check_template_memorization(&resp, templates)
            .iter()
            .map(Option::is_some),
    );
    r.bb_selection = Count::of([check_bb_selection(&resp)]);
    r.valid_smiles = Count::of(check_valid_smiles(&resp));
    r.matched_reactants = Count::of(check_matched_reactants(&resp, templates));
    r.good_products = Count::of(check_good_products(&resp, templates));
    r
}

/// Aggregate report over raw response texts (evaluated in parallel; the
/// sums do not depend on scheduling).
pub fn benchmark_corpus<S: AsRef<str> + Sync>(responses: &[S], templates: &TemplateSet) -> BenchmarkReport {
    use rayon::prelude::*;
    let parts: Vec<BenchmarkReport> = responses
        .par_iter()
        .map(|t| benchmark_response(t.as_ref(), templates))
        .collect();
    let mut total = BenchmarkReport::default();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Corruption operators, each aimed at specific benchmarks.
pub mod faults {
    use super::*;
    use crate::response::LlmResponse;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Fault {
        /// Truncates the text: Valid JSON fails.
        BreakJson,
        /// Alters the first step's template: Template Mem., Matched
        /// Reactants and Good Products fail for that step.
        MutateTemplate,
        /// Drops the last building block: BB Selection fails.
        DropBuildingBlock,
        /// Makes the first step's product unparseable: one Valid SMILES
        /// string and that step's Good Products fail.
        BreakSmiles,
        /// Swaps the reactants of the first bimolecular step whose slots
        /// then no longer match: Matched Reactants and Good Products fail
        /// for that step.
        SwapReactants,
        /// Replaces the first step's product with a different valid
        /// molecule: Good Products fails for that step.
        MutateProduct,
    }

    pub const ALL: [Fault; 6] = [
        Fault::BreakJson,
        Fault::MutateTemplate,
        Fault::DropBuildingBlock,
        Fault::BreakSmiles,
        Fault::SwapReactants,
        Fault::MutateProduct,
    ];

    /// Corrupted text, or None if the operator does not apply (e.g. no
    /// swappable step).
    pub fn apply(fault: Fault, text: &str, templates: &TemplateSet) -> Option<String> {
        if fault == Fault::BreakJson {
            return if text.len() > 1 {
                Some(text[..text.len() - 1].to_string())
            } else {
                None
            };
        }
        let mut resp = parse_response(text).ok()?;
        match fault {
            Fault::BreakJson => unreachable!(),
            Fault::MutateTemplate => {
                resp.reactions.first_mut()?.reaction_template.push('~');
            }
            Fault::DropBuildingBlock => {
                resp.building_blocks.pop()?;
            }
            Fault::BreakSmiles => {
                resp.reactions.first_mut()?.product.push('(');
            }
            Fault::SwapReactants => {
                let k = swappable_step(&resp, templates)?;
                resp.reactions[k].reactants.swap(0, 1);
            }
            Fault::MutateProduct => {
                resp.reactions.first_mut()?.product.push_str(".O");
            }
        }
        Some(LlmResponse::new(resp.reactions, resp.building_blocks).raw_text)
    }

    /// First bimolecular step that matches as written but not swapped.
    pub fn swappable_step(resp: &LlmResponse, templates: &TemplateSet) -> Option<usize> {
        let matched = check_matched_reactants(resp, templates);
        (0..resp.reactions.len()).find(|&k| {
            if !matched[k] || resp.reactions[k].reactants.len() != 2 {
                return false;
            }
            let mut swapped = resp.clone();
            swapped.reactions[k].reactants.swap(0, 1);
            !check_matched_reactants(&swapped, templates)[k]
        })
    }
}
