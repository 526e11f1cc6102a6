//! Which library entries fit which template slots.

use std::sync::OnceLock;

use synroute_chem::ReactionTemplate;

use crate::library::BuildingBlockLibrary;
use crate::templates::TemplateSet;

/// Library entries with at least one match for the slot pattern, in
/// library order.
pub fn compatible_bbs(library: &BuildingBlockLibrary, template: &ReactionTemplate, slot: usize) -> Vec<usize> {
    library
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| template.is_compatible(slot, &e.mol))
        .map(|(i, _)| i)
        .collect()
}

/// Lazily filled per-(template, slot) compatibility lists.
#[derive(Debug)]
pub struct CompatibilityTable<'a> {
    library: &'a BuildingBlockLibrary,
    templates: &'a TemplateSet,
    offsets: Vec<usize>,
    cells: Vec<OnceLock<Vec<usize>>>,
}

impl<'a> CompatibilityTable<'a> {
    pub fn new(library: &'a BuildingBlockLibrary, templates: &'a TemplateSet) -> Self {
        let mut offsets = Vec::with_capacity(templates.len());
        let mut total = 0;
        for t in templates.templates() {
            offsets.push(total);
            total += t.num_slots();
        }
        CompatibilityTable {
            library,
            templates,
            offsets,
            cells: (0..total).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn library(&self) -> &'a BuildingBlockLibrary {
        self.library
    }

    pub fn templates(&self) -> &'a TemplateSet {
        self.templates
    }

    pub fn get(&self, template: usize, slot: usize) -> &[usize] {
        self.cells[self.offsets[template] + slot]
            .get_or_init(|| compatible_bbs(self.library, self.templates.get(template), slot))
    }

    /// Fills every cell, in parallel.
    pub fn fill_all(&self) {
        use rayon::prelude::*;
        self.templates.slots().par_iter().for_each(|&(t, s)| {
            self.get(t, s);
        });
    }

    /// Number of reactant combinations a template admits: the product of
    /// its slot sizes.
    pub fn combinations(&self, template: usize) -> u128 {
        (0..self.templates.get(template).num_slots())
            .map(|s| self.get(template, s).len() as u128)
            .product()
    }
}
