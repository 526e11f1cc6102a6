//! Reaction templates (`reactants>>product` SMARTS with atom maps) and their
//! forward application.
//!
//! Application semantics:
//! - mapped atoms carry over, taking element, aromaticity and charge from the
//!   product pattern where it specifies them;
//! - unmapped reactant-pattern atoms are deleted, along with any part of the
//!   reactant only reachable through them;
//! - the rest of each reactant attached to mapped atoms is transplanted;
//! - bonds between mapped atoms that the reactant pattern constrains are
//!   replaced by the product pattern's bonds;
//! - unmapped product atoms are created from the product pattern;
//! - hydrogen counts on mapped atoms are adjusted for the bond change unless
//!   the product pattern pins them.
//!
//! Products failing valence validation are discarded; results are
//! deduplicated by canonical SMILES.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::canon::canonical_smiles;
use crate::element;
use crate::error::{ChemError, Result};
use crate::matcher::{match_substructure, Match};
use crate::molecule::{implicit_hydrogens, Atom, Bond, BondOrder, Molecule};
use crate::smarts::{parse_smarts, AtomExpr, AtomPrimitive, BondExpr, BondPrimitive, Pattern};

/// Largest number of reactant slots a template may declare.
pub const MAX_SLOTS: usize = 2;

#[derive(Debug, Clone)]
pub struct ReactionTemplate {
    pub id: String,
    pub name: String,
    reactants: Vec<Pattern>,
    products: Vec<Pattern>,
    smarts: String,
}

/// Concrete atom fields a product pattern atom specifies.
#[derive(Debug, Default, Clone, Copy)]
struct AtomSpec {
    element: Option<u8>,
    aromatic: Option<bool>,
    charge: Option<i8>,
    hydrogens: Option<u8>,
}

fn collect_spec(expr: &AtomExpr, spec: &mut AtomSpec) {
    match expr {
        AtomExpr::Prim(p) => match p {
            AtomPrimitive::Element { number, aromatic } => {
                spec.element = Some(*number);
                spec.aromatic = Some(*aromatic);
            }
            AtomPrimitive::AtomicNumber(z) => spec.element = Some(*z),
            AtomPrimitive::Aromatic => spec.aromatic = Some(true),
            AtomPrimitive::Aliphatic => spec.aromatic = Some(false),
            AtomPrimitive::Charge(c) => spec.charge = Some(*c),
            AtomPrimitive::TotalH(h) => spec.hydrogens = Some(*h),
            _ => {}
        },
        AtomExpr::And(es) => es.iter().for_each(|e| collect_spec(e, spec)),
        AtomExpr::Not(_) | AtomExpr::Or(_) => {}
    }
}

fn atom_spec(expr: &AtomExpr) -> AtomSpec {
    let mut spec = AtomSpec::default();
    collect_spec(expr, &mut spec);
    spec
}

/// Concrete order of a product bond, `None` when the pattern leaves it open.
fn bond_spec(expr: &BondExpr) -> Option<BondOrder> {
    match expr {
        BondExpr::Prim(BondPrimitive::Single) => Some(BondOrder::Single),
        BondExpr::Prim(BondPrimitive::Double) => Some(BondOrder::Double),
        BondExpr::Prim(BondPrimitive::Triple) => Some(BondOrder::Triple),
        BondExpr::Prim(BondPrimitive::Aromatic) => Some(BondOrder::Aromatic),
        BondExpr::And(es) => es.iter().find_map(bond_spec),
        _ => None,
    }
}

/// Splits `text` on top-level '.' (outside brackets and parentheses).
fn split_components(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut bracket, mut start) = (0i32, 0i32, 0usize);
    for (i, c) in text.char_indices() {
        match c {
            '[' => bracket += 1,
            ']' => bracket -= 1,
            '(' if bracket == 0 => depth += 1,
            ')' if bracket == 0 => depth -= 1,
            '.' if bracket == 0 && depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

/// Parses a `reactants>>product` template.
pub fn parse_reaction(text: &str) -> Result<ReactionTemplate> {
    let trimmed = text.trim();
    let Some((lhs, rhs)) = trimmed.split_once(">>") else {
        return Err(ChemError::syntax(0, "reaction must contain '>>'"));
    };
    if rhs.contains('>') || lhs.contains('>') {
        return Err(ChemError::syntax(
            lhs.len(),
            "reaction must contain exactly one '>>' and no agents",
        ));
    }
    if lhs.is_empty() {
        return Err(ChemError::syntax(0, "reaction has no reactant side"));
    }
    if rhs.is_empty() {
        return Err(ChemError::syntax(lhs.len() + 2, "reaction has no product side"));
    }
    let reactants = split_components(lhs)
        .into_iter()
        .map(parse_smarts)
        .collect::<Result<Vec<_>>>()?;
    let products = split_components(rhs)
        .into_iter()
        .map(parse_smarts)
        .collect::<Result<Vec<_>>>()?;
    if reactants.len() > MAX_SLOTS {
        return Err(ChemError::UnsupportedFeature(format!(
            "{} reactant slots (at most {MAX_SLOTS})",
            reactants.len()
        )));
    }
    if products.len() != 1 {
        return Err(ChemError::UnsupportedFeature(format!(
            "{} product patterns (exactly one supported)",
            products.len()
        )));
    }

    let mut sources: BTreeSet<u32> = BTreeSet::new();
    for r in &reactants {
        for map in r.atom_maps().into_keys() {
            if !sources.insert(map) {
                return Err(ChemError::syntax(
                    0,
                    format!("atom map {map} appears in more than one reactant"),
                ));
            }
        }
    }
    for p in &products {
        for (map, _) in p.atom_maps() {
            if !sources.contains(&map) {
                return Err(ChemError::MapClosure(map));
            }
        }
        for (i, atom) in p.atoms().iter().enumerate() {
            if atom.map == 0 && atom_spec(&atom.expr).element.is_none() {
                return Err(ChemError::UnsupportedFeature(format!(
                    "unmapped product atom {i} without an element"
                )));
            }
        }
    }
    Ok(ReactionTemplate {
        id: String::new(),
        name: String::new(),
        reactants,
        products,
        smarts: trimmed.to_string(),
    })
}

impl ReactionTemplate {
    pub fn new(id: &str, name: &str, smirks: &str) -> Result<Self> {
        let mut t = parse_reaction(smirks)?;
        t.id = id.to_string();
        t.name = name.to_string();
        Ok(t)
    }

    pub fn smarts_text(&self) -> &str {
        &self.smarts
    }

    pub fn num_slots(&self) -> usize {
        self.reactants.len()
    }

    pub fn reactant_patterns(&self) -> &[Pattern] {
        &self.reactants
    }

    pub fn product_patterns(&self) -> &[Pattern] {
        &self.products
    }

    /// Embeddings of slot `slot`'s pattern into `mol`.
    pub fn reactant_matches(&self, slot: usize, mol: &Molecule) -> Vec<Match> {
        let mut ms = match_substructure(&self.reactants[slot], mol);
        for m in &mut ms {
            m.slot = slot;
        }
        ms
    }

    pub fn is_compatible(&self, slot: usize, mol: &Molecule) -> bool {
        crate::matcher::has_match(&self.reactants[slot], mol)
    }

    /// Applies the template to `reactants` (one per slot, in slot order) and
    /// returns the distinct valid products keyed by canonical SMILES.
    pub fn apply(&self, reactants: &[&Molecule]) -> Result<BTreeMap<String, Molecule>> {
        if reactants.len() != self.reactants.len() {
            return Err(ChemError::SlotCountMismatch {
                expected: self.reactants.len(),
                got: reactants.len(),
            });
        }
        let per_slot: Vec<Vec<Match>> = reactants
            .iter()
            .enumerate()
            .map(|(s, m)| self.reactant_matches(s, m))
            .collect();
        let mut out = BTreeMap::new();
        if per_slot.iter().any(Vec::is_empty) {
            return Ok(out);
        }
        let mut idx = vec![0usize; per_slot.len()];
        loop {
            let combo: Vec<&Match> = idx.iter().enumerate().map(|(s, &k)| &per_slot[s][k]).collect();
            if let Some(product) = self.build_product(reactants, &combo) {
                out.entry(canonical_smiles(&product)).or_insert(product);
            }
            // odometer increment
            let mut s = 0;
            loop {
                if s == idx.len() {
                    return Ok(out);
                }
                idx[s] += 1;
                if idx[s] < per_slot[s].len() {
                    break;
                }
                idx[s] = 0;
                s += 1;
            }
        }
    }

    /// Canonical SMILES of all products of [`ReactionTemplate::apply`].
    pub fn apply_forward(&self, reactants: &[&Molecule]) -> Result<Vec<String>> {
        Ok(self.apply(reactants)?.into_keys().collect())
    }

    fn build_product(&self, reactants: &[&Molecule], combo: &[&Match]) -> Option<Molecule> {
        let product = &self.products[0];

        // map number -> (slot, reactant pattern atom, molecule atom)
        let mut mapped: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
        let mut deleted: Vec<Vec<bool>> = Vec::with_capacity(reactants.len());
        for (s, (mol, m)) in reactants.iter().zip(combo).enumerate() {
            let pattern = &self.reactants[s];
            let mut del = vec![false; mol.num_atoms()];
            for (pa, &ma) in m.atom_assignment.iter().enumerate() {
                let map = pattern.atoms()[pa].map;
                if map == 0 {
                    del[ma] = true;
                } else {
                    mapped.insert(map, (s, pa, ma));
                }
            }
            deleted.push(del);
        }
        // Mapped atoms dropped from the product are deleted as well.
        let product_maps = product.atom_maps();
        for (map, &(s, _, ma)) in &mapped {
            if !product_maps.contains_key(map) {
                deleted[s][ma] = true;
            }
        }

        // (slot, molecule atom) -> product atom index
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut atoms: Vec<Atom> = Vec::new();
        let mut pinned_h: Vec<Option<u8>> = Vec::new();
        let mut origin: Vec<Option<(usize, usize)>> = Vec::new();
        let mut created: Vec<bool> = Vec::new();

        for pat_atom in product.atoms() {
            let spec = atom_spec(&pat_atom.expr);
            if pat_atom.map != 0 {
                let (s, _, ma) = mapped[&pat_atom.map];
                let mut atom = reactants[s].atom(ma).clone();
                if let Some(z) = spec.element {
                    atom.element = z;
                }
                if let Some(a) = spec.aromatic {
                    atom.aromatic = a;
                }
                if let Some(c) = spec.charge {
                    atom.charge = c;
                }
                atom.atom_map = 0;
                index.insert((s, ma), atoms.len());
                origin.push(Some((s, ma)));
                created.push(false);
                atoms.push(atom);
            } else {
                let mut atom = Atom::new(spec.element.expect("checked at parse"));
                atom.aromatic = spec.aromatic.unwrap_or(false);
                atom.charge = spec.charge.unwrap_or(0);
                origin.push(None);
                created.push(true);
                atoms.push(atom);
            }
            pinned_h.push(spec.hydrogens);
        }

        // Transplant the unmatched remainder reachable from mapped atoms.
        for (s, mol) in reactants.iter().enumerate() {
            let mut seen = vec![false; mol.num_atoms()];
            let mut queue: VecDeque<usize> = index.keys().filter(|(slot, _)| *slot == s).map(|&(_, a)| a).collect();
            for &a in &queue {
                seen[a] = true;
            }
            while let Some(u) = queue.pop_front() {
                for &(v, _) in mol.neighbors(u) {
                    if seen[v] || deleted[s][v] {
                        continue;
                    }
                    seen[v] = true;
                    if let std::collections::btree_map::Entry::Vacant(slot) = index.entry((s, v)) {
                        let mut atom = mol.atom(v).clone();
                        atom.atom_map = 0;
                        slot.insert(atoms.len());
                        origin.push(Some((s, v)));
                        created.push(false);
                        pinned_h.push(None);
                        atoms.push(atom);
                    }
                    queue.push_back(v);
                }
            }
        }

        // Bonds carried from the reactants, except those the reactant
        // pattern constrains between two mapped atoms.
        let mut bonds: BTreeMap<(usize, usize), Bond> = BTreeMap::new();
        let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
        let mut pattern_atom_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(s, pa, ma) in mapped.values() {
            pattern_atom_of.insert((s, ma), pa);
        }
        for (s, mol) in reactants.iter().enumerate() {
            for bond in mol.bonds() {
                let (Some(&x), Some(&y)) = (index.get(&(s, bond.a)), index.get(&(s, bond.b))) else {
                    continue;
                };
                if let (Some(&pa), Some(&pb)) = (pattern_atom_of.get(&(s, bond.a)), pattern_atom_of.get(&(s, bond.b))) {
                    if self.reactants[s].bond_between(pa, pb).is_some() {
                        continue;
                    }
                }
                bonds.insert(
                    key(x, y),
                    Bond {
                        a: x,
                        b: y,
                        order: bond.order,
                        direction: bond.direction,
                    },
                );
            }
        }
        for pb in product.bonds() {
            let (x, y) = (pb.a, pb.b);
            let order = match bond_spec(&pb.expr) {
                Some(o) => o,
                None => {
                    // Open bond: keep the reactant's bond when both ends come
                    // from one reactant and were bonded there.
                    let carried = match (origin[x], origin[y]) {
                        (Some((s1, a1)), Some((s2, a2))) if s1 == s2 => reactants[s1]
                            .bond_between(a1, a2)
                            .map(|bi| reactants[s1].bond(bi).order),
                        _ => None,
                    };
                    carried.unwrap_or(if atoms[x].aromatic && atoms[y].aromatic {
                        BondOrder::Aromatic
                    } else {
                        BondOrder::Single
                    })
                }
            };
            bonds.insert(key(x, y), Bond::new(x, y, order));
        }
        let bonds: Vec<Bond> = bonds.into_values().collect();

        // Hydrogens.
        let mut units = vec![0u32; atoms.len()];
        for b in &bonds {
            units[b.a] += b.order.valence_units();
            units[b.b] += b.order.valence_units();
        }
        for i in 0..atoms.len() {
            if let Some(h) = pinned_h[i] {
                atoms[i].hydrogens = h;
                continue;
            }
            if created[i] {
                let atom = &atoms[i];
                let h = if atom.charge == 0 {
                    implicit_hydrogens(atom.element, atom.aromatic, units[i])?
                } else {
                    let t = element::target_valence(atom.element, atom.charge, units[i])?;
                    (t - units[i]) as u8
                };
                atoms[i].hydrogens = h;
                continue;
            }
            let (s, ma) = origin[i].expect("non-created atoms have an origin");
            let before = reactants[s].bond_units(ma) as i64;
            let h = reactants[s].atom(ma).hydrogens as i64 + before - units[i] as i64;
            if h < 0 {
                return None;
            }
            atoms[i].hydrogens = h as u8;
        }

        let mol = Molecule::new(atoms, bonds).ok()?;
        mol.check_valence().ok()?;
        Some(mol)
    }
}
