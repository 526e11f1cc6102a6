//! Substructure matching of [`Pattern`]s against [`Molecule`]s.
//!
//! A depth-first extension over the pattern's spanning order: each pattern
//! atom after the first is placed on a neighbor of its parent's image, and
//! every bond back to an already-placed atom is checked immediately.

use crate::element;
use crate::molecule::{BondOrder, Molecule};
use crate::smarts::{AtomExpr, AtomPrimitive, BondExpr, BondPrimitive, Pattern};

/// One embedding of a pattern into a molecule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Match {
    /// `atom_assignment[pattern atom] = molecule atom`.
    pub atom_assignment: Vec<usize>,
    /// Reactant slot the pattern belongs to (0 for plain patterns).
    pub slot: usize,
}

/// All distinct injective embeddings, sorted by assignment tuple.
pub fn match_substructure(pattern: &Pattern, mol: &Molecule) -> Vec<Match> {
    let mut out = Vec::new();
    search(pattern, mol, None, &mut |assignment| {
        out.push(Match {
            atom_assignment: assignment.to_vec(),
            slot: 0,
        });
        true
    });
    out.sort();
    out
}

/// Whether the pattern occurs in the molecule at all.
pub fn has_match(pattern: &Pattern, mol: &Molecule) -> bool {
    let mut found = false;
    search(pattern, mol, None, &mut |_| {
        found = true;
        false
    });
    found
}

/// Whether some embedding places pattern atom 0 on `atom`.
pub fn matches_at(pattern: &Pattern, mol: &Molecule, atom: usize) -> bool {
    let mut found = false;
    search(pattern, mol, Some(atom), &mut |_| {
        found = true;
        false
    });
    found
}

/// Runs the search; `visit` returns false to stop early.
fn search(pattern: &Pattern, mol: &Molecule, root: Option<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) {
    let n = pattern.num_atoms();
    if n == 0 || n > mol.num_atoms() {
        return;
    }
    let mut assignment = vec![usize::MAX; n];
    let mut used = vec![false; mol.num_atoms()];
    extend(pattern, mol, root, 0, &mut assignment, &mut used, visit);
}

fn extend(
    pattern: &Pattern,
    mol: &Molecule,
    root: Option<usize>,
    depth: usize,
    assignment: &mut [usize],
    used: &mut [bool],
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let order = pattern.search_order();
    if depth == order.len() {
        return visit(assignment);
    }
    let (p, parent) = order[depth];
    let candidates: Vec<usize> = match parent {
        Some(q) => mol.neighbors(assignment[q]).iter().map(|&(nb, _)| nb).collect(),
        None => match root {
            Some(r) => vec![r],
            None => (0..mol.num_atoms()).collect(),
        },
    };
    for c in candidates {
        if used[c] || !atom_matches(&pattern.atoms()[p].expr, mol, c) {
            continue;
        }
        let bonds_ok = pattern.neighbors(p).iter().all(|&(q, pb)| {
            let image = assignment[q];
            if image == usize::MAX {
                return true;
            }
            match mol.bond_between(c, image) {
                Some(mb) => bond_matches(&pattern.bonds()[pb].expr, mol, mb),
                None => false,
            }
        });
        if !bonds_ok {
            continue;
        }
        assignment[p] = c;
        used[c] = true;
        let keep_going = extend(pattern, mol, root, depth + 1, assignment, used, visit);
        assignment[p] = usize::MAX;
        used[c] = false;
        if !keep_going {
            return false;
        }
    }
    true
}

/// Total valence as used by the `v` primitive: bond units plus hydrogens,
/// with the aromatic pi contribution restored.
fn total_valence(mol: &Molecule, i: usize) -> u32 {
    let atom = mol.atom(i);
    let used = mol.bond_units(i) + atom.hydrogens as u32;
    if atom.aromatic {
        element::target_valence(atom.element, atom.charge, used).unwrap_or(used)
    } else {
        used
    }
}

pub fn atom_matches(expr: &AtomExpr, mol: &Molecule, i: usize) -> bool {
    match expr {
        AtomExpr::Prim(p) => primitive_matches(p, mol, i),
        AtomExpr::Not(e) => !atom_matches(e, mol, i),
        AtomExpr::And(es) => es.iter().all(|e| atom_matches(e, mol, i)),
        AtomExpr::Or(es) => es.iter().any(|e| atom_matches(e, mol, i)),
    }
}

fn primitive_matches(p: &AtomPrimitive, mol: &Molecule, i: usize) -> bool {
    let atom = mol.atom(i);
    match p {
        AtomPrimitive::Element { number, aromatic } => atom.element == *number && atom.aromatic == *aromatic,
        AtomPrimitive::AtomicNumber(z) => atom.element == *z,
        AtomPrimitive::Any | AtomPrimitive::Chirality => true,
        AtomPrimitive::Aromatic => atom.aromatic,
        AtomPrimitive::Aliphatic => !atom.aromatic,
        AtomPrimitive::TotalH(h) => mol.total_hydrogens(i) == *h as u32,
        AtomPrimitive::Degree(d) => mol.degree(i) == *d as usize,
        AtomPrimitive::Connectivity(x) => mol.degree(i) + atom.hydrogens as usize == *x as usize,
        AtomPrimitive::Valence(v) => total_valence(mol, i) == *v as u32,
        AtomPrimitive::Charge(c) => atom.charge == *c,
        AtomPrimitive::InRing => mol.is_ring_atom(i),
        AtomPrimitive::NotInRing => !mol.is_ring_atom(i),
        AtomPrimitive::Isotope(m) => atom.isotope == Some(*m),
        AtomPrimitive::Recursive(sub) => matches_at(sub, mol, i),
    }
}

pub fn bond_matches(expr: &BondExpr, mol: &Molecule, b: usize) -> bool {
    let order = mol.bond(b).order;
    match expr {
        BondExpr::Implicit => matches!(order, BondOrder::Single | BondOrder::Aromatic),
        BondExpr::Prim(p) => match p {
            BondPrimitive::Single => order == BondOrder::Single,
            BondPrimitive::Double => order == BondOrder::Double,
            BondPrimitive::Triple => order == BondOrder::Triple,
            BondPrimitive::Aromatic => order == BondOrder::Aromatic,
            BondPrimitive::Any => true,
            BondPrimitive::Ring => mol.is_ring_bond(b),
        },
        BondExpr::Not(e) => !bond_matches(e, mol, b),
        BondExpr::And(es) => es.iter().all(|e| bond_matches(e, mol, b)),
        BondExpr::Or(es) => es.iter().any(|e| bond_matches(e, mol, b)),
    }
}
