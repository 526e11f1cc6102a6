//! Murcko scaffolds: ring systems plus the linkers joining them.

use crate::error::Result;
use crate::molecule::{Atom, Bond, BondOrder, Molecule};

/// Strips terminal side chains until only ring atoms and linker atoms remain.
/// Atoms losing substituents gain hydrogens to keep their valence. Acyclic
/// molecules yield the empty molecule.
pub fn murcko_scaffold(mol: &Molecule) -> Molecule {
    try_scaffold(mol).expect("pruning a valid molecule keeps it valid")
}

fn try_scaffold(mol: &Molecule) -> Result<Molecule> {
    let n = mol.num_atoms();
    if !mol.ring_membership().iter().any(|&r| r) {
        return Ok(Molecule::empty());
    }
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| mol.degree(i)).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| !mol.is_ring_atom(i) && degree[i] <= 1).collect();
    while let Some(u) = queue.pop() {
        if !alive[u] {
            continue;
        }
        alive[u] = false;
        for &(v, _) in mol.neighbors(u) {
            if alive[v] {
                degree[v] -= 1;
                if !mol.is_ring_atom(v) && degree[v] <= 1 {
                    queue.push(v);
                }
            }
        }
    }
    // Ring-free components are dropped entirely.
    for comp in mol.components() {
        if !comp.iter().any(|&i| mol.is_ring_atom(i)) {
            for i in comp {
                alive[i] = false;
            }
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    let mut remap = vec![usize::MAX; n];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    let mut atoms: Vec<Atom> = Vec::with_capacity(keep.len());
    for &i in &keep {
        let mut atom = mol.atom(i).clone();
        let lost: u32 = mol
            .neighbors(i)
            .iter()
            .filter(|&&(nb, _)| !alive[nb] && mol.atom(nb).element != 1)
            .map(|&(_, bi)| mol.bond(bi).order.valence_units())
            .sum();
        let explicit_h = mol
            .neighbors(i)
            .iter()
            .filter(|&&(nb, _)| !alive[nb] && mol.atom(nb).element == 1)
            .count() as u32;
        atom.hydrogens = (atom.hydrogens as u32 + lost + explicit_h) as u8;
        atom.chirality = None;
        atoms.push(atom);
    }
    let bonds = mol
        .bonds()
        .iter()
        .filter(|b| alive[b.a] && alive[b.b])
        .map(|b| Bond {
            a: remap[b.a],
            b: remap[b.b],
            order: b.order,
            direction: None,
        })
        .collect::<Vec<_>>();
    debug_assert!(bonds
        .iter()
        .all(|b: &Bond| b.order != BondOrder::Aromatic || (atoms[b.a].aromatic && atoms[b.b].aromatic)));
    Molecule::new(atoms, bonds)
}
