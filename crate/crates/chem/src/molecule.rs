//! Attributed molecular graph.
//!
//! A [`Molecule`] is immutable once built. Construction checks the structural
//! invariants (valid endpoints, no self or duplicate bonds, aromatic bonds
//! only between aromatic atoms); [`Molecule::check_valence`] additionally
//! validates valences, kekulizing aromatic systems on the way.

use crate::element;
use crate::error::{ChemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Bond-order units counted towards valence. Aromatic bonds count as one;
    /// the missing half is supplied by kekulization.
    pub fn valence_units(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Tetrahedral chirality annotation (`@` / `@@`). Carried through parsing
/// but ignored by matching, fingerprints and canonical ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chirality {
    Anticlockwise,
    Clockwise,
}

/// Directional single bond annotation (`/` / `\`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    /// Atomic number, 1..=118.
    pub element: u8,
    pub aromatic: bool,
    pub charge: i8,
    /// Attached hydrogens that are not graph nodes (implicit or bracket H).
    pub hydrogens: u8,
    pub isotope: Option<u16>,
    /// Atom-map number, 0 when unmapped.
    pub atom_map: u32,
    pub chirality: Option<Chirality>,
}

impl Atom {
    pub fn new(element: u8) -> Self {
        Atom {
            element,
            aromatic: false,
            charge: 0,
            hydrogens: 0,
            isotope: None,
            atom_map: 0,
            chirality: None,
        }
    }

    pub fn symbol(&self) -> &'static str {
        element::symbol(self.element)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub direction: Option<BondDirection>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond {
            a,
            b,
            order,
            direction: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: (neighbor, bond index).
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_atoms: Vec<bool>,
    ring_bonds: Vec<bool>,
    source: Option<String>,
}

impl Molecule {
    pub fn empty() -> Self {
        Molecule {
            atoms: Vec::new(),
            bonds: Vec::new(),
            adjacency: Vec::new(),
            ring_atoms: Vec::new(),
            ring_bonds: Vec::new(),
            source: None,
        }
    }

    /// Builds a molecule and checks the structural invariants. Valences are
    /// not checked here; see [`Molecule::check_valence`].
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self> {
        let n = atoms.len();
        for (i, atom) in atoms.iter().enumerate() {
            if !(1..=118).contains(&atom.element) {
                return Err(ChemError::Structure(format!(
                    "atom {i} has atomic number {}",
                    atom.element
                )));
            }
            if !(-4..=4).contains(&atom.charge) {
                return Err(ChemError::Structure(format!("atom {i} has charge {}", atom.charge)));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (bi, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(ChemError::Structure(format!("bond {bi} references a missing atom")));
            }
            if bond.a == bond.b {
                return Err(ChemError::Structure(format!("bond {bi} is a self-bond")));
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb == bond.b) {
                return Err(ChemError::Structure(format!(
                    "duplicate bond between atoms {} and {}",
                    bond.a, bond.b
                )));
            }
            if bond.order == BondOrder::Aromatic && !(atoms[bond.a].aromatic && atoms[bond.b].aromatic) {
                return Err(ChemError::Structure(format!(
                    "aromatic bond {bi} joins a non-aromatic atom"
                )));
            }
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        let ring_bonds = find_ring_bonds(n, &bonds, &adjacency);
        let mut ring_atoms = vec![false; n];
        for (bi, bond) in bonds.iter().enumerate() {
            if ring_bonds[bi] {
                ring_atoms[bond.a] = true;
                ring_atoms[bond.b] = true;
            }
        }
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            ring_atoms,
            ring_bonds,
            source: None,
        })
    }

    pub(crate) fn with_source(mut self, text: &str) -> Self {
        self.source = Some(text.to_string());
        self
    }

    /// The SMILES text this molecule was parsed from, if any.
    pub fn source_text(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn num_heavy_atoms(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != 1).count()
    }

    /// Neighbors of atom `i` as (neighbor atom, bond index) pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(nb, _)| nb == b).map(|&(_, bi)| bi)
    }

    /// Number of explicit graph connections.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn heavy_degree(&self, i: usize) -> usize {
        self.adjacency[i]
            .iter()
            .filter(|&&(nb, _)| self.atoms[nb].element != 1)
            .count()
    }

    /// Hydrogens on atom `i`, counting both attached counts and explicit
    /// hydrogen atoms in the graph.
    pub fn total_hydrogens(&self, i: usize) -> u32 {
        self.atoms[i].hydrogens as u32
            + self.adjacency[i]
                .iter()
                .filter(|&&(nb, _)| self.atoms[nb].element == 1)
                .count() as u32
    }

    pub fn is_ring_atom(&self, i: usize) -> bool {
        self.ring_atoms[i]
    }

    pub fn is_ring_bond(&self, b: usize) -> bool {
        self.ring_bonds[b]
    }

    pub fn ring_membership(&self) -> &[bool] {
        &self.ring_atoms
    }

    /// Sum of bond valence units on atom `i` (aromatic bonds count one).
    pub fn bond_units(&self, i: usize) -> u32 {
        self.adjacency[i]
            .iter()
            .map(|&(_, bi)| self.bonds[bi].order.valence_units())
            .sum()
    }

    /// Connected components as sorted atom lists, ordered by smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph over `keep` (in the given order). Bonds to dropped
    /// atoms are removed without hydrogen adjustment.
    pub fn subgraph(&self, keep: &[usize]) -> Result<Molecule> {
        let mut remap = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let atoms = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| remap[b.a] != usize::MAX && remap[b.b] != usize::MAX)
            .map(|b| Bond {
                a: remap[b.a],
                b: remap[b.b],
                order: b.order,
                direction: b.direction,
            })
            .collect();
        Molecule::new(atoms, bonds)
    }

    /// Returns a copy with atoms reordered so that new atom `i` is old atom
    /// `order[i]`. `order` must be a permutation.
    pub fn permuted(&self, order: &[usize]) -> Molecule {
        assert_eq!(order.len(), self.atoms.len());
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let atoms = order.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: inverse[b.a],
                b: inverse[b.b],
                order: b.order,
                direction: b.direction,
            })
            .collect();
        Molecule::new(atoms, bonds).expect("permutation preserves structure")
    }

    /// Whether aromatic atom `i` must take a double bond in a Kekulé form.
    fn needs_pi_bond(&self, i: usize) -> Result<bool> {
        let atom = &self.atoms[i];
        let used = self.bond_units(i) + atom.hydrogens as u32;
        match element::target_valence(atom.element, atom.charge, used) {
            None => {
                if element::allowed_valences(atom.element, atom.charge).is_some() {
                    Err(ChemError::valence(i, "too many bonds"))
                } else {
                    Ok(false)
                }
            }
            Some(t) => match t - used {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(ChemError::valence(i, "aromatic atom cannot reach a valid valence")),
            },
        }
    }

    /// Kekulé bond orders (valence units) for every bond, or a valence error
    /// when the aromatic system has no perfect double-bond assignment.
    pub fn kekule_units(&self) -> Result<Vec<u32>> {
        let n = self.atoms.len();
        let mut needy = vec![false; n];
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.aromatic {
                needy[i] = self.needs_pi_bond(i)?;
            }
        }
        let mut mate = vec![usize::MAX; n];
        let mut budget = 200_000usize;
        if !kekule_match(self, &needy, &mut mate, &mut budget) {
            let first = (0..n).find(|&i| needy[i] && mate[i] == usize::MAX);
            return Err(ChemError::valence(
                first.unwrap_or(0),
                "cannot kekulize aromatic system",
            ));
        }
        Ok(self
            .bonds
            .iter()
            .map(|b| {
                if b.order == BondOrder::Aromatic && mate[b.a] == b.b {
                    2
                } else {
                    b.order.valence_units()
                }
            })
            .collect())
    }

    /// Validates every atom against the valence model after kekulization.
    pub fn check_valence(&self) -> Result<()> {
        let units = self.kekule_units()?;
        let mut used = vec![0u32; self.atoms.len()];
        for (bond, &u) in self.bonds.iter().zip(&units) {
            used[bond.a] += u;
            used[bond.b] += u;
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            let total = used[i] + atom.hydrogens as u32;
            if let Some(allowed) = element::allowed_valences(atom.element, atom.charge) {
                let max = *allowed.last().unwrap() as u32;
                if total > max {
                    return Err(ChemError::valence(
                        i,
                        format!(
                            "{} with charge {} has valence {total} (max {max})",
                            atom.symbol(),
                            atom.charge
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Hydrogen count an unbracketed organic-subset atom receives from its bonds.
pub(crate) fn implicit_hydrogens(element: u8, aromatic: bool, used: u32) -> Option<u8> {
    let target = element::target_valence(element, 0, used)?;
    let free = target - used;
    let h = if aromatic && free >= 1 { free - 1 } else { free };
    Some(h as u8)
}

fn kekule_match(mol: &Molecule, needy: &[bool], mate: &mut [usize], budget: &mut usize) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    // Most constrained unmatched atom first.
    let mut best: Option<(usize, usize)> = None;
    for i in 0..needy.len() {
        if !needy[i] || mate[i] != usize::MAX {
            continue;
        }
        let options = mol
            .neighbors(i)
            .iter()
            .filter(|&&(nb, bi)| needy[nb] && mate[nb] == usize::MAX && mol.bond(bi).order == BondOrder::Aromatic)
            .count();
        if options == 0 {
            return false;
        }
        if best.is_none_or(|(_, c)| options < c) {
            best = Some((i, options));
        }
    }
    let Some((atom, _)) = best else {
        return true;
    };
    let candidates: Vec<usize> = mol
        .neighbors(atom)
        .iter()
        .filter(|&&(nb, bi)| needy[nb] && mate[nb] == usize::MAX && mol.bond(bi).order == BondOrder::Aromatic)
        .map(|&(nb, _)| nb)
        .collect();
    for nb in candidates {
        mate[atom] = nb;
        mate[nb] = atom;
        if kekule_match(mol, needy, mate, budget) {
            return true;
        }
        mate[atom] = usize::MAX;
        mate[nb] = usize::MAX;
    }
    false
}

/// Marks bonds that lie on a cycle (every non-bridge bond).
fn find_ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; bonds.len()];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, parent bond, next adjacency position)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, parent_bond, ref mut pos)) = stack.last_mut() {
            if *pos < adjacency[u].len() {
                let (v, bi) = adjacency[u][*pos];
                *pos += 1;
                if bi == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, bi, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    is_bridge.iter().map(|b| !b).collect()
}
