//! Canonical SMILES.
//!
//! Atoms are ranked by iterative refinement of graph invariants. Remaining
//! ties are broken by individualizing each member of the first tied class in
//! turn and keeping the lexicographically smallest output string; subtrees
//! proven equivalent through automorphisms found along the way are skipped.
//! Stereo annotations are not written.

use crate::element;
use crate::molecule::{implicit_hydrogens, BondOrder, Molecule};

const MAX_AUTOMORPHISMS: usize = 64;

/// Canonical SMILES for `mol`. Isomorphic molecules map to the same string.
pub fn canonical_smiles(mol: &Molecule) -> String {
    canonical_form(mol).0
}

/// Canonical SMILES together with the atom output order.
pub fn canonical_form(mol: &Molecule) -> (String, Vec<usize>) {
    if mol.is_empty() {
        return (String::new(), Vec::new());
    }
    let mut search = Search {
        mol,
        best: None,
        automorphisms: Vec::new(),
    };
    let mut ranks = initial_ranks(mol);
    refine(mol, &mut ranks);
    search.descend(ranks, &mut Vec::new());
    search.best.expect("search visits at least one leaf")
}

fn initial_ranks(mol: &Molecule) -> Vec<u32> {
    let keys: Vec<_> = (0..mol.num_atoms())
        .map(|i| {
            let a = mol.atom(i);
            (
                a.element,
                a.isotope.unwrap_or(0),
                a.aromatic,
                a.charge,
                a.hydrogens,
                mol.degree(i),
                a.atom_map,
                mol.is_ring_atom(i),
            )
        })
        .collect();
    ranks_from_keys(&keys)
}

/// Rank = number of atoms with a strictly smaller key.
fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0u32; keys.len()];
    for (pos, &i) in idx.iter().enumerate() {
        ranks[i] = if pos > 0 && keys[idx[pos - 1]] == keys[i] {
            ranks[idx[pos - 1]]
        } else {
            pos as u32
        };
    }
    ranks
}

fn class_count(ranks: &[u32]) -> usize {
    let mut seen = vec![false; ranks.len()];
    ranks
        .iter()
        .filter(|&&r| !std::mem::replace(&mut seen[r as usize], true))
        .count()
}

fn refine(mol: &Molecule, ranks: &mut Vec<u32>) {
    let mut classes = class_count(ranks);
    loop {
        if classes == ranks.len() {
            return;
        }
        let keys: Vec<(u32, Vec<(u32, u8)>)> = (0..mol.num_atoms())
            .map(|i| {
                let mut env: Vec<(u32, u8)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(nb, bi)| (ranks[nb], mol.bond(bi).order.code()))
                    .collect();
                env.sort_unstable();
                (ranks[i], env)
            })
            .collect();
        let next = ranks_from_keys(&keys);
        let next_classes = class_count(&next);
        *ranks = next;
        if next_classes == classes {
            return;
        }
        classes = next_classes;
    }
}

struct Search<'a> {
    mol: &'a Molecule,
    best: Option<(String, Vec<usize>)>,
    /// Each entry maps best-leaf atom order to another leaf's order.
    automorphisms: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn descend(&mut self, ranks: Vec<u32>, fixed: &mut Vec<usize>) {
        let n = ranks.len();
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r as usize] += 1;
        }
        let Some(cell_rank) = (0..n).find(|&r| counts[r] > 1) else {
            self.leaf(&ranks);
            return;
        };
        let cell: Vec<usize> = (0..n).filter(|&i| ranks[i] as usize == cell_rank).collect();
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if !explored.is_empty() && self.equivalent_to_explored(v, &explored, fixed) {
                continue;
            }
            explored.push(v);
            let mut child = ranks.clone();
            for &u in &cell {
                if u != v {
                    child[u] = cell_rank as u32 + 1;
                }
            }
            refine(self.mol, &mut child);
            fixed.push(v);
            self.descend(child, fixed);
            fixed.pop();
        }
    }

    fn equivalent_to_explored(&self, v: usize, explored: &[usize], fixed: &[usize]) -> bool {
        let n = self.mol.num_atoms();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut any = false;
        for perm in &self.automorphisms {
            if fixed.iter().any(|&f| perm[f] != f) {
                continue;
            }
            any = true;
            for (i, &j) in perm.iter().enumerate() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        if !any {
            return false;
        }
        let root = find(&mut parent, v);
        explored.iter().any(|&u| find(&mut parent, u) == root)
    }

    fn leaf(&mut self, ranks: &[u32]) {
        let (text, order) = write_smiles(self.mol, ranks);
        match &self.best {
            None => self.best = Some((text, order)),
            Some((best_text, best_order)) => match text.cmp(best_text) {
                std::cmp::Ordering::Less => self.best = Some((text, order)),
                std::cmp::Ordering::Equal => {
                    if self.automorphisms.len() < MAX_AUTOMORPHISMS {
                        let mut perm = vec![0; order.len()];
                        for (k, &a) in best_order.iter().enumerate() {
                            perm[a] = order[k];
                        }
                        if perm.iter().enumerate().any(|(i, &j)| i != j) {
                            self.automorphisms.push(perm);
                        }
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
}

fn atom_text(mol: &Molecule, i: usize) -> String {
    let atom = mol.atom(i);
    let sym = element::symbol(atom.element);
    let sym = if atom.aromatic {
        sym.to_ascii_lowercase()
    } else {
        sym.to_string()
    };
    let simple = element::is_organic_subset(atom.element)
        && atom.charge == 0
        && atom.isotope.is_none()
        && atom.atom_map == 0
        && (!atom.aromatic || matches!(atom.element, 5 | 6 | 7 | 8 | 15 | 16))
        && implicit_hydrogens(atom.element, atom.aromatic, mol.bond_units(i)) == Some(atom.hydrogens);
    if simple {
        return sym;
    }
    let mut s = String::from("[");
    if let Some(iso) = atom.isotope {
        s.push_str(&iso.to_string());
    }
    s.push_str(&sym);
    match atom.hydrogens {
        0 => {}
        1 => s.push('H'),
        h => {
            s.push('H');
            s.push_str(&h.to_string());
        }
    }
    match atom.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    if atom.atom_map != 0 {
        s.push(':');
        s.push_str(&atom.atom_map.to_string());
    }
    s.push(']');
    s
}

fn bond_text(mol: &Molecule, bi: usize) -> &'static str {
    let bond = mol.bond(bi);
    match bond.order {
        BondOrder::Single => {
            if mol.atom(bond.a).aromatic && mol.atom(bond.b).aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => {
            if mol.is_ring_bond(bi) {
                ""
            } else {
                ":"
            }
        }
    }
}

struct Writer<'a> {
    mol: &'a Molecule,
    ranks: &'a [u32],
    visited: Vec<bool>,
    classified: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    /// Ring bonds opened at an atom: (partner, bond).
    opens: Vec<Vec<(usize, usize)>>,
    /// Ring bonds closed at an atom: bond indices.
    closes: Vec<Vec<usize>>,
}

impl Writer<'_> {
    fn sorted_neighbors(&self, u: usize) -> Vec<(usize, usize)> {
        let mut nbs = self.mol.neighbors(u).to_vec();
        nbs.sort_by_key(|&(v, _)| self.ranks[v]);
        nbs
    }

    fn explore(&mut self, u: usize) {
        self.visited[u] = true;
        for (v, bi) in self.sorted_neighbors(u) {
            if self.classified[bi] {
                continue;
            }
            self.classified[bi] = true;
            if self.visited[v] {
                self.opens[v].push((u, bi));
                self.closes[u].push(bi);
            } else {
                self.children[u].push((v, bi));
                self.explore(v);
            }
        }
    }

    fn emit(&self, u: usize, out: &mut String, order: &mut Vec<usize>, digits: &mut Vec<Option<usize>>) {
        order.push(u);
        out.push_str(&atom_text(self.mol, u));
        for &bi in &self.closes[u] {
            let d = digits
                .iter()
                .position(|&slot| slot == Some(bi))
                .expect("ring bond opened before closing");
            digits[d] = None;
            push_ring_label(out, d);
        }
        let mut opens = self.opens[u].clone();
        opens.sort_by_key(|&(v, _)| self.ranks[v]);
        for (_, bi) in opens {
            let d = match digits.iter().position(Option::is_none) {
                Some(d) => d,
                None => {
                    digits.push(None);
                    digits.len() - 1
                }
            };
            digits[d] = Some(bi);
            out.push_str(bond_text(self.mol, bi));
            push_ring_label(out, d);
        }
        let kids = &self.children[u];
        for (k, &(v, bi)) in kids.iter().enumerate() {
            let last = k + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(bond_text(self.mol, bi));
            self.emit(v, out, order, digits);
            if !last {
                out.push(')');
            }
        }
    }
}

fn push_ring_label(out: &mut String, slot: usize) {
    let label = slot + 1;
    if label < 10 {
        out.push(char::from(b'0' + label as u8));
    } else {
        out.push_str(&format!("%{label:02}"));
    }
}

/// Writes SMILES following a complete ranking; returns text and atom order.
pub(crate) fn write_smiles(mol: &Molecule, ranks: &[u32]) -> (String, Vec<usize>) {
    let n = mol.num_atoms();
    let mut w = Writer {
        mol,
        ranks,
        visited: vec![false; n],
        classified: vec![false; mol.num_bonds()],
        children: vec![Vec::new(); n],
        opens: vec![Vec::new(); n],
        closes: vec![Vec::new(); n],
    };
    let mut by_rank: Vec<usize> = (0..n).collect();
    by_rank.sort_by_key(|&i| ranks[i]);
    let mut roots = Vec::new();
    for &i in &by_rank {
        if !w.visited[i] {
            roots.push(i);
            w.explore(i);
        }
    }
    let mut out = String::new();
    let mut order = Vec::with_capacity(n);
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            out.push('.');
        }
        let mut digits = Vec::new();
        w.emit(root, &mut out, &mut order, &mut digits);
    }
    (out, order)
}
