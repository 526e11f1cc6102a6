//! SMILES parser.
//!
//! Supports the organic subset, bracket atoms (isotope, chirality, hydrogen
//! count, charge, atom class), branches, ring closures (`0-9`, `%nn`) and
//! dot-disconnected components. Aromaticity is taken as written; hydrogens
//! on unbracketed atoms follow the default valence rules.

use std::collections::BTreeMap;

use crate::element;
use crate::error::{ChemError, Result};
use crate::molecule::{implicit_hydrogens, Atom, Bond, BondDirection, BondOrder, Chirality, Molecule};

#[derive(Debug, Clone, Copy, PartialEq)]
struct BondSpec {
    order: BondOrder,
    direction: Option<BondDirection>,
}

struct PendingRing {
    atom: usize,
    bond: Option<BondSpec>,
    pos: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bracketed: Vec<bool>,
    bonds: Vec<Bond>,
    /// Whether each bond's order was written explicitly.
    explicit: Vec<bool>,
}

/// Parses a SMILES string into a validated [`Molecule`].
pub fn parse_smiles(text: &str) -> Result<Molecule> {
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bracketed: Vec::new(),
        bonds: Vec::new(),
        explicit: Vec::new(),
    };
    p.parse()?;
    let Parser {
        mut atoms,
        bracketed,
        mut bonds,
        explicit,
        ..
    } = p;

    // Unwritten bonds between aromatic atoms are aromatic only inside rings
    // (biphenyl-style "c1ccccc1c1ccccc1").
    let probe = Molecule::new(atoms.clone(), bonds.clone()).map_err(structure_to_syntax)?;
    for (bi, bond) in bonds.iter_mut().enumerate() {
        if bond.order == BondOrder::Aromatic && !explicit[bi] && !probe.is_ring_bond(bi) {
            bond.order = BondOrder::Single;
        }
    }

    let mut units = vec![0u32; atoms.len()];
    for bond in &bonds {
        units[bond.a] += bond.order.valence_units();
        units[bond.b] += bond.order.valence_units();
    }
    for (i, atom) in atoms.iter_mut().enumerate() {
        if !bracketed[i] {
            atom.hydrogens = implicit_hydrogens(atom.element, atom.aromatic, units[i]).ok_or_else(|| {
                ChemError::valence(i, format!("{} cannot carry {} bond units", atom.symbol(), units[i]))
            })?;
        }
    }
    let mol = Molecule::new(atoms, bonds).map_err(structure_to_syntax)?;
    mol.check_valence()?;
    Ok(mol.with_source(text))
}

fn structure_to_syntax(e: ChemError) -> ChemError {
    match e {
        ChemError::Structure(m) => ChemError::syntax(0, m),
        other => other,
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> ChemError {
        ChemError::syntax(self.pos, message)
    }

    fn parse(&mut self) -> Result<()> {
        if self.text.is_empty() {
            return Err(self.err("empty SMILES"));
        }
        let mut prev: Option<usize> = None;
        let mut pending: Option<BondSpec> = None;
        let mut branches: Vec<usize> = Vec::new();
        let mut rings: BTreeMap<u32, PendingRing> = BTreeMap::new();

        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let Some(p) = prev else {
                        return Err(self.err("branch without a preceding atom"));
                    };
                    if pending.is_some() {
                        return Err(self.err("bond before branch"));
                    }
                    branches.push(p);
                    self.pos += 1;
                    if self.peek() == Some(b')') {
                        return Err(self.err("empty branch"));
                    }
                }
                b')' => {
                    if pending.is_some() {
                        return Err(self.err("dangling bond before ')'"));
                    }
                    let Some(p) = branches.pop() else {
                        return Err(self.err("unbalanced ')'"));
                    };
                    prev = Some(p);
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return Err(self.err("bond before '.'"));
                    }
                    if prev.is_none() {
                        return Err(self.err("'.' without a preceding atom"));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if pending.is_some() {
                        return Err(self.err("two consecutive bond symbols"));
                    }
                    if prev.is_none() {
                        return Err(self.err("bond without a preceding atom"));
                    }
                    pending = Some(self.parse_bond()?);
                }
                b'0'..=b'9' | b'%' => {
                    let Some(p) = prev else {
                        return Err(self.err("ring closure without an atom"));
                    };
                    let start = self.pos;
                    let label = self.parse_ring_label()?;
                    let spec = pending.take();
                    if let Some(open) = rings.remove(&label) {
                        let order = match (open.bond, spec) {
                            (Some(a), Some(b)) if a.order != b.order => {
                                return Err(ChemError::syntax(
                                    start,
                                    format!("conflicting bond orders on ring closure {label}"),
                                ))
                            }
                            (Some(a), _) => Some(a),
                            (None, b) => b,
                        };
                        self.add_bond(open.atom, p, order)
                            .map_err(|m| ChemError::syntax(start, m))?;
                    } else {
                        rings.insert(
                            label,
                            PendingRing {
                                atom: p,
                                bond: spec,
                                pos: start,
                            },
                        );
                    }
                }
                _ => {
                    let start = self.pos;
                    let idx = self.parse_atom()?;
                    if let Some(p) = prev {
                        self.add_bond(p, idx, pending.take())
                            .map_err(|m| ChemError::syntax(start, m))?;
                    }
                    prev = Some(idx);
                }
            }
        }
        if pending.is_some() {
            return Err(self.err("dangling bond at end of input"));
        }
        if !branches.is_empty() {
            return Err(self.err("unclosed branch"));
        }
        if let Some((label, open)) = rings.into_iter().next() {
            return Err(ChemError::syntax(open.pos, format!("unclosed ring bond {label}")));
        }
        Ok(())
    }

    fn add_bond(&mut self, a: usize, b: usize, spec: Option<BondSpec>) -> std::result::Result<(), String> {
        if a == b {
            return Err("ring closure bonds an atom to itself".into());
        }
        if self
            .bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
        {
            return Err("duplicate bond".into());
        }
        let (order, direction, explicit) = match spec {
            Some(s) => (s.order, s.direction, true),
            None => {
                let order = if self.atoms[a].aromatic && self.atoms[b].aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                };
                (order, None, false)
            }
        };
        if order == BondOrder::Aromatic && !(self.atoms[a].aromatic && self.atoms[b].aromatic) {
            return Err("aromatic bond between non-aromatic atoms".into());
        }
        self.bonds.push(Bond { a, b, order, direction });
        self.explicit.push(explicit);
        Ok(())
    }

    fn parse_bond(&mut self) -> Result<BondSpec> {
        let c = self.peek().unwrap();
        let spec = match c {
            b'-' => BondSpec {
                order: BondOrder::Single,
                direction: None,
            },
            b'=' => BondSpec {
                order: BondOrder::Double,
                direction: None,
            },
            b'#' => BondSpec {
                order: BondOrder::Triple,
                direction: None,
            },
            b':' => BondSpec {
                order: BondOrder::Aromatic,
                direction: None,
            },
            b'/' => BondSpec {
                order: BondOrder::Single,
                direction: Some(BondDirection::Up),
            },
            b'\\' => BondSpec {
                order: BondOrder::Single,
                direction: Some(BondDirection::Down),
            },
            _ => return Err(self.err("quadruple bonds are not supported")),
        };
        self.pos += 1;
        Ok(spec)
    }

    fn parse_ring_label(&mut self) -> Result<u32> {
        let c = self.peek().unwrap();
        if c == b'%' {
            self.pos += 1;
            let digits = self.text.get(self.pos..self.pos + 2);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 2;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u32)
                }
                _ => Err(self.err("'%' must be followed by two digits")),
            }
        } else {
            self.pos += 1;
            Ok((c - b'0') as u32)
        }
    }

    fn push_atom(&mut self, atom: Atom, bracketed: bool) -> usize {
        self.atoms.push(atom);
        self.bracketed.push(bracketed);
        self.atoms.len() - 1
    }

    fn parse_atom(&mut self) -> Result<usize> {
        let c = self.peek().unwrap();
        if c == b'[' {
            return self.parse_bracket_atom();
        }
        let two = self.text.get(self.pos..self.pos + 2);
        let (element, aromatic, len) = match (c, two) {
            (b'C', Some(b"Cl")) => (17, false, 2),
            (b'B', Some(b"Br")) => (35, false, 2),
            (b'B', _) => (5, false, 1),
            (b'C', _) => (6, false, 1),
            (b'N', _) => (7, false, 1),
            (b'O', _) => (8, false, 1),
            (b'P', _) => (15, false, 1),
            (b'S', _) => (16, false, 1),
            (b'F', _) => (9, false, 1),
            (b'I', _) => (53, false, 1),
            (b'b', _) => (5, true, 1),
            (b'c', _) => (6, true, 1),
            (b'n', _) => (7, true, 1),
            (b'o', _) => (8, true, 1),
            (b'p', _) => (15, true, 1),
            (b's', _) => (16, true, 1),
            (b'*', _) => return Err(self.err("wildcard atoms are not supported")),
            _ => return Err(self.err(format!("unexpected character '{}'", c as char))),
        };
        self.pos += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(self.push_atom(atom, false))
    }

    fn parse_number(&mut self) -> Option<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(d) = self.peek().filter(u8::is_ascii_digit) {
            value = value.saturating_mul(10).saturating_add((d - b'0') as u32);
            self.pos += 1;
        }
        (self.pos > start).then_some(value)
    }

    fn parse_bracket_atom(&mut self) -> Result<usize> {
        self.pos += 1; // '['
        let isotope = match self.parse_number() {
            Some(v) if v > u16::MAX as u32 => return Err(self.err("isotope out of range")),
            Some(v) => Some(v as u16),
            None => None,
        };

        let Some(c) = self.peek() else {
            return Err(self.err("unterminated bracket atom"));
        };
        let (element, aromatic) = if c == b'*' {
            return Err(self.err("wildcard atoms are not supported"));
        } else if c.is_ascii_lowercase() {
            let two = self.text.get(self.pos..self.pos + 2);
            let (z, len) = match two {
                Some(b"se") => (34, 2),
                Some(b"as") => (33, 2),
                Some(b"te") => (52, 2),
                _ => match c {
                    b'b' => (5, 1),
                    b'c' => (6, 1),
                    b'n' => (7, 1),
                    b'o' => (8, 1),
                    b'p' => (15, 1),
                    b's' => (16, 1),
                    _ => return Err(self.err(format!("unknown aromatic symbol '{}'", c as char))),
                },
            };
            self.pos += len;
            (z, true)
        } else if c.is_ascii_uppercase() {
            let next = self.text.get(self.pos + 1).copied();
            let two = next
                .filter(u8::is_ascii_lowercase)
                .and_then(|n| element::atomic_number(std::str::from_utf8(&[c, n]).ok()?));
            if let Some(z) = two {
                self.pos += 2;
                (z, false)
            } else {
                let one = element::atomic_number(std::str::from_utf8(&[c]).unwrap())
                    .ok_or_else(|| self.err(format!("unknown element '{}'", c as char)))?;
                self.pos += 1;
                (one, false)
            }
        } else {
            return Err(self.err("expected element symbol in bracket atom"));
        };
        if aromatic && !element::can_be_aromatic(element) {
            return Err(self.err("element cannot be aromatic"));
        }

        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        atom.isotope = isotope;

        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                atom.chirality = Some(Chirality::Clockwise);
            } else {
                atom.chirality = Some(Chirality::Anticlockwise);
            }
            if self.peek().is_some_and(|c| c.is_ascii_uppercase() && c != b'H') {
                return Err(self.err("extended chirality classes are not supported"));
            }
        }

        if self.peek() == Some(b'H') {
            self.pos += 1;
            let h = self.parse_number().unwrap_or(1);
            if h > 9 {
                return Err(self.err("hydrogen count out of range"));
            }
            atom.hydrogens = h as u8;
        }

        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let unit: i32 = if sign == b'+' { 1 } else { -1 };
            let magnitude = if let Some(n) = self.parse_number() {
                n as i32
            } else {
                let mut m = 1;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    m += 1;
                }
                m
            };
            let charge = unit * magnitude;
            if !(-4..=4).contains(&charge) {
                return Err(self.err(format!("charge {charge} out of range")));
            }
            atom.charge = charge as i8;
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            atom.atom_map = self
                .parse_number()
                .ok_or_else(|| self.err("atom class must be a number"))?;
        }

        if self.peek() != Some(b']') {
            return Err(self.err("expected ']'"));
        }
        self.pos += 1;
        Ok(self.push_atom(atom, true))
    }
}
