//! SMARTS patterns.
//!
//! Supported atom primitives: element symbols (aliphatic and aromatic),
//! `#n`, `*`, `A`, `a`, `Hn`, `Dn`, `Xn`, `vn`, `R` / `R0`, charges, leading
//! isotope numbers and recursive `$(...)` sub-patterns, combined with `!`,
//! `&`, `,` and `;`. Bond primitives: `-`, `=`, `#`, `:`, `~`, `@` (and `/`,
//! `\` read as single) with the same operators. Unsupported primitives are
//! rejected with [`ChemError::UnsupportedFeature`].

use std::collections::BTreeMap;

use crate::element;
use crate::error::{ChemError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AtomPrimitive {
    /// Element symbol with its aromaticity as written (`C` vs `c`).
    Element {
        number: u8,
        aromatic: bool,
    },
    AtomicNumber(u8),
    Any,
    Aromatic,
    Aliphatic,
    TotalH(u8),
    Degree(u8),
    Connectivity(u8),
    Valence(u8),
    Charge(i8),
    InRing,
    NotInRing,
    Isotope(u16),
    /// Chirality marks are accepted and always match.
    Chirality,
    Recursive(Box<Pattern>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtomExpr {
    Prim(AtomPrimitive),
    Not(Box<AtomExpr>),
    And(Vec<AtomExpr>),
    Or(Vec<AtomExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondPrimitive {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    Ring,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BondExpr {
    /// No bond symbol written: single or aromatic.
    Implicit,
    Prim(BondPrimitive),
    Not(Box<BondExpr>),
    And(Vec<BondExpr>),
    Or(Vec<BondExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternAtom {
    pub expr: AtomExpr,
    /// Atom-map number, 0 when unmapped.
    pub map: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternBond {
    pub a: usize,
    pub b: usize,
    pub expr: BondExpr,
}

/// A connected query graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    atoms: Vec<PatternAtom>,
    bonds: Vec<PatternBond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Search order: each atom after the first has its parent before it.
    order: Vec<(usize, Option<usize>)>,
    text: String,
}

impl Pattern {
    pub fn atoms(&self) -> &[PatternAtom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[PatternBond] {
        &self.bonds
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(nb, _)| nb == b).map(|&(_, bi)| bi)
    }

    pub(crate) fn search_order(&self) -> &[(usize, Option<usize>)] {
        &self.order
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Mapped atoms as map number -> pattern atom index.
    pub fn atom_maps(&self) -> BTreeMap<u32, usize> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.map != 0)
            .map(|(i, a)| (a.map, i))
            .collect()
    }

    fn build(atoms: Vec<PatternAtom>, bonds: Vec<PatternBond>, text: &str) -> Result<Self> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (bi, b) in bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, bi));
            adjacency[b.b].push((b.a, bi));
        }
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        if n > 0 {
            seen[0] = true;
            let mut stack = vec![(0usize, None)];
            while let Some((u, parent)) = stack.pop() {
                order.push((u, parent));
                for &(v, _) in adjacency[u].iter().rev() {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push((v, Some(u)));
                    }
                }
            }
        }
        if order.len() != n {
            return Err(ChemError::UnsupportedFeature(format!("disconnected pattern '{text}'")));
        }
        let mut maps = std::collections::BTreeSet::new();
        for a in &atoms {
            if a.map != 0 && !maps.insert(a.map) {
                return Err(ChemError::syntax(0, format!("atom map {} used twice", a.map)));
            }
        }
        Ok(Pattern {
            atoms,
            bonds,
            adjacency,
            order,
            text: text.to_string(),
        })
    }
}

/// Parses a single connected SMARTS pattern.
pub fn parse_smarts(text: &str) -> Result<Pattern> {
    let mut p = SmartsParser {
        text: text.as_bytes(),
        pos: 0,
        offset: 0,
    };
    let pattern = p.parse_pattern()?;
    if p.pos != p.text.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(pattern)
}

struct SmartsParser<'a> {
    text: &'a [u8],
    pos: usize,
    /// Offset of `text` inside the outermost string, for error positions.
    offset: usize,
}

struct OpenRing {
    atom: usize,
    bond: Option<BondExpr>,
}

impl SmartsParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> ChemError {
        ChemError::syntax(self.offset + self.pos, message)
    }

    fn parse_pattern(&mut self) -> Result<Pattern> {
        let start = self.pos;
        if self.text.is_empty() {
            return Err(self.err("empty pattern"));
        }
        let mut atoms: Vec<PatternAtom> = Vec::new();
        let mut bonds: Vec<PatternBond> = Vec::new();
        let mut prev: Option<usize> = None;
        let mut pending: Option<BondExpr> = None;
        let mut branches: Vec<usize> = Vec::new();
        let mut rings: BTreeMap<u32, OpenRing> = BTreeMap::new();

        let add_bond = |bonds: &mut Vec<PatternBond>, a: usize, b: usize, expr: BondExpr, at: usize| {
            if a == b {
                return Err(ChemError::syntax(at, "ring closure bonds an atom to itself"));
            }
            if bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
                return Err(ChemError::syntax(at, "duplicate bond"));
            }
            bonds.push(PatternBond { a, b, expr });
            Ok(())
        };

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
                    return Err(ChemError::UnsupportedFeature(
                        "disconnected pattern components ('.')".into(),
                    ))
                }
                b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' | b'/' | b'\\' | b'&' | b',' | b';' => {
                    if pending.is_some() {
                        return Err(self.err("two consecutive bond expressions"));
                    }
                    if prev.is_none() {
                        return Err(self.err("bond without a preceding atom"));
                    }
                    pending = Some(self.parse_bond_expr()?);
                }
                b'0'..=b'9' | b'%' => {
                    let Some(p) = prev else {
                        return Err(self.err("ring closure without an atom"));
                    };
                    let at = self.offset + self.pos;
                    let label = self.parse_ring_label()?;
                    let here = pending.take();
                    if let Some(open) = rings.remove(&label) {
                        let expr = match (open.bond, here) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(ChemError::syntax(at, "conflicting ring bond expressions"))
                            }
                            (Some(a), _) => a,
                            (None, Some(b)) => b,
                            (None, None) => BondExpr::Implicit,
                        };
                        add_bond(&mut bonds, open.atom, p, expr, at)?;
                    } else {
                        rings.insert(label, OpenRing { atom: p, bond: here });
                    }
                }
                _ => {
                    let at = self.offset + self.pos;
                    let atom = self.parse_atom()?;
                    atoms.push(atom);
                    let idx = atoms.len() - 1;
                    if let Some(p) = prev {
                        let expr = pending.take().unwrap_or(BondExpr::Implicit);
                        add_bond(&mut bonds, p, idx, expr, at)?;
                    }
                    prev = Some(idx);
                }
            }
        }
        if pending.is_some() {
            return Err(self.err("dangling bond at end of pattern"));
        }
        if !branches.is_empty() {
            return Err(self.err("unclosed branch"));
        }
        if let Some(label) = rings.keys().next() {
            return Err(self.err(format!("unclosed ring bond {label}")));
        }
        let text = std::str::from_utf8(&self.text[start..self.pos]).unwrap_or_default();
        Pattern::build(atoms, bonds, text)
    }

    fn parse_ring_label(&mut self) -> Result<u32> {
        let c = self.peek().unwrap();
        if c == b'%' {
            self.pos += 1;
            match self.text.get(self.pos..self.pos + 2) {
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

    fn parse_atom(&mut self) -> Result<PatternAtom> {
        let c = self.peek().unwrap();
        if c == b'[' {
            self.pos += 1;
            let atom = self.parse_bracket()?;
            if self.peek() != Some(b']') {
                return Err(self.err("expected ']'"));
            }
            self.pos += 1;
            return Ok(atom);
        }
        let two = self.text.get(self.pos..self.pos + 2);
        let prim = match (c, two) {
            (b'C', Some(b"Cl")) => Some((17, false, 2)),
            (b'B', Some(b"Br")) => Some((35, false, 2)),
            (b'B', _) => Some((5, false, 1)),
            (b'C', _) => Some((6, false, 1)),
            (b'N', _) => Some((7, false, 1)),
            (b'O', _) => Some((8, false, 1)),
            (b'P', _) => Some((15, false, 1)),
            (b'S', _) => Some((16, false, 1)),
            (b'F', _) => Some((9, false, 1)),
            (b'I', _) => Some((53, false, 1)),
            (b'b', _) => Some((5, true, 1)),
            (b'c', _) => Some((6, true, 1)),
            (b'n', _) => Some((7, true, 1)),
            (b'o', _) => Some((8, true, 1)),
            (b'p', _) => Some((15, true, 1)),
            (b's', _) => Some((16, true, 1)),
            _ => None,
        };
        let expr = if let Some((number, aromatic, len)) = prim {
            self.pos += len;
            AtomExpr::Prim(AtomPrimitive::Element { number, aromatic })
        } else {
            self.pos += 1;
            match c {
                b'*' => AtomExpr::Prim(AtomPrimitive::Any),
                b'A' => AtomExpr::Prim(AtomPrimitive::Aliphatic),
                b'a' => AtomExpr::Prim(AtomPrimitive::Aromatic),
                _ => {
                    self.pos -= 1;
                    return Err(self.err(format!("unexpected character '{}'", c as char)));
                }
            }
        };
        Ok(PatternAtom { expr, map: 0 })
    }

    fn parse_bracket(&mut self) -> Result<PatternAtom> {
        // Lone hydrogen: [H], [H+], [2H], [H:1] ...
        let body_end = self.text[self.pos..]
            .iter()
            .position(|&c| c == b']')
            .map(|p| self.pos + p);
        if let Some(end) = body_end {
            let body = &self.text[self.pos..end];
            let stripped: Vec<u8> = body.iter().copied().skip_while(u8::is_ascii_digit).collect();
            if stripped.first() == Some(&b'H') && stripped.get(1).is_none_or(|c| matches!(c, b'+' | b'-' | b':')) {
                let mut parts = Vec::new();
                let iso: String = body
                    .iter()
                    .take_while(|c| c.is_ascii_digit())
                    .map(|&c| c as char)
                    .collect();
                self.pos += iso.len() + 1;
                if !iso.is_empty() {
                    parts.push(AtomExpr::Prim(AtomPrimitive::Isotope(
                        iso.parse().map_err(|_| self.err("isotope out of range"))?,
                    )));
                }
                parts.push(AtomExpr::Prim(AtomPrimitive::AtomicNumber(1)));
                if let Some(b'+' | b'-') = self.peek() {
                    parts.push(AtomExpr::Prim(self.parse_charge()?));
                }
                let map = self.parse_map()?;
                return Ok(PatternAtom {
                    expr: AtomExpr::And(parts),
                    map,
                });
            }
        }
        let expr = self.parse_low_and()?;
        let map = self.parse_map()?;
        Ok(PatternAtom { expr, map })
    }

    fn parse_map(&mut self) -> Result<u32> {
        if self.peek() == Some(b':') {
            self.pos += 1;
            self.parse_number().ok_or_else(|| self.err("atom map must be a number"))
        } else {
            Ok(0)
        }
    }

    fn parse_number(&mut self) -> Option<u32> {
        let start = self.pos;
        let mut v: u32 = 0;
        while let Some(d) = self.peek().filter(u8::is_ascii_digit) {
            v = v.saturating_mul(10).saturating_add((d - b'0') as u32);
            self.pos += 1;
        }
        (self.pos > start).then_some(v)
    }

    fn parse_low_and(&mut self) -> Result<AtomExpr> {
        let mut terms = vec![self.parse_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            terms.push(self.parse_or()?);
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn parse_or(&mut self) -> Result<AtomExpr> {
        let mut terms = vec![self.parse_high_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            terms.push(self.parse_high_and()?);
        }
        Ok(collapse(terms, AtomExpr::Or))
    }

    fn parse_high_and(&mut self) -> Result<AtomExpr> {
        let mut terms = vec![self.parse_unary()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    terms.push(self.parse_unary()?);
                }
                Some(b';' | b',' | b']' | b':') | None => break,
                Some(_) => terms.push(self.parse_unary()?),
            }
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn parse_unary(&mut self) -> Result<AtomExpr> {
        if self.peek() == Some(b'!') {
            self.pos += 1;
            return Ok(AtomExpr::Not(Box::new(self.parse_unary()?)));
        }
        Ok(AtomExpr::Prim(self.parse_primitive()?))
    }

    fn parse_count(&mut self, default: u32) -> Result<u8> {
        let v = self.parse_number().unwrap_or(default);
        u8::try_from(v).map_err(|_| self.err("count out of range"))
    }

    fn parse_charge(&mut self) -> Result<AtomPrimitive> {
        let sign = self.peek().unwrap();
        self.pos += 1;
        let unit: i32 = if sign == b'+' { 1 } else { -1 };
        let magnitude = match self.parse_number() {
            Some(n) => n as i32,
            None => {
                let mut m = 1;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    m += 1;
                }
                m
            }
        };
        let charge = unit * magnitude;
        if !(-4..=4).contains(&charge) {
            return Err(self.err(format!("charge {charge} out of range")));
        }
        Ok(AtomPrimitive::Charge(charge as i8))
    }

    // Two-letter and special cases come before the generic element arms.
    #[allow(clippy::match_overlapping_arm)]
    fn parse_primitive(&mut self) -> Result<AtomPrimitive> {
        let Some(c) = self.peek() else {
            return Err(self.err("unterminated atom expression"));
        };
        match c {
            b'0'..=b'9' => {
                let v = self.parse_number().unwrap();
                let iso = u16::try_from(v).map_err(|_| self.err("isotope out of range"))?;
                Ok(AtomPrimitive::Isotope(iso))
            }
            b'#' => {
                self.pos += 1;
                let n = self
                    .parse_number()
                    .ok_or_else(|| self.err("'#' needs an atomic number"))?;
                if !(1..=118).contains(&n) {
                    return Err(self.err("atomic number out of range"));
                }
                Ok(AtomPrimitive::AtomicNumber(n as u8))
            }
            b'$' => {
                self.pos += 1;
                if self.peek() != Some(b'(') {
                    return Err(self.err("'$' must be followed by '('"));
                }
                self.pos += 1;
                let start = self.pos;
                let mut depth = 1usize;
                let mut bracket = false;
                while let Some(ch) = self.peek() {
                    match ch {
                        b'[' => bracket = true,
                        b']' => bracket = false,
                        b'(' if !bracket => depth += 1,
                        b')' if !bracket => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    self.pos += 1;
                }
                if depth != 0 {
                    return Err(self.err("unterminated recursive SMARTS"));
                }
                let mut inner = SmartsParser {
                    text: &self.text[start..self.pos],
                    pos: 0,
                    offset: self.offset + start,
                };
                let sub = inner.parse_pattern()?;
                if inner.pos != inner.text.len() {
                    return Err(inner.err("unexpected input in recursive SMARTS"));
                }
                self.pos += 1; // ')'
                Ok(AtomPrimitive::Recursive(Box::new(sub)))
            }
            b'*' => {
                self.pos += 1;
                Ok(AtomPrimitive::Any)
            }
            b'a' => {
                // 'as' is aromatic arsenic
                if self.text.get(self.pos + 1) == Some(&b's') {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: 33,
                        aromatic: true,
                    });
                }
                self.pos += 1;
                Ok(AtomPrimitive::Aromatic)
            }
            b'A' => {
                let next = self.text.get(self.pos + 1).copied();
                if let Some(z) = next
                    .filter(u8::is_ascii_lowercase)
                    .and_then(|n| element::atomic_number(std::str::from_utf8(&[b'A', n]).ok()?))
                {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: z,
                        aromatic: false,
                    });
                }
                self.pos += 1;
                Ok(AtomPrimitive::Aliphatic)
            }
            b'H' => {
                let next = self.text.get(self.pos + 1).copied();
                if let Some(z) = next
                    .filter(u8::is_ascii_lowercase)
                    .and_then(|n| element::atomic_number(std::str::from_utf8(&[b'H', n]).ok()?))
                {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: z,
                        aromatic: false,
                    });
                }
                self.pos += 1;
                Ok(AtomPrimitive::TotalH(self.parse_count(1)?))
            }
            b'D' => {
                let next = self.text.get(self.pos + 1).copied();
                if let Some(z) = next
                    .filter(u8::is_ascii_lowercase)
                    .and_then(|n| element::atomic_number(std::str::from_utf8(&[b'D', n]).ok()?))
                {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: z,
                        aromatic: false,
                    });
                }
                self.pos += 1;
                Ok(AtomPrimitive::Degree(self.parse_count(1)?))
            }
            b'X' => {
                self.pos += 1;
                Ok(AtomPrimitive::Connectivity(self.parse_count(1)?))
            }
            b'v' => {
                self.pos += 1;
                Ok(AtomPrimitive::Valence(self.parse_count(1)?))
            }
            b'R' => {
                let next = self.text.get(self.pos + 1).copied();
                if let Some(z) = next
                    .filter(u8::is_ascii_lowercase)
                    .and_then(|n| element::atomic_number(std::str::from_utf8(&[b'R', n]).ok()?))
                {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: z,
                        aromatic: false,
                    });
                }
                self.pos += 1;
                match self.parse_number() {
                    None => Ok(AtomPrimitive::InRing),
                    Some(0) => Ok(AtomPrimitive::NotInRing),
                    Some(n) => Err(ChemError::UnsupportedFeature(format!("ring count primitive R{n}"))),
                }
            }
            b'+' | b'-' => self.parse_charge(),
            b'@' => {
                self.pos += 1;
                if self.peek() == Some(b'@') {
                    self.pos += 1;
                }
                Ok(AtomPrimitive::Chirality)
            }
            b'r' | b'x' | b'h' | b'^' | b'z' | b'Z' | b'i' => {
                Err(ChemError::UnsupportedFeature(format!("atom primitive '{}'", c as char)))
            }
            b'c' | b'n' | b'o' | b's' | b'p' | b'b' => {
                let two = self.text.get(self.pos..self.pos + 2);
                if two == Some(b"se") {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: 34,
                        aromatic: true,
                    });
                }
                if two == Some(b"te") {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: 52,
                        aromatic: true,
                    });
                }
                self.pos += 1;
                let number = match c {
                    b'c' => 6,
                    b'n' => 7,
                    b'o' => 8,
                    b's' => 16,
                    b'p' => 15,
                    _ => 5,
                };
                Ok(AtomPrimitive::Element { number, aromatic: true })
            }
            b'A'..=b'Z' => {
                let next = self.text.get(self.pos + 1).copied();
                if let Some(z) = next
                    .filter(u8::is_ascii_lowercase)
                    .and_then(|n| element::atomic_number(std::str::from_utf8(&[c, n]).ok()?))
                {
                    self.pos += 2;
                    return Ok(AtomPrimitive::Element {
                        number: z,
                        aromatic: false,
                    });
                }
                match element::atomic_number(std::str::from_utf8(&[c]).unwrap()) {
                    Some(z) => {
                        self.pos += 1;
                        Ok(AtomPrimitive::Element {
                            number: z,
                            aromatic: false,
                        })
                    }
                    None => Err(self.err(format!("unknown atom primitive '{}'", c as char))),
                }
            }
            _ => Err(self.err(format!("unexpected '{}' in atom expression", c as char))),
        }
    }

    fn parse_bond_expr(&mut self) -> Result<BondExpr> {
        let mut terms = vec![self.parse_bond_or()?];
        while self.peek() == Some(b';') {
            self.pos += 1;
            terms.push(self.parse_bond_or()?);
        }
        Ok(collapse(terms, BondExpr::And))
    }

    fn parse_bond_or(&mut self) -> Result<BondExpr> {
        let mut terms = vec![self.parse_bond_and()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            terms.push(self.parse_bond_and()?);
        }
        Ok(collapse(terms, BondExpr::Or))
    }

    fn parse_bond_and(&mut self) -> Result<BondExpr> {
        let mut terms = vec![self.parse_bond_unary()?];
        loop {
            match self.peek() {
                Some(b'&') => {
                    self.pos += 1;
                    terms.push(self.parse_bond_unary()?);
                }
                Some(b'-' | b'=' | b'#' | b':' | b'~' | b'@' | b'!' | b'/' | b'\\') => {
                    terms.push(self.parse_bond_unary()?)
                }
                _ => break,
            }
        }
        Ok(collapse(terms, BondExpr::And))
    }

    fn parse_bond_unary(&mut self) -> Result<BondExpr> {
        let Some(c) = self.peek() else {
            return Err(self.err("unterminated bond expression"));
        };
        self.pos += 1;
        let prim = match c {
            b'!' => return Ok(BondExpr::Not(Box::new(self.parse_bond_unary()?))),
            b'-' | b'/' | b'\\' => BondPrimitive::Single,
            b'=' => BondPrimitive::Double,
            b'#' => BondPrimitive::Triple,
            b':' => BondPrimitive::Aromatic,
            b'~' => BondPrimitive::Any,
            b'@' => BondPrimitive::Ring,
            _ => {
                self.pos -= 1;
                return Err(self.err(format!("unexpected '{}' in bond expression", c as char)));
            }
        };
        Ok(BondExpr::Prim(prim))
    }
}

fn collapse<T>(mut terms: Vec<T>, wrap: fn(Vec<T>) -> T) -> T {
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        wrap(terms)
    }
}
