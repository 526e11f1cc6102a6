//! Periodic-table lookups and the valence model used for implicit hydrogens
//! and valence validation.

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc",
    "Lv", "Ts", "Og",
];

pub fn symbol(atomic_number: u8) -> &'static str {
    match atomic_number {
        1..=118 => SYMBOLS[atomic_number as usize - 1],
        _ => "*",
    }
}

pub fn atomic_number(symbol: &str) -> Option<u8> {
    SYMBOLS.iter().position(|s| *s == symbol).map(|i| (i + 1) as u8)
}

/// Elements that may appear outside brackets in SMILES.
pub fn is_organic_subset(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
}

/// Elements that may be written as lowercase aromatic symbols.
pub fn can_be_aromatic(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
}

/// Allowed total valences (bond orders + hydrogens) for an element at a
/// given formal charge, ascending. `None` means the element is outside the
/// valence model and is not checked.
pub fn allowed_valences(atomic_number: u8, charge: i8) -> Option<&'static [u8]> {
    let v: &'static [u8] = match (atomic_number, charge) {
        (1, 0) => &[1],
        (1, 1) | (1, -1) => &[0],
        (5, 0) => &[3],
        (5, -1) => &[4],
        (5, 1) => &[2],
        (6, 0) => &[4],
        (6, 1) | (6, -1) => &[3],
        (7, 0) => &[3],
        (7, 1) => &[4],
        (7, -1) => &[2],
        (8, 0) => &[2],
        (8, 1) => &[3],
        (8, -1) => &[1],
        (9, 0) => &[1],
        (9, -1) => &[0],
        (14, 0) => &[4],
        (15, 0) | (33, 0) => &[3, 5, 7],
        (15, 1) | (33, 1) => &[4],
        (15, -1) | (33, -1) => &[2, 4],
        (16, 0) | (34, 0) | (52, 0) => &[2, 4, 6],
        (16, 1) | (34, 1) | (52, 1) => &[3, 5],
        (16, -1) | (34, -1) | (52, -1) => &[1, 3, 5],
        (17, 0) | (35, 0) | (53, 0) => &[1],
        (17, -1) | (35, -1) | (53, -1) => &[0],
        (53, 1) => &[2],
        (3, 1) | (11, 1) | (19, 1) => &[0],
        (12, 2) | (20, 2) | (30, 2) => &[0],
        _ => return None,
    };
    Some(v)
}

/// Smallest allowed valence that can accommodate `used` bond-order units.
pub fn target_valence(atomic_number: u8, charge: i8, used: u32) -> Option<u32> {
    allowed_valences(atomic_number, charge)?
        .iter()
        .map(|&v| v as u32)
        .find(|&v| v >= used)
}
