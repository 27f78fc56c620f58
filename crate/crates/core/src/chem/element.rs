use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ChemError;

/// Supported elements: the organic subset plus halogens and explicit hydrogen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::H,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// IUPAC conventional standard atomic weight in Daltons.
    pub fn atomic_weight(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::B => 10.81,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }

    /// Allowed valences for a neutral atom, ascending.
    pub fn valences(self) -> &'static [u32] {
        match self {
            Element::H => &[1],
            Element::B => &[3],
            Element::C => &[4],
            Element::N => &[3],
            Element::O => &[2],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
        }
    }

    /// Elements that may be written lowercase in SMILES.
    pub fn aromatic_capable(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }

    /// Elements that may appear outside brackets.
    pub fn organic_subset(self) -> bool {
        !matches!(self, Element::H)
    }

    pub fn is_halogen(self) -> bool {
        matches!(self, Element::F | Element::Cl | Element::Br | Element::I)
    }

    /// Shift added to each entry of [`Element::valences`] for a charged atom.
    /// Pnictogens, chalcogens and halogens gain a bond per positive charge,
    /// boron gains one per negative charge, carbon loses one either way.
    pub fn charge_adjustment(self, charge: i32) -> i32 {
        match self {
            Element::C => -charge.abs(),
            Element::B => -charge,
            _ => charge,
        }
    }

    /// Allowed total valences (bond orders plus hydrogens) at a given charge.
    pub fn allowed_valences(self, charge: i32) -> impl Iterator<Item = i32> {
        let adj = self.charge_adjustment(charge);
        self.valences()
            .iter()
            .map(move |v| *v as i32 + adj)
            .filter(|v| *v >= 0)
    }

    pub fn index(self) -> usize {
        Element::ALL.iter().position(|e| *e == self).unwrap()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = ChemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::ALL
            .iter()
            .copied()
            .find(|e| e.symbol() == s)
            .ok_or_else(|| ChemError::UnknownElement(s.to_string()))
    }
}
