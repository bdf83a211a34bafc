//! Fermionic Fock basis over the 2N emitter orbitals.
//!
//! Orbitals are ordered emitter-major with the ground orbital before the
//! excited one, so emitter `i` owns global positions `2i` (ground) and `2i+1`
//! (excited). A basis state is an occupation bitmask where bit `p` is the
//! occupation of global orbital `p`. Operator signs follow the ordered-orbital
//! (Jordan-Wigner) convention: moving an operator to orbital `p` picks up
//! `(-1)^(number of occupied orbitals before p)`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex operator in a Fock basis (or in an eigenbasis after transformation).
pub type OperatorMatrix = DMatrix<C64>;

/// Largest orbital count representable by the `u64` occupation masks.
const MAX_ORBITALS: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrbitalKind {
    Ground,
    Excited,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitalIndex {
    pub emitter: usize,
    pub kind: OrbitalKind,
}

impl OrbitalIndex {
    pub fn ground(emitter: usize) -> Self {
        Self { emitter, kind: OrbitalKind::Ground }
    }

    pub fn excited(emitter: usize) -> Self {
        Self { emitter, kind: OrbitalKind::Excited }
    }

    /// Position in the global orbital ordering.
    pub fn position(&self) -> usize {
        2 * self.emitter
            + match self.kind {
                OrbitalKind::Ground => 0,
                OrbitalKind::Excited => 1,
            }
    }
}

/// Ordered list of occupation states spanning either a fixed-particle-number
/// sector or the full Fock space of `n_orbitals` orbitals.
#[derive(Clone, Debug)]
pub struct FockBasis {
    n_orbitals: usize,
    n_electrons: Option<usize>,
    states: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

impl FockBasis {
    /// All states with exactly `n_electrons` electrons among `n_orbitals`.
    pub fn fixed_number(n_orbitals: usize, n_electrons: usize) -> Result<Self> {
        if n_orbitals == 0 || n_orbitals > MAX_ORBITALS {
            return Err(Error::InvalidArgument(format!(
                "orbital count must be in 1..={MAX_ORBITALS}, got {n_orbitals}"
            )));
        }
        if n_electrons > n_orbitals {
            return Err(Error::InvalidArgument(format!(
                "{n_electrons} electrons do not fit in {n_orbitals} orbitals"
            )));
        }
        let states = (0u64..(1u64 << n_orbitals))
            .filter(|m| m.count_ones() as usize == n_electrons)
            .collect();
        Ok(Self::from_states(n_orbitals, Some(n_electrons), states))
    }

    /// Every occupation pattern of `n_orbitals` orbitals (dimension 2^n).
    pub fn full(n_orbitals: usize) -> Result<Self> {
        if n_orbitals == 0 || n_orbitals > 20 {
            return Err(Error::InvalidArgument(format!(
                "full Fock space limited to 1..=20 orbitals, got {n_orbitals}"
            )));
        }
        let states = (0u64..(1u64 << n_orbitals)).collect();
        Ok(Self::from_states(n_orbitals, None, states))
    }

    fn from_states(n_orbitals: usize, n_electrons: Option<usize>, mut states: Vec<u64>) -> Self {
        // Lexicographic order of the occupation string n_0 n_1 ... n_{2N-1}.
        states.sort_by_key(|&m| lex_key(m, n_orbitals));
        let lookup = states.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        Self { n_orbitals, n_electrons, states, lookup }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn n_emitters(&self) -> usize {
        self.n_orbitals / 2
    }

    pub fn n_electrons(&self) -> Option<usize> {
        self.n_electrons
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.lookup.get(&mask).copied()
    }

    pub fn is_occupied(&self, state: usize, orbital: usize) -> bool {
        self.states[state] >> orbital & 1 == 1
    }

    /// Occupation string such as `"1010"` for |g_1 g_2⟩ with two emitters.
    pub fn label(&self, state: usize) -> String {
        (0..self.n_orbitals)
            .map(|p| if self.is_occupied(state, p) { '1' } else { '0' })
            .collect()
    }

    fn check_orbital(&self, orbital: OrbitalIndex) -> Result<usize> {
        let p = orbital.position();
        if p >= self.n_orbitals {
            return Err(Error::InvalidArgument(format!(
                "orbital {orbital:?} outside a basis of {} orbitals",
                self.n_orbitals
            )));
        }
        Ok(p)
    }
}

fn lex_key(mask: u64, n_orbitals: usize) -> u64 {
    (0..n_orbitals).fold(0u64, |key, p| (key << 1) | (mask >> p & 1))
}

/// Number basis for `n_emitters` two-level emitters with one electron each.
pub fn enumerate_basis(n_emitters: usize) -> Result<FockBasis> {
    if n_emitters < 1 {
        return Err(Error::InvalidArgument("at least one emitter is required".into()));
    }
    FockBasis::fixed_number(2 * n_emitters, n_emitters)
}

fn parity_below(mask: u64, p: usize) -> f64 {
    let below = mask & ((1u64 << p) - 1);
    if below.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `a_p |mask⟩ = sign |mask'⟩`, or `None` when orbital `p` is empty.
pub fn annihilate(mask: u64, p: usize) -> Option<(f64, u64)> {
    if mask >> p & 1 == 0 {
        return None;
    }
    Some((parity_below(mask, p), mask & !(1u64 << p)))
}

/// `a†_p |mask⟩ = sign |mask'⟩`, or `None` when orbital `p` is occupied.
pub fn create(mask: u64, p: usize) -> Option<(f64, u64)> {
    if mask >> p & 1 == 1 {
        return None;
    }
    Some((parity_below(mask, p), mask | (1u64 << p)))
}

/// Matrix of `a†_create a_annihilate` in `basis`.
pub fn bilinear_matrix(
    create_at: OrbitalIndex,
    annihilate_at: OrbitalIndex,
    basis: &FockBasis,
) -> Result<OperatorMatrix> {
    let p = basis.check_orbital(create_at)?;
    let q = basis.check_orbital(annihilate_at)?;
    Ok(bilinear_by_position(p, q, basis))
}

pub(crate) fn bilinear_by_position(p: usize, q: usize, basis: &FockBasis) -> OperatorMatrix {
    let dim = basis.dim();
    let mut out = OperatorMatrix::zeros(dim, dim);
    for (col, &mask) in basis.states.iter().enumerate() {
        let Some((s1, m1)) = annihilate(mask, q) else { continue };
        let Some((s2, m2)) = create(m1, p) else { continue };
        if let Some(row) = basis.index_of(m2) {
            out[(row, col)] += C64::new(s1 * s2, 0.0);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Single creation or annihilation operator on global orbital `orbital`.
/// Only meaningful in a basis that contains the image states, i.e. [`FockBasis::full`].
pub fn ladder_matrix(orbital: usize, which: Ladder, basis: &FockBasis) -> Result<OperatorMatrix> {
    if orbital >= basis.n_orbitals {
        return Err(Error::InvalidArgument(format!("orbital {orbital} out of range")));
    }
    let dim = basis.dim();
    let mut out = OperatorMatrix::zeros(dim, dim);
    for (col, &mask) in basis.states.iter().enumerate() {
        let image = match which {
            Ladder::Create => create(mask, orbital),
            Ladder::Annihilate => annihilate(mask, orbital),
        };
        if let Some((sign, m)) = image {
            if let Some(row) = basis.index_of(m) {
                out[(row, col)] = C64::new(sign, 0.0);
            }
        }
    }
    Ok(out)
}

/// Total number of electrons sitting in excited orbitals.
pub fn excitation_operator(basis: &FockBasis) -> OperatorMatrix {
    let dim = basis.dim();
    OperatorMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            return C64::new(0.0, 0.0);
        }
        let n = (0..basis.n_emitters())
            .filter(|&i| basis.is_occupied(r, OrbitalIndex::excited(i).position()))
            .count();
        C64::new(n as f64, 0.0)
    })
}
