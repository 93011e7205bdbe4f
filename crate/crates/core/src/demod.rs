//! Nearest-neighbour demapping of reconstructed blocks.

use crate::alphabet::{AptbmAlphabet, AptbmBlock, BitWord, InitialPhase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub phase_index: usize,
    pub sphere_index: usize,
    /// Integer bit label, MSB first.
    pub label: u32,
    /// Squared Euclidean distance over the `(a, b)` pair.
    pub distance: f64,
    /// Candidates examined.
    pub visited: usize,
}

impl Decision {
    pub fn bits(&self, alphabet: &AptbmAlphabet) -> BitWord {
        BitWord::from_label(self.label, alphabet.bits_per_block())
    }
}

/// Index and distance of the nearest candidate; strict `<` keeps the
/// lowest index on ties.
fn nearest(block: &AptbmBlock, candidates: &[AptbmBlock]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in candidates.iter().enumerate() {
        let d = block.dist_sqr(c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Searches only the `L` blocks that share `phase`.
pub fn demap_with_phase(
    block: &AptbmBlock,
    alphabet: &AptbmAlphabet,
    phase: InitialPhase,
) -> Decision {
    let row = alphabet.phase_row(phase.index);
    let (sphere_index, distance) = nearest(block, row);
    Decision {
        phase_index: phase.index,
        sphere_index,
        label: alphabet.indices_to_label(phase.index, sphere_index),
        distance,
        visited: row.len(),
    }
}

/// Exhaustive search over all `M L` blocks.
pub fn demap_full(block: &AptbmBlock, alphabet: &AptbmAlphabet) -> Decision {
    let (i, distance) = nearest(block, alphabet.blocks());
    let (phase_index, sphere_index) = (i / alphabet.l(), i % alphabet.l());
    Decision {
        phase_index,
        sphere_index,
        label: alphabet.indices_to_label(phase_index, sphere_index),
        distance,
        visited: alphabet.order(),
    }
}
