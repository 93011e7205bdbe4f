//! APTBM alphabets and the bit-to-block mapping.
//!
//! A block is a pair of consecutive symbols `(a, b)` generated from an
//! initial phase `phi` and a point `(s1, s2, s3)` on the Poincaré sphere of
//! radius `P`:
//!
//! ```text
//! theta = atan2(s3, s2) / 2
//! a = e^{j phi} sqrt((P + s1) / 2) e^{-j theta}
//! b = e^{j phi} sqrt((P - s1) / 2) e^{+j theta}
//! ```
//!
//! so every block satisfies `|a|^2 + |b|^2 = P` and `arg a + arg b = 2 phi`.
//! Initial phases sit on the grid `2 pi k / M`, sphere points on a Fibonacci
//! lattice. Bits are labelled Gray on the phase ring and natural binary on the
//! sphere index.

use std::f64::consts::{PI, TAU};

use crate::error::invalid;
use crate::{Complex, Error, Result};

/// A state on the Poincaré sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereState {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl SphereState {
    pub fn radius(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }
}

/// One point of the initial-phase alphabet, `value = 2 pi index / M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialPhase {
    pub index: usize,
    pub value: f64,
}

/// Two consecutive time-domain symbols.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AptbmBlock {
    pub a: Complex,
    pub b: Complex,
}

impl AptbmBlock {
    pub const ZERO: AptbmBlock = AptbmBlock {
        a: Complex::new(0.0, 0.0),
        b: Complex::new(0.0, 0.0),
    };

    pub fn new(a: Complex, b: Complex) -> Self {
        Self { a, b }
    }

    /// `|a|^2 + |b|^2`.
    pub fn power(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// Squared Euclidean distance in C^2.
    pub fn dist_sqr(&self, other: &AptbmBlock) -> f64 {
        (self.a - other.a).norm_sqr() + (self.b - other.b).norm_sqr()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.a * k, self.b * k)
    }

    pub fn rotate(&self, angle: f64) -> Self {
        let r = Complex::from_polar(1.0, angle);
        Self::new(self.a * r, self.b * r)
    }

    /// `Re(c^H d)` with `d = [-j e^{j phi} / |a|, -j e^{j phi} / |b|]`.
    ///
    /// Zero for every block whose symbols are mirror images about `e^{j phi}`.
    pub fn symmetry_residual(&self, phi: f64) -> f64 {
        let rot = Complex::new(0.0, -1.0) * Complex::from_polar(1.0, phi);
        let da = rot / self.a.norm();
        let db = rot / self.b.norm();
        (self.a.conj() * da + self.b.conj() * db).re
    }
}

/// An ordered sequence of bits, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitWord {
    pub bits: Vec<bool>,
}

impl BitWord {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn from_label(label: u32, len: u32) -> Self {
        Self::new((0..len).rev().map(|i| (label >> i) & 1 == 1).collect())
    }

    pub fn to_label(&self) -> u32 {
        self.bits
            .iter()
            .fold(0, |acc, &b| (acc << 1) | u32::from(b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl std::fmt::Display for BitWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn gray_encode(i: u32) -> u32 {
    i ^ (i >> 1)
}

pub fn gray_decode(mut g: u32) -> u32 {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

fn log2_exact(n: usize, what: &str) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(invalid(format!("{what} must be a power of two, got {n}")));
    }
    Ok(n.trailing_zeros())
}

/// The uniform phase grid `{2 pi k / m}` on `[0, 2 pi)`.
pub fn build_phase_alphabet(m: usize) -> Result<Vec<InitialPhase>> {
    log2_exact(m, "phase count")?;
    Ok((0..m)
        .map(|index| InitialPhase {
            index,
            value: TAU * index as f64 / m as f64,
        })
        .collect())
}

/// `l` points on the sphere of radius `p` laid out by the Fibonacci lattice.
///
/// The polar coordinate uses cell midpoints, so no point lands on a pole.
pub fn build_sphere_alphabet(l: usize, p: f64) -> Result<Vec<SphereState>> {
    if l < 2 {
        return Err(invalid(format!("sphere point count must be >= 2, got {l}")));
    }
    log2_exact(l, "sphere point count")?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("block power must be positive, got {p}")));
    }
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let step = TAU * (1.0 - 1.0 / golden);
    Ok((0..l)
        .map(|k| {
            let s1 = p * (1.0 - (2 * k + 1) as f64 / l as f64);
            let r = (p * p - s1 * s1).sqrt();
            let az = step * k as f64;
            SphereState {
                s1,
                s2: r * az.cos(),
                s3: r * az.sin(),
            }
        })
        .collect())
}

/// Builds a block from an initial phase and a sphere state.
pub fn map_block(phase: InitialPhase, state: SphereState, p: f64) -> Result<AptbmBlock> {
    if !(p > 0.0) {
        return Err(invalid(format!("block power must be positive, got {p}")));
    }
    if state.s1.abs() >= p {
        return Err(Error::DegenerateState { s1: state.s1, p });
    }
    let theta = 0.5 * state.s3.atan2(state.s2);
    let amp_a = ((p + state.s1) / 2.0).sqrt();
    let amp_b = ((p - state.s1) / 2.0).sqrt();
    Ok(AptbmBlock {
        a: Complex::from_polar(amp_a, phase.value - theta),
        b: Complex::from_polar(amp_b, phase.value + theta),
    })
}

/// A complete APTBM alphabet of `m * l` blocks at block power `p`.
///
/// Immutable once built; share it freely across threads.
#[derive(Debug, Clone)]
pub struct AptbmAlphabet {
    m: usize,
    l: usize,
    p: f64,
    phase_bits: u32,
    sphere_bits: u32,
    phases: Vec<InitialPhase>,
    sphere: Vec<SphereState>,
    /// Row-major by phase: `blocks[phase * l + sphere]`.
    blocks: Vec<AptbmBlock>,
}

impl AptbmAlphabet {
    pub fn new(m: usize, l: usize, p: f64) -> Result<Self> {
        let phases = build_phase_alphabet(m)?;
        let sphere = build_sphere_alphabet(l, p)?;
        if m * l < 4 {
            return Err(invalid(format!(
                "alphabet size m*l must be >= 4, got {}",
                m * l
            )));
        }
        let blocks = phases
            .iter()
            .flat_map(|&ph| sphere.iter().map(move |&st| map_block(ph, st, p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m,
            l,
            p,
            phase_bits: m.trailing_zeros(),
            sphere_bits: l.trailing_zeros(),
            phases,
            sphere,
            blocks,
        })
    }

    /// Default phase/sphere split for a modulation order.
    pub fn default_split(mo: usize) -> Result<(usize, usize)> {
        match mo {
            16 => Ok((4, 4)),
            32 => Ok((8, 4)),
            64 => Ok((8, 8)),
            _ => Err(invalid(format!(
                "no default (m, l) split for modulation order {mo}; set m and l explicitly"
            ))),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn order(&self) -> usize {
        self.m * self.l
    }

    pub fn bits_per_block(&self) -> u32 {
        self.phase_bits + self.sphere_bits
    }

    pub fn phases(&self) -> &[InitialPhase] {
        &self.phases
    }

    pub fn sphere(&self) -> &[SphereState] {
        &self.sphere
    }

    pub fn blocks(&self) -> &[AptbmBlock] {
        &self.blocks
    }

    pub fn block(&self, phase: usize, sphere: usize) -> &AptbmBlock {
        &self.blocks[phase * self.l + sphere]
    }

    /// Blocks sharing one initial phase, in sphere-index order.
    pub fn phase_row(&self, phase: usize) -> &[AptbmBlock] {
        &self.blocks[phase * self.l..(phase + 1) * self.l]
    }

    /// Splits an integer bit label into (phase index, sphere index).
    pub fn label_to_indices(&self, label: u32) -> (usize, usize) {
        let sphere_mask = (1u32 << self.sphere_bits) - 1;
        let phase = gray_decode(label >> self.sphere_bits) as usize;
        (phase, (label & sphere_mask) as usize)
    }

    pub fn indices_to_label(&self, phase: usize, sphere: usize) -> u32 {
        (gray_encode(phase as u32) << self.sphere_bits) | sphere as u32
    }

    /// Block for an integer label; the hot-path form of [`bits_to_block`].
    pub fn block_for_label(&self, label: u32) -> &AptbmBlock {
        let (ph, sp) = self.label_to_indices(label);
        self.block(ph, sp)
    }

    pub fn block_to_bits(&self, phase: usize, sphere: usize) -> BitWord {
        BitWord::from_label(self.indices_to_label(phase, sphere), self.bits_per_block())
    }

    /// Smallest pairwise distance between distinct blocks.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, x) in self.blocks.iter().enumerate() {
            for y in &self.blocks[i + 1..] {
                best = best.min(x.dist_sqr(y));
            }
        }
        best.sqrt()
    }
}

/// Maps a bit word onto its alphabet block.
pub fn bits_to_block<'a>(word: &BitWord, alphabet: &'a AptbmAlphabet) -> Result<&'a AptbmBlock> {
    if word.len() != alphabet.bits_per_block() as usize {
        return Err(invalid(format!(
            "bit word has {} bits, alphabet carries {}",
            word.len(),
            alphabet.bits_per_block()
        )));
    }
    Ok(alphabet.block_for_label(word.to_label()))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}
