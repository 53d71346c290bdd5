use std::sync::OnceLock;

use super::{low_fill, mix64, random_words, to_unit, unit_from_u32, Randomization, EXTRA_BITS};

const DIRECTION_DATA: &str = include_str!("../../data/direction_numbers.txt");

type Matrix = [u32; 32];

/// Generating matrices (one 32-column matrix per dimension), column `k` stored
/// as the 32-bit image of bit `k` of the index.
fn generating_matrices() -> &'static [Matrix] {
    static MATRICES: OnceLock<Vec<Matrix>> = OnceLock::new();
    MATRICES.get_or_init(|| {
        let mut matrices = Vec::with_capacity(super::MAX_LD_DIMENSION);
        let mut first = [0u32; 32];
        for (k, column) in first.iter_mut().enumerate() {
            *column = 1 << (31 - k);
        }
        matrices.push(first);
        for line in DIRECTION_DATA.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<u32> = line
                .split_whitespace()
                .map(|f| f.parse().expect("direction numbers are integers"))
                .collect();
            let (degree, coeffs, initial) = (fields[1] as usize, fields[2], &fields[3..]);
            assert_eq!(initial.len(), degree, "direction number row {line}");
            matrices.push(direction_matrix(degree, coeffs, initial));
        }
        matrices
    })
}

/// Joe-Kuo recurrence for the direction numbers of one dimension.
fn direction_matrix(degree: usize, coeffs: u32, initial: &[u32]) -> Matrix {
    let mut v = [0u32; 32];
    for k in 0..32 {
        v[k] = if k < degree {
            initial[k] << (31 - k)
        } else {
            let mut value = v[k - degree] ^ (v[k - degree] >> degree);
            for l in 1..degree {
                if (coeffs >> (degree - 1 - l)) & 1 == 1 {
                    value ^= v[k - l];
                }
            }
            value
        };
    }
    v
}

#[derive(Debug, Clone)]
enum NetRandomization {
    None,
    /// XOR shift over the full 53-bit fraction.
    Shift(Vec<u64>),
    /// Nested uniform scramble of the 32 digits, then a random low fill.
    Scramble { seeds: Vec<u64>, fill: Vec<u64> },
}

#[derive(Debug, Clone)]
pub(super) struct NetGenerator {
    matrices: Vec<Matrix>,
    randomization: NetRandomization,
}

impl NetGenerator {
    pub(super) fn new(dimension: usize, seed: u64, randomization: Randomization) -> Self {
        let matrices = generating_matrices()[..dimension].to_vec();
        let randomization = match randomization {
            Randomization::None => NetRandomization::None,
            Randomization::Shift => NetRandomization::Shift(
                random_words(seed, 2, dimension)
                    .into_iter()
                    .map(|w| w >> 11)
                    .collect(),
            ),
            Randomization::Scramble => NetRandomization::Scramble {
                seeds: random_words(seed, 3, dimension),
                fill: random_words(seed, 4, dimension),
            },
        };
        Self {
            matrices,
            randomization,
        }
    }

    fn digits(matrix: &Matrix, index: u32) -> u32 {
        let mut bits = index;
        let mut x = 0;
        while bits != 0 {
            let k = bits.trailing_zeros();
            x ^= matrix[k as usize];
            bits &= bits - 1;
        }
        x
    }

    pub(super) fn fill(&self, index: u64, out: &mut [f64]) {
        let index = index as u32;
        match &self.randomization {
            NetRandomization::None => {
                for (x, m) in out.iter_mut().zip(&self.matrices) {
                    *x = unit_from_u32(Self::digits(m, index));
                }
            }
            NetRandomization::Shift(shift) => {
                for ((x, m), &s) in out.iter_mut().zip(&self.matrices).zip(shift) {
                    let fixed = ((Self::digits(m, index) as u64) << EXTRA_BITS) ^ s;
                    *x = to_unit(fixed | 1);
                }
            }
            NetRandomization::Scramble { seeds, fill } => {
                for (((x, m), &seed), &f) in out.iter_mut().zip(&self.matrices).zip(seeds).zip(fill) {
                    let digits = owen_scramble(Self::digits(m, index), seed);
                    *x = to_unit(((digits as u64) << EXTRA_BITS) | low_fill(f));
                }
            }
        }
    }
}

/// Flips digit `k` (most significant first) by a random bit keyed on the
/// preceding `k` digits.
fn owen_scramble(x: u32, seed: u64) -> u32 {
    let mut out = 0u32;
    for k in 0..32u32 {
        let prefix = if k == 0 { 0 } else { (x >> (32 - k)) as u64 };
        let flip = (mix64(seed ^ mix64(((k as u64) << 32) | prefix)) >> 63) as u32;
        let bit = ((x >> (31 - k)) & 1) ^ flip;
        out |= bit << (31 - k);
    }
    out
}
