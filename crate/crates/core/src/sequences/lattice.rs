use std::sync::OnceLock;

use super::{random_words, to_unit, unit_from_u32, Randomization, EXTRA_BITS};

const VECTOR_DATA: &str = include_str!("../../data/lattice_vector.txt");

fn generating_vector() -> &'static [u32] {
    static VECTOR: OnceLock<Vec<u32>> = OnceLock::new();
    VECTOR.get_or_init(|| {
        VECTOR_DATA
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse().expect("lattice vector entries are integers"))
            .collect()
    })
}

/// Rank-1 lattice `x_i = frac(phi_2(i) * g + shift)`.
#[derive(Debug, Clone)]
pub(super) struct LatticeGenerator {
    vector: Vec<u32>,
    /// Shift as a 53-bit fixed-point fraction per dimension.
    shift: Option<Vec<u64>>,
}

impl LatticeGenerator {
    pub(super) fn new(dimension: usize, seed: u64, randomization: Randomization) -> Self {
        let vector = generating_vector()[..dimension].to_vec();
        let shift = match randomization {
            Randomization::None => None,
            _ => Some(
                random_words(seed, 1, dimension)
                    .into_iter()
                    .map(|w| (w >> 11) | 1)
                    .collect(),
            ),
        };
        Self { vector, shift }
    }

    #[cfg(test)]
    pub(super) fn shift_values(&self) -> Vec<f64> {
        self.shift
            .as_ref()
            .map(|s| s.iter().map(|&v| to_unit(v)).collect())
            .unwrap_or_default()
    }

    pub(super) fn fill(&self, index: u64, out: &mut [f64]) {
        // phi_2(i) * g mod 1 in 32-bit fixed point.
        let reversed = (index as u32).reverse_bits();
        match &self.shift {
            None => {
                for (x, &g) in out.iter_mut().zip(&self.vector) {
                    *x = unit_from_u32(reversed.wrapping_mul(g));
                }
            }
            Some(shift) => {
                const MASK: u64 = (1 << 53) - 1;
                for ((x, &g), &s) in out.iter_mut().zip(&self.vector).zip(shift) {
                    let base = (reversed.wrapping_mul(g) as u64) << EXTRA_BITS;
                    *x = to_unit(base.wrapping_add(s) & MASK);
                }
            }
        }
    }
}

