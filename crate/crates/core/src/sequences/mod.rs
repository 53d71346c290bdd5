//! IID and randomized extensible low-discrepancy point sets over `(0,1)^d`.
//!
//! Points are addressed by index: `gen(spec, n_start, n_end)` returns rows
//! `n_start..=n_end` (1-based) of one infinite sequence, so any block can be
//! regenerated independently and concurrently. Internally the first point has
//! integer index 0.
//!
//! * Lattice: rank-1 lattice in radical-inverse order (every prefix of size
//!   `2^m` is itself a lattice), randomized by a shift modulo 1.
//! * Digital net: base-2 digital sequence from Joe-Kuo direction numbers in
//!   natural (not Gray-code) order, randomized by a digital shift or by a
//!   nested uniform (Owen) scramble.
//!
//! Coordinates carry 32 bits of base-2 expansion; randomized coordinates get
//! 21 extra low-order random bits with the last bit set, which keeps them
//! strictly inside `(0, 1)`.

mod discrepancy;
mod iid;
mod lattice;
mod net;

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use discrepancy::centered_l2_discrepancy;

/// Largest number of points a lattice or digital net can produce.
pub const LD_CAPACITY: u64 = 1 << 32;
/// Largest supported dimension for the embedded lattice vector and direction numbers.
pub const MAX_LD_DIMENSION: usize = 64;

const FRACTION_BITS: u32 = 53;
const EXTRA_BITS: u32 = FRACTION_BITS - 32;
const FRACTION_SCALE: f64 = 1.0 / (1u64 << FRACTION_BITS) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    Iid,
    Lattice,
    DigitalNet,
}

impl SequenceKind {
    pub fn is_low_discrepancy(self) -> bool {
        !matches!(self, SequenceKind::Iid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Randomization {
    None,
    /// Shift modulo 1 for lattices, digital (XOR) shift for nets.
    Shift,
    /// Nested uniform scramble; digital nets only.
    Scramble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub dimension: usize,
    pub seed: u64,
    pub randomization: Randomization,
}

impl SequenceSpec {
    /// A spec with the default randomization for `kind` (a shift for low
    /// discrepancy kinds; ignored for IID).
    pub fn new(kind: SequenceKind, dimension: usize, seed: u64) -> Self {
        let randomization = if kind.is_low_discrepancy() {
            Randomization::Shift
        } else {
            Randomization::None
        };
        Self {
            kind,
            dimension,
            seed,
            randomization,
        }
    }

    pub fn with_randomization(mut self, randomization: Randomization) -> Self {
        self.randomization = randomization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        if self.kind.is_low_discrepancy() && self.dimension > MAX_LD_DIMENSION {
            return Err(Error::InvalidSpec(format!(
                "low-discrepancy sequences support at most {MAX_LD_DIMENSION} dimensions, got {}",
                self.dimension
            )));
        }
        if self.kind == SequenceKind::Lattice && self.randomization == Randomization::Scramble {
            return Err(Error::InvalidSpec(
                "lattices support shift randomization only".into(),
            ));
        }
        Ok(())
    }

    /// Number of points available from this sequence.
    pub fn capacity(&self) -> u64 {
        match self.kind {
            SequenceKind::Iid => iid::CAPACITY,
            _ => LD_CAPACITY,
        }
    }

    pub fn generator(&self) -> Result<PointGenerator> {
        self.validate()?;
        let inner = match self.kind {
            SequenceKind::Iid => Inner::Iid(iid::IidGenerator::new(self.dimension, self.seed)),
            SequenceKind::Lattice => {
                Inner::Lattice(lattice::LatticeGenerator::new(self.dimension, self.seed, self.randomization))
            }
            SequenceKind::DigitalNet => {
                Inner::Net(net::NetGenerator::new(self.dimension, self.seed, self.randomization))
            }
        };
        Ok(PointGenerator {
            dimension: self.dimension,
            capacity: self.capacity(),
            inner,
        })
    }
}

/// Rows `n_start..=n_end` (1-based) of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBlock {
    pub n_start: u64,
    pub n_end: u64,
    pub values: Array2<f64>,
}

impl PointBlock {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// Points at 1-based indices `n_start..=n_end` of the sequence defined by `spec`.
pub fn gen(spec: &SequenceSpec, n_start: u64, n_end: u64) -> Result<PointBlock> {
    let generator = spec.generator()?;
    if n_start < 1 || n_end < n_start {
        return Err(Error::InvalidArgument(format!(
            "index range [{n_start}, {n_end}] must satisfy 1 <= n_start <= n_end"
        )));
    }
    if n_end > generator.capacity() {
        return Err(Error::Capacity {
            requested: n_end,
            limit: generator.capacity(),
        });
    }
    let rows = (n_end - n_start + 1) as usize;
    let mut values = Array2::zeros((rows, spec.dimension));
    generator.fill_block(
        n_start - 1,
        values.as_slice_mut().expect("fresh array is contiguous"),
    );
    Ok(PointBlock {
        n_start,
        n_end,
        values,
    })
}

/// `count` independently randomized copies of a low-discrepancy spec.
///
/// Replicate seeds depend only on `(spec.seed, replicate index)`.
pub fn replicate(spec: &SequenceSpec, count: usize) -> Result<Vec<SequenceSpec>> {
    if !spec.kind.is_low_discrepancy() {
        return Err(Error::InvalidArgument(
            "replications require a low-discrepancy sequence".into(),
        ));
    }
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replications, got {count}"
        )));
    }
    Ok((0..count as u64)
        .map(|r| SequenceSpec {
            seed: mix64(spec.seed ^ mix64(r.wrapping_add(0x5151_7E0F_A11C_E5ED))),
            ..*spec
        })
        .collect())
}

/// Generator for one sequence: fills rows of points by 0-based index.
#[derive(Debug, Clone)]
pub struct PointGenerator {
    dimension: usize,
    capacity: u64,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Iid(iid::IidGenerator),
    Lattice(lattice::LatticeGenerator),
    Net(net::NetGenerator),
}

impl PointGenerator {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    /// Fills `out` (row-major, `out.len() / d` rows) with the points starting
    /// at 0-based index `first`.
    pub fn fill_block(&self, first: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len() % self.dimension, 0);
        match &self.inner {
            Inner::Iid(g) => g.fill_block(first, out),
            Inner::Lattice(g) => {
                for (row, point) in out.chunks_exact_mut(self.dimension).enumerate() {
                    g.fill(first + row as u64, point);
                }
            }
            Inner::Net(g) => {
                for (row, point) in out.chunks_exact_mut(self.dimension).enumerate() {
                    g.fill(first + row as u64, point);
                }
            }
        }
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-dimension random words for a randomization, derived from the seed.
fn random_words(seed: u64, stream: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Random low-order fill: `EXTRA_BITS` bits with the last bit forced to 1.
fn low_fill(word: u64) -> u64 {
    (word & ((1 << EXTRA_BITS) - 1)) | 1
}

fn to_unit(fixed: u64) -> f64 {
    fixed as f64 * FRACTION_SCALE
}

/// Unrandomized 32-bit coordinate as a real in `[0, 1)`.
fn unit_from_u32(x: u32) -> f64 {
    to_unit((x as u64) << EXTRA_BITS)
}
