//! Helpers shared by the integration tests.
#![allow(dead_code)]

use genpolar::codec::{DecodeResult, Symbol};
use genpolar::gf2::Kernel;
use proptest::prelude::*;
use rand::{Rng, RngExt};

pub fn g2() -> Kernel {
    Kernel::arikan()
}

/// The 3×3 lower-triangular kernel with rows 100, 110, 011.
pub fn g101() -> Kernel {
    Kernel::parse("100,110,011").unwrap()
}

/// The 4×4 kernel with rows 1000, 1001, 0101, 1111.
pub fn ge() -> Kernel {
    Kernel::parse("1000,1001,0101,1111").unwrap()
}

pub fn kernel_from_bits(l: usize, bits: &[bool]) -> Kernel {
    let rows: Vec<String> = bits
        .chunks(l)
        .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
        .collect();
    Kernel::parse(&rows.join(",")).unwrap()
}

pub fn random_kernel(rng: &mut impl Rng, l: usize) -> Kernel {
    let bits: Vec<bool> = (0..l * l).map(|_| rng.random()).collect();
    kernel_from_bits(l, &bits)
}

pub fn random_invertible_kernel(rng: &mut impl Rng, l: usize) -> Kernel {
    loop {
        let k = random_kernel(rng, l);
        if k.is_invertible() {
            return k;
        }
    }
}

/// Any `l×l` kernel for `l` in `sizes`.
pub fn any_kernel(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Kernel> {
    sizes.prop_flat_map(|l| prop::collection::vec(any::<bool>(), l * l).prop_map(move |b| kernel_from_bits(l, &b)))
}

pub fn any_invertible_kernel(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Kernel> {
    any_kernel(sizes).prop_filter("invertible", |k| k.is_invertible())
}

/// All words over {0, 1, e} of length `n`.
pub fn all_words(n: usize) -> Vec<Vec<Symbol>> {
    (0..3usize.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let s = [Symbol::Zero, Symbol::One, Symbol::Erased][c % 3];
                    c /= 3;
                    s
                })
                .collect()
        })
        .collect()
}

/// Decisions and flags up to and including the first flagged position: the
/// part of a sequential decoding whose conditioning prefix is the one the
/// split channels are defined on.
pub fn determined_prefix(r: &DecodeResult) -> (Vec<bool>, Vec<bool>) {
    let end = r
        .erased_flags
        .iter()
        .position(|&f| f)
        .map_or(r.u_hat.len(), |p| p + 1);
    (r.u_hat[..end].to_vec(), r.erased_flags[..end].to_vec())
}
