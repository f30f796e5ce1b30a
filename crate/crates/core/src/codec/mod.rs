//! Polar encoding and successive-cancellation decoding over the BEC for any
//! invertible kernel.
//!
//! Encoding applies the kernel to consecutive blocks of `l` inputs and then
//! routes output `j` of every block to child `j` with the stride
//! permutation, recursing into each child. The resulting generator is the
//! Kronecker power `G^{⊗n}` with its rows in base-`l` digit-reversed order,
//! see [`reference_generator`].

mod decoder;
mod oracle;

use std::fmt;
use std::ops::BitXor;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bec::{check_probability, evolve_spectrum, info_size, select_information_set, spectrum_len};
use crate::error::{Error, Result};
use crate::gf2::{kronecker_generator, BitMatrix, Kernel};
use crate::io::write_atomic;

pub use decoder::{kernel_step_decide, sc_decode, DecodeResult};
pub(crate) use decoder::{LaneDecoder, Lanes};
pub use oracle::{map_oracle_decode, MAX_MAP_ORACLE_LEN};

/// Largest kernel the decoder tables are built for.
pub const MAX_CODEC_KERNEL: usize = 12;

/// A received BEC symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
    Erased,
}

impl Symbol {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            Symbol::Erased => None,
        }
    }

    pub fn is_erased(self) -> bool {
        self == Symbol::Erased
    }

    pub fn to_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Erased => 'e',
        }
    }
}

/// Parses a received word written with `'0'`, `'1'` and `'e'`.
pub fn parse_symbols(s: &str) -> Result<Vec<Symbol>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(Symbol::Zero),
            '1' => Ok(Symbol::One),
            'e' | 'E' => Ok(Symbol::Erased),
            other => Err(Error::out_of_range("received symbol", other)),
        })
        .collect()
}

pub fn format_symbols(y: &[Symbol]) -> String {
    y.iter().map(|s| s.to_char()).collect()
}

/// Output position `p` takes input `perm[p]`: inputs `≡ 0 (mod l)` first,
/// then `≡ 1`, and so on, each class in ascending order (0-based).
pub fn stride_permutation(n: usize, l: usize) -> Result<Vec<usize>> {
    if l == 0 || !n.is_multiple_of(l) {
        return Err(Error::Dimension(format!("stride {l} does not divide length {n}")));
    }
    let blocks = n / l;
    let mut perm = vec![0; n];
    for b in 0..blocks {
        for j in 0..l {
            perm[j * blocks + b] = b * l + j;
        }
    }
    Ok(perm)
}

/// Reverses the `n` base-`l` digits of `i`.
pub fn digit_reverse(mut i: usize, l: usize, n: u32) -> usize {
    let mut r = 0;
    for _ in 0..n {
        r = r * l + i % l;
        i /= l;
    }
    r
}

/// Matrix form of the encoder: row `i` is row `digit_reverse(i)` of
/// `G^{⊗n}`, so `x = u·reference_generator(k, n)`.
pub fn reference_generator(k: &Kernel, n: u32) -> Result<BitMatrix> {
    let kron = kronecker_generator(k, n)?;
    let rows = (0..kron.num_rows())
        .map(|i| kron.row(digit_reverse(i, k.size(), n)).clone())
        .collect();
    BitMatrix::from_rows(rows)
}

pub(crate) trait Lane: Copy + Default + BitXor<Output = Self> {}
impl Lane for bool {}
impl Lane for u64 {}

/// Column `j` of the kernel as the list of rows with a one in it.
pub(crate) fn kernel_columns(k: &Kernel) -> Vec<Vec<usize>> {
    let l = k.size();
    (0..l)
        .map(|j| (0..l).filter(|&i| k.get(i, j)).collect())
        .collect()
}

/// In-place recursive encoding: kernel on each block of `l`, then stride
/// permutation into the children, level by level.
pub(crate) fn encode_in_place<T: Lane>(columns: &[Vec<usize>], buf: &mut [T], scratch: &mut Vec<T>) {
    let l = columns.len();
    let len = buf.len();
    scratch.resize(len, T::default());
    let mut block = vec![T::default(); l];
    let mut m = len;
    while m >= l {
        let children = m / l;
        for (node, out) in buf.chunks_mut(m).zip(scratch.chunks_mut(m)) {
            for b in 0..children {
                let inputs = &node[b * l..(b + 1) * l];
                for (j, rows) in columns.iter().enumerate() {
                    block[j] = rows.iter().fold(T::default(), |acc, &i| acc ^ inputs[i]);
                }
                for (j, &v) in block.iter().enumerate() {
                    out[j * children + b] = v;
                }
            }
        }
        buf.copy_from_slice(&scratch[..len]);
        m = children;
    }
}

/// A polar code: kernel, depth and frozen set.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarCode {
    kernel: Kernel,
    depth: u32,
    design_eps: f64,
    frozen: Vec<bool>,
    // N entries, false at information positions
    frozen_values: Vec<bool>,
}

impl PolarCode {
    /// `frozen_values` lists the values of the frozen positions in
    /// ascending position order.
    pub fn new(
        kernel: Kernel,
        depth: u32,
        frozen_mask: Vec<bool>,
        frozen_values: &[bool],
        design_eps: f64,
    ) -> Result<Self> {
        if !kernel.is_invertible() {
            return Err(Error::SingularKernel {
                rank: kernel.rank(),
                size: kernel.size(),
            });
        }
        if kernel.size() > MAX_CODEC_KERNEL {
            return Err(Error::TooLarge {
                what: "kernel for encoding/decoding",
                size: kernel.size() as u128,
                limit: MAX_CODEC_KERNEL as u128,
            });
        }
        check_probability("design erasure probability", design_eps)?;
        let len = spectrum_len(kernel.size(), depth)?;
        if frozen_mask.len() != len {
            return Err(Error::Dimension(format!(
                "frozen mask of length {} for block length {len}",
                frozen_mask.len()
            )));
        }
        let n_frozen = frozen_mask.iter().filter(|&&f| f).count();
        if frozen_values.len() != n_frozen {
            return Err(Error::Dimension(format!(
                "{} frozen values for {n_frozen} frozen positions",
                frozen_values.len()
            )));
        }
        let mut values = vec![false; len];
        let frozen_positions = frozen_mask.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i);
        for (pos, &v) in frozen_positions.zip(frozen_values) {
            values[pos] = v;
        }
        Ok(PolarCode {
            kernel,
            depth,
            design_eps,
            frozen: frozen_mask,
            frozen_values: values,
        })
    }

    /// Standard construction: the `k` most reliable channels of the spectrum
    /// at `design_eps` carry information, the rest are frozen to zero.
    pub fn design(kernel: Kernel, depth: u32, design_eps: f64, k: usize) -> Result<Self> {
        let spectrum = evolve_spectrum(&kernel, design_eps, depth)?;
        let info = select_information_set(&spectrum, k)?;
        let mut frozen = vec![true; spectrum.len()];
        for i in info {
            frozen[i] = false;
        }
        let zeros = vec![false; spectrum.len() - k];
        PolarCode::new(kernel, depth, frozen, &zeros, design_eps)
    }

    /// [`PolarCode::design`] with `K = round(rate·N)`.
    pub fn with_rate(kernel: Kernel, depth: u32, design_eps: f64, rate: f64) -> Result<Self> {
        let len = spectrum_len(kernel.size(), depth)?;
        let k = info_size(rate, len)?;
        PolarCode::design(kernel, depth, design_eps, k)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }

    pub fn design_eps(&self) -> f64 {
        self.design_eps
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_value(&self, i: usize) -> bool {
        self.frozen_values[i]
    }

    pub fn info_size(&self) -> usize {
        self.frozen.iter().filter(|&&f| !f).count()
    }

    pub fn info_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.frozen[i]).collect()
    }

    pub fn rate(&self) -> f64 {
        self.info_size() as f64 / self.len() as f64
    }

    /// Full input word with `info` placed on the information positions and
    /// frozen values elsewhere.
    pub fn embed(&self, info: &[bool]) -> Result<Vec<bool>> {
        if info.len() != self.info_size() {
            return Err(Error::Dimension(format!(
                "{} information bits for K = {}",
                info.len(),
                self.info_size()
            )));
        }
        let mut bits = info.iter();
        Ok((0..self.len())
            .map(|i| {
                if self.frozen[i] {
                    self.frozen_values[i]
                } else {
                    *bits.next().expect("length checked")
                }
            })
            .collect())
    }

    /// Encodes a full input word. Frozen positions of `u` must already hold
    /// the frozen values.
    pub fn encode(&self, u: &[bool]) -> Result<Vec<bool>> {
        if u.len() != self.len() {
            return Err(Error::Dimension(format!(
                "input of length {} for block length {}",
                u.len(),
                self.len()
            )));
        }
        let mut buf = u.to_vec();
        encode_in_place(&kernel_columns(&self.kernel), &mut buf, &mut Vec::new());
        Ok(buf)
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        let bits = |it: &mut dyn Iterator<Item = bool>| it.map(|b| if b { '1' } else { '0' }).collect();
        CodeDescriptor {
            kernel: self.kernel.clone(),
            depth: self.depth,
            design_eps: self.design_eps,
            frozen_mask: bits(&mut self.frozen.iter().copied()),
            frozen_values: bits(
                &mut (0..self.len())
                    .filter(|&i| self.frozen[i])
                    .map(|i| self.frozen_values[i]),
            ),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.descriptor())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<CodeDescriptor>(text)?.into_code()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PolarCode::from_json(&text)
    }
}

impl fmt::Display for PolarCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kernel={} depth={} N={} K={}",
            self.kernel,
            self.depth,
            self.len(),
            self.info_size()
        )
    }
}

/// JSON form of a [`PolarCode`]. Bit strings are in position order
/// (position 0 first); `frozen_values` covers the frozen positions only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub kernel: Kernel,
    pub depth: u32,
    pub design_eps: f64,
    pub frozen_mask: String,
    pub frozen_values: String,
}

impl CodeDescriptor {
    pub fn into_code(self) -> Result<PolarCode> {
        let bits = |s: &str, what: &str| {
            s.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Error::Descriptor(format!("{what}: non-binary character {other:?}"))),
                })
                .collect::<Result<Vec<bool>>>()
        };
        let mask = bits(&self.frozen_mask, "frozen_mask")?;
        let values = bits(&self.frozen_values, "frozen_values")?;
        PolarCode::new(self.kernel, self.depth, mask, &values, self.design_eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge() -> Kernel {
        Kernel::parse("1000,1001,0101,1111").unwrap()
    }

    fn all_info(k: Kernel, depth: u32) -> PolarCode {
        let n = k.size().pow(depth);
        PolarCode::new(k, depth, vec![false; n], &[], 0.5).unwrap()
    }

    #[test]
    fn stride_examples() {
        assert_eq!(stride_permutation(4, 2).unwrap(), vec![0, 2, 1, 3]);
        let p = stride_permutation(16, 4).unwrap();
        assert_eq!(&p[..4], &[0, 4, 8, 12]);
        assert_eq!(stride_permutation(3, 3).unwrap(), vec![0, 1, 2]);
        assert!(stride_permutation(10, 4).is_err());
    }

    #[test]
    fn encode_examples() {
        let code = all_info(ge(), 1);
        assert_eq!(
            code.encode(&[true, true, false, false]).unwrap(),
            vec![false, false, false, true]
        );
        let g2 = all_info(Kernel::arikan(), 1);
        assert_eq!(g2.encode(&[true, false]).unwrap(), vec![true, false]);
        let big = all_info(Kernel::arikan(), 4);
        assert_eq!(big.encode(&[false; 16]).unwrap(), vec![false; 16]);
        assert!(big.encode(&[false; 15]).is_err());
    }

    #[test]
    fn eq13_combined_channel() {
        // x1 = u1+u2+u4, x2 = u3+u4, x3 = u4, x4 = u2+u3+u4
        let code = all_info(ge(), 1);
        for w in 0u8..16 {
            let u: Vec<bool> = (0..4).map(|i| (w >> i) & 1 == 1).collect();
            let x = code.encode(&u).unwrap();
            assert_eq!(x[0], u[0] ^ u[1] ^ u[3]);
            assert_eq!(x[1], u[2] ^ u[3]);
            assert_eq!(x[2], u[3]);
            assert_eq!(x[3], u[1] ^ u[2] ^ u[3]);
        }
    }

    #[test]
    fn digit_reverse_is_involution() {
        for (l, n) in [(2usize, 5u32), (3, 3), (4, 3)] {
            let len = l.pow(n);
            for i in 0..len {
                assert_eq!(digit_reverse(digit_reverse(i, l, n), l, n), i);
            }
        }
        assert_eq!(digit_reverse(1, 2, 3), 4);
        assert_eq!(digit_reverse(5, 3, 2), 7);
    }

    #[test]
    fn design_picks_good_channels() {
        let code = PolarCode::design(Kernel::arikan(), 2, 0.5, 2).unwrap();
        assert_eq!(code.frozen_mask(), &[true, true, false, false]);
        assert_eq!(code.info_positions(), vec![2, 3]);
        let code = PolarCode::with_rate(ge(), 5, 0.5, 0.25).unwrap();
        assert_eq!(code.len(), 1024);
        assert_eq!(code.info_size(), 256);
        assert!(PolarCode::design(Kernel::parse("10,10").unwrap(), 2, 0.5, 1).is_err());
    }

    #[test]
    fn descriptor_roundtrip() {
        let mask = vec![true, false, true, false];
        let code = PolarCode::new(Kernel::arikan(), 2, mask, &[true, false], 0.4).unwrap();
        let json = code.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["frozen_mask"], "1010");
        assert_eq!(v["frozen_values"], "10");
        assert_eq!(v["kernel"]["rows"][1], "11");
        assert_eq!(PolarCode::from_json(&json).unwrap(), code);
        assert!(PolarCode::from_json(r#"{"kernel":{"l":2,"rows":["10","11"]},"depth":1,"design_eps":0.5,"frozen_mask":"1x","frozen_values":"0"}"#).is_err());
        assert!(PolarCode::from_json(r#"{"kernel":{"l":2,"rows":["10","11"]},"depth":1,"design_eps":0.5,"frozen_mask":"10","frozen_values":""}"#).is_err());
    }

    #[test]
    fn embed_places_info_bits() {
        let code = PolarCode::new(Kernel::arikan(), 2, vec![true, false, true, false], &[true, false], 0.5).unwrap();
        assert_eq!(code.embed(&[false, true]).unwrap(), vec![true, false, false, true]);
        assert!(code.embed(&[true]).is_err());
    }

    #[test]
    fn symbols_parse() {
        let y = parse_symbols("01e").unwrap();
        assert_eq!(y, vec![Symbol::Zero, Symbol::One, Symbol::Erased]);
        assert_eq!(format_symbols(&y), "01e");
        assert!(parse_symbols("012").is_err());
    }
}
