//! Brute-force sequential MAP decoding for very short codes.
//!
//! Each position is decided from the split-channel law computed literally:
//! the joint channel is summed over every completion of the later inputs,
//! all of them equally likely. On the BEC the joint law of a received word
//! is `ε^{|E|}(1−ε)^{N−|E|}` for every input word whose codeword agrees with
//! the non-erased symbols and zero otherwise, so the sums reduce to counting
//! consistent completions; the constant factor cancels in every comparison.

use super::{reference_generator, DecodeResult, PolarCode, Symbol};
use crate::error::{Error, Result};

pub const MAX_MAP_ORACLE_LEN: usize = 8;

pub fn map_oracle_decode(code: &PolarCode, y: &[Symbol]) -> Result<DecodeResult> {
    let len = code.len();
    if len > MAX_MAP_ORACLE_LEN {
        return Err(Error::TooLarge {
            what: "MAP oracle block length",
            size: len as u128,
            limit: MAX_MAP_ORACLE_LEN as u128,
        });
    }
    if y.len() != len {
        return Err(Error::Dimension(format!(
            "received word of length {} for block length {len}",
            y.len()
        )));
    }
    let g = reference_generator(code.kernel(), code.depth())?;
    let (mut seen, mut value) = (0u32, 0u32);
    for (j, s) in y.iter().enumerate() {
        if let Some(b) = s.bit() {
            seen |= 1 << j;
            value |= (b as u32) << j;
        }
    }
    let consistent: Vec<bool> = (0u32..1 << len)
        .map(|u| {
            let bits: Vec<bool> = (0..len).map(|i| (u >> i) & 1 == 1).collect();
            let x = g
                .left_mul(&bits)
                .expect("square generator")
                .iter()
                .enumerate()
                .fold(0u32, |m, (j, &b)| m | (b as u32) << j);
            x & seen == value
        })
        .collect();

    let mut decided = 0u32;
    let mut u_hat = vec![false; len];
    let mut erased_flags = vec![false; len];
    // after an undetermined bit the prefix is a guess and may explain nothing
    let mut guessed = false;
    for i in 0..len {
        let prefix_mask = (1u32 << i) - 1;
        let mut weight = [0u64; 2];
        for u in (0u32..1 << len).filter(|&u| consistent[u as usize] && u & prefix_mask == decided) {
            weight[((u >> i) & 1) as usize] += 1;
        }
        let bit = if code.is_frozen(i) {
            let fv = code.frozen_value(i);
            if weight[fv as usize] == 0 && !guessed {
                return Err(Error::Integrity(format!(
                    "received word contradicts the frozen value at position {i}"
                )));
            }
            fv
        } else {
            match (weight[0], weight[1]) {
                (0, 0) if !guessed => {
                    return Err(Error::Integrity(format!(
                        "no input word explains the received word at position {i}"
                    )))
                }
                (w0, w1) if w0 > w1 => false,
                (w0, w1) if w1 > w0 => true,
                _ => {
                    erased_flags[i] = true;
                    guessed = true;
                    false
                }
            }
        };
        u_hat[i] = bit;
        decided |= (bit as u32) << i;
    }
    Ok(DecodeResult {
        frame_erased: erased_flags.iter().any(|&f| f),
        u_hat,
        erased_flags,
    })
}
