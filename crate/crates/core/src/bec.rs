//! Exact polarisation analysis over the binary erasure channel.
//!
//! Every split channel of a BEC under a linear kernel is again a BEC, so a
//! kernel's one-step behaviour is fully described by which erasure patterns
//! leave each input undetermined. [`TransitionProfile`] stores those counts
//! exactly; the erasure polynomial of input `i` is
//! `Z_i(z) = Σ_s counts[i][s]·z^s·(1−z)^(l−s)`.
//!
//! Capacities are always reported as `1 − z`. No separate capacity
//! recursion is kept.

use std::fmt::Write as _;
use std::path::Path;

use crate::codec::reference_generator;
use crate::error::{Error, Result};
use crate::gf2::{span_combination, Kernel};
use crate::io::{fmt_sig, write_atomic};

/// Largest kernel for which the `2^l` erasure patterns are enumerated.
pub const MAX_PROFILE_KERNEL: usize = 20;

/// Default budget on the number of channels in a [`Spectrum`].
pub const MAX_SPECTRUM_LEN: usize = 1 << 24;

/// Largest block length accepted by [`exhaustive_split_oracle`].
pub const MAX_ORACLE_LEN: usize = 8;

pub(crate) fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::out_of_range(what, p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransitionProfile {
    l: usize,
    // counts[i][s]: erasure patterns of size s leaving input i undetermined
    counts: Vec<Vec<u64>>,
}

impl TransitionProfile {
    pub fn size(&self) -> usize {
        self.l
    }

    /// Rebuilds a profile from count rows (e.g. a stored multiset).
    pub(crate) fn from_rows(l: usize, counts: Vec<Vec<u64>>) -> Self {
        debug_assert!(counts.iter().all(|r| r.len() == l + 1));
        TransitionProfile { l, counts }
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Count rows sorted lexicographically: the kernel's one-step maps as a
    /// multiset.
    pub fn multiset(&self) -> Vec<Vec<u64>> {
        let mut rows = self.counts.clone();
        rows.sort();
        rows
    }

    /// `Z_i(z)` for a 0-based input index, without range checks.
    #[inline]
    pub(crate) fn eval0(&self, i: usize, z: f64) -> f64 {
        let l = self.l;
        let w = 1.0 - z;
        let mut acc = 0.0;
        let mut zp = 1.0;
        for s in 0..=l {
            let c = self.counts[i][s];
            if c != 0 {
                acc += c as f64 * zp * w.powi((l - s) as i32);
            }
            zp *= z;
        }
        acc
    }
}

/// Whether input `i` (0-based) is determined from the outputs outside the
/// erased set `erased` given inputs `0..i`.
pub(crate) fn input_determined(k: &Kernel, i: usize, erased: u64) -> bool {
    let cols = (0..k.size())
        .filter(|j| (erased >> j) & 1 == 0)
        .map(|j| (j, k.column_tail(j, i)));
    span_combination(1, cols).is_some()
}

/// Enumerates all `2^l` erasure patterns of the kernel outputs and counts,
/// per input, the patterns under which the input stays undetermined.
pub fn one_step_profile(k: &Kernel) -> Result<TransitionProfile> {
    let l = k.size();
    if l > MAX_PROFILE_KERNEL {
        return Err(Error::TooLarge {
            what: "kernel for erasure-pattern enumeration",
            size: l as u128,
            limit: MAX_PROFILE_KERNEL as u128,
        });
    }
    let mut counts = vec![vec![0u64; l + 1]; l];
    for (i, row) in counts.iter_mut().enumerate() {
        for erased in 0u64..1 << l {
            let determined = input_determined(k, i, erased);
            // removing an erasure can never lose determination
            debug_assert!(
                !determined
                    || (0..l)
                        .filter(|j| (erased >> j) & 1 == 1)
                        .all(|j| input_determined(k, i, erased & !(1 << j))),
                "determination not downward closed for {k} input {i} pattern {erased:b}"
            );
            if !determined {
                row[erased.count_ones() as usize] += 1;
            }
        }
    }
    Ok(TransitionProfile { l, counts })
}

/// `Z_i(z)` for the 1-based input index `i`.
pub fn evaluate_erasure(p: &TransitionProfile, i: usize, z: f64) -> Result<f64> {
    check_probability("erasure probability", z)?;
    if !(1..=p.l).contains(&i) {
        return Err(Error::out_of_range("input index", i));
    }
    Ok(p.eval0(i - 1, z))
}

/// Per-channel erasure probabilities after `depth` polarisation steps, in
/// successive-cancellation index order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub kernel: Kernel,
    pub depth: u32,
    pub design_eps: f64,
    pub z: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn capacities(&self) -> impl Iterator<Item = f64> + '_ {
        self.z.iter().map(|z| 1.0 - z)
    }

    /// Spectrum CSV: `index,erasure_prob,capacity`, 0-based indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,erasure_prob,capacity\n");
        for (i, &z) in self.z.iter().enumerate() {
            writeln!(out, "{i},{},{}", fmt_sig(z), fmt_sig(1.0 - z)).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

pub(crate) fn spectrum_len(l: usize, n: u32) -> Result<usize> {
    match (l as u128).checked_pow(n) {
        Some(len) if len <= MAX_SPECTRUM_LEN as u128 => Ok(len as usize),
        other => Err(Error::TooLarge {
            what: "spectrum",
            size: other.unwrap_or(u128::MAX),
            limit: MAX_SPECTRUM_LEN as u128,
        }),
    }
}

/// Child `t` of channel `i` lands at index `l·i + t` of the next level.
pub fn evolve_spectrum(k: &Kernel, eps0: f64, n: u32) -> Result<Spectrum> {
    check_probability("design erasure probability", eps0)?;
    spectrum_len(k.size(), n)?;
    let profile = one_step_profile(k)?;
    Ok(Spectrum {
        kernel: k.clone(),
        depth: n,
        design_eps: eps0,
        z: evolve_with_profile(&profile, eps0, n),
    })
}

pub(crate) fn evolve_with_profile(profile: &TransitionProfile, eps0: f64, n: u32) -> Vec<f64> {
    let l = profile.size();
    let mut z = vec![eps0];
    for _ in 0..n {
        let mut next = Vec::with_capacity(z.len() * l);
        for &parent in &z {
            next.extend((0..l).map(|t| profile.eval0(t, parent)));
        }
        z = next;
    }
    z
}

/// Normalised polarisation distance of a raw erasure vector:
/// `(1/(N·ε0²))·Σ min(|z_i|, |1−z_i|)²`.
pub fn polarisation_distance_of(z: &[f64], eps0: f64) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    if eps0 <= 0.0 {
        return Err(Error::out_of_range("normalising erasure probability", eps0));
    }
    let sum: f64 = z
        .iter()
        .map(|&zi| {
            let d = zi.abs().min((1.0 - zi).abs());
            d * d
        })
        .sum();
    Ok(sum / (z.len() as f64 * eps0 * eps0))
}

pub fn polarisation_distance(s: &Spectrum) -> Result<f64> {
    polarisation_distance_of(&s.z, s.design_eps)
}

/// 0-based indices of the `k` smallest erasure probabilities, ties to the
/// smaller index, returned in ascending order.
pub fn select_information_set(s: &Spectrum, k: usize) -> Result<Vec<usize>> {
    if k > s.len() {
        return Err(Error::out_of_range("information set size", k));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.z[a].total_cmp(&s.z[b]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Union bound on the block error probability: the sum of `z` over the
/// information set of size `k`.
pub fn bler_upper_bound(s: &Spectrum, k: usize) -> Result<f64> {
    Ok(select_information_set(s, k)?.iter().map(|&i| s.z[i]).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub rate: f64,
    pub k: usize,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BoundCurve {
    pub rows: Vec<BoundRow>,
}

impl BoundCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate,K,bound\n");
        for r in &self.rows {
            writeln!(out, "{},{},{}", fmt_sig(r.rate), r.k, fmt_sig(r.bound)).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Information size for a rate: `K = round(R·N)`.
pub fn info_size(rate: f64, n: usize) -> Result<usize> {
    check_probability("rate", rate)?;
    Ok((rate * n as f64).round() as usize)
}

pub fn bound_curve(s: &Spectrum, rates: &[f64]) -> Result<BoundCurve> {
    let rows = rates
        .iter()
        .map(|&rate| {
            let k = info_size(rate, s.len())?;
            Ok(BoundRow {
                rate,
                k,
                bound: bler_upper_bound(s, k)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BoundCurve { rows })
}

/// Bhattacharyya parameter of split channel `i` (1-based) computed by brute
/// force: every output `y ∈ {0,1,e}^N` and every input word, with the
/// split-channel law obtained by summing over future inputs.
pub fn exhaustive_split_oracle(k: &Kernel, n: u32, eps: f64, i: usize) -> Result<f64> {
    check_probability("erasure probability", eps)?;
    let len = (k.size() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if len > MAX_ORACLE_LEN as u128 {
        return Err(Error::TooLarge {
            what: "oracle block length",
            size: len,
            limit: MAX_ORACLE_LEN as u128,
        });
    }
    let len = len as usize;
    if !(1..=len).contains(&i) {
        return Err(Error::out_of_range("channel index", i));
    }
    let g = reference_generator(k, n)?;
    // codeword of every input word, bit j = x_j; bit i of the word = u_{i+1}
    let codewords: Vec<u32> = (0u32..1 << len)
        .map(|u| {
            let bits: Vec<bool> = (0..len).map(|b| (u >> b) & 1 == 1).collect();
            g.left_mul(&bits)
                .expect("square generator")
                .iter()
                .enumerate()
                .fold(0u32, |m, (j, &x)| m | (x as u32) << j)
        })
        .collect();

    let pos = i - 1;
    let prefix_mask = (1u32 << pos) - 1;
    let norm = 2f64.powi(len as i32 - 1);
    let mut split = vec![0.0f64; 1 << (pos + 1)];
    let mut z = 0.0;
    // y enumerated in base 3: digit 0 → '0', 1 → '1', 2 → 'e'
    for y in 0..3usize.pow(len as u32) {
        let mut digits = [0u8; MAX_ORACLE_LEN];
        let mut rest = y;
        for d in digits.iter_mut().take(len) {
            *d = (rest % 3) as u8;
            rest /= 3;
        }
        split.iter_mut().for_each(|v| *v = 0.0);
        for (u, &x) in codewords.iter().enumerate() {
            let w: f64 = digits[..len]
                .iter()
                .enumerate()
                .map(|(j, &d)| match d {
                    2 => eps,
                    b if b as u32 == (x >> j) & 1 => 1.0 - eps,
                    _ => 0.0,
                })
                .product();
            if w != 0.0 {
                let key = (u as u32) & (prefix_mask | 1 << pos);
                split[key as usize] += w / norm;
            }
        }
        for prefix in 0..=prefix_mask as usize {
            z += (split[prefix] * split[prefix | 1 << pos]).sqrt();
        }
    }
    Ok(z)
}
