//! Successive-cancellation decoding on the erasure channel.
//!
//! On the BEC every likelihood ratio is 0, 1 or ∞, so a kernel-level
//! decision reduces to a GF(2) determination test: once the contributions of
//! already-decided inputs are removed, input `u_t` is known iff its unit
//! vector lies in the span of the non-erased kernel columns restricted to
//! rows `t..l`.
//!
//! The decoder is bit-sliced: every symbol carries 64 independent lanes, one
//! per received word, as a `known` mask and a `val` mask (`val` is zero
//! wherever `known` is). The natural-order successive-cancellation schedule
//! runs on `G^{⊗n}`, which sees the received word in digit-reversed order;
//! this is the same split-channel tree the stride-permuted encoder builds.

use super::{digit_reverse, PolarCode, Symbol};
use crate::error::{Error, Result};
use crate::gf2::{span_combination, Kernel};

/// Decoder output. Flags mark information positions whose decision was
/// ambiguous and defaulted to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub u_hat: Vec<bool>,
    pub erased_flags: Vec<bool>,
    pub frame_erased: bool,
}

/// Decides input `pos` (1-based) of one kernel block given the previous
/// inputs of the block and the `l` observed kernel outputs.
pub fn kernel_step_decide(k: &Kernel, pos: usize, prior: &[bool], x: &[Symbol]) -> Result<Symbol> {
    let l = k.size();
    if !(1..=l).contains(&pos) {
        return Err(Error::out_of_range("kernel input position", pos));
    }
    if prior.len() != pos - 1 || x.len() != l {
        return Err(Error::Dimension(format!(
            "kernel step at position {pos} needs {} prior bits and {l} observations, got {} and {}",
            pos - 1,
            prior.len(),
            x.len()
        )));
    }
    let t = pos - 1;
    let unknowns = l - t;
    // residual r_j = x_j minus the contribution of the known inputs
    let mut observed = Vec::new();
    let mut residual = 0u64;
    for (j, s) in x.iter().enumerate() {
        if let Some(bit) = s.bit() {
            let known = (0..t).filter(|&i| prior[i] && k.get(i, j)).count() % 2 == 1;
            if bit ^ known {
                residual |= 1 << j;
            }
            observed.push(j);
        }
    }
    // the observations must admit at least one completion of u_t..u_l
    let mut echelon: Vec<(u64, u64)> = Vec::new();
    for &j in &observed {
        let mut row = k.column_tail(j, t) | ((residual >> j) & 1) << unknowns;
        for &(p, r) in &echelon {
            if row & p != 0 {
                row ^= r;
            }
        }
        if row == 1 << unknowns {
            return Err(Error::Integrity(format!(
                "observations {} contradict the decided inputs at kernel position {pos}",
                super::format_symbols(x)
            )));
        }
        if row != 0 {
            echelon.push((row & row.wrapping_neg(), row));
        }
    }
    let cols = observed.iter().map(|&j| (j, k.column_tail(j, t)));
    Ok(match span_combination(1, cols) {
        Some(c) => Symbol::from_bit((residual & c).count_ones() % 2 == 1),
        None => Symbol::Erased,
    })
}

/// Per kernel position, the erasure patterns under which the input is
/// determined, with the output combination `c` that isolates it and the
/// prior inputs `q` to cancel: `u_t = Σ_{j∈c} x_j + Σ_{i∈q} u_i`.
#[derive(Clone, Debug)]
pub(crate) struct StepTable {
    patterns: Vec<Vec<(u64, u64, u64)>>,
}

impl StepTable {
    pub(crate) fn new(k: &Kernel) -> Self {
        let l = k.size();
        let patterns = (0..l)
            .map(|t| {
                (0u64..1 << l)
                    .filter_map(|erased| {
                        let cols = (0..l)
                            .filter(|j| (erased >> j) & 1 == 0)
                            .map(|j| (j, k.column_tail(j, t)));
                        span_combination(1, cols).map(|c| {
                            let q = (0..t)
                                .filter(|&i| (k.row_mask(i) & c).count_ones() % 2 == 1)
                                .fold(0u64, |m, i| m | 1 << i);
                            (erased, c, q)
                        })
                    })
                    .collect()
            })
            .collect();
        StepTable { patterns }
    }
}

/// 64 symbols side by side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Lanes {
    pub known: u64,
    pub val: u64,
}

/// Reusable bit-sliced SC decoder for one code.
pub(crate) struct LaneDecoder<'a> {
    code: &'a PolarCode,
    columns: Vec<u64>,
    table: StepTable,
    l: usize,
    n: usize,
    // obs[d]: observations of the node currently active at depth d
    obs: Vec<Vec<Lanes>>,
    // part[d]: re-encoded outputs of the finished children of that node
    part: Vec<Vec<u64>>,
    pub u_hat: Vec<u64>,
    pub flags: Vec<u64>,
    pub conflict: u64,
    pub first_conflict: Option<usize>,
    active: u64,
    // lanes with an undetermined information bit so far; later decisions in
    // these lanes rest on a guess, so frozen clashes there are expected
    guessed: u64,
    // decoder-order index -> channel index
    perm: Vec<usize>,
    // zero_frozen[d][v]: every input under node v at depth d is frozen to 0
    // (populated only when such subtrees may be skipped)
    zero_frozen: Vec<Vec<bool>>,
}

impl<'a> LaneDecoder<'a> {
    /// Decoder that checks every frozen decision against the observations.
    pub(crate) fn new(code: &'a PolarCode) -> Self {
        Self::build(code, false)
    }

    /// Decoder that skips subtrees whose inputs are all frozen to zero. Their
    /// decisions are the same; clashes with the observations inside them are
    /// not detected.
    pub(crate) fn skipping_frozen(code: &'a PolarCode) -> Self {
        Self::build(code, true)
    }

    fn build(code: &'a PolarCode, skip: bool) -> Self {
        let k = code.kernel();
        let l = k.size();
        let n = code.depth() as usize;
        let size = |d: usize| l.pow((n - d) as u32);
        let zero_frozen = (0..=n)
            .map(|d| {
                if !skip || d == 0 || d == n {
                    return Vec::new();
                }
                let m = size(d);
                (0..code.len() / m)
                    .map(|v| (v * m..(v + 1) * m).all(|i| code.is_frozen(i) && !code.frozen_value(i)))
                    .collect()
            })
            .collect();
        LaneDecoder {
            code,
            columns: (0..l)
                .map(|j| (0..l).filter(|&i| k.get(i, j)).fold(0u64, |m, i| m | 1 << i))
                .collect(),
            table: StepTable::new(k),
            l,
            n,
            obs: (0..=n).map(|d| vec![Lanes::default(); size(d)]).collect(),
            part: (0..=n).map(|d| vec![0; size(d)]).collect(),
            u_hat: vec![0; code.len()],
            flags: vec![0; code.len()],
            conflict: 0,
            first_conflict: None,
            active: 0,
            guessed: 0,
            perm: (0..code.len()).map(|i| digit_reverse(i, l, n as u32)).collect(),
            zero_frozen,
        }
    }

    /// Decodes the lanes selected by `active`; `y` is in channel order.
    pub(crate) fn decode(&mut self, y: &[Lanes], active: u64) {
        debug_assert_eq!(y.len(), self.code.len());
        self.active = active;
        self.conflict = 0;
        self.first_conflict = None;
        self.guessed = 0;
        for (o, &src) in self.obs[0].iter_mut().zip(&self.perm) {
            let s = y[src];
            *o = Lanes {
                known: s.known & active,
                val: s.val & s.known & active,
            };
        }
        self.node(0, 0, 0);
    }

    fn node(&mut self, d: usize, leaf: usize, slot: usize) {
        if d == self.n {
            self.leaf(leaf, slot);
            return;
        }
        let l = self.l;
        let m = self.obs[d].len();
        if self.zero_frozen[d].get(leaf / m).copied().unwrap_or(false) {
            self.u_hat[leaf..leaf + m].fill(0);
            self.flags[leaf..leaf + m].fill(0);
            self.part[d - 1][slot * m..(slot + 1) * m].fill(0);
            return;
        }
        let sub = m / l;
        for t in 0..l {
            {
                let (upper, lower) = self.obs.split_at_mut(d + 1);
                step(&self.table.patterns[t], l, sub, &upper[d], &self.part[d], &mut lower[0]);
            }
            self.node(d + 1, leaf + t * sub, t);
        }
        if d > 0 {
            let (upper, lower) = self.part.split_at_mut(d);
            let children = &lower[0];
            let out = &mut upper[d - 1][slot * m..(slot + 1) * m];
            for (j, &rows) in self.columns.iter().enumerate() {
                let seg = &mut out[j * sub..(j + 1) * sub];
                seg.iter_mut().for_each(|v| *v = 0);
                for t in (0..l).filter(|t| (rows >> t) & 1 == 1) {
                    for (o, c) in seg.iter_mut().zip(&children[t * sub..(t + 1) * sub]) {
                        *o ^= c;
                    }
                }
            }
        }
    }

    fn leaf(&mut self, pos: usize, slot: usize) {
        let s = self.obs[self.n][0];
        let decision = if self.code.is_frozen(pos) {
            let fv = if self.code.frozen_value(pos) { self.active } else { 0 };
            let clash = s.known & (s.val ^ fv) & !self.guessed;
            if clash != 0 && self.first_conflict.is_none() {
                self.first_conflict = Some(pos);
            }
            self.conflict |= clash;
            self.flags[pos] = 0;
            fv
        } else {
            self.flags[pos] = !s.known & self.active;
            self.guessed |= self.flags[pos];
            s.val
        };
        self.u_hat[pos] = decision;
        if self.n > 0 {
            self.part[self.n - 1][slot] = decision;
        }
    }
}

/// One kernel position for `sub` parallel blocks: block `p` reads output
/// `j` from `src[j·sub + p]` and the earlier decisions from `prior`.
#[inline]
fn step(patterns: &[(u64, u64, u64)], l: usize, sub: usize, src: &[Lanes], prior: &[u64], dst: &mut [Lanes]) {
    let mut xs = [Lanes::default(); super::MAX_CODEC_KERNEL];
    for p in 0..sub {
        for (j, x) in xs.iter_mut().enumerate().take(l) {
            *x = src[j * sub + p];
        }
        let mut out = Lanes::default();
        for &(erased, c, q) in patterns {
            let mut ind = !0u64;
            for (j, x) in xs.iter().enumerate().take(l) {
                ind &= if (erased >> j) & 1 == 1 { !x.known } else { x.known };
            }
            if ind == 0 {
                continue;
            }
            let mut v = 0u64;
            let mut cm = c;
            while cm != 0 {
                v ^= xs[cm.trailing_zeros() as usize].val;
                cm &= cm - 1;
            }
            let mut qm = q;
            while qm != 0 {
                v ^= prior[qm.trailing_zeros() as usize * sub + p];
                qm &= qm - 1;
            }
            out.known |= ind;
            out.val |= ind & v;
        }
        dst[p] = out;
    }
}

/// Successive-cancellation decoding of one received word. Ambiguous
/// information decisions default to zero and are flagged; later decisions
/// build on that default, so a frozen-value clash is only reported as an
/// integrity error when no information bit before it was flagged.
pub fn sc_decode(code: &PolarCode, y: &[Symbol]) -> Result<DecodeResult> {
    if y.len() != code.len() {
        return Err(Error::Dimension(format!(
            "received word of length {} for block length {}",
            y.len(),
            code.len()
        )));
    }
    let lanes: Vec<Lanes> = y
        .iter()
        .map(|s| match s {
            Symbol::Zero => Lanes { known: 1, val: 0 },
            Symbol::One => Lanes { known: 1, val: 1 },
            Symbol::Erased => Lanes::default(),
        })
        .collect();
    let mut dec = LaneDecoder::new(code);
    dec.decode(&lanes, 1);
    if dec.conflict & 1 != 0 {
        return Err(Error::Integrity(format!(
            "received word contradicts the frozen value at position {}",
            dec.first_conflict.unwrap_or_default()
        )));
    }
    let u_hat: Vec<bool> = dec.u_hat.iter().map(|w| w & 1 == 1).collect();
    let erased_flags: Vec<bool> = dec.flags.iter().map(|w| w & 1 == 1).collect();
    Ok(DecodeResult {
        frame_erased: erased_flags.iter().any(|&f| f),
        u_hat,
        erased_flags,
    })
}
