//! Monte-Carlo simulation of polar codes over the binary erasure channel.
//!
//! Every trial draws its information bits and its erasure pattern from
//! generators seeded by `(master seed, trial index)`, so results do not depend
//! on thread count or batching. Trials are decoded 64 at a time with the
//! bit-sliced SC decoder and tallied in trial order, which makes the stopping
//! point deterministic as well.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::bec::check_probability;
use crate::codec::{kernel_columns, encode_in_place, LaneDecoder, Lanes, PolarCode, Symbol};
use crate::error::{Error, Result};
use crate::io::{fmt_sig, write_atomic};

/// Two-sided 95% normal quantile.
const Z_TWO_SIDED: f64 = 1.959_963_984_540_054;
/// One-sided 95% normal quantile, used when the count sits on a boundary.
const Z_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

const STREAM_SOURCE: u64 = 0;
const STREAM_CHANNEL: u64 = 1;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn trial_rng(master_seed: u64, trial: u64, stream: u64) -> Xoshiro256PlusPlus {
    let h = splitmix64(splitmix64(splitmix64(master_seed) ^ trial) ^ stream);
    Xoshiro256PlusPlus::seed_from_u64(h)
}

/// Erasure threshold on 32-bit uniforms: a symbol is erased iff its draw is
/// below `round(ε·2^32)`, so ε is resolved to 2^-32.
fn erasure_threshold(eps: f64) -> u64 {
    (eps * 4_294_967_296.0).round() as u64
}

/// Memoryless erasure channel for one trial. Each 64-bit draw of the trial
/// generator decides two consecutive symbols, low half first.
pub struct BecChannel {
    eps: f64,
    threshold: u64,
    rng: Xoshiro256PlusPlus,
    spare: Option<u32>,
}

impl BecChannel {
    pub fn new(eps: f64, master_seed: u64, trial: u64) -> Result<Self> {
        check_probability("channel erasure probability", eps)?;
        Ok(BecChannel {
            eps,
            threshold: erasure_threshold(eps),
            rng: trial_rng(master_seed, trial, STREAM_CHANNEL),
            spare: None,
        })
    }

    pub fn erasure_probability(&self) -> f64 {
        self.eps
    }

    /// Draws whether the next symbol is erased.
    pub fn next_erased(&mut self) -> bool {
        let u = match self.spare.take() {
            Some(u) => u,
            None => {
                let r = self.rng.next_u64();
                self.spare = Some((r >> 32) as u32);
                r as u32
            }
        };
        (u as u64) < self.threshold
    }

    /// Fills `out` with the survival pattern of the next `64·out.len()`
    /// symbols (bit set = not erased), consuming draws exactly as
    /// [`BecChannel::next_erased`] would.
    fn fill_known(&mut self, out: &mut [u64]) {
        debug_assert!(self.spare.is_none());
        let thr = self.threshold;
        for w in out.iter_mut() {
            let mut erased = 0u64;
            for b in (0..64).step_by(2) {
                let r = self.rng.next_u64();
                erased |= ((((r & 0xffff_ffff) < thr) as u64) | ((((r >> 32) < thr) as u64) << 1)) << b;
            }
            *w = !erased;
        }
    }

    pub fn transmit(&mut self, x: &[bool]) -> Vec<Symbol> {
        x.iter()
            .map(|&b| if self.next_erased() { Symbol::Erased } else { Symbol::from_bit(b) })
            .collect()
    }
}

/// Passes `x` through the channel of trial `trial` under `master_seed`.
pub fn bec_transmit(x: &[bool], eps: f64, master_seed: u64, trial: u64) -> Result<Vec<Symbol>> {
    Ok(BecChannel::new(eps, master_seed, trial)?.transmit(x))
}

/// Uniform information bits of trial `trial`: bit `b` of the generator's
/// `w`-th draw is information bit `64·w + b`.
pub fn trial_info_bits(k: usize, master_seed: u64, trial: u64) -> Vec<bool> {
    let mut words = vec![0u64; k.div_ceil(64)];
    fill_info_words(&mut words, master_seed, trial);
    (0..k).map(|i| (words[i / 64] >> (i % 64)) & 1 == 1).collect()
}

fn fill_info_words(out: &mut [u64], master_seed: u64, trial: u64) {
    let mut rng = trial_rng(master_seed, trial, STREAM_SOURCE);
    out.iter_mut().for_each(|w| *w = rng.next_u64());
}

/// In-place transpose of a 64×64 bit matrix: bit `c` of row `r` moves to bit
/// `r` of row `c`.
fn transpose64(a: &mut [u64; 64]) {
    let mut j = 32;
    let mut m: u64 = 0x0000_0000_ffff_ffff;
    while j != 0 {
        let mut k = 0;
        while k < 64 {
            let t = ((a[k] >> j) ^ a[k + j]) & m;
            a[k] ^= t << j;
            a[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        m ^= m << j;
    }
}

/// Turns per-lane bit rows (`rows[lane·words + w]`) into per-position lane
/// words, calling `emit(position, lanes)` for positions below `len`.
fn lanes_from_rows(rows: &[u64], words: usize, len: usize, mut emit: impl FnMut(usize, u64)) {
    let mut block = [0u64; 64];
    for w in 0..words {
        for (lane, b) in block.iter_mut().enumerate() {
            *b = rows[lane * words + w];
        }
        transpose64(&mut block);
        for (bit, &v) in block.iter().enumerate().take(len.saturating_sub(w * 64).min(64)) {
            emit(w * 64 + bit, v);
        }
    }
}

/// When to stop a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopRule {
    /// Stop once this many frame errors are seen; 0 runs all `max_trials`.
    pub min_frame_errors: u64,
    pub max_trials: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub code_id: String,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub trials: u64,
    /// Wrong information bits, erased ones included.
    pub bit_errors: u64,
    /// Information bits left undetermined by the decoder.
    pub bit_erasures: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub fer_ci_low: f64,
    pub fer_ci_high: f64,
    pub master_seed: u64,
}

pub const SIM_CSV_HEADER: &str = "epsilon,N,K,trials,bit_errors,bit_erasures,frame_errors,ber,fer,ci_low,ci_high,seed";

impl SimReport {
    pub fn ci_half_width(&self) -> f64 {
        (self.fer_ci_high - self.fer_ci_low) / 2.0
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sig(self.epsilon),
            self.n,
            self.k,
            self.trials,
            self.bit_errors,
            self.bit_erasures,
            self.frame_errors,
            fmt_sig(self.ber),
            fmt_sig(self.fer),
            fmt_sig(self.fer_ci_low),
            fmt_sig(self.fer_ci_high),
            self.master_seed
        )
    }
}

pub fn reports_to_csv(reports: &[SimReport]) -> String {
    let mut out = format!("{SIM_CSV_HEADER}\n");
    for r in reports {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

pub fn write_reports_csv(reports: &[SimReport], path: &Path) -> Result<()> {
    write_atomic(path, reports_to_csv(reports).as_bytes())
}

/// 95% Wilson score interval for `successes` out of `trials`; one-sided at
/// the boundaries.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    if successes == 0 {
        let z2 = Z_ONE_SIDED * Z_ONE_SIDED;
        return (0.0, z2 / (n + z2));
    }
    if successes >= trials {
        let z2 = Z_ONE_SIDED * Z_ONE_SIDED;
        return (n / (n + z2), 1.0);
    }
    let p = successes as f64 / n;
    let z = Z_TWO_SIDED;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Copy, Debug, Default)]
struct Outcome {
    bit_errors: u32,
    bit_erasures: u32,
    frame_error: bool,
}

struct BatchWork<'a> {
    code: &'a PolarCode,
    columns: Vec<Vec<usize>>,
    info_positions: Vec<usize>,
    eps: f64,
    seed: u64,
}

struct BatchState<'a> {
    decoder: LaneDecoder<'a>,
    u: Vec<u64>,
    x: Vec<u64>,
    scratch: Vec<u64>,
    y: Vec<Lanes>,
    known_rows: Vec<u64>,
    info_rows: Vec<u64>,
}

impl<'a> BatchWork<'a> {
    fn state(&self) -> BatchState<'a> {
        let n = self.code.len();
        BatchState {
            decoder: LaneDecoder::skipping_frozen(self.code),
            u: vec![0; n],
            x: vec![0; n],
            scratch: Vec::with_capacity(n),
            y: vec![Lanes::default(); n],
            known_rows: vec![0; 64 * n.div_ceil(64)],
            info_rows: vec![0; 64 * self.info_positions.len().div_ceil(64)],
        }
    }

    /// Runs trials `first..first + count` (count ≤ 64) and returns their
    /// outcomes in trial order.
    fn run(&self, st: &mut BatchState<'a>, first: u64, count: usize) -> Vec<Outcome> {
        let code = self.code;
        let n = code.len();
        let k = self.info_positions.len();
        let active = if count == 64 { !0 } else { (1u64 << count) - 1 };
        let (n_words, k_words) = (n.div_ceil(64), k.div_ceil(64));

        st.known_rows.fill(0);
        st.info_rows.fill(0);
        for lane in 0..count {
            let trial = first + lane as u64;
            fill_info_words(&mut st.info_rows[lane * k_words..(lane + 1) * k_words], self.seed, trial);
            BecChannel::new(self.eps, self.seed, trial)
                .expect("checked by caller")
                .fill_known(&mut st.known_rows[lane * n_words..(lane + 1) * n_words]);
        }
        for (i, w) in st.u.iter_mut().enumerate() {
            *w = if code.frozen_value(i) { active } else { 0 };
        }
        let (u, positions) = (&mut st.u, &self.info_positions);
        lanes_from_rows(&st.info_rows, k_words, k, |i, v| u[positions[i]] = v);
        let y = &mut st.y;
        lanes_from_rows(&st.known_rows, n_words, n, |j, v| y[j].known = v);

        st.x.copy_from_slice(&st.u);
        encode_in_place(&self.columns, &mut st.x, &mut st.scratch);
        for (y, &v) in st.y.iter_mut().zip(&st.x) {
            y.val = v & y.known;
        }

        st.decoder.decode(&st.y, active);

        let mut out = vec![Outcome::default(); count];
        for &pos in &self.info_positions {
            let flags = st.decoder.flags[pos];
            let mut wrong = ((st.decoder.u_hat[pos] ^ st.u[pos]) | flags) & active;
            while wrong != 0 {
                let lane = wrong.trailing_zeros() as usize;
                out[lane].bit_errors += 1;
                out[lane].frame_error = true;
                wrong &= wrong - 1;
            }
            let mut erased = flags & active;
            while erased != 0 {
                let lane = erased.trailing_zeros() as usize;
                out[lane].bit_erasures += 1;
                erased &= erased - 1;
            }
        }
        out
    }
}

/// Simulates `code` at channel erasure probability `eps`.
pub fn run_monte_carlo(code: &PolarCode, eps: f64, stop: StopRule, master_seed: u64) -> Result<SimReport> {
    check_probability("channel erasure probability", eps)?;
    if stop.max_trials == 0 {
        return Err(Error::out_of_range("maximum trial count", 0));
    }
    let work = BatchWork {
        code,
        columns: kernel_columns(code.kernel()),
        info_positions: code.info_positions(),
        eps,
        seed: master_seed,
    };

    let batches_per_wave = 64 * rayon::current_num_threads().max(1) as u64;
    let mut trials = 0u64;
    let mut bit_errors = 0u64;
    let mut bit_erasures = 0u64;
    let mut frame_errors = 0u64;
    let mut done = false;
    let mut next_batch = 0u64;
    while !done {
        let remaining = stop.max_trials - next_batch * 64;
        let wave = remaining.div_ceil(64).min(batches_per_wave);
        let results: Vec<Vec<Outcome>> = (next_batch..next_batch + wave)
            .into_par_iter()
            .map_init(
                || work.state(),
                |st, b| {
                    let first = b * 64;
                    let count = (stop.max_trials - first).min(64) as usize;
                    work.run(st, first, count)
                },
            )
            .collect();
        next_batch += wave;
        'tally: for o in results.iter().flatten() {
            trials += 1;
            bit_errors += o.bit_errors as u64;
            bit_erasures += o.bit_erasures as u64;
            frame_errors += o.frame_error as u64;
            if (stop.min_frame_errors > 0 && frame_errors >= stop.min_frame_errors) || trials == stop.max_trials {
                done = true;
                break 'tally;
            }
        }
    }

    let k = code.info_size();
    let (fer_ci_low, fer_ci_high) = wilson_interval(frame_errors, trials);
    Ok(SimReport {
        code_id: code.to_string(),
        n: code.len(),
        k,
        epsilon: eps,
        trials,
        bit_errors,
        bit_erasures,
        frame_errors,
        ber: if k == 0 { 0.0 } else { bit_errors as f64 / (k as f64 * trials as f64) },
        fer: frame_errors as f64 / trials as f64,
        fer_ci_low,
        fer_ci_high,
        master_seed,
    })
}

/// Runs the same stopping rule and seed at each erasure probability.
pub fn run_sweep(code: &PolarCode, eps_list: &[f64], stop: StopRule, master_seed: u64) -> Result<Vec<SimReport>> {
    eps_list
        .iter()
        .map(|&eps| run_monte_carlo(code, eps, stop, master_seed))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    /// The 95% frame-error intervals overlap.
    Indistinguishable,
    /// The intervals are disjoint by `gap`.
    Distinguishable { gap: f64 },
}

/// Compares two reports taken at the same erasure probability.
pub fn compare_reports(a: &SimReport, b: &SimReport) -> Result<Verdict> {
    if (a.epsilon - b.epsilon).abs() > 1e-12 {
        return Err(Error::Mismatch(format!(
            "reports at erasure probabilities {} and {}",
            a.epsilon, b.epsilon
        )));
    }
    let gap = a.fer_ci_low.max(b.fer_ci_low) - a.fer_ci_high.min(b.fer_ci_high);
    Ok(if gap > 0.0 {
        Verdict::Distinguishable { gap }
    } else {
        Verdict::Indistinguishable
    })
}
