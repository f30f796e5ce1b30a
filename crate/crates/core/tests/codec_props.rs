mod common;

use common::{all_words, any_invertible_kernel, determined_prefix, g2, ge};
use genpolar::codec::{
    digit_reverse, format_symbols, map_oracle_decode, parse_symbols, reference_generator, sc_decode, stride_permutation,
    PolarCode, Symbol,
};
use genpolar::gf2::Kernel;
use genpolar::sim::bec_transmit;
use proptest::prelude::*;

/// Code of length `l^n` with the given frozen mask (frozen values from
/// `values`, cycled).
fn code_with_mask(k: Kernel, n: u32, mask: &[bool], values: &[bool]) -> PolarCode {
    let nf = mask.iter().filter(|&&f| f).count();
    let fv: Vec<bool> = (0..nf).map(|i| values.get(i % values.len().max(1)).copied().unwrap_or(false)).collect();
    PolarCode::new(k, n, mask.to_vec(), &fv, 0.5).unwrap()
}

fn small_code() -> impl Strategy<Value = (PolarCode, Vec<bool>)> {
    (any_invertible_kernel(2..=4), 1u32..=3)
        .prop_filter("short enough for the oracle", |(k, n)| k.size().pow(*n) <= 8)
        .prop_flat_map(|(k, n)| {
            let len = k.size().pow(n);
            (
                Just(k),
                Just(n),
                prop::collection::vec(any::<bool>(), len),
                prop::collection::vec(any::<bool>(), len),
                prop::collection::vec(any::<bool>(), len),
            )
        })
        .prop_map(|(k, n, mask, values, u)| {
            let code = code_with_mask(k, n, &mask, &values);
            let info: Vec<bool> = u[..code.info_size()].to_vec();
            (code, info)
        })
}

proptest! {
    #[test]
    fn encoder_matches_generator(k in any_invertible_kernel(2..=4), n in 0u32..=3, seed in any::<u64>()) {
        let len = k.size().pow(n);
        let code = PolarCode::design(k.clone(), n, 0.5, len).unwrap();
        let u: Vec<bool> = (0..len).map(|i| (seed.rotate_left(i as u32 % 64) ^ (i as u64 / 64)) & 1 == 1).collect();
        let g = reference_generator(&k, n).unwrap();
        prop_assert_eq!(code.encode(&u).unwrap(), g.left_mul(&u).unwrap());
    }

    #[test]
    fn clean_channel_round_trip(k in any_invertible_kernel(2..=4), n in 1u32..=3, rate in 0.0f64..=1.0, bits in prop::collection::vec(any::<bool>(), 64)) {
        let code = PolarCode::with_rate(k, n, 0.5, rate).unwrap();
        let info: Vec<bool> = (0..code.info_size()).map(|i| bits[i % 64]).collect();
        let u = code.embed(&info).unwrap();
        let y: Vec<Symbol> = code.encode(&u).unwrap().into_iter().map(Symbol::from_bit).collect();
        let r = sc_decode(&code, &y).unwrap();
        prop_assert_eq!(r.u_hat, u);
        prop_assert!(!r.frame_erased);
    }

    #[test]
    fn determined_decisions_are_correct((code, info) in small_code(), eps in 0.0f64..=1.0, trial in 0u64..1000) {
        let u = code.embed(&info).unwrap();
        let y = bec_transmit(&code.encode(&u).unwrap(), eps, 9, trial).unwrap();
        let r = sc_decode(&code, &y).unwrap();
        let (dec, flags) = determined_prefix(&r);
        for i in 0..dec.len() {
            if !flags[i] {
                prop_assert_eq!(dec[i], u[i], "position {}", i);
            }
        }
        if !r.frame_erased {
            prop_assert_eq!(r.u_hat, u);
        }
    }

    #[test]
    fn sc_agrees_with_map_on_channel_outputs((code, info) in small_code(), eps in 0.0f64..=1.0, trial in 0u64..1000) {
        let u = code.embed(&info).unwrap();
        let y = bec_transmit(&code.encode(&u).unwrap(), eps, 3, trial).unwrap();
        let sc = sc_decode(&code, &y).unwrap();
        let map = map_oracle_decode(&code, &y).unwrap();
        prop_assert_eq!(determined_prefix(&sc), determined_prefix(&map));
        prop_assert_eq!(sc.frame_erased, map.frame_erased);
    }

    #[test]
    fn more_erasures_never_help((code, info) in small_code(), trial in 0u64..1000, extra in any::<u8>()) {
        let u = code.embed(&info).unwrap();
        let y = bec_transmit(&code.encode(&u).unwrap(), 0.3, 5, trial).unwrap();
        let worse: Vec<Symbol> = y
            .iter()
            .enumerate()
            .map(|(j, &s)| if (extra >> (j % 8)) & 1 == 1 { Symbol::Erased } else { s })
            .collect();
        let first = |r: &genpolar::codec::DecodeResult| r.erased_flags.iter().position(|&f| f).unwrap_or(usize::MAX);
        let a = sc_decode(&code, &y).unwrap();
        let b = sc_decode(&code, &worse).unwrap();
        prop_assert!(first(&b) <= first(&a));
    }

    #[test]
    fn descriptor_round_trip((code, _) in small_code()) {
        let json = code.to_json().unwrap();
        prop_assert_eq!(PolarCode::from_json(&json).unwrap(), code);
    }

    #[test]
    fn digit_reversal_is_an_involution(l in 2usize..=5, n in 0u32..=4, i in any::<usize>()) {
        let len = l.pow(n);
        let i = i % len;
        prop_assert_eq!(digit_reverse(digit_reverse(i, l, n), l, n), i);
    }
}

#[test]
fn sc_agrees_with_map_on_every_word() {
    for (k, n) in [(g2(), 2u32), (Kernel::parse("100,110,011").unwrap(), 1), (ge(), 1)] {
        let len = k.size().pow(n);
        for mask in 0u32..1 << len {
            let frozen: Vec<bool> = (0..len).map(|i| (mask >> i) & 1 == 1).collect();
            for values in [[false].as_slice(), &[true, false]] {
                let code = code_with_mask(k.clone(), n, &frozen, values);
                for y in all_words(len) {
                    match (sc_decode(&code, &y), map_oracle_decode(&code, &y)) {
                        (Ok(a), Ok(b)) => assert_eq!(
                            determined_prefix(&a),
                            determined_prefix(&b),
                            "{code} mask {frozen:?} y {}",
                            format_symbols(&y)
                        ),
                        (Err(_), Err(_)) => {}
                        (a, b) => panic!("{code} y {}: sc {a:?} map {b:?}", format_symbols(&y)),
                    }
                }
            }
        }
    }
}

#[test]
fn stride_permutation_is_a_bijection() {
    for (n, l) in [(8, 2), (9, 3), (64, 4), (12, 3)] {
        let mut p = stride_permutation(n, l).unwrap();
        p.sort_unstable();
        assert_eq!(p, (0..n).collect::<Vec<_>>());
    }
    assert!(stride_permutation(10, 3).is_err());
}

#[test]
fn symbol_text_round_trip() {
    let y = parse_symbols("01e1e").unwrap();
    assert_eq!(format_symbols(&y), "01e1e");
    assert!(parse_symbols("012").is_err());
}

#[test]
fn descriptor_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("code.json");
    let code = PolarCode::design(ge(), 2, 0.5, 5).unwrap();
    code.write_json(&path).unwrap();
    assert_eq!(PolarCode::read_json(&path).unwrap(), code);
    std::fs::write(&path, r#"{"kernel": 3}"#).unwrap();
    assert!(PolarCode::read_json(&path).is_err());
    assert!(PolarCode::read_json(&dir.path().join("missing.json")).is_err());
}

#[test]
fn singular_kernels_cannot_build_codes() {
    let k = Kernel::parse("11,11").unwrap();
    assert!(PolarCode::design(k, 2, 0.5, 2).is_err());
}
