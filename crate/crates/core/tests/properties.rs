use std::f64::consts::PI;

use asymx_core::array::{array_factor, select, select_random, SelectionKind};
use asymx_core::channel::{draw_path_set, downlink_channel, uplink_channel, ArrayGeometry, ChannelMatrix};
use asymx_core::downlink::{downlink_rates, precoder, Precoder};
use asymx_core::econ::{cost, power, Architecture, ArchitectureKind, Component, HardwareProfile};
use asymx_core::harness::{format_float, seed_stream};
use asymx_core::linalg::{complex_normal_matrix, complex_normal_vector};
use asymx_core::transfer::{transfer, TransferAlgorithm, TransferConfig};
use asymx_core::uplink::{snr_loss_closed_form, snr_loss_numeric, SnrLossInputs};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = SelectionKind> {
    prop_oneof![Just(SelectionKind::Random), Just(SelectionKind::Successive), Just(SelectionKind::Comb)]
}

fn arch() -> impl Strategy<Value = ArchitectureKind> {
    prop_oneof![
        Just(ArchitectureKind::Adbn),
        Just(ArchitectureKind::Dbm),
        Just(ArchitectureKind::Hbfn),
        Just(ArchitectureKind::Hbsn)
    ]
}

// A valid element count for `kind`; comb needs a divisor of `m`.
fn count_for(kind: SelectionKind, m: usize, frac: f64) -> usize {
    if kind == SelectionKind::Comb {
        let divisors: Vec<usize> = (1..=m).filter(|d| m.is_multiple_of(*d)).collect();
        divisors[((divisors.len() - 1) as f64 * frac) as usize]
    } else {
        1 + ((m - 1) as f64 * frac) as usize
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_in_unit_interval_and_matches_vectors(
        n in 2usize..80,
        w1 in -0.9f64..0.9,
        frac in 1e-3f64..=1.0,
        neg in any::<bool>(),
        pos in 0.0f64..=1.0,
        phi1 in 0.0f64..2.0 * PI,
        phi2 in 0.0f64..2.0 * PI,
    ) {
        let dw = frac * 2.0 / n as f64 * if neg { -1.0 } else { 1.0 };
        let w2 = (w1 + dw).clamp(-0.99, 0.99);
        let ws = w1 + pos * (w2 - w1);
        let inputs = SnrLossInputs::new(w1.asin(), w2.asin(), ws.asin(), phi1, phi2, n, 0.5).unwrap();
        let closed = snr_loss_closed_form(&inputs);
        prop_assert!(closed > 0.0 && closed < 1.0);
        let numeric = snr_loss_numeric(&inputs).unwrap();
        // The closed form subtracts from 1, so tiny losses carry ~1e-16 absolute error.
        prop_assert!((closed - numeric).abs() <= 1e-10 * numeric + 1e-14);
    }

    #[test]
    fn selection_is_sorted_and_in_range(kind in kind(), m in 2usize..200, frac in 0.0f64..=1.0, pinned in any::<bool>(), seed in any::<u64>()) {
        let n = count_for(kind, m, frac);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pinned = pinned && n >= 2;
        let sel = select(kind, m, n, pinned, &mut rng).unwrap();
        let idx = sel.indices();
        prop_assert_eq!(idx.len(), n);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx[0] >= 1 && *idx.last().unwrap() <= m);
        if pinned && kind == SelectionKind::Random {
            prop_assert_eq!(idx[0], 1);
            prop_assert_eq!(*idx.last().unwrap(), m);
        }
    }

    #[test]
    fn comb_rejects_non_divisors(m in 2usize..200, n in 1usize..200) {
        prop_assume!(n <= m && m % n != 0);
        prop_assert!(select(SelectionKind::Comb, m, n, false, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn broadside_array_factor_is_element_count(kind in kind(), m in 2usize..160, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let n = count_for(kind, m, frac);
        let sel = select(kind, m, n, false, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let geo = ArrayGeometry::half_wavelength(m).unwrap();
        let af = array_factor(&sel, &geo, &[0.0, 0.3]).unwrap();
        prop_assert!((af[0] - n as f64).abs() < 1e-9);
        prop_assert!(af[1] <= n as f64 + 1e-9);
    }

    #[test]
    fn uplink_is_subsampled_downlink(m in 2usize..128, frac in 0.0f64..=1.0, paths in 1usize..5, seed in any::<u64>()) {
        let n = 1 + ((m - 1) as f64 * frac) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geo = ArrayGeometry::half_wavelength(m).unwrap();
        let sel = select_random(m, n, false, &mut rng).unwrap();
        let p = draw_path_set(paths, -1.0, 1.0, &mut rng).unwrap();
        let up = uplink_channel(&p, &sel, &geo).unwrap();
        let down = downlink_channel(&p, &geo);
        for (u, i) in up.iter().zip(sel.indices()) {
            prop_assert!((u - down[i - 1]).norm() < 1e-12);
        }
    }

    #[test]
    fn precoder_columns_are_unit_norm(k in 1usize..8, extra in 0usize..24, seed in any::<u64>(), zf in any::<bool>()) {
        let m = k + extra + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = ChannelMatrix::downlink(complex_normal_matrix(&mut rng, k, m, 1.0));
        let kind = if zf { Precoder::Zf } else { Precoder::Mrt };
        let w = precoder(&h, kind).unwrap();
        for c in w.column_iter() {
            prop_assert!((c.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn downlink_rates_grow_with_snr(k in 1usize..6, seed in any::<u64>(), lo in -10.0f64..20.0, step in 0.5f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let true_h = ChannelMatrix::downlink(complex_normal_matrix(&mut rng, k, 16, 1.0));
        let noisy = ChannelMatrix::downlink(true_h.data() + complex_normal_matrix(&mut rng, k, 16, 0.1));
        let w = precoder(&noisy, Precoder::Zf).unwrap();
        let a: f64 = downlink_rates(&true_h, &w, 10f64.powf(lo / 10.0)).unwrap().iter().sum();
        let b: f64 = downlink_rates(&true_h, &w, 10f64.powf((lo + step) / 10.0)).unwrap().iter().sum();
        prop_assert!(b >= a);
    }

    #[test]
    fn cost_is_linear_in_component_prices(kind in arch(), m in 2usize..256, frac in 0.0f64..=1.0, scale in 0.1f64..10.0) {
        let n = 1 + ((m - 1) as f64 * frac) as usize;
        let a = Architecture::new(kind, m, n).unwrap();
        let base = HardwareProfile::reference();
        let mut scaled = base.clone();
        for c in Component::ALL {
            scaled.set_cost(c, base.cost(c) * scale).unwrap();
        }
        prop_assert!((cost(&a, &scaled) - scale * cost(&a, &base)).abs() <= 1e-9 * cost(&a, &scaled));
    }

    #[test]
    fn power_is_affine_in_epsilon(kind in arch(), m in 2usize..256, frac in 0.0f64..=1.0, e in 0.0f64..=1.0) {
        let n = 1 + ((m - 1) as f64 * frac) as usize;
        let a = Architecture::new(kind, m, n).unwrap();
        let p = HardwareProfile::reference();
        let (p0, p1, pe) = (power(&a, &p, 0.0).unwrap(), power(&a, &p, 1.0).unwrap(), power(&a, &p, e).unwrap());
        prop_assert!((pe - ((1.0 - e) * p0 + e * p1)).abs() < 1e-9 * p0.max(p1));
    }

    #[test]
    fn float_format_keeps_nine_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = format_float(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs());
    }

    #[test]
    fn seed_streams_are_reproducible(master in any::<u64>(), trial in 0u64..1_000_000, user in 0usize..64) {
        let a: Vec<u64> = (0..4).map({ let mut r = seed_stream(master, trial, user); move |_| r.random() }).collect();
        let b: Vec<u64> = (0..4).map({ let mut r = seed_stream(master, trial, user); move |_| r.random() }).collect();
        let c: Vec<u64> = (0..4).map({ let mut r = seed_stream(master, trial + 1, user); move |_| r.random() }).collect();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a, &c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mnomp_residual_never_increases(seed in any::<u64>(), snr_db in -5.0f64..30.0, paths in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geo = ArrayGeometry::half_wavelength(128).unwrap();
        let sel = select_random(128, 32, false, &mut rng).unwrap();
        let p = draw_path_set(paths, -PI / 3.0, PI / 3.0, &mut rng).unwrap();
        let rho = 10f64.powf(snr_db / 10.0);
        let h = uplink_channel(&p, &sel, &geo).unwrap() + complex_normal_vector(&mut rng, 32, 1.0 / rho);
        let cfg = TransferConfig::new(TransferAlgorithm::Mnomp, 32.0 / rho);
        let r = transfer(TransferAlgorithm::Mnomp, &h, &sel, &geo, &cfg).unwrap();
        prop_assert!(r.residual_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(r.num_paths() <= cfg.max_paths);
    }

    #[test]
    fn dft_transfer_gains_match_frequencies(seed in any::<u64>(), paths in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geo = ArrayGeometry::half_wavelength(64).unwrap();
        let sel = select_random(64, 16, false, &mut rng).unwrap();
        let p = draw_path_set(paths, -PI / 3.0, PI / 3.0, &mut rng).unwrap();
        let h = uplink_channel(&p, &sel, &geo).unwrap();
        let cfg = TransferConfig::new(TransferAlgorithm::Dft, 0.1);
        let r = transfer(TransferAlgorithm::Dft, &h, &sel, &geo, &cfg).unwrap();
        prop_assert_eq!(r.gains.len(), r.spatial_freqs.len());
        prop_assert_eq!(r.channel.len(), 64);
        prop_assert!(r.spatial_freqs.iter().all(|w| (-1.0..1.0).contains(w)));
    }
}
