use proptest::prelude::*;
use rand::Rng;
use symdec_codes::enumerate::for_each_error_up_to_weight;
use symdec_codes::{builtin, Pauli, PauliVector, Syndrome};
use symdec_core::dataset::{make_training_set, Dataset};
use symdec_core::evalbench::*;
use symdec_core::lut::{build_lut_decoder, build_lut_decoder_with_budget};
use symdec_core::noise::NoiseModel;
use symdec_core::seeding::derived_rng;
use symdec_core::CoreError;

fn reals(e: &PauliVector) -> Vec<f64> {
    e.to_bits().into_iter().map(f64::from).collect()
}

#[test]
fn adjudication_examples() {
    let code = builtin("color-d5").unwrap();
    let mut rng = derived_rng(1, &[]);
    let noise = NoiseModel::new(0.2).unwrap();
    for _ in 0..50 {
        let e = noise.sample_error(code.n(), &mut rng);
        assert_eq!(adjudicate(&code, &e, &reals(&e)).unwrap(), Outcome::Success);
        let shifted = e.mul(&code.rows()[rng.gen_range(0..code.num_rows())]).unwrap();
        assert_eq!(adjudicate(&code, &e, &reals(&shifted)).unwrap(), Outcome::Success);
        let logical = e.mul(code.logical_x()).unwrap();
        assert_eq!(adjudicate(&code, &e, &reals(&logical)).unwrap(), Outcome::LogicalFailure);
    }
    let e = PauliVector::single(code.n(), 3, Pauli::Y);
    assert_eq!(adjudicate(&code, &e, &vec![0.0; 34]).unwrap(), Outcome::LogicalFailure);
    // Values just above the threshold count as set bits.
    let soft: Vec<f64> = reals(&e).iter().map(|&b| if b > 0.0 { 0.51 } else { 0.49 }).collect();
    assert_eq!(adjudicate(&code, &e, &soft).unwrap(), Outcome::Success);
    assert!(matches!(adjudicate(&code, &e, &[0.0; 3]), Err(CoreError::Dimension { .. })));
}

#[test]
fn noise_model_frequencies() {
    assert!(NoiseModel::new(0.75).is_err() && NoiseModel::new(-0.1).is_err());
    let mut rng = derived_rng(2, &[]);
    let zero = NoiseModel::new(0.0).unwrap();
    assert!((0..100).all(|_| zero.sample_error(17, &mut rng).is_identity()));
    let noise = NoiseModel::new(0.05).unwrap();
    let draws = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[match noise.sample_qubit(&mut rng) {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Z => 2,
            Pauli::Y => 3,
        }] += 1;
    }
    let rate = (draws - counts[0]) as f64 / draws as f64;
    let sigma = (0.05f64 * 0.95 / draws as f64).sqrt();
    assert!((rate - 0.05).abs() < 3.0 * sigma, "rate {rate}");
    for &c in &counts[1..] {
        let r = c as f64 / draws as f64;
        assert!((r - 0.05 / 3.0).abs() < 3.0 * (0.0167f64 * 0.9833 / draws as f64).sqrt() + 1e-4);
    }
}

#[test]
fn zero_decoder_is_perfect_without_noise() {
    let code = builtin("color-d5").unwrap();
    let r = sweep(&code, &ZeroDecoder { n: 17 }, &[0.0, 1e-9], 200, 3).unwrap();
    assert!(r.points.iter().all(|p| p.failures == 0 && p.rate == 0.0));
    assert!(sweep(&code, &ZeroDecoder { n: 17 }, &[0.01], 0, 3).is_err());
}

#[test]
fn paired_sweeps_share_error_samples() {
    let code = builtin("color-d5").unwrap();
    let lut = build_lut_decoder(&code).unwrap();
    let zero = ZeroDecoder { n: 17 };
    let grid = [0.02, 0.05];
    let paired = sweep_paired(&code, &[&zero, &lut], &grid, 1500, 7).unwrap();
    let alone = [sweep(&code, &zero, &grid, 1500, 7).unwrap(), sweep(&code, &lut, &grid, 1500, 7).unwrap()];
    assert_eq!(paired[0], alone[0]);
    assert_eq!(paired[1], alone[1]);
    // Same trial seeds produce the same errors.
    let noise = NoiseModel::new(0.05).unwrap();
    assert_eq!(trial_error(17, &noise, 7, 1, 42), trial_error(17, &noise, 7, 1, 42));
    assert_ne!(sweep(&code, &zero, &grid, 1500, 8).unwrap().points, alone[0].points);
    for p in &paired[1].points {
        assert!(p.ci_low <= p.rate && p.rate <= p.ci_high);
        assert_eq!(p.rate, p.failures as f64 / p.trials as f64);
    }
    assert!(paired[1].points[1].rate < paired[0].points[1].rate);
}

#[test]
fn wilson_interval_known_values() {
    let (lo, hi) = wilson_interval(0, 100);
    assert_eq!(lo, 0.0);
    assert!((hi - 0.036_995).abs() < 1e-5);
    let (lo, hi) = wilson_interval(50, 100);
    assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5);
}

#[test]
fn csv_and_svg_outputs() {
    let code = builtin("color-d5").unwrap();
    let lut = build_lut_decoder(&code).unwrap();
    let zero = ZeroDecoder { n: 17 };
    let r = sweep_paired(&code, &[&zero, &lut], &desk_grid(), 200, 1).unwrap();
    let csv = sweeps_to_csv(&r);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SWEEP_CSV_HEADER));
    assert_eq!(lines.count(), 20);
    let diff = difference_csv(&r[0], &r[1]).unwrap();
    assert_eq!(diff.lines().count(), 11);
    let svg = sweeps_to_svg(&r, "sweep");
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let band = difference_svg(&[(r[0].clone(), r[1].clone())], "diff").unwrap();
    assert!(band.contains("polygon"));
    assert_eq!(desk_grid().len(), 10);
    assert_eq!(full_grid().len(), 491);
    assert!((full_grid()[490] - 0.05).abs() < 1e-12);
}

#[test]
fn lut_examples_and_completeness() {
    for name in ["color-d5", "golay"] {
        let code = builtin(name).unwrap();
        let lut = build_lut_decoder(&code).unwrap();
        assert_eq!(lut.len(), 1 << code.num_rows());
        assert!(lut.lookup(&Syndrome::zeros(code.num_rows())).unwrap().is_identity());
        for idx in 0..lut.len() as u64 {
            let e = lut.entry(idx).unwrap();
            assert_eq!(code.syndrome(&e).unwrap().to_index(), idx);
        }
        for q in 0..code.n() {
            let e = PauliVector::single(code.n(), q, Pauli::X);
            let c = lut.lookup(&code.syndrome(&e).unwrap()).unwrap();
            assert_eq!(c.weight(), 1);
        }
    }
}

#[test]
fn lut_corrects_up_to_half_distance() {
    for (name, t) in [("color-d5", 2), ("golay", 3)] {
        let code = builtin(name).unwrap();
        let lut = build_lut_decoder(&code).unwrap();
        let mut failures = 0;
        for_each_error_up_to_weight(code.n(), t, |e| {
            let c = lut.lookup(&code.syndrome(e).unwrap()).unwrap();
            if !code.is_in_stabilizer_group(&e.mul(&c).unwrap()).unwrap() {
                failures += 1;
            }
        });
        assert_eq!(failures, 0, "{name}");
    }
}

#[test]
fn lut_respects_memory_budget() {
    let code = builtin("golay").unwrap();
    assert!(matches!(build_lut_decoder_with_budget(&code, 1 << 20), Err(CoreError::Resource(_))));
}

#[test]
fn dataset_round_trip_and_corruption() {
    let code = builtin("color-d5").unwrap();
    let data = make_training_set(&code, 300, &[0.01, 0.05], 4).unwrap();
    data.verify(&code).unwrap();
    assert_eq!(data, make_training_set(&code, 300, &[0.01, 0.05], 4).unwrap());
    let bytes = data.to_bytes().unwrap();
    assert_eq!(Dataset::from_bytes(&bytes, &code).unwrap(), data);
    let mut bad = bytes.clone();
    let last = bad.len() - 1;
    bad[last] ^= 1;
    assert!(Dataset::from_bytes(&bad, &code).is_err());
    assert!(Dataset::from_bytes(&bytes[..bytes.len() - 1], &code).is_err());
    let golay = builtin("golay").unwrap();
    assert!(Dataset::from_bytes(&bytes, &golay).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lut_residual_syndrome_is_zero(seed in any::<u64>()) {
        let code = builtin("color-d5").unwrap();
        let lut = build_lut_decoder(&code).unwrap();
        let e = NoiseModel::new(0.3).unwrap().sample_error(code.n(), &mut derived_rng(seed, &[]));
        let c = lut.lookup(&code.syndrome(&e).unwrap()).unwrap();
        prop_assert!(code.syndrome(&e.mul(&c).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn perfect_prediction_always_succeeds(seed in any::<u64>()) {
        let code = builtin("golay").unwrap();
        let e = NoiseModel::new(0.4).unwrap().sample_error(code.n(), &mut derived_rng(seed, &[]));
        prop_assert_eq!(adjudicate(&code, &e, &reals(&e)).unwrap(), Outcome::Success);
    }
}
