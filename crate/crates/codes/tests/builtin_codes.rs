use symdec_codes::{
    build_color_code_d5, build_custom, build_golay_code, builtin, classical_code_generators, classical_distance,
    code_distance, from_text, golay_parity_check_from_h1, symplectic_product, to_text, BitVec, CheckMatrix,
    Pauli, PauliVector, BUILTIN_NAMES,
};

fn assert_valid(code: &CheckMatrix) {
    let rows = code.rows();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            assert!(!symplectic_product(a, b).unwrap());
        }
        assert!(!symplectic_product(a, code.logical_x()).unwrap());
        assert!(!symplectic_product(a, code.logical_z()).unwrap());
    }
    assert!(symplectic_product(code.logical_x(), code.logical_z()).unwrap());
    let bits: Vec<BitVec> = rows.iter().map(PauliVector::to_bitvec).collect();
    assert_eq!(symdec_codes::gf2::rank(&bits), code.n() - 1);
}

#[test]
fn color_code_parameters() {
    let code = build_color_code_d5().unwrap();
    assert_eq!(code.n(), 17);
    assert_eq!(code.num_rows(), 16);
    assert_valid(&code);
    let weights: Vec<usize> = code.rows()[..8].iter().map(PauliVector::weight).collect();
    assert_eq!(weights.iter().filter(|&&w| w == 8).count(), 1);
    assert_eq!(weights.iter().filter(|&&w| w == 4).count(), 7);
    assert_eq!(code_distance(&code).unwrap(), 5);
}

#[test]
fn color_code_logicals_have_weight_five_cosets() {
    let code = build_color_code_d5().unwrap();
    assert_eq!(code.min_coset_weight(code.logical_x()).unwrap(), 5);
    assert_eq!(code.min_coset_weight(code.logical_z()).unwrap(), 5);
}

#[test]
fn golay_parameters() {
    let code = build_golay_code().unwrap();
    assert_eq!(code.n(), 23);
    assert_eq!(code.num_rows(), 22);
    assert_valid(&code);
    assert!(code.rows().iter().all(|r| r.weight() == 8));
    let h = golay_parity_check_from_h1();
    let gens = classical_code_generators(&h, 23);
    assert_eq!(gens.len(), 12);
    assert_eq!(classical_distance(&gens).unwrap(), 7);
    assert_eq!(code_distance(&code).unwrap(), 7);
}

#[test]
fn builtin_rows_roundtrip_through_build_custom_and_text() {
    for name in BUILTIN_NAMES {
        let code = builtin(name).unwrap();
        let again = build_custom(code.rows().to_vec()).unwrap();
        assert_eq!(again.rows(), code.rows());
        let text = to_text(&code);
        let parsed = from_text(&text).unwrap();
        assert_eq!(parsed.rows(), code.rows());
        assert_eq!(to_text(&parsed), text);
    }
}

#[test]
fn single_x_error_syndrome_reads_z_checks() {
    let code = build_golay_code().unwrap();
    for j in 0..code.n() {
        let s = code.syndrome(&PauliVector::single(code.n(), j, Pauli::X)).unwrap();
        for i in 0..code.num_rows() {
            assert_eq!(s.get(i), code.s_z(i, j));
        }
    }
}

#[test]
fn generator_rows_have_zero_syndrome() {
    for name in BUILTIN_NAMES {
        let code = builtin(name).unwrap();
        for r in code.rows() {
            assert!(code.syndrome(r).unwrap().is_zero());
            assert!(code.is_in_stabilizer_group(r).unwrap());
        }
        assert!(!code.is_in_stabilizer_group(code.logical_x()).unwrap());
        assert!(!code.is_in_stabilizer_group(code.logical_z()).unwrap());
    }
}
