use proptest::prelude::*;

use qaheat::encoding::saturated_variables;
use qaheat::linalg::norm2;
use qaheat::{
    assemble_system, decode, encode, inverse_index, logical_index, solve_exhaustive, BinaryEncoding, Boundary,
    HeatProblem, LinearSystem,
};

/// `||A x - b||^2` computed directly from dense rows.
fn least_squares(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, bi)| {
            let r: f64 = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() - bi;
            r * r
        })
        .sum()
}

fn bits_of(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|l| mask >> l & 1 == 1).collect()
}

/// `(A, b, R, c, d)`.
type SystemCase = (Vec<Vec<f64>>, Vec<f64>, usize, Vec<f64>, Vec<f64>);

fn system_strategy() -> impl Strategy<Value = SystemCase> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(n, r)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), n),
            prop::collection::vec(-2.0f64..2.0, n),
            Just(r),
            prop::collection::vec(0.1f64..3.0, n),
            prop::collection::vec(-2.0f64..2.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_plus_offset_is_least_squares((a, b, r, c, d) in system_strategy()) {
        let sys = LinearSystem::from_dense(&a, &b).unwrap();
        let enc = BinaryEncoding::new(r, c, d).unwrap();
        let q = encode(&sys, &enc).unwrap();
        prop_assert!(q.quadratic.keys().all(|&(l, k)| l < k));
        let n = q.size();
        for mask in 0..(1u64 << n) {
            let bits = bits_of(mask, n);
            let x = decode(&bits, &enc).unwrap();
            let direct = least_squares(&a, &b, &x);
            let via_qubo = q.energy(&bits).unwrap() + q.offset;
            let scale = direct.abs().max(q.offset.abs()).max(1.0);
            prop_assert!((direct - via_qubo).abs() <= 1e-9 * scale, "{direct} vs {via_qubo}");
        }
    }

    #[test]
    fn decoded_values_stay_in_interval(
        r in 1usize..=6,
        c in prop::collection::vec(0.01f64..100.0, 1..4),
        d_raw in prop::collection::vec(-50.0f64..50.0, 4),
        mask in any::<u64>(),
    ) {
        let d = d_raw[..c.len()].to_vec();
        let enc = BinaryEncoding::new(r, c.clone(), d).unwrap();
        let bits = bits_of(mask, enc.num_qubits());
        let x = decode(&bits, &enc).unwrap();
        for (i, xi) in x.iter().enumerate() {
            let (lo, hi) = enc.interval(i);
            prop_assert!(*xi >= lo - 1e-12 * lo.abs().max(1.0));
            prop_assert!(*xi < hi);
        }
    }

    #[test]
    fn index_round_trip(i in 0usize..1000, r_bits in 1usize..16, r_raw in 0usize..16) {
        let r = r_raw % r_bits;
        let l = logical_index(i, r, r_bits).unwrap();
        prop_assert_eq!(inverse_index(l, r_bits).unwrap(), (i, r));
    }

    #[test]
    fn stencil_matches_brute_force(m in 2usize..=6, seed_field in prop::collection::vec(-10.0f64..10.0, 49)) {
        // Zero edges so that A x equals the stencil applied to the padded field.
        let p = HeatProblem::new(m, 1.0, Boundary::uniform(0.0));
        let sys = assemble_system(&p).unwrap();
        let side = m + 1;
        let mut field = vec![0.0; side * side];
        for j in 1..m {
            for i in 1..m {
                field[j * side + i] = seed_field[j * 7 + i];
            }
        }
        let x: Vec<f64> = (0..p.unknowns())
            .map(|row| {
                let (i, j) = p.node_of_row(row);
                field[j * side + i]
            })
            .collect();
        let ax = sys.a.mul_vec(&x).unwrap();
        for (row, value) in ax.iter().enumerate() {
            let (i, j) = p.node_of_row(row);
            let t = |i: usize, j: usize| field[j * side + i];
            let stencil = 4.0 * t(i, j) - t(i + 1, j) - t(i - 1, j) - t(i, j + 1) - t(i, j - 1);
            prop_assert!((value - stencil).abs() < 1e-12);
        }
    }
}

#[test]
fn each_variable_has_2_pow_r_distinct_levels() {
    for r in 1..=6 {
        let enc = BinaryEncoding::new(r, vec![0.7], vec![0.2]).unwrap();
        let mut values: Vec<f64> = (0..1u64 << r)
            .map(|m| decode(&bits_of(m, r), &enc).unwrap()[0])
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        assert_eq!(values.len(), 1 << r);
        for w in values.windows(2) {
            assert!((w[1] - w[0] - enc.step(0)).abs() < 1e-12);
        }
    }
}

#[test]
fn saturated_detection() {
    let bits = [true, true, false, true, false, false];
    assert_eq!(saturated_variables(&bits, 2), vec![0, 2]);
}

#[test]
fn exhaustive_beats_quantized_true_solution() {
    // Random 2x2 SPD systems whose solution lies inside [-1, 3).
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..25 {
        let (p, q, s) = (uniform() * 2.0 - 1.0, uniform() * 2.0 - 1.0, uniform() * 2.0 - 1.0);
        // A = L L^T + I is SPD.
        let a = vec![vec![p * p + 1.0, p * q], vec![p * q, q * q + s * s + 1.0]];
        let x_true = [uniform() * 3.0 - 0.5, uniform() * 3.0 - 0.5];
        let b: Vec<f64> = a.iter().map(|row| row[0] * x_true[0] + row[1] * x_true[1]).collect();
        let sys = LinearSystem::from_dense(&a, &b).unwrap();
        let enc = BinaryEncoding::uniform(2, 3, 2.0, 1.0).unwrap();
        let set = solve_exhaustive(&encode(&sys, &enc).unwrap()).unwrap();
        let x_best = decode(&set.best().bits, &enc).unwrap();
        let quantized: Vec<f64> = x_true.iter().enumerate().map(|(i, &v)| enc.quantize(i, v)).collect();
        let r_best = norm2(&sys.residual_vector(&x_best).unwrap());
        let r_quant = norm2(&sys.residual_vector(&quantized).unwrap());
        assert!(r_best <= r_quant + 1e-12, "{r_best} > {r_quant}");
    }
}
