use proptest::prelude::*;

use qmrm_core::hhl::{choose_parameters, rotation_family, HhlCircuit};
use qmrm_core::linalg::{pauli_tensor_build, solve, ComplexVector, LinearSystem, PauliTerm, C64};
use qmrm_core::qsim::RngSeed;
use qmrm_core::refine::{qls2_adjust, qls2_generate, qls2_next_shift};

fn pauli_ops(n: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!['I', 'X', 'Y', 'Z']), n)
        .prop_map(|v| v.into_iter().collect())
}

/// Two-qubit Pauli sums with a dominant identity term, so they stay invertible.
fn hermitian_system() -> impl Strategy<Value = Vec<PauliTerm>> {
    (
        2.0..4.0f64,
        prop::collection::vec((-0.8..0.8f64, pauli_ops(2)), 1..4),
    )
        .prop_map(|(shift, rest)| {
            let mut terms = vec![PauliTerm::parse(shift, "II").unwrap()];
            terms.extend(
                rest.into_iter()
                    .map(|(c, ops)| PauliTerm::parse(c, &ops).unwrap()),
            );
            terms
        })
}

fn vector4() -> impl Strategy<Value = ComplexVector> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 4).prop_filter_map("nonzero", |v| {
        let v: Vec<C64> = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        (norm > 1e-3).then(|| ComplexVector::new(v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parameters_satisfy_invariants(terms in hermitian_system(), p in 2usize..10) {
        let a = pauli_tensor_build(&terms).unwrap();
        let params = choose_parameters(&a, p).unwrap();
        let limit = std::f64::consts::PI * (1.0 - 1.0 / (1u64 << p) as f64);
        for &l in &params.eigenbasis.eigenvalues {
            prop_assert!(l.abs() * params.t <= limit * (1.0 + 1e-12));
        }
        // C stays below min|λ|, or one grid step when min|λ| is not resolvable
        let step = 2.0 * std::f64::consts::PI / ((1u64 << p) as f64 * params.t);
        let min = params.eigenbasis.min_abs_eigenvalue();
        prop_assert!(params.c_rot > 0.0);
        prop_assert!(params.c_rot <= qmrm_core::hhl::C_ROT_MARGIN * min.max(step) * (1.0 + 1e-12));
        for block in rotation_family(&params).values() {
            prop_assert!(block.unitary_deviation() <= 1e-12);
        }
    }

    #[test]
    fn outcomes_are_normalized(terms in hermitian_system(), b in vector4(), seed in any::<u64>()) {
        let a = pauli_tensor_build(&terms).unwrap();
        let circuit = HhlCircuit::new(&a, choose_parameters(&a, 5).unwrap()).unwrap();
        let exact = circuit.run_exact(&b).unwrap();
        prop_assert!((exact.exact_solution_state.norm2() - 1.0).abs() < 1e-10);
        prop_assert!(exact.success_probability > 0.0 && exact.success_probability <= 1.0);
        match circuit.run_sampled(&b, 200, RngSeed(seed)) {
            Ok(out) => {
                let d = out.d_tilde.unwrap();
                prop_assert!((d.norm2() - 1.0).abs() < 1e-12);
                prop_assert!(d.iter().all(|z| z.re >= 0.0 && z.im == 0.0));
                let rec = out.record.unwrap();
                prop_assert_eq!(rec.n_success + rec.n_failure, 200);
            }
            Err(e) => {
                let no_shots = matches!(e, qmrm_core::Error::NoSuccessfulShots { .. });
                prop_assert!(no_shots);
            }
        }
    }

    #[test]
    fn exact_direction_step_cancels_shift(
        terms in hermitian_system(),
        x in vector4(),
        x_m in vector4(),
        shift in prop::collection::vec(0.0..3.0f64, 4),
    ) {
        let a = pauli_tensor_build(&terms).unwrap();
        let sys = LinearSystem::from_solution(a, x.clone()).unwrap();
        let s = ComplexVector::from_real(&shift).unwrap();
        let r = qls2_generate(&sys.a, &sys.b, &x_m, &s).unwrap();
        prop_assume!(r.norm2() > 1e-9);
        let d = solve(&sys.a, &r).unwrap().normalized().unwrap();
        let x_next = x_m.add(&qls2_adjust(&sys.a, &r, &d, &s).unwrap()).unwrap();
        prop_assert!(x_next.sub(&x).unwrap().norm2() <= 1e-10 * (1.0 + x.norm2()));
    }

    #[test]
    fn next_shift_is_nonnegative_real(g in vector4(), prev in 1e-6..10.0f64) {
        let s = qls2_next_shift(&g, prev);
        prop_assert!(s.iter().all(|z| z.re >= 0.0 && z.im == 0.0));
        prop_assert!((s.norm2() - g.norm2() * g.norm2() / prev).abs() <= 1e-12 * (1.0 + s.norm2()));
    }
}
