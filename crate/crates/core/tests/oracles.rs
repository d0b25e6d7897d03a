//! Library results against independent reference computations: dense
//! nalgebra linear algebra, explicit index sums and closed forms.

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qotto_core::cycle::{initial_state, run_cycle, CycleConfig};
use qotto_core::dynamics::{evolve_static, propagate_unitary, work_integral, BathSpec};
use qotto_core::measurement::{
    apply_measurement, reset_ancilla, MeasurementBasis, MeasurementSpec, Pair,
};
use qotto_core::model::{ModelOperators, ModelParams, RampDirection, SpinBasis};
use qotto_core::qops::{
    eigh, gibbs_state, partial_trace, pauli, trace_distance, von_neumann_entropy, CMatrix,
    PauliAxis, QState,
};
use qotto_core::thermo::{mutual_information, EngineModel};

type M = DMatrix<Complex64>;

fn to_na(m: &CMatrix<f64>) -> M {
    let a = m.as_array();
    M::from_fn(m.dim(), m.dim(), |i, j| a[(i, j)])
}

fn from_na(m: &M) -> CMatrix<f64> {
    CMatrix::from_fn(m.nrows(), |i, j| m[(i, j)])
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sigma(axis: char) -> M {
    let i = Complex64::i();
    match axis {
        'x' => M::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        'y' => M::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
        'z' => M::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
        _ => M::identity(2, 2),
    }
}

/// Operator string on `n` qubits, qubit 1 leftmost.
fn string(ops: &[(usize, char)], n: usize) -> M {
    (1..=n).fold(M::identity(1, 1), |acc, site| {
        let axis = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map_or('i', |(_, a)| *a);
        acc.kronecker(&sigma(axis))
    })
}

fn exchange(a: usize, b: usize, n: usize) -> M {
    string(&[(a, 'x'), (b, 'x')], n) + string(&[(a, 'y'), (b, 'y')], n)
}

fn field_sum(axis: char, a: usize, b: usize, n: usize) -> M {
    string(&[(a, axis)], n) + string(&[(b, axis)], n)
}

/// The ladder Hamiltonian written out term by term.
fn ladder(p: &ModelParams<f64>, b: f64) -> M {
    let s = match p.basis {
        SpinBasis::ZeroGround => -1.0,
        SpinBasis::ZeroExcited => 1.0,
    };
    exchange(1, 2, 4) * c(p.j1)
        + field_sum('z', 1, 2, 4) * c(s * b)
        + field_sum('x', 1, 2, 4) * c(p.delta1)
        + exchange(3, 4, 4) * c(p.j2)
        + field_sum('z', 3, 4, 4) * c(s * p.omega)
        + field_sum('x', 3, 4, 4) * c(p.delta2)
        + (exchange(1, 3, 4) + exchange(2, 4, 4)) * c(p.g)
}

fn sorted_eigenvalues(m: &M) -> Vec<f64> {
    let mut v: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> QState<f64> {
    let a = M::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    QState::new(from_na(&(rho / tr))).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams<f64> {
    ModelParams {
        j1: rng.gen_range(-3.0..3.0),
        j2: rng.gen_range(0.5..2.0),
        g: rng.gen_range(0.0..1.5),
        delta1: rng.gen_range(0.0..1.0),
        delta2: rng.gen_range(0.0..1.0),
        omega: rng.gen_range(0.1..1.0),
        basis: if rng.gen_bool(0.5) {
            SpinBasis::ZeroGround
        } else {
            SpinBasis::ZeroExcited
        },
        ..ModelParams::default()
    }
}

fn entropy_of(m: &M) -> f64 {
    sorted_eigenvalues(m)
        .iter()
        .filter(|&&x| x > 1e-15)
        .map(|&x| -x * x.ln())
        .sum()
}

#[test]
fn ladder_hamiltonian_matches_explicit_pauli_strings() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let b = rng.gen_range(0.5..3.0);
        let ours = to_na(&ModelOperators::new(&p).h_tot(b));
        let want = ladder(&p, b);
        assert!((ours - &want).camax() < 1e-12);
        let ev = eigh(&ModelOperators::new(&p).h_tot(b)).unwrap().eigenvalues;
        for (x, y) in ev.iter().zip(sorted_eigenvalues(&want)) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-10);
        }
    }
}

#[test]
fn eigenvectors_diagonalize_random_hermitian_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in [2, 4, 16] {
        let a = M::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = (&a + a.adjoint()) * c(0.5);
        let spec = eigh(&from_na(&h)).unwrap();
        let v = to_na(&spec.eigenvectors);
        let d = v.adjoint() * &h * &v;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { spec.eigenvalues[i] } else { 0.0 };
                assert!((d[(i, j)] - c(want)).norm() < 1e-10);
            }
        }
        for (x, y) in spec.eigenvalues.iter().zip(sorted_eigenvalues(&h)) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-10);
        }
    }
}

#[test]
fn partial_trace_matches_index_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_state(&mut rng, 16);
    let r = to_na(rho.rho());
    // ρ_sys[a][b] = Σ_k ρ[4a + k][4b + k], ρ_anc[a][b] = Σ_k ρ[4k + a][4k + b].
    let sys = M::from_fn(4, 4, |a, b| (0..4).map(|k| r[(4 * a + k, 4 * b + k)]).sum());
    let anc = M::from_fn(4, 4, |a, b| (0..4).map(|k| r[(4 * k + a, 4 * k + b)]).sum());
    assert!((to_na(partial_trace(&rho, &[1, 2]).unwrap().rho()) - sys).camax() < 1e-14);
    assert!((to_na(partial_trace(&rho, &[3, 4]).unwrap().rho()) - anc).camax() < 1e-14);
    // Keeping qubits 1 and 3: bits (q1 q2 q3 q4), trace out q2 and q4.
    let bit = |i: usize, q: usize| (i >> (4 - q)) & 1;
    let mut mixed = M::zeros(4, 4);
    for i in 0..16 {
        for j in 0..16 {
            if bit(i, 2) == bit(j, 2) && bit(i, 4) == bit(j, 4) {
                mixed[(2 * bit(i, 1) + bit(i, 3), 2 * bit(j, 1) + bit(j, 3))] += r[(i, j)];
            }
        }
    }
    assert!((to_na(partial_trace(&rho, &[1, 3]).unwrap().rho()) - mixed).camax() < 1e-14);
}

#[test]
fn gibbs_state_matches_partition_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_params(&mut rng);
    let h = ladder(&p, 1.7);
    for t in [0.3, 1.0, 10.0] {
        let eig = h.clone().symmetric_eigen();
        let z: f64 = eig.eigenvalues.iter().map(|e| (-e / t).exp()).sum();
        let w = DVector::from_iterator(16, eig.eigenvalues.iter().map(|e| c((-e / t).exp() / z)));
        let want = &eig.eigenvectors * M::from_diagonal(&w) * eig.eigenvectors.adjoint();
        let ours = gibbs_state(&from_na(&h), t).unwrap();
        assert!((to_na(ours.rho()) - want).camax() < 1e-12);
    }
}

#[test]
fn entropy_distance_and_mutual_information_match_dense_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let a = random_state(&mut rng, 16);
        let b = random_state(&mut rng, 16);
        let ra = to_na(a.rho());
        assert_abs_diff_eq!(
            von_neumann_entropy(&a).unwrap(),
            entropy_of(&ra),
            epsilon = 1e-10
        );
        let diff = &ra - to_na(b.rho());
        let td: f64 = 0.5
            * sorted_eigenvalues(&diff)
                .iter()
                .map(|x| x.abs())
                .sum::<f64>();
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), td, epsilon = 1e-10);
        let s_sys = entropy_of(&to_na(partial_trace(&a, &[1, 2]).unwrap().rho()));
        let s_anc = entropy_of(&to_na(partial_trace(&a, &[3, 4]).unwrap().rho()));
        assert_abs_diff_eq!(
            mutual_information(&a).unwrap(),
            s_sys + s_anc - entropy_of(&ra),
            epsilon = 1e-10
        );
    }
}

fn pair_ket(basis: MeasurementBasis) -> DVector<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = match basis {
        MeasurementBasis::Proj00 => [1.0, 0.0, 0.0, 0.0],
        MeasurementBasis::Proj11 => [0.0, 0.0, 0.0, 1.0],
        MeasurementBasis::BellPlus => [0.0, h, h, 0.0],
        MeasurementBasis::BellMinus => [0.0, h, -h, 0.0],
    };
    DVector::from_iterator(4, v.into_iter().map(c))
}

#[test]
fn measurement_matches_brute_force_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rho = random_state(&mut rng, 16);
    let r = to_na(rho.rho());
    for basis in MeasurementBasis::ALL {
        let k = pair_ket(basis);
        let p2 = &k * k.adjoint();
        for target in [Pair::System, Pair::Ancilla] {
            let proj = match target {
                Pair::System => p2.kronecker(&M::identity(4, 4)),
                Pair::Ancilla => M::identity(4, 4).kronecker(&p2),
            };
            let unnorm = &proj * &r * &proj;
            let p_m = unnorm.trace().re;
            let (post, prob) =
                apply_measurement(&rho, &MeasurementSpec::new(target, basis)).unwrap();
            assert_abs_diff_eq!(prob, p_m, epsilon = 1e-12);
            assert!((to_na(post.rho()) - unnorm / c(p_m)).camax() < 1e-12);

            let mut spec = MeasurementSpec::new(target, basis);
            spec.renormalize = false;
            let (post, _) = apply_measurement(&rho, &spec).unwrap();
            let q = M::identity(16, 16) - &proj;
            let want = &proj * &r * &proj + &q * &r * &q;
            assert!((to_na(post.rho()) - want).camax() < 1e-12);
        }
    }
}

#[test]
fn ancilla_reset_keeps_system_marginal() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let rho = random_state(&mut rng, 16);
    let reset = reset_ancilla(&rho).unwrap();
    let sys_before = to_na(partial_trace(&rho, &[1, 2]).unwrap().rho());
    let want = sys_before.kronecker(
        &(pair_ket(MeasurementBasis::Proj00) * pair_ket(MeasurementBasis::Proj00).adjoint()),
    );
    assert!((to_na(reset.rho()) - want).camax() < 1e-14);
}

#[test]
fn ramp_matches_fine_product_of_matrix_exponentials() {
    let p = ModelParams {
        j1: 2.0,
        g: 0.75,
        delta1: 1.0,
        tau: 3.0,
        ..ModelParams::default()
    };
    let n = 3000;
    let dt = p.tau / n as f64;
    let mut u = M::identity(16, 16);
    for k in 0..n {
        let b = p.b_low + (p.b_high - p.b_low) * (k as f64 + 0.5) / n as f64;
        u = (ladder(&p, b) * Complex64::new(0.0, -dt)).exp() * u;
    }
    let rho0: QState<f64> = initial_state();
    let want = &u * to_na(rho0.rho()) * u.adjoint();
    let traj = propagate_unitary(&rho0, &p, RampDirection::Expand).unwrap();
    let got = traj.final_state();
    assert!((to_na(got.rho()) - &want).camax() < 1e-6);

    // Work from the energy change of the closed evolution.
    let h_end = ladder(&p, p.b_high);
    let h_start = ladder(&p, p.b_low);
    let w = (&h_end * &want).trace().re - (&h_start * to_na(rho0.rho())).trace().re;
    let w_sys_field = work_integral(&traj, &p, RampDirection::Expand).unwrap();
    // ∫ Ḃ⟨∂H/∂B⟩ is the full energy change, since only the field depends on time.
    assert_abs_diff_eq!(w_sys_field, w, epsilon = 1e-6);
}

/// Populations, level energies and heats of the decoupled cycle in closed
/// form: with `g = δ = 0` every Hamiltonian along the cycle shares the
/// eigenbasis {|00⟩, |11⟩, triplet, singlet}.
fn decoupled_cycle(p: &ModelParams<f64>) -> (f64, f64, f64, f64) {
    let s = match p.basis {
        SpinBasis::ZeroGround => -1.0,
        SpinBasis::ZeroExcited => 1.0,
    };
    let energies = |b: f64| [2.0 * s * b, -2.0 * s * b, 2.0 * p.j1, -2.0 * p.j1];
    let eh = energies(p.b_high);
    let el = energies(p.b_low);
    let weights: Vec<f64> = eh.iter().map(|e| (-e / p.temperature).exp()).collect();
    let z: f64 = weights.iter().sum();
    let pops: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let avg = |e: &[f64; 4]| pops.iter().zip(e).map(|(p, e)| p * e).sum::<f64>();
    let w1 = eh[0] - el[0];
    let q_h = avg(&eh) - eh[0];
    let w2 = avg(&el) - avg(&eh);
    let q_c = el[0] - avg(&el);
    (w1, w2, q_h, q_c)
}

#[test]
fn decoupled_cycle_matches_closed_form() {
    for (basis, tau, t, j1) in [
        (SpinBasis::ZeroGround, 50.0, 10.0, 1.0),
        (SpinBasis::ZeroGround, 1.0, 10.0, 1.0),
        (SpinBasis::ZeroGround, 5.0, 2.0, -0.5),
        (SpinBasis::ZeroExcited, 2.0, 10.0, 1.0),
    ] {
        let p = ModelParams {
            basis,
            tau,
            temperature: t,
            j1,
            ..ModelParams::default()
        };
        let (w1, w2, q_h, q_c) = decoupled_cycle(&p);
        let l = run_cycle(
            &CycleConfig::new(p, EngineModel::SystemMeasurement),
            &initial_state(),
        )
        .unwrap()
        .ledger;
        assert_abs_diff_eq!(l.w1, w1, epsilon = 1e-8);
        assert_abs_diff_eq!(l.w2, w2, epsilon = 1e-8);
        assert_abs_diff_eq!(l.q_h, q_h, epsilon = 1e-8);
        assert_abs_diff_eq!(l.q_c, q_c, epsilon = 1e-8);
        if q_h > 0.0 {
            assert_abs_diff_eq!(l.eta.unwrap(), -(w1 + w2) / q_h, epsilon = 1e-8);
        }
    }
}

#[test]
fn decoupled_engine_efficiency_regression() {
    // Closed-form value at T = 10, J1 = 1, B_L = 1, B_H = 2.
    let p = ModelParams::<f64>::default();
    let (w1, w2, q_h, _) = decoupled_cycle(&p);
    assert_abs_diff_eq!(-(w1 + w2) / q_h, 0.531662, epsilon = 1e-6);
}

#[test]
fn single_qubit_relaxation_rate_matches_detailed_balance() {
    let bath = BathSpec {
        temperature: 1.5,
        omega_c: 10.0,
        gamma0: 0.2,
        bohr_tol: 1e-9,
    };
    let z = pauli::<f64>(PauliAxis::Z);
    let x = pauli::<f64>(PauliAxis::X);
    let (down, up) = bath.rates(2.0).unwrap();
    let p_eq = up / (up + down);
    // Excited state of H = σ_z is |1⟩.
    let traj = evolve_static(&QState::basis(1, 0).unwrap(), &z, &[x], &bath, 3.0, 0.001).unwrap();
    for (step, state) in &traj.snapshots {
        let t = traj.grid[*step].t;
        let want = p_eq + (1.0 - p_eq) * (-(up + down) * t).exp();
        assert_abs_diff_eq!(state.populations()[0], want, epsilon = 1e-8);
    }
    assert_abs_diff_eq!(up / down, (-2.0f64 / 1.5).exp(), epsilon = 1e-12);
}
