use bqo_core::cavity::*;
use bqo_core::linalg::{hermitian_eigen, CMatrix};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn resonant(d: usize, g: f64, n_qubits: usize) -> CavityModel<f64> {
    CavityModel::new(d, 1.0, vec![QubitSpec { delta: 1.0, g }; n_qubits])
}

/// `A A† / Tr(A A†)` for a random complex `A`.
fn random_state(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> DensityMatrix<f64> {
    let n: usize = dims.iter().product();
    let mut a = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr), dims).unwrap()
}

/// Moving average over `window` consecutive samples.
fn smooth(xs: &[f64], window: usize) -> Vec<f64> {
    xs.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).collect()
}

#[test]
fn physical_invariants_hold_over_ten_thousand_steps() {
    let m = resonant(4, 0.2, 2);
    let sim = Simulator::new(&m, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rho0 = random_state(&mut rng, m.dims());
    let reset = ResetProcess::new(0.5, vec![0, 1]);
    let cfg = SimConfig::new(0.01, 100.0, 9).with_stride(100).with_truncation_tol(None);
    assert_eq!(cfg.n_steps(), 10_000);
    for mode in [RunMode::Trajectory { stream: 3 }, RunMode::Mean] {
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        sim.run_observed(&reset, &rho0, &cfg, mode, |step, _, rho| {
            worst.0 = worst.0.max((rho.trace() - 1.0).abs());
            worst.1 = worst.1.max(rho.hermiticity_error());
            if step % 100 == 0 {
                worst.2 = worst.2.min(rho.min_eigenvalue().unwrap());
            }
        })
        .unwrap();
        assert!(worst.0 < 1e-9, "{mode:?} trace drift {}", worst.0);
        assert!(worst.1 < 1e-9, "{mode:?} hermiticity {}", worst.1);
        assert!(worst.2 > -1e-8, "{mode:?} min eigenvalue {}", worst.2);
    }
}

#[test]
fn closed_system_conserves_energy() {
    let m = resonant(4, 0.2, 2);
    let sim = Simulator::new(&m, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho0 = random_state(&mut rng, m.dims());
    let e0 = rho0.expectation(&sim.hamiltonian);
    let cfg = SimConfig::new(0.01, 100.0, 0).with_stride(1000).with_truncation_tol(None);
    let mut drift = 0.0f64;
    sim.run_observed(&ResetProcess::none(), &rho0, &cfg, RunMode::Trajectory { stream: 0 }, |_, _, rho| {
        drift = drift.max((rho.expectation(&sim.hamiltonian) - e0).abs() / e0.abs());
    })
    .unwrap();
    assert!(drift < 1e-8, "relative drift {drift}");
}

#[test]
fn resets_damp_reduced_cavity_coherence() {
    let m = resonant(3, 0.005, 1);
    let dims = m.dims();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // (|0⟩ + |1⟩)/√2 ⊗ |g⟩ in (cavity, qubit) order
    let mut psi = vec![C::new(0.0, 0.0); 6];
    psi[0] = C::new(s, 0.0);
    psi[2] = C::new(s, 0.0);
    let rho0 = DensityMatrix::pure(&psi, dims).unwrap();
    let dt = 0.03;
    let cfg = SimConfig::new(dt, 1000.0, 0).with_stride(1);
    let series = run_mean_evolution(&m, &ResetProcess::new(0.05, vec![0]), &rho0, &cfg).unwrap();
    let period = (std::f64::consts::TAU / dt).round() as usize;
    let coherence = smooth(&series.coherence_l1, period);
    let purity = smooth(&series.purity, period);
    let excitation = smooth(&series.qudit_excitation(), period);
    for i in 1..coherence.len() {
        assert!(coherence[i] <= coherence[i - 1] + 1e-12, "coherence rises at record {i}");
        if excitation[i] >= 0.25 {
            assert!(purity[i] <= purity[i - 1] + 1e-12, "purity rises at record {i}");
        }
    }
    assert!(coherence.last().unwrap() < &(0.7 * coherence[0]));
    assert!(excitation.last().unwrap() < &0.25);
}

#[test]
fn weak_coupling_still_decays() {
    let m = resonant(3, 0.005, 1);
    let rho0 = DensityMatrix::basis(&[1, 0], m.dims()).unwrap();
    let cfg = SimConfig::new(0.03, 1000.0, 0).with_stride(10);
    let s = run_mean_evolution(&m, &ResetProcess::new(0.05, vec![0]), &rho0, &cfg).unwrap();
    let exc = s.qudit_excitation();
    assert!(s.qubit_excitations.iter().all(|q| q[0] < 0.05));
    assert!(*exc.last().unwrap() <= 0.75 * exc[0]);
    // without resets the excitation keeps returning
    let closed = run_mean_evolution(&m, &ResetProcess::none(), &rho0, &cfg).unwrap();
    let peak = closed.qudit_excitation()[closed.len() / 2..].iter().cloned().fold(0.0, f64::max);
    assert!(peak > 0.99);
}

#[test]
fn eigensolver_agrees_with_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [2, 5, 12, 24] {
        let mut h = CMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let z = if i == j {
                    C::new(rng.random_range(-2.0..2.0), 0.0)
                } else {
                    C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                };
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let ours = hermitian_eigen(&h).unwrap().values;
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| h[(i, j)]);
        let mut theirs: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn propagator_matches_taylor_series() {
    let m = resonant(3, 0.3, 1);
    let h = build_hamiltonian(&m).unwrap();
    let dt = 0.05;
    let u = Propagator::from_hamiltonian(&h, dt, 1.0).unwrap();
    // exp(-iH dt) by a 30-term Taylor series
    let step = h.scale(C::new(0.0, -dt));
    let mut term = CMatrix::identity(6);
    let mut sum = CMatrix::identity(6);
    for k in 1..30 {
        term = (&term * &step).scale_real(1.0 / k as f64);
        sum = &sum + &term;
    }
    assert!(u.matrix().max_abs_diff(&sum) < 1e-12);
}

#[test]
fn ensemble_is_deterministic_and_thread_independent() {
    let m = resonant(3, 0.05, 1);
    let rho0 = DensityMatrix::basis(&[1, 0], m.dims()).unwrap();
    let cfg = SimConfig::new(0.05, 20.0, 31)
        .with_stride(20)
        .with_trajectories(16)
        .with_truncation_tol(None);
    let reset = ResetProcess::new(0.2, vec![0]);
    let a = run_ensemble(&m, &reset, &rho0, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_ensemble(&m, &reset, &rho0, &cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.n_trajectories, 16);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_and_reset_preserve_trace(seed in any::<u64>(), d in 2usize..5, nq in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims: Vec<usize> = std::iter::once(d).chain(std::iter::repeat_n(2, nq)).collect();
        let rho = random_state(&mut rng, dims.clone());
        for keep in 0..dims.len() {
            let r = partial_trace(&rho, &[keep]).unwrap();
            prop_assert!((r.trace() - 1.0).abs() < 1e-12);
            prop_assert_eq!(r.dim(), dims[keep]);
        }
        for q in 0..nq {
            let r = apply_reset(&rho, q).unwrap();
            prop_assert!((r.trace() - 1.0).abs() < 1e-12);
            prop_assert!(r.min_eigenvalue().unwrap() > -1e-12);
            let qubit = partial_trace(&r, &[q + 1]).unwrap();
            prop_assert!((qubit.populations()[0] - 1.0).abs() < 1e-12);
            // the rest of the system is untouched
            let others: Vec<usize> = (0..dims.len()).filter(|&s| s != q + 1).collect();
            let before = partial_trace(&rho, &others).unwrap();
            let after = partial_trace(&r, &others).unwrap();
            prop_assert!(before.matrix().max_abs_diff(after.matrix()) < 1e-12);
        }
    }
}
