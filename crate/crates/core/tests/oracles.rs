//! Cross-checks against brute-force references built from the full joint
//! Hamiltonian.

use quadopt_core::closed::{
    displacement_variance, joint_phonon_operator, mean_displacement_exact, JointEvolver,
};
use quadopt_core::fock::{
    hermitian_exponential, identity, make_state, matrix_exponential, number, position, StateSpec,
    Tensor,
};
use quadopt_core::{Complex64, DenseOperator, SystemParams};

/// `ω_c a†a + Ω b†b + g(a†a + ½)(b + b†)²` on photon ⊗ phonon.
fn joint_hamiltonian(p: &SystemParams) -> DenseOperator {
    let (na, nb) = (p.photon_cutoff, p.phonon_cutoff);
    let ia = identity(&[na]).unwrap();
    let ib = identity(&[nb]).unwrap();
    let x = position(nb).unwrap();
    let x2 = x.compose(&x).unwrap();
    let shifted = number(na)
        .unwrap()
        .add(&ia.scale(Complex64::new(0.5, 0.0)))
        .unwrap();
    number(na)
        .unwrap()
        .scale(Complex64::new(p.cav_freq, 0.0))
        .tensor(&ib)
        .add(&ia.tensor(&number(nb).unwrap()).scale(Complex64::new(p.mech_freq, 0.0)))
        .unwrap()
        .add(&shifted.tensor(&x2).scale(Complex64::new(p.coupling, 0.0)))
        .unwrap()
}

#[test]
fn joint_evolution_matches_full_exponential() {
    // truncation effects cancel when the oracle runs at a much larger
    // phonon cutoff and the state stays far from both edges
    let small = SystemParams::new(1.0, 0.7, 0.02, 6, 24).unwrap();
    let big = SystemParams::new(1.0, 0.7, 0.02, 6, 70).unwrap();
    let amps = nalgebra::DVector::from_vec(vec![
        Complex64::new(0.6, 0.0),
        Complex64::new(0.0, 0.48),
        Complex64::new(0.64, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ]);
    let photon = quadopt_core::QuantumState::pure(amps, vec![6]).unwrap();
    let phonon = make_state(&StateSpec::coherent(0.8, -0.4), 24).unwrap();
    let phonon_big = make_state(&StateSpec::coherent(0.8, -0.4), 70).unwrap();

    let h = joint_hamiltonian(&big);
    let ev = JointEvolver::new(&small, &photon).unwrap();
    for t in [0.4, 3.0, 11.7] {
        let u = hermitian_exponential(&h, Complex64::new(0.0, -t)).unwrap();
        let psi0 = photon.tensor(&phonon_big);
        let reference = u.apply(psi0.amplitudes().unwrap()).unwrap();
        let ours = ev.evolve(&photon, &phonon, t).unwrap().state;
        let ours = ours.amplitudes().unwrap();
        for n in 0..6 {
            for k in 0..24 {
                let d = ours[n * 24 + k] - reference[n * 70 + k];
                assert!(d.norm() < 1e-9, "t {t} n {n} k {k}: {d}");
            }
        }
    }
}

#[test]
fn pade_and_eigen_routes_agree_on_joint_hamiltonian() {
    let p = SystemParams::new(1.0, 0.3, 0.05, 4, 12).unwrap();
    let h = joint_hamiltonian(&p);
    let s = Complex64::new(0.0, -2.5);
    let a = matrix_exponential(&h, s).unwrap();
    let b = hermitian_exponential(&h, s).unwrap();
    assert!(a.sub(&b).unwrap().operator_norm() < 1e-10);
    assert!(a.unitarity_defect() < 1e-10);
}

#[test]
fn variance_matches_joint_evolution() {
    // thermal phonon, coherent photon: exact sector sum vs ⟨x²⟩ of the
    // evolved joint density matrix
    let p = SystemParams::with_coupling(0.02, 14, 45).unwrap();
    let cavity = StateSpec::coherent(1.3, 0.0);
    let photon = make_state(&cavity, 14).unwrap();
    let phonon = make_state(&StateSpec::Thermal { mean: 0.5 }, 45).unwrap();
    let times: Vec<f64> = (0..12).map(|k| 7.3 * k as f64).collect();
    let v = displacement_variance(&p, &cavity, 0.5, &times).unwrap();
    let ev = JointEvolver::new(&p, &photon).unwrap();
    let x = position(45).unwrap();
    let x2 = joint_phonon_operator(&p, &x.compose(&x).unwrap()).unwrap();
    for (t, expected) in times.iter().zip(&v.exact) {
        let s = ev.evolve(&photon, &phonon, *t).unwrap().state;
        let got = s.expect(&x2).unwrap().re;
        assert!((got - expected).abs() < 1e-6, "t {t}: {got} vs {expected}");
    }
}

#[test]
fn displacement_zero_coupling_is_free_oscillator() {
    let p = SystemParams::with_coupling(0.0, 4, 4).unwrap();
    let beta = Complex64::new(0.3, 1.1);
    let times: Vec<f64> = (0..40).map(|k| 0.21 * k as f64).collect();
    let x = mean_displacement_exact(&p, Complex64::new(2.0, 0.0), beta, &times).unwrap();
    for (t, v) in times.iter().zip(&x) {
        let expected = 2.0 * (beta.re * t.cos() + beta.im * t.sin());
        assert!((v - expected).abs() < 1e-12);
    }
}
