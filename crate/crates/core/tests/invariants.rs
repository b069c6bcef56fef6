use hermflow::balanced::{build_psi, eta_root, round_trip_residual, seeded_potential};
use hermflow::geometry::{Chern, HolVolForm, MetricJet};
use hermflow::TorusLattice;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dist(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn size(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ricci_forms_are_hermitian(m in 2usize..=4, seed in any::<u64>()) {
        let ch = Chern::new(&MetricJet::random(m, 2, 0.1, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let c = ch.curvature_pack().unwrap();
        for r in [&c.ric, &c.rtilde] {
            prop_assert!(dist(r, &r.adjoint()) <= 1e-12 * size(r));
        }
        let t = ch.torsion_pack();
        prop_assert!(dist(&t.tct, &t.tct.adjoint()) <= 1e-12 * size(&t.tct));
        prop_assert!(t.norm_t_sq >= 0.0 && t.norm_tau_sq >= 0.0);
    }

    #[test]
    fn constant_rescaling(m in 2usize..=3, seed in any::<u64>(), lambda in 0.25f64..4.0) {
        let jet = MetricJet::random(m, 2, 0.1, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = Chern::new(&jet).unwrap();
        let b = Chern::new(&jet.scaled(lambda)).unwrap();
        let (ca, cb) = (a.curvature_pack().unwrap(), b.curvature_pack().unwrap());
        // Chern Ricci sees only det g; R̃ carries one inverse metric
        prop_assert!(dist(&ca.ric, &cb.ric) <= 1e-11 * size(&ca.ric));
        prop_assert!(dist(&ca.rtilde, &cb.rtilde) <= 1e-11 * size(&ca.rtilde));
        prop_assert!((cb.scalar * lambda - ca.scalar).abs() <= 1e-11 * ca.scalar.abs().max(1.0));
        let (ta, tb) = (a.torsion_pack(), b.torsion_pack());
        prop_assert!((tb.norm_t_sq * lambda - ta.norm_t_sq).abs() <= 1e-11 * ta.norm_t_sq.max(1e-300));
    }

    #[test]
    fn kahler_jets_are_torsion_free(m in 2usize..=4, seed in any::<u64>()) {
        let ch = Chern::new(&MetricJet::kahler(m, 2, 0.1, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let t = ch.torsion_pack();
        prop_assert!(t.norm_t_sq <= 1e-26);
        let c = ch.curvature_pack().unwrap();
        // all four Ricci traces coincide
        for r in [&c.rtilde, &c.rprime, &c.rdprime] {
            prop_assert!(dist(&c.ric, r) <= 1e-12 * size(&c.ric));
        }
    }

    #[test]
    fn balanced_construction_round_trips(seed in 0u64..1000, eps in 0.0f64..0.01) {
        let lat = TorusLattice::reduced(3, 8, &[0, 2]).unwrap();
        let omega = HolVolForm::unit();
        let psi = build_psi(&lat, eps, &seeded_potential(&lat, seed)).unwrap();
        let g = eta_root(&psi, &omega).unwrap();
        prop_assert!(psi.closedness_residual() <= 1e-13);
        prop_assert!(round_trip_residual(&psi, &g, &omega) <= 1e-12);
    }
}
