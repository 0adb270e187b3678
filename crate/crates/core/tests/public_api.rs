use resbench_core::channel::{apply_choi, max_fidelity_channel, verify_free_channel};
use resbench_core::conic::InteriorPoint;
use resbench_core::distillation::{fidelity_max_golden, golden_search, interconversion_channels};
use resbench_core::monotones::{monotone_chain, r_max, r_std, Extended};
use resbench_core::theory::TheoryDescriptor;
use resbench_core::{DensityOperator, HermitianOperator, PureStateVector};

fn solver() -> InteriorPoint {
    InteriorPoint::default()
}

fn rho_p(p: f64) -> DensityOperator {
    DensityOperator::mixture(p, &PureStateVector::uniform(2).density(), &DensityOperator::maximally_mixed(2)).unwrap()
}

#[test]
fn qubit_coherence_end_to_end() {
    let t = TheoryDescriptor::coherence(2).unwrap();
    // Grid over p checks the closed form (1 + p) / 2 for both the bounds and the channel program.
    for p in [0.0, 0.25, 0.5, 0.9] {
        let rho = rho_p(p);
        let report = fidelity_max_golden(&rho, &t, &solver()).unwrap();
        let expected = (1.0 + p) / 2.0;
        assert!(report.exact);
        assert!((report.upper - expected).abs() < 1e-6 && (report.lower - expected).abs() < 1e-6);
        let (oracle, choi) = max_fidelity_channel(&rho, &report.target, &t, &solver()).unwrap();
        assert!((oracle - expected).abs() < 1e-6);
        assert!(verify_free_channel(&choi, &t, 4, &solver()).unwrap().free);
    }
    assert_eq!(r_std(&PureStateVector::uniform(2).density(), &t, &solver()).unwrap().value, Extended::Infinite);
}

#[test]
fn chain_and_golden_for_thermal() {
    let tau = DensityOperator::new(HermitianOperator::from_real_diagonal(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
    let t = TheoryDescriptor::thermal(tau.clone()).unwrap();
    let g = golden_search(&t, 4, 1e-6, 1, &solver()).unwrap();
    assert!(g.matched && (g.r_max - 3.0).abs() < 1e-6);
    let [rmin, rmax, rs] = monotone_chain(&DensityOperator::basis_state(2, 1), &t, &solver()).unwrap();
    assert!(rmin.to_f64() <= rmax.to_f64() + 1e-6);
    assert!(!rs.is_finite() || rmax.to_f64() <= rs.to_f64() + 1e-6);
    assert!((r_max(&tau, &t, &solver()).unwrap().value.to_f64() - 1.0).abs() < 1e-6);
}

#[test]
fn interconversion_round_trip_ppt() {
    let t = TheoryDescriptor::ppt(2, 2).unwrap();
    let bell = PureStateVector::maximally_entangled(2, 2).density();
    let conv = interconversion_channels(&bell, &t, &solver()).unwrap();
    let there = apply_choi(&conv.distill.choi, &bell).unwrap();
    let back = apply_choi(&conv.dilute, &there).unwrap();
    assert!((&*back - &*bell).max_abs_entry() < 1e-6);
}
