use std::f64::consts::PI;
use std::sync::Arc;

use symcap::error::Error;
use symcap::hamiltonian::*;
use symcap::symplectic::{symplecticity_defect, PhasePoint};

fn pt(c: &[f64]) -> PhasePoint {
    PhasePoint::from_coords(c.to_vec()).unwrap()
}

#[test]
fn momentum_generates_translation() {
    for n in [1, 2, 3] {
        let h = Hamiltonian::momentum(n, 0);
        let x: Vec<f64> = (0..2 * n).map(|k| 0.3 * k as f64 - 0.5).collect();
        let y = flow(&h, &pt(&x), DEFAULT_FLOW_STEPS).unwrap();
        for k in 0..2 * n {
            let expect = if k == 0 { x[k] + 1.0 } else { x[k] };
            assert!((y.end.coords()[k] - expect).abs() < 1e-10);
        }
        assert_eq!(y.path.len(), DEFAULT_FLOW_STEPS + 1);
    }
}

#[test]
fn harmonic_oscillator_rotates_by_one_radian() {
    let h = Hamiltonian::harmonic(1);
    let y = flow(&h, &pt(&[1.0, 0.0]), DEFAULT_FLOW_STEPS).unwrap();
    assert!((y.end.coords()[0] - 1f64.cos()).abs() < 1e-10);
    assert!((y.end.coords()[1] + 1f64.sin()).abs() < 1e-10);
    for x in &y.path {
        assert!((x.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn autonomous_energy_is_conserved() {
    let hs = [
        Hamiltonian::bump(vec![0.2, -0.1, 0.0, 0.3], 1.5, 2.0).unwrap(),
        rectangle_ramp(0.04, 0.04).unwrap(),
        cylinder_shear(2, PI, 3.0, DEFAULT_SHEAR).unwrap(),
    ];
    for h in &hs {
        let x: Vec<f64> = (0..2 * h.n()).map(|k| 0.5 - 0.2 * k as f64).collect();
        let e0 = h.value(0.0, &x);
        let y = flow(h, &pt(&x), DEFAULT_FLOW_STEPS).unwrap();
        for p in &y.path {
            assert!((h.value(0.0, p.coords()) - e0).abs() < 1e-8, "{}", h.name());
        }
    }
}

#[test]
fn runaway_flow_is_reported() {
    // q̇ = q³ leaves every bounded region before t = 1/8 from q = 2
    let h = Hamiltonian::new(1, "cubic", Arc::new(|_, x: &[f64]| x[0].powi(3) * x[1]));
    let err = flow(&h, &pt(&[2.0, 1.0]), 1024).unwrap_err();
    assert!(matches!(err, Error::FlowBlowUp { .. }), "{err:?}");
}

#[test]
fn time_one_map_is_symplectic_and_converges_at_fourth_order() {
    let spec = CandidateSpec { kind: CandidateKind::Fourier, count: 1, budget: 2.0, support_radius: 2.0, cutoff_width: 0.6, seed: 9 };
    let h = candidate_family(2, &spec).unwrap().remove(0);
    let probes: Vec<PhasePoint> = (0..8).map(|k| pt(&[0.1 * k as f64, -0.3, 0.2, 0.05 * k as f64])).collect();
    let defect = |steps| symplecticity_defect(|x: &PhasePoint| time_one_map(&h, x, steps), &probes, 1e-5).unwrap();
    let (coarse, fine) = (defect(16), defect(32));
    assert!(defect(DEFAULT_FLOW_STEPS) <= 1e-5);
    assert!(coarse / fine > 10.0, "coarse {coarse:e}, fine {fine:e}");
}

#[test]
fn rescaled_hamiltonian_has_the_same_time_one_map() {
    let spec = CandidateSpec { kind: CandidateKind::Fourier, count: 1, budget: 2.0, support_radius: 2.0, cutoff_width: 0.6, seed: 3 };
    let h = candidate_family(2, &spec).unwrap().remove(0);
    let x = pt(&[0.4, 0.1, -0.2, 0.3]);
    let a = time_one_map(&h, &x, 256).unwrap();
    for s in [0.5, 2.0, 3.0] {
        let b = flow_between(&h.time_rescaled(s), &x, 0.0, 1.0 / s, 256, false).unwrap().end;
        assert!(a.distance(&b) < 1e-8, "s = {s}: {}", a.distance(&b));
    }
}

#[test]
fn hofer_norm_examples() {
    let bump = Hamiltonian::bump(vec![0.0; 4], 1.0, 2.5).unwrap();
    let norm = hofer_norm(&bump, 1, DEFAULT_SPACE_PROBES).unwrap();
    assert!((norm - 2.5).abs() <= 0.02 * 2.5);
    assert_eq!(hofer_norm(&Hamiltonian::zero(2), 8, 256).unwrap(), 0.0);

    let spec = CandidateSpec { kind: CandidateKind::Fourier, count: 2, budget: 1.0, support_radius: 2.0, cutoff_width: 0.5, seed: 5 };
    for h in candidate_family(2, &spec).unwrap() {
        let n0 = hofer_norm(&h, DEFAULT_TIME_SAMPLES, DEFAULT_SPACE_PROBES).unwrap();
        let rev = hofer_norm(&h.time_reversed(), DEFAULT_TIME_SAMPLES, DEFAULT_SPACE_PROBES).unwrap();
        let shifted = hofer_norm(&h.shifted(Arc::new(|t| 3.0 + (5.0 * t).sin())), DEFAULT_TIME_SAMPLES, DEFAULT_SPACE_PROBES).unwrap();
        assert!((n0 - rev).abs() < 1e-12 * n0.max(1.0) + 1e-12);
        assert!((n0 - shifted).abs() < 1e-9);
        assert!((n0 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn hamiltonians_vanish_outside_their_support() {
    let mut hs = vec![
        Hamiltonian::bump(vec![0.3, 0.0, -0.2, 0.1], 0.8, 1.0).unwrap(),
        rectangle_ramp(0.04, 0.04).unwrap(),
        cylinder_shear(2, PI, 3.0, DEFAULT_SHEAR).unwrap(),
        cylinder_shear(3, 2.0, 1.5, DEFAULT_SHEAR).unwrap(),
    ];
    for spec in default_candidate_family() {
        hs.extend(candidate_family(2, &spec).unwrap());
    }
    for h in &hs {
        assert!(h.support_violation(2000, 11).unwrap() <= 1e-12, "{}", h.name());
    }
}

#[test]
fn ramp_displaces_the_unit_square_cheaply() {
    let h = rectangle_ramp(0.04, 0.04).unwrap();
    let cert = displacement_check(&h, &unit_square_samples(100).unwrap(), DEFAULT_FLOW_STEPS).unwrap();
    assert!(cert.displaced, "{cert:?}");
    let norm = cert.hofer_norm.unwrap();
    assert!((1.0..=1.1).contains(&norm), "{norm}");
    assert!(cert.energy_drift.unwrap() < 1e-8);
}

#[test]
fn zero_hamiltonian_displaces_nothing() {
    let cert = displacement_check(&Hamiltonian::zero(1), &unit_square_samples(20).unwrap(), 8).unwrap();
    assert!(!cert.displaced);
    assert_eq!(cert.min_separation, 0.0);
}

#[test]
fn no_budgeted_candidate_displaces_l_tilde() {
    let set = l_tilde_samples(2, 64, 64).unwrap();
    let certs = candidate_sweep(&default_candidate_family(), &set, 64).unwrap();
    assert_eq!(certs.len(), 24);
    for c in &certs {
        assert!(c.hofer_norm.unwrap() < 0.9 * PI, "{c:?}");
        assert!(!c.displaced, "{c:?}");
    }
}

#[test]
fn cylinder_probe_overhead_and_homogeneity() {
    let report = cylinder_energy_probe(2, PI, 4.0, 0.25).unwrap();
    assert!(report.best_overhead <= 0.25, "{report:?}");
    let best = |r: &CylinderProbeReport| r.trials.iter().filter(|t| t.displaced).map(|t| t.hofer_norm).fold(f64::INFINITY, f64::min);
    let doubled = cylinder_energy_probe(2, 2.0 * PI, 4.0, 0.25).unwrap();
    let ratio = best(&doubled) / best(&report);
    assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
    assert!(matches!(cylinder_energy_probe(2, PI, 4.0, 0.0), Err(Error::DisplacementNotAchieved { .. })));
    assert!(matches!(cylinder_energy_probe(2, PI, 4.0, 1e-4), Err(Error::DisplacementNotAchieved { .. })));
}
