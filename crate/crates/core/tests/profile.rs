use harvest_core::kernels::{PhysicalConfig, Scenario};
use harvest_core::observables::{x_nonlocal, x_inner_probe, Tolerances};
use std::time::Instant;

#[test]
#[ignore]
fn time_x_nonlocal() {
    let cases = [
        (Scenario::AntiParallel, 1e-3, 0.5, 0.5),
        (Scenario::Perpendicular, 0.5, 0.5, 0.5),
        (Scenario::Perpendicular, 1e-3, 0.5, 0.5),
        (Scenario::Perpendicular, 0.01, 4.0, 3.0),
    ];
    for (scenario, a, om, l) in cases {
        let cfg = PhysicalConfig::new(a, om, l);
        let t0 = Instant::now();
        let tols = Tolerances::from_target(1e-9);
        let x = x_nonlocal(scenario, &cfg, &tols).unwrap();
        eprintln!(
            "{scenario:?} a={a} om={om} l={l}: X = {:+.6e} {:+.6e}i err {:.1e} evals {} conv {} in {:?}",
            x.value.re, x.value.im, x.abs_error, x.evaluations, x.converged,
            t0.elapsed()
        );
    }
}

#[test]
#[ignore]
fn perp_inner_cost_map() {
    let cfg = PhysicalConfig::new(0.5, 0.5, 0.5);
    let tols = Tolerances::from_target(1e-9);
    for i in 0..26 {
        let y = 0.05 + i as f64 * 0.5;
        let t0 = Instant::now();
        let (_, evals) = x_inner_probe(Scenario::Perpendicular, &cfg, &tols, y);
        eprintln!("y={y:.2}: evals {evals} in {:?}", t0.elapsed());
    }
}
