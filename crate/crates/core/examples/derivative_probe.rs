//! Compares the piecewise and smoothed equivalences across the cross section.

use suspflow::ceiling::{CeilingFunction, CosineTerm};
use suspflow::diff_probe::{
    analytic_jacobian_piecewise, cross_section_check, fd_jacobian, point_differentiability_probe, DEFAULT_STEP,
    SECTION_STEP,
};
use suspflow::equivalence::EquivalencePair;
use suspflow::smoothing::{BumpShape, SmoothedEquivalence};
use suspflow::suspension::{SuspensionPoint, SuspensionSystem};
use suspflow::torus::{BaseConjugacy, HyperbolicToralMap, TorusPoint, UnimodularMatrix};

fn main() {
    let f = HyperbolicToralMap::cat();
    let h = BaseConjugacy::Linear(UnimodularMatrix::new(1, 1, 0, 1).unwrap());
    let g = h.conjugate_map(&f).unwrap();
    let c_f = CeilingFunction::trig(1.0, vec![CosineTerm::new(0.1, 1, 0, 0.0)]).unwrap();
    let c_g = CeilingFunction::trig(1.2, vec![CosineTerm::new(0.15, 0, 1, 0.7)]).unwrap();
    let pair = EquivalencePair::new(SuspensionSystem::new(f, c_f), SuspensionSystem::new(g, c_g), h).unwrap();
    let smooth = SmoothedEquivalence::new(pair.clone(), BumpShape::default());

    let p = SuspensionPoint::new(TorusPoint::new(0.31, 0.77), 0.45);
    let analytic = analytic_jacobian_piecewise(&pair, &p).unwrap();
    let fd = fd_jacobian(&pair, pair.source(), &p, DEFAULT_STEP).unwrap();
    println!("interior: analytic vs FD max error {:e}", (analytic - fd).abs().max());

    println!("x1,x2,piecewise,smoothed");
    for i in 0..8 {
        let x = TorusPoint::new(0.1 + 0.1 * i as f64, 0.37);
        let rough = cross_section_check(&pair, &pair, &x, SECTION_STEP).unwrap();
        let fine = cross_section_check(&smooth, &pair, &x, SECTION_STEP).unwrap();
        println!(
            "{:.2},{:.2},{:.3e},{:.3e}",
            x.x1(),
            x.x2(),
            rough.mismatch,
            fine.mismatch
        );
    }

    let probe = point_differentiability_probe(|q| pair.conjugacy().apply(q), &TorusPoint::new(0.2, 0.2), 8, 0);
    println!("scaling exponent of h: {:?}", probe.slope);
}
