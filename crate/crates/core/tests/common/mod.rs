#![allow(dead_code)]

use std::path::PathBuf;

use suspflow::ceiling::{CeilingFunction, CosineTerm};
use suspflow::equivalence::EquivalencePair;
use suspflow::suspension::{SuspensionPoint, SuspensionSystem};
use suspflow::torus::{BaseConjugacy, HyperbolicToralMap, UnimodularMatrix};

pub fn shear() -> BaseConjugacy {
    BaseConjugacy::Linear(UnimodularMatrix::new(1, 1, 0, 1).unwrap())
}

pub fn source_roof() -> CeilingFunction {
    CeilingFunction::trig(
        1.0,
        vec![CosineTerm::new(0.1, 1, 0, 0.0), CosineTerm::new(0.05, 1, 1, 0.3)],
    )
    .unwrap()
}

pub fn target_roof() -> CeilingFunction {
    CeilingFunction::trig(
        1.2,
        vec![CosineTerm::new(0.15, 0, 1, 0.7), CosineTerm::new(0.05, 2, -1, 0.0)],
    )
    .unwrap()
}

pub fn trig_system() -> SuspensionSystem {
    SuspensionSystem::new(HyperbolicToralMap::cat(), source_roof())
}

/// Cat map with `source_roof` against its shear conjugate with `target_roof`.
pub fn demo_pair() -> EquivalencePair {
    let f = HyperbolicToralMap::cat();
    let h = shear();
    let g = h.conjugate_map(&f).unwrap();
    EquivalencePair::new(
        SuspensionSystem::new(f, source_roof()),
        SuspensionSystem::new(g, target_roof()),
        h,
    )
    .unwrap()
}

/// Source roof equal to `target_roof ∘ shear`, so the equivalence is a
/// conjugacy.
pub fn conjugacy_pair() -> EquivalencePair {
    let f = HyperbolicToralMap::cat();
    let h = shear();
    let g = h.conjugate_map(&f).unwrap();
    let c_f = target_roof().pullback(&h).unwrap();
    EquivalencePair::new(
        SuspensionSystem::new(f, c_f),
        SuspensionSystem::new(g, target_roof()),
        h,
    )
    .unwrap()
}

pub fn constant_pair(c_f: f64, c_g: f64) -> EquivalencePair {
    let f = HyperbolicToralMap::cat();
    EquivalencePair::new(
        SuspensionSystem::new(f, CeilingFunction::constant(c_f).unwrap()),
        SuspensionSystem::new(f, CeilingFunction::constant(c_g).unwrap()),
        BaseConjugacy::Identity,
    )
    .unwrap()
}

/// Flow by walking one fiber at a time: up through roofs while the time
/// left exceeds the room in the current fiber, down through floors while it
/// is negative.
pub fn naive_flow(sys: &SuspensionSystem, p: &SuspensionPoint, t: f64) -> SuspensionPoint {
    let mut x = p.base;
    let mut h = p.height + t;
    loop {
        let roof = sys.roof(&x);
        if h >= roof {
            h -= roof;
            x = sys.map().apply(&x);
        } else if h < 0.0 {
            x = sys.map().apply_inverse(&x);
            h += sys.roof(&x);
        } else {
            return SuspensionPoint::new(x, h);
        }
    }
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}
