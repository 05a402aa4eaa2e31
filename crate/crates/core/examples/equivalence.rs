//! Builds the fiber-scaling equivalence between two suspensions and checks
//! the time change on random orbits.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use suspflow::ceiling::{CeilingFunction, CosineTerm};
use suspflow::equivalence::EquivalencePair;
use suspflow::suspension::SuspensionSystem;
use suspflow::torus::{BaseConjugacy, HyperbolicToralMap, UnimodularMatrix};

fn main() {
    let f = HyperbolicToralMap::cat();
    let h = BaseConjugacy::Linear(UnimodularMatrix::new(1, 1, 0, 1).unwrap());
    let g = h.conjugate_map(&f).unwrap();
    let c_f = CeilingFunction::trig(
        1.0,
        vec![CosineTerm::new(0.1, 1, 0, 0.0), CosineTerm::new(0.05, 1, 1, 0.3)],
    )
    .unwrap();
    let c_g = CeilingFunction::trig(
        1.2,
        vec![CosineTerm::new(0.15, 0, 1, 0.7), CosineTerm::new(0.05, 2, -1, 0.0)],
    )
    .unwrap();
    let pair = EquivalencePair::new(SuspensionSystem::new(f, c_f), SuspensionSystem::new(g, c_g), h).unwrap();

    let mut rng = SplitMix64::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let p = pair.source().random_point(&mut rng);
        let t = rng.gen_range(-20.0..20.0);
        let rec = pair.verification_record(&p, t, 0.0);
        worst = worst.max(rec.residual);
        assert_eq!(rec.n_src, rec.n_tgt);
        if i < 5 {
            println!("{}", serde_json::to_string(&rec).unwrap());
        }
    }
    println!("max residual over 1000 orbits: {worst:e}");
}
