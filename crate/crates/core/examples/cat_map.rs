//! Iterates the cat map on the fixed-point torus and prints its eigen data.

use suspflow::torus::{BaseConjugacy, HyperbolicToralMap, TorusPoint, UnimodularMatrix};

fn main() {
    let f = HyperbolicToralMap::cat();
    let e = f.eigen_data();
    println!("lambda_u = {:.12}  lambda_s = {:.12}", e.lambda_u, e.lambda_s);
    println!("v_u = {:?}  v_s = {:?}", e.v_u, e.v_s);

    let p = TorusPoint::new(0.1, 0.7);
    for n in [0, 1, 2, 5, 50, -50] {
        println!("f^{n:<3}(p) = {:?}", f.iterate(&p, n));
    }
    // 50 steps out and back is exact on the fixed-point grid
    assert_eq!(f.iterate(&f.iterate(&p, 50), -50), p);

    let h = BaseConjugacy::Linear(UnimodularMatrix::new(1, 1, 0, 1).unwrap());
    let g = h.conjugate_map(&f).unwrap();
    let (residual, _) = h.conjugacy_residual(&f, &g, 64);
    println!(
        "g = {:?}, max |g∘h − h∘f| on a 64x64 grid = {residual:e}",
        g.matrix().entries()
    );
}
