//! Tabulates one fiber reparametrization for both bump shapes and shows the
//! exponential bump failing where the plateau bump succeeds.

use suspflow::error::Error;
use suspflow::smoothing::{BumpShape, FiberReparam};
use suspflow::torus::TorusPoint;

fn main() {
    let x = TorusPoint::new(0.25, 0.5);
    let fiber = FiberReparam::build(x, 0.3, 1.1, 1.4, BumpShape::default()).unwrap();
    println!("t,phi,dphi");
    for i in 0..=22 {
        let t = 1.1 * i as f64 / 22.0;
        let (phi, dphi) = fiber.eval(t).unwrap();
        println!("{t:.4},{phi:.12},{dphi:.12}");
    }

    // a fiber three times as tall as its image
    for shape in [BumpShape::Exponential, BumpShape::Plateau { delta: 0.1 }] {
        match FiberReparam::build(x, 1.0 / 3.0, 3.0, 1.0, shape) {
            Ok(f) => eprintln!("{shape:?}: ok, min derivative {:.4}", f.min_derivative()),
            Err(Error::MonotonicityViolation { min_derivative, .. }) => {
                eprintln!("{shape:?}: not monotone, min derivative {min_derivative:.4}")
            }
            Err(e) => eprintln!("{shape:?}: {e}"),
        }
    }
}
