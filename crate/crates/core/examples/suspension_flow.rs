//! Flows a point under a trigonometric roof and writes the trajectory as CSV.

use suspflow::ceiling::{CeilingFunction, CosineTerm};
use suspflow::suspension::{write_trajectory_csv, SuspensionPoint, SuspensionSystem};
use suspflow::torus::{HyperbolicToralMap, TorusPoint};

fn main() {
    let roof = CeilingFunction::trig(
        1.0,
        vec![CosineTerm::new(0.1, 1, 0, 0.0), CosineTerm::new(0.05, 1, 1, 0.3)],
    )
    .unwrap();
    let system = SuspensionSystem::new(HyperbolicToralMap::cat(), roof);
    let p = SuspensionPoint::new(TorusPoint::new(0.3, 0.4), 0.5);

    let times: Vec<f64> = (0..=20).map(|i| -5.0 + 0.5 * i as f64).collect();
    let rows = system.trajectory(&p, &times);
    write_trajectory_csv(std::io::stdout().lock(), &rows).unwrap();

    let (r, t) = (7.3, -11.9);
    let split = system.flow(&system.flow(&p, r), t);
    let whole = system.flow(&p, r + t);
    eprintln!("group law residual: {:e}", system.section_distance(&split, &whole));
}
