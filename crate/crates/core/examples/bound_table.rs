//! Every applicable lower bound for one scenario, against the numeric eigenvalue.

use plap_bounds::bounds::{self, BoundScenario, ProblemParams};
use plap_bounds::eigensolve::{self, SolveOptions};
use plap_bounds::geometry::Domain;
use plap_bounds::weights::Weight;

fn main() -> plap_bounds::Result<()> {
    let d = Domain::unit_corner_box(&[2.0, 1.0])?;
    let w = Weight::RadialPower {
        center: vec![1.0, 0.5],
        a: 0.5,
    };
    let pp = ProblemParams::new(3.0, 2)?.with_s(2.0);
    let h = 1.0 / 48.0;
    let lambda = eigensolve::lambda1_grid(&d, h, &w, 3.0, &SolveOptions::default())?.lambda;
    let mut sc = BoundScenario::new(d, w, pp);
    sc.h = h;
    let cmp = bounds::compare_all(&sc, Some(lambda), 1e-3)?;
    println!("numeric lambda1 = {lambda:.5}\n");
    print!("{}", bounds::to_csv(&cmp.reports));
    if !cmp.violations.is_empty() {
        println!("\nviolations: {:?}", cmp.violations);
    }
    Ok(())
}
