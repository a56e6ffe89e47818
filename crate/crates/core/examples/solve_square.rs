//! Lattice eigenvalues of the unit square under refinement.

use plap_bounds::eigensolve::{self, SolveOptions};
use plap_bounds::geometry::Domain;
use plap_bounds::specfun;
use plap_bounds::weights::Weight;

fn main() -> plap_bounds::Result<()> {
    let d = Domain::unit_corner_box(&[1.0, 1.0])?;
    let one = Weight::Constant(1.0);
    let opts = SolveOptions::default();
    for p in [2.0, 3.0] {
        let hat = specfun::pseudo_lambda1_box(&[1.0, 1.0], p)?.lambda_hat;
        let (lo, hi) = specfun::sandwich_from_pseudo(hat, p, 2);
        println!("p = {p}: sandwich [{lo:.4}, {hi:.4}]");
        for n in [16, 32, 64] {
            let s = eigensolve::lambda1_grid(&d, 1.0 / n as f64, &one, p, &opts)?;
            println!(
                "  h = 1/{n:<3} lambda = {:.5}  ({} iterations, residual {:.1e})",
                s.lambda, s.iterations, s.residual
            );
        }
    }
    println!("2 pi^2 = {:.5}", 2.0 * std::f64::consts::PI.powi(2));
    Ok(())
}
