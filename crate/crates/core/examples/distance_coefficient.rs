//! Distance coefficients on balls: scaling in R and the scale-free functional.

use plap_bounds::eigensolve::{self, SolveOptions};
use plap_bounds::experiments::{self, DistCoeffParams, RunOptions};

fn main() -> plap_bounds::Result<()> {
    let res = experiments::dist_coeff(&DistCoeffParams::default(), &RunOptions::default())?;
    print!("{}", res.to_csv());
    for v in &res.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }

    println!("\nunit disk, p = 3, as the coefficient exponent varies:");
    for g in [-0.9, -0.5, 0.0, 0.5, 1.0, 2.0] {
        let s = eigensolve::lambda1_radial_coeff(2, 1.0, 3.0, g, 2000, &SolveOptions::default())?;
        println!("  gamma = {g:>5}: lambda = {:.5}", s.lambda);
    }
    Ok(())
}
