//! Generalized trigonometric functions and the interval eigenvalues built on them.

use plap_bounds::specfun::{self, GeneralizedSine, QuadratureSpec};

fn main() -> plap_bounds::Result<()> {
    let q = QuadratureSpec::default();
    println!("{:>5} {:>14} {:>14} {:>14}", "p", "pi_p", "lambda1(0,1)", "mixed(0,1)");
    for p in [1.5, 2.0, 3.0, 5.0, 10.0] {
        println!(
            "{p:>5} {:>14.10} {:>14.6} {:>14.6}",
            specfun::pi_p(p, &q)?,
            specfun::lambda1_interval(1.0, p)?,
            specfun::lambda1_mixed(1.0, p)?
        );
    }

    let s = GeneralizedSine::new(3.0, q)?;
    println!("\nsin_3 on [0, pi_3]:");
    for k in 0..=8 {
        let x = s.pi_p() * k as f64 / 8.0;
        println!("  {x:8.5} {:10.7}", s.eval(x)?);
    }

    let pseudo = specfun::pseudo_lambda1_box(&[1.0, 1.0], 3.0)?;
    let (lo, hi) = specfun::sandwich_from_pseudo(pseudo.lambda_hat, 3.0, 2);
    println!("\nunit square, p = 3: {lo:.4} <= lambda1 <= {hi:.4}");
    Ok(())
}
