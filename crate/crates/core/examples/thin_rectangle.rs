//! Thin rectangles of unit area: numeric eigenvalue, pseudo sandwich,
//! Faber-Krahn value and Lyapunov functional.

use plap_bounds::experiments::{self, RunOptions, ThinRectParams};

fn main() -> plap_bounds::Result<()> {
    let res = experiments::thin_rect(&ThinRectParams::default(), &RunOptions::default())?;
    print!("{}", res.to_csv());
    for v in &res.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    Ok(())
}
