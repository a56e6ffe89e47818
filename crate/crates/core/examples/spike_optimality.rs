//! Radial spikes shrinking with the ball, then unit-mass square spikes.

use plap_bounds::experiments::{self, OptimalityParams, RunOptions, SpikeSturmParams};

fn main() -> plap_bounds::Result<()> {
    let opts = RunOptions::default();
    for res in [
        experiments::optimality(&OptimalityParams::default(), &opts)?,
        experiments::spike_sturm(&SpikeSturmParams::default(), &opts)?,
    ] {
        println!("== {}", res.experiment);
        print!("{}", res.to_csv());
        for v in &res.verdicts {
            println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
        }
        println!();
    }
    Ok(())
}
