//! L^s norms, Muckenhoupt estimates and the g functional for sample weights.

use plap_bounds::geometry::Domain;
use plap_bounds::weights::{self, AtSampling, Weight};

fn main() -> plap_bounds::Result<()> {
    let d = Domain::new_ball(vec![0.0, 0.0], 1.0)?;
    let h = 1.0 / 64.0;
    let ws = [
        ("constant 2", Weight::Constant(2.0)),
        (
            "|x|^0.5",
            Weight::RadialPower {
                center: vec![0.0, 0.0],
                a: 0.5,
            },
        ),
        (
            "|x|^-0.5",
            Weight::RadialPower {
                center: vec![0.0, 0.0],
                a: -0.5,
            },
        ),
        ("d^0.5", Weight::DistPower { gamma: 0.5 }),
    ];
    println!("{:<12} {:>10} {:>10} {:>10}", "weight", "|w|_1", "|w|_2", "|w|_inf");
    for (name, w) in &ws {
        let sup = w.sup_norm(&d).map_or("unbounded".to_string(), |v| format!("{v:.5}"));
        println!(
            "{name:<12} {:>10.5} {:>10.5} {sup:>10}",
            weights::ls_norm(w, &d, 1.0, h)?,
            weights::ls_norm(w, &d, 2.0, h)?,
        );
    }

    let s = AtSampling {
        max_level: 4,
        resolution: 12,
    };
    println!("\nA_2 estimates and g(r) for t = 2:");
    for (name, w) in &ws[1..] {
        let a = weights::muckenhoupt_constant(w, &d, 2.0, &s)?;
        let g = weights::g_function(w, &d, 2.0, h)?;
        println!(
            "{name:<12} A_2 >= {:>8.4} (diverged: {}), g = {g:.4}",
            a.constant, a.diverged
        );
    }
    Ok(())
}
