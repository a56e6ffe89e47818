//! Inner radius, distance field and asymmetry of analytic and rasterized domains.

use plap_bounds::geometry::{self, Domain};

fn main() -> plap_bounds::Result<()> {
    let shapes = [
        ("unit square", Domain::unit_corner_box(&[1.0, 1.0])?),
        ("thin box", Domain::unit_corner_box(&[4.0, 0.25])?),
        ("disk", Domain::new_ball(vec![0.0, 0.0], 1.0)?),
        ("annulus", Domain::new_annulus(vec![0.0, 0.0], 0.5, 1.5)?),
    ];
    println!(
        "{:<12} {:>10} {:>12} {:>10} {:>10}",
        "domain", "r exact", "r raster", "|raster|", "asym"
    );
    for (name, d) in &shapes {
        let m = geometry::rasterize(d, 1.0 / 64.0)?;
        println!(
            "{name:<12} {:>10.5} {:>12.5} {:>10.5} {:>10.5}",
            d.inner_radius(),
            m.inner_radius(),
            m.measure(),
            geometry::fraenkel_asymmetry(&m)
        );
    }

    let d = &shapes[3].1;
    println!("\ndistance to the boundary of the annulus along the x-axis:");
    for k in 0..=8 {
        let x = 0.5 + k as f64 / 8.0;
        println!("  x = {x:.3}: {:.4}", geometry::distance_to_boundary(d, &[x, 0.0]));
    }
    Ok(())
}
