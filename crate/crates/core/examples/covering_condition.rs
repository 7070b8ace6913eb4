//! Bump sums over the lattice sites of a box for several profiles.

use wegner_lab::geometry::Cube;
use wegner_lab::random_field::{verify_covering, BumpKind, BumpProfile};

fn main() -> wegner_lab::Result<()> {
    let profiles = [
        ("tent R=1", BumpProfile::new(BumpKind::Tent, 1.0, 1.0)?),
        ("tent R=0.5", BumpProfile::new(BumpKind::Tent, 0.5, 1.0)?),
        ("indicator R=0.5", BumpProfile::new(BumpKind::Indicator, 0.5, 1.0)?),
        ("smooth R=1.5", BumpProfile::new(BumpKind::SmoothCompact, 1.5, 1.0)?),
    ];
    for dim in [1, 2] {
        let cube = Cube::new(vec![0.0; dim], 2.0)?;
        for (label, p) in &profiles {
            let r = verify_covering(p, &cube, 0.05)?;
            println!(
                "d={dim} {label:<16} min {:.4} max {:.4} holds {} ({} points)",
                r.min_sum, r.max_sum, r.covering_holds, r.samples
            );
        }
    }
    Ok(())
}
