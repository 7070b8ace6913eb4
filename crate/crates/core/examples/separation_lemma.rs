//! Separation cases for distant pairs of two-particle boxes.

use wegner_lab::geometry::{classify_separation, is_sufficiently_distant, TwoParticleBox};

fn main() -> wegner_lab::Result<()> {
    let origin = TwoParticleBox::from_parts(vec![0.0], 1.0, vec![0.0], 1.0)?;
    let pairs = [
        ("far diagonal translate", TwoParticleBox::from_parts(vec![100.0], 1.0, vec![100.0], 1.0)?),
        ("first particle moved", TwoParticleBox::from_parts(vec![100.0], 1.0, vec![0.0], 1.0)?),
        ("second particle moved", TwoParticleBox::from_parts(vec![0.0], 1.0, vec![100.0], 1.0)?),
        ("too close", TwoParticleBox::from_parts(vec![10.0], 1.0, vec![0.0], 1.0)?),
    ];
    for (label, other) in &pairs {
        if !is_sufficiently_distant(&origin, other, 1.0)? {
            println!("{label:<24} not sufficiently distant");
            continue;
        }
        let forward = classify_separation(&origin, other, 1.0)?;
        let backward = classify_separation(other, &origin, 1.0)?;
        println!(
            "{label:<24} {:?} {:?}   swapped: {:?}",
            forward.cases, forward.kind, backward.cases
        );
    }
    Ok(())
}
