//! Runs the search on noiseless reference-equation data for type-B layups
//! and prints each front.

use std::time::Instant;

use crashlab_core::{lhs_sample, reference_oracle, Orientation, ParameterSpace};
use crashlab_symreg::{evolve, SymregConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let doe = lhs_sample(&ParameterSpace::default(), 372, 42)?;
    let points: Vec<_> = doe
        .points
        .into_iter()
        .filter(|p| p.orientation == Orientation::B)
        .collect();
    let x: Vec<Vec<f64>> = points
        .iter()
        .map(|p| vec![f64::from(p.n_layers), p.thickness, p.layer_temp, p.tool_temp])
        .collect();
    let truth: Vec<_> = points.iter().map(reference_oracle).collect::<Result<_, _>>()?;
    let targets: [(&str, Vec<f64>); 3] = [
        ("intrusion", truth.iter().map(|m| m.intrusion).collect()),
        ("decel", truth.iter().map(|m| m.deceleration).collect()),
        ("ea", truth.iter().map(|m| m.ea).collect()),
    ];
    for (name, y) in targets {
        let t = Instant::now();
        let front = evolve(
            &x,
            &y,
            &SymregConfig {
                seed,
                ..SymregConfig::default()
            },
        )?;
        println!(
            "== {name}: {} rows, {} generations, {:.1} s",
            y.len(),
            front.generations,
            t.elapsed().as_secs_f64()
        );
        for m in &front.members {
            println!("{:>3} {:>12.5} {:.5} {}", m.complexity, m.mae, m.r2, m.expression);
        }
    }
    Ok(())
}
