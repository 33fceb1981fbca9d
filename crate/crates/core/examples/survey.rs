//! Runs the surrogate over a small default-space design and prints the
//! extracted metrics next to the reference equations.

use crashlab_core::crashsim::integrate_with;
use crashlab_core::{
    build_rom, extract_metrics, forming_feasibility, lhs_sample, reference_oracle, FormingModel, MaterialCard,
    ParameterSpace, RomConstants, SolverSettings, ToolGeometry,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let doe = lhs_sample(&ParameterSpace::default(), n, 42)?;
    let width: Option<f64> = std::env::args().nth(2).map(|s| s.parse()).transpose()?;
    let (model, geom, mat) = (
        FormingModel::default(),
        ToolGeometry::default(),
        MaterialCard::default(),
    );
    let mut consts = RomConstants::default();
    if let Some(w) = width {
        consts.load_path_width = w;
    }
    println!("layers  t_mm  set   kd      cle     ea_J      intr_mm   decel    | oracle cle  ea  intr  decel");
    for p in &doe.points {
        let f = forming_feasibility(p, &model, &geom)?;
        if !f.feasible {
            continue;
        }
        let rom = build_rom(p, &f, &mat, &geom, &consts)?;
        let tr = integrate_with(&rom, &SolverSettings::default())?;
        let m = extract_metrics(&tr)?;
        let o = reference_oracle(p)?;
        println!(
            "{:>4} {:>7.3} {} {:>7.4} {:>7.4} {:>9.1} {:>8.2} {:>9.1} | {:.3} {:.0} {:.2} {:.0}",
            p.n_layers,
            p.thickness,
            p.orientation,
            f.knockdown,
            m.cle,
            m.ea,
            m.intrusion,
            m.deceleration,
            o.cle,
            o.ea,
            o.intrusion,
            o.deceleration
        );
    }
    Ok(())
}
