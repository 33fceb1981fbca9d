use crashlab_core::crashsim::{auto_substeps, integrate_with, DEFAULT_IMPACT_VELOCITY};
use crashlab_core::metrics::peak_deceleration_fd;
use crashlab_core::{
    build_rom, crush_load_efficiency, energy_absorbed, extract_metrics, forming_feasibility, integrate,
    integrate_substeps, intrusion, lhs_sample, peak_deceleration, CrashTrace, DesignPoint, FormingModel, MaterialCard,
    Orientation, ParameterSpace, RomConstants, RomModel, SolverSettings, ToolGeometry,
};

const V0: f64 = DEFAULT_IMPACT_VELOCITY;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn rom_for(p: &DesignPoint) -> Option<RomModel> {
    let geom = ToolGeometry::default();
    let f = forming_feasibility(p, &FormingModel::default(), &geom).unwrap();
    f.feasible
        .then(|| build_rom(p, &f, &MaterialCard::default(), &geom, &RomConstants::default()).unwrap())
}

/// Centre of the default design space.
fn default_point() -> DesignPoint {
    DesignPoint {
        n_layers: 10,
        thickness: 0.35,
        orientation: Orientation::A,
        punch_velocity: 5.25,
        layer_temp: 300.0,
        tool_temp: 120.0,
        air_temp: 20.0,
    }
}

fn simulate(rom: &RomModel) -> CrashTrace {
    integrate_with(rom, &SolverSettings::default()).unwrap()
}

#[test]
fn elastic_half_sine_matches_closed_form() {
    let (m, k) = (105.0, 2.5e6);
    let rom = RomModel::linear_elastic(m, k);
    let tr = integrate(&rom, V0, 0.05, 1e-5).unwrap();
    let peak = tr.force.iter().copied().fold(0.0, f64::max);
    assert!(rel(peak, V0 * (k * m).sqrt()) < 1e-3, "peak force {peak}");
    let contact = tr.return_time().expect("mass rebounds");
    assert!(
        rel(contact, std::f64::consts::PI * (m / k).sqrt()) < 1e-3,
        "contact {contact}"
    );
    assert!(rel(intrusion(&tr), V0 * (m / k).sqrt() * 1000.0) < 1e-3);
    assert!(rel(peak_deceleration(&tr).unwrap(), V0 * (k / m).sqrt()) < 1e-3);
    // Elastic bounce returns all kinetic energy; EA is the peak strain energy.
    let e0 = 0.5 * m * V0 * V0;
    assert!(rel(*tr.kinetic_energy.last().unwrap(), e0) < 1e-4);
    let peak_ie = tr.internal_energy.iter().copied().fold(0.0, f64::max);
    assert!(rel(energy_absorbed(&tr).unwrap(), peak_ie) < 1e-4);
}

#[test]
fn rest_stays_at_rest() {
    let rom = rom_for(&default_point()).unwrap();
    let tr = integrate(&rom, 0.0, 1e-2, 1e-5).unwrap();
    assert_eq!(tr.len(), 1001);
    assert!(tr
        .force
        .iter()
        .chain(&tr.displacement)
        .chain(&tr.kinetic_energy)
        .all(|&v| v == 0.0));
}

#[test]
fn trace_shape_and_initial_state() {
    let rom = rom_for(&default_point()).unwrap();
    let tr = simulate(&rom);
    assert_eq!(tr.len(), 1001);
    for s in [
        &tr.displacement,
        &tr.velocity,
        &tr.kinetic_energy,
        &tr.internal_energy,
        &tr.dissipated_energy,
    ] {
        assert_eq!(s.len(), 1001);
    }
    assert_eq!(tr.displacement[0], 0.0);
    assert!(rel(tr.kinetic_energy[0], 0.5 * rom.mass * V0 * V0) < 1e-15);
    assert!(tr
        .internal_energy
        .iter()
        .chain(&tr.dissipated_energy)
        .chain(&tr.kinetic_energy)
        .all(|&e| e >= 0.0));
}

#[test]
fn invalid_settings_rejected() {
    let rom = RomModel::linear_elastic(100.0, 1e6);
    assert!(integrate(&rom, V0, 0.0, 1e-5).is_err());
    assert!(integrate(&rom, V0, 1e-2, -1e-5).is_err());
    // Internal step above half the critical step.
    let dt_crit = 2.0 / rom.omega();
    assert!(integrate_substeps(&rom, V0, 1e-2, 1e-5, 1).is_ok() == (1e-5 <= 0.5 * dt_crit));
    let coarse = RomModel::linear_elastic(1.0, 1e12);
    assert!(integrate_substeps(&coarse, V0, 1e-2, 1e-5, 1).is_err());
}

#[test]
fn energy_balance_on_fifty_design_points() {
    let doe = lhs_sample(&ParameterSpace::default(), 120, 2718).unwrap();
    let roms: Vec<RomModel> = doe.points.iter().filter_map(rom_for).take(50).collect();
    assert_eq!(roms.len(), 50);
    for rom in &roms {
        let tr = simulate(rom);
        let e0 = tr.initial_energy();
        for i in 0..tr.len() {
            let total = tr.kinetic_energy[i] + tr.internal_energy[i] + tr.dissipated_energy[i];
            assert!((total - e0).abs() <= 1e-4 * e0, "sample {i}: {total} vs {e0}");
        }
    }
}

#[test]
fn default_point_bounces_with_losses() {
    let rom = rom_for(&default_point()).unwrap();
    let tr = simulate(&rom);
    let e0 = tr.initial_energy();
    assert!(*tr.kinetic_energy.last().unwrap() < e0);
    assert!(tr.max_energy_error() <= 1e-4 * e0);
    // Plastic set keeps the wall displaced, but the mass does rebound.
    assert!(tr.velocity.iter().any(|&v| v < 0.0));
}

#[test]
fn halving_internal_step_changes_peak_force_little() {
    let rom = rom_for(&default_point()).unwrap();
    let s = SolverSettings::default();
    let n = auto_substeps(&rom, s.dt_out, s.step_fraction).unwrap();
    let a = integrate_substeps(&rom, V0, s.duration, s.dt_out, n).unwrap();
    let b = integrate_substeps(&rom, V0, s.duration, s.dt_out, 2 * n).unwrap();
    let peak = |t: &CrashTrace| t.force.iter().copied().fold(0.0, f64::max);
    assert!(rel(peak(&a), peak(&b)) < 5e-3);
}

#[test]
fn contact_is_unilateral() {
    let doe = lhs_sample(&ParameterSpace::default(), 60, 5).unwrap();
    for rom in doe.points.iter().filter_map(rom_for) {
        let tr = simulate(&rom);
        for i in 0..tr.len() {
            assert!(tr.force[i] >= 0.0);
            if tr.displacement[i] <= tr.residual[i] {
                assert_eq!(tr.force[i], 0.0, "force out of contact at sample {i}");
            }
        }
    }
}

#[test]
fn cle_bounded_over_default_doe() {
    let doe = lhs_sample(&ParameterSpace::default(), 400, 42)
        .unwrap()
        .canonical()
        .unwrap();
    let mut simulated = 0;
    for rom in doe.points.iter().filter_map(rom_for) {
        let cle = crush_load_efficiency(&simulate(&rom)).unwrap();
        assert!(cle > 0.0 && cle <= 1.0, "CLE {cle}");
        simulated += 1;
    }
    assert!(simulated > 200);
}

#[test]
fn force_and_velocity_decelerations_agree_on_smooth_traces() {
    for (m, k) in [(105.0, 2.5e6), (140.0, 8.0e6), (101.0, 4.0e5)] {
        let tr = integrate(&RomModel::linear_elastic(m, k), V0, 0.05, 1e-5).unwrap();
        let a = peak_deceleration(&tr).unwrap();
        assert!(rel(peak_deceleration_fd(&tr), a) < 0.02);
    }
}

#[test]
fn knockdown_scales_stiffness_linearly() {
    let p = default_point();
    let geom = ToolGeometry::default();
    let mut f = forming_feasibility(&p, &FormingModel::default(), &geom).unwrap();
    let c = RomConstants::default();
    let mat = MaterialCard::default();
    f.knockdown = 1.0;
    let full = build_rom(&p, &f, &mat, &geom, &c).unwrap();
    f.knockdown = 0.883;
    let reduced = build_rom(&p, &f, &mat, &geom, &c).unwrap();
    assert!(rel(reduced.k_elastic / full.k_elastic, 0.883) < 1e-15);
    assert!(full.mass > 100.0);
}

#[test]
fn single_precision_tracks_double() {
    let rom = rom_for(&default_point()).unwrap();
    let a = extract_metrics(&simulate(&rom)).unwrap();
    let rom32 = rom.cast::<f32>();
    let tr32 = integrate_with(&rom32, &SolverSettings::default()).unwrap();
    let b = extract_metrics(&tr32).unwrap();
    assert!(rel(f64::from(b.ea), a.ea) < 1e-3);
    assert!(rel(f64::from(b.intrusion), a.intrusion) < 1e-3);
}
