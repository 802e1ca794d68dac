//! Force and neutral-height values checked against hand arithmetic.

use approx::assert_abs_diff_eq;
use morphbot_core::hydrostatics::{
    default_height_axis, default_mass_axis, design_space, net_hydrostatic_force, neutral_height, weight_force,
    FluidParams,
};
use morphbot_core::morphology::VolumeModel;

const G: f64 = 9.81;

// rho * V[cm^3] * 1e-6 * g with rho = 1000
fn buoyancy_by_hand(volume_cm3: f64) -> f64 {
    volume_cm3 * 1e-3 * G
}

#[test]
fn weight_of_the_robot() {
    let w = weight_force(0.330, &FluidParams::default()).unwrap();
    assert_abs_diff_eq!(w, 0.330 * G, epsilon = 1e-12);
    assert_abs_diff_eq!(w, 3.237, epsilon = 1e-3);
}

#[test]
fn affine_net_forces_at_stroke_ends() {
    let m = VolumeModel::affine();
    let fluid = FluidParams::default();
    // 135 + 120 and 303.75 + 120 cm^3 displaced
    let lo = buoyancy_by_hand(255.0) - 0.330 * G;
    let hi = buoyancy_by_hand(423.75) - 0.330 * G;
    assert_abs_diff_eq!(lo, -0.73575, epsilon = 1e-12);
    assert_abs_diff_eq!(hi, 0.9196875, epsilon = 1e-12);
    assert_abs_diff_eq!(net_hydrostatic_force(0.330, 4.5, &m, &fluid).unwrap(), lo, epsilon = 1e-12);
    assert_abs_diff_eq!(net_hydrostatic_force(0.330, 9.0, &m, &fluid).unwrap(), hi, epsilon = 1e-12);
}

#[test]
fn neutral_heights_by_hand() {
    let fluid = FluidParams::default();
    // 330 cm^3 needed, 120 fixed: prism 210 / 40.5, affine (210 + 33.75) / 37.5
    assert_abs_diff_eq!(
        neutral_height(0.330, &VolumeModel::prism(), &fluid).unwrap(),
        210.0 / 40.5,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        neutral_height(0.330, &VolumeModel::affine(), &fluid).unwrap(),
        6.5,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(210.0 / 40.5, 5.185, epsilon = 1e-3);
}

#[test]
fn prism_neutral_curve_is_the_closed_line() {
    let grid = design_space(
        default_mass_axis(),
        default_height_axis(),
        &VolumeModel::prism(),
        &FluidParams::default(),
    )
    .unwrap();
    assert!(!grid.neutral_curve.is_empty());
    for &(m, h) in &grid.neutral_curve {
        assert_abs_diff_eq!(h, (m * 1000.0 - 120.0) / 40.5, epsilon = 1e-6);
    }
    // every mass whose line height is on the axis is present
    let expected = grid
        .mass_axis
        .iter()
        .filter(|m| {
            let h = (*m * 1000.0 - 120.0) / 40.5;
            (4.0..=10.0).contains(&h)
        })
        .count();
    assert_eq!(grid.neutral_curve.len(), expected);
}

#[test]
fn grid_cells_match_direct_evaluation() {
    let fluid = FluidParams::default();
    let model = VolumeModel::affine();
    let grid = design_space(default_mass_axis(), default_height_axis(), &model, &fluid).unwrap();
    for (r, &h) in grid.height_axis.iter().enumerate().step_by(7) {
        for (c, &m) in grid.mass_axis.iter().enumerate().step_by(5) {
            let by_hand = buoyancy_by_hand(37.5 * h - 33.75 + 120.0) - m * G;
            assert_abs_diff_eq!(grid.net_force[r][c], by_hand, epsilon = 1e-9);
        }
    }
}
