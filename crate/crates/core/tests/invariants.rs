use num_complex::Complex64;
use proptest::prelude::*;

use kpds::diagnostics::{error_norm, mass};
use kpds::exact::{kp2_field, ThetaParams};
use kpds::grid::forward_transform;
use kpds::harness::presets::enforce_kp_constraint;
use kpds::models::{initial_data_ds, initial_data_kp, DsSystem, KpSystem};
use kpds::{evolve, EvolveConfig, Grid2D, ModelSpec, PhysicalField, Scheme, SpectralField, Stepper};

fn kp_pulse(grid: Grid2D, amplitude: f64) -> SpectralField {
    let u = initial_data_kp(&grid);
    let scaled = PhysicalField {
        grid,
        values: u.values.iter().map(|z| z * amplitude).collect(),
    };
    let mut v = forward_transform(&scaled);
    enforce_kp_constraint(&mut v);
    v
}

#[test]
fn theta_solution_is_propagated_to_its_exact_value() {
    let p = ThetaParams::kp2_reference();
    let (lx, ly) = p.periods();
    let grid = Grid2D::new(256, 256, lx, ly).unwrap();
    let mut v0 = forward_transform(&kp2_field(&grid, 0.0, &p).unwrap());
    enforce_kp_constraint(&mut v0);
    let mut exact = forward_transform(&kp2_field(&grid, 0.1, &p).unwrap());
    enforce_kp_constraint(&mut exact);
    let mut errs = Vec::new();
    for nt in [25, 50] {
        let mut sys = KpSystem::new(ModelSpec::kp2(1.0), grid).unwrap();
        let cfg = EvolveConfig::new(0.1, nt);
        let mut st = Stepper::for_system(Scheme::EtdKrogstad, &sys, cfg.h()).unwrap();
        let run = evolve(&mut sys, &mut st, &v0.coeffs, &cfg, &mut []).unwrap();
        errs.push(error_norm(&run.state, &exact.coeffs, &v0.coeffs).unwrap());
    }
    assert!(errs[1] < 1e-6, "{errs:?}");
    assert!(errs[0] / errs[1] > 8.0, "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kp_steps_keep_real_zero_mean_states(
        amplitude in 0.1f64..2.0,
        scheme in prop::sample::select(vec![Scheme::Ifrk4, Scheme::EtdCm, Scheme::EtdKrogstad, Scheme::EtdHo, Scheme::Dcrk]),
        kp1 in any::<bool>(),
    ) {
        let grid = Grid2D::new(32, 16, 3.0, 3.0).unwrap();
        let model = if kp1 { ModelSpec::kp1(1.0) } else { ModelSpec::kp2(1.0) };
        let v0 = kp_pulse(grid, amplitude);
        let mut sys = KpSystem::new(model, grid).unwrap();
        let cfg = EvolveConfig::new(0.02, 8);
        let mut st = Stepper::for_system(scheme, &sys, cfg.h()).unwrap();
        let run = evolve(&mut sys, &mut st, &v0.coeffs, &cfg, &mut []).unwrap();
        let v = SpectralField::new(grid, run.state).unwrap();
        let scale = v0.max_abs();
        // the x-mean column carries no content and the state stays real
        for iy in 0..grid.ny {
            prop_assert!(v.at(0, iy).norm() <= 1e-12 * scale);
        }
        prop_assert!(v.hermitian_defect() <= 1e-12 * scale);
    }

    #[test]
    fn ds_splitting_conserves_mass(
        amplitude in 0.2f64..1.5,
        eta in 0.1f64..2.0,
        focusing in any::<bool>(),
        fourth in any::<bool>(),
    ) {
        let grid = Grid2D::new(32, 32, 2.0, 2.0).unwrap();
        let model = ModelSpec::ds2(0.1, if focusing { -1.0 } else { 1.0 }, eta);
        let u = initial_data_ds(&grid, eta).unwrap();
        let scaled = PhysicalField {
            grid,
            values: u.values.iter().map(|z| z * amplitude * Complex64::new(0.6, 0.8)).collect(),
        };
        let v0 = forward_transform(&scaled);
        let mut sys = DsSystem::new(model, grid).unwrap();
        let scheme = if fourth { Scheme::Yoshida4 } else { Scheme::Strang2 };
        let cfg = EvolveConfig::new(0.05, 10);
        let mut st = Stepper::for_system(scheme, &sys, cfg.h()).unwrap();
        let run = evolve(&mut sys, &mut st, &v0.coeffs, &cfg, &mut []).unwrap();
        let m0 = mass(&v0);
        let m1 = mass(&SpectralField::new(grid, run.state).unwrap());
        prop_assert!(((m1 - m0) / m0).abs() <= 1e-12);
    }
}
