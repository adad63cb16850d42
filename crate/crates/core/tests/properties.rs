use std::sync::Arc;

use proptest::prelude::*;

use spinflow::angular_momentum::TwiceJ;
use spinflow::spin_diffusion::{spin_state, SpinMediumParams};
use spinflow::transport::{isotropise_step, AngularGrid, Dimension, KineticState, MediumParams};
use spinflow::weak_loc::{wl_correction, WLParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn isotropisation_conserves_density(
        coeffs in prop::collection::vec(0.0f64..2.0, 24),
        gamma in 0.1f64..10.0,
        steps in 1usize..40,
    ) {
        let medium = MediumParams::new(2, 1.0, gamma).unwrap();
        let grid = Arc::new(AngularGrid::uniform(Dimension::Two, 24).unwrap());
        let mut state = KineticState::isotropic(grid, [0.0; 3], 0.0);
        for (f, c) in state.f.iter_mut().zip(&coeffs) {
            f.re = *c;
        }
        let n0 = state.density();
        let dt = 0.1 / gamma;
        for _ in 0..steps {
            state = isotropise_step(&state, &medium, dt).unwrap();
        }
        prop_assert!((state.density() - n0).norm() < 1e-12);
        prop_assert!(state.f.iter().all(|f| f.re >= -1e-12));
    }

    #[test]
    fn spin_populations_sum_to_one(twice in 1u32..=10, gamma_sf in 0.0f64..5.0, t in 0.0f64..20.0) {
        let medium = MediumParams::new(3, 1.0, 1.0).unwrap();
        let p = SpinMediumParams::new(medium, gamma_sf, TwiceJ::new(twice)).unwrap();
        let rho = spin_state(&p, t).unwrap();
        let total: f64 = (0..rho.dim()).map(|i| rho.matrix[(i, i)].re).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matthiessen_scaling(gamma_el in 0.01f64..100.0, gamma_sf in 0.0f64..100.0) {
        let medium = MediumParams::new(3, 1.3, gamma_el).unwrap();
        let p = SpinMediumParams::new(medium, gamma_sf, TwiceJ::new(1)).unwrap();
        let expected = 1.3 * 1.3 / (3.0 * (gamma_el + gamma_sf));
        prop_assert!((p.d0() - expected).abs() <= 1e-15 * expected);
        if gamma_sf > 0.0 {
            prop_assert!(p.d0() < medium.diffusion_constant());
        }
    }

    #[test]
    fn wl_channels_sum_and_sign(
        dim in 1usize..=3,
        l_phi in 2.0f64..1e5,
        twice in 0u32..=6,
        tau_sf in 1e-2f64..1e4,
    ) {
        let p = WLParams::new(dim, 1.0, 1.0).with_l_phi(l_phi).with_spin_flip(TwiceJ::new(twice), tau_sf);
        let r = wl_correction(&p).unwrap();
        let sum: f64 = r.per_channel.iter().map(|c| c.contribution).sum();
        prop_assert!((sum - r.delta_d_over_d0).abs() <= 1e-14 * sum.abs().max(1e-300));
        prop_assert!(r.quadrature_discrepancy < 1e-8);
        let spinless = wl_correction(&WLParams::new(dim, 1.0, 1.0).with_l_phi(l_phi)).unwrap();
        prop_assert!(spinless.delta_d_over_d0 < 0.0);
    }
}
