use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use haps_core::channel::{
    compose_links, draw_users, estimate_k_factor, instant_rng, path_loss, sample_rician_power, ArrayPattern, CellTopology,
    LinkBudget,
};

#[test]
fn same_seed_and_instant_give_the_same_users() {
    let t = CellTopology::default();
    let a = draw_users(&t, &mut instant_rng(7, 3)).unwrap();
    let b = draw_users(&t, &mut instant_rng(7, 3)).unwrap();
    let c = draw_users(&t, &mut instant_rng(7, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn users_sit_in_their_cell_bands_and_hear_their_neighbours() {
    let t = CellTopology::default();
    let cells = draw_users(&t, &mut instant_rng(1, 0)).unwrap();
    assert_eq!(cells.len(), 7);
    for (m, users) in cells.iter().enumerate() {
        let (lo, hi) = t.elevation_band(m);
        assert_eq!(users.len(), 8);
        for u in users {
            assert!((lo..=hi).contains(&u.elevation));
            let heard: Vec<usize> = u.interferer_fades.iter().map(|f| f.0).collect();
            assert_eq!(heard, t.neighbors(m));
        }
    }
    assert_eq!(t.neighbors(0), vec![1, 2, 3, 4, 5, 6]);
    assert_eq!(t.neighbors(1), vec![0, 6, 2]);
}

#[test]
fn links_are_sorted_weakest_first_and_scale_with_altitude() {
    let t = CellTopology::default();
    let draws = draw_users(&t, &mut instant_rng(5, 12)).unwrap();
    let powers = vec![10.0; 7];
    let low = compose_links(&draws, &ArrayPattern::default(), &LinkBudget::default(), 18_000.0, &powers).unwrap();
    let high = compose_links(&draws, &ArrayPattern::default(), &LinkBudget::default(), 24_000.0, &powers).unwrap();
    for (l, h) in low.iter().zip(&high) {
        assert!(l.windows(2).all(|w| w[0].composite >= w[1].composite));
        for x in l {
            let y = h.iter().find(|y| y.user == x.user).unwrap();
            // Only the noise term of A carries the H^β factor.
            assert!((y.path_loss / x.path_loss - (24.0f64 / 18.0).powi(2)).abs() < 1e-9);
            assert!(y.composite > x.composite);
        }
    }
}

proptest! {
    #[test]
    fn path_loss_grows_with_altitude_and_slant(h in 15_000.0f64..30_000.0, psi in 0.1f64..1.5) {
        let p = LinkBudget::default();
        prop_assert!(path_loss(&p, h * 1.1, psi).unwrap() > path_loss(&p, h, psi).unwrap());
        prop_assert!(path_loss(&p, h, psi * 0.9).unwrap() > path_loss(&p, h, psi).unwrap());
    }

    #[test]
    fn rician_power_has_unit_mean(k in 0.0f64..20.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 20_000;
        let mean = (0..n).map(|_| sample_rician_power(k, &mut rng).unwrap()).sum::<f64>() / n as f64;
        prop_assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }
}

#[test]
fn k_factor_estimate_tracks_the_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in [1.0, 4.5, 10.0] {
        let draws: Vec<f64> = (0..200_000).map(|_| sample_rician_power(k, &mut rng).unwrap()).collect();
        let est = estimate_k_factor(&draws);
        assert!((est - k).abs() / k < 0.1, "{k}: {est}");
    }
    assert!(sample_rician_power(-1.0, &mut rng).is_err());
}
