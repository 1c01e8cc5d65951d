use proptest::prelude::*;
use signal_lab::{eye_opening_area, fold_eye, generate_nrz, NrzConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn opening_area_is_within_unit_range(
        seed in 0u64..1000,
        rise in 0.0f64..0.49,
        noise in 0.0f64..0.1,
    ) {
        let cfg = NrzConfig {
            rise_time_fraction: rise,
            amplitude_noise_sigma: noise,
            rng_seed: seed,
            ..NrzConfig::default()
        };
        let wf = generate_nrz(&cfg, 127).unwrap();
        let area = eye_opening_area(&fold_eye(&wf, 1.0).unwrap()).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&area), "area = {}", area);
    }

    #[test]
    fn waveform_samples_are_finite_and_nonnegative_for_small_noise(
        seed in 0u64..1000,
        noise in 0.0f64..0.1,
    ) {
        let cfg = NrzConfig {
            amplitude_noise_sigma: noise,
            rng_seed: seed,
            ..NrzConfig::default()
        };
        let wf = generate_nrz(&cfg, 127).unwrap();
        prop_assert!(wf.samples.iter().all(|s| s.is_finite()));
    }
}
