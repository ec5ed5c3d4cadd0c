//! Property tests over the transform and serialization invariants.

use proptest::prelude::*;

use bootviz_core::haar::{haar2, ihaar2};
use bootviz_core::img::{hsv_to_rgb, normalize_unit, rgb_to_hsv, GrayImage, HsvPixel};
use bootviz_core::io::{mask_from_rle, mask_to_rle};
use bootviz_core::kspace::{fft2, ifft2_real};
use bootviz_core::recon::soft_threshold;
use bootviz_core::sampling::{make_mask, MaskSpec};

fn arb_image(max_side: usize) -> impl Strategy<Value = GrayImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(h, w)| {
        prop::collection::vec(-10.0f64..10.0, h * w)
            .prop_map(move |pixels| GrayImage::new(h, w, pixels).unwrap())
    })
}

proptest! {
    #[test]
    fn fft_round_trip(img in arb_image(24)) {
        let back = ifft2_real(&fft2(&img));
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn haar_round_trip_and_parseval(img in arb_image(32)) {
        let coeffs = haar2(&img);
        let back = ihaar2(&coeffs);
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let e1: f64 = img.pixels().iter().map(|v| v * v).sum();
        let e2: f64 = coeffs.pixels().iter().map(|v| v * v).sum();
        prop_assert!((e1 - e2).abs() <= 1e-8 * e1.max(1.0));
    }

    #[test]
    fn hsv_rgb_inverse(hue in 0.0f64..360.0, sat in 1e-3f64..1.0, val in 1e-3f64..1.0) {
        let back = rgb_to_hsv(hsv_to_rgb(HsvPixel::new(hue, sat, val)));
        let hue_err = (back.hue - hue).abs();
        prop_assert!(!(1e-6..=360.0 - 1e-6).contains(&hue_err));
        prop_assert!((back.saturation - sat).abs() < 1e-6);
        prop_assert!((back.value - val).abs() < 1e-6);
    }

    #[test]
    fn normalize_lands_in_unit_interval(img in arb_image(16)) {
        let out = normalize_unit(&img);
        let (min, max) = out.min_max();
        prop_assert!(min >= 0.0 && max <= 1.0);
        // Idempotent on its own output.
        let again = normalize_unit(&out);
        for (a, b) in out.pixels().iter().zip(again.pixels()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn soft_threshold_shrinks(x in -100.0f64..100.0, t in 0.0f64..50.0) {
        let y = soft_threshold(x, t);
        prop_assert!(y.abs() <= x.abs());
        prop_assert!(y == 0.0 || y.signum() == x.signum());
        prop_assert!((x.abs() - y.abs() - t.min(x.abs())).abs() < 1e-12);
    }

    #[test]
    fn mask_rle_round_trips(
        seed in any::<u64>(),
        frac in 0.05f64..1.0,
        center in 0.0f64..0.04,
        h in 8usize..40,
        w in 8usize..40,
    ) {
        let spec = MaskSpec::Horizontal {
            retained_fraction: frac,
            center_fraction: center,
            seed,
        };
        prop_assume!((frac * h as f64).round() >= 1.0);
        prop_assume!(frac >= center);
        if let Ok(mask) = make_mask(&spec, h, w) {
            let back = mask_from_rle(&mask_to_rle(&mask)).unwrap();
            prop_assert_eq!(mask, back);
        }
    }
}
