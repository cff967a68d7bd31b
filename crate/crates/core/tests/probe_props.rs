use knowledge_bottleneck::probe::{parse_pgm, pixel_features, write_pgm, GrayImage, RandomNet};
use proptest::prelude::*;

fn image_pair() -> impl Strategy<Value = (GrayImage, GrayImage)> {
    (1usize..70, 1usize..70).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(any::<u8>(), w * h),
            prop::collection::vec(any::<u8>(), w * h),
        )
            .prop_map(move |(a, b)| {
                (
                    GrayImage::new(w, h, a).unwrap(),
                    GrayImage::new(w, h, b).unwrap(),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pixel_features_are_one_lipschitz((a, b) in image_pair()) {
        let input_gap = a.pixels.iter().zip(&b.pixels).map(|(x, y)| (*x as f64 - *y as f64).abs()).fold(0.0, f64::max) / 255.0;
        let fa = pixel_features(&a);
        let fb = pixel_features(&b);
        prop_assert_eq!(fa.len(), 768);
        let output_gap = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(output_gap <= input_gap + 1e-12);
        prop_assert!(fa.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn random_net_is_positively_homogeneous(
        seed in any::<u64>(),
        x in prop::collection::vec(-1.0f64..1.0, 784),
        alpha in 0.0f64..5.0,
    ) {
        let net = RandomNet::new(seed % 4);
        let base = net.forward(&x).unwrap();
        let scaled_in: Vec<f64> = x.iter().map(|v| v * alpha).collect();
        let scaled = net.forward(&scaled_in).unwrap();
        for (s, b) in scaled.iter().zip(&base) {
            prop_assert!((s - alpha * b).abs() <= 1e-9 * (1.0 + (alpha * b).abs()));
        }
    }

    #[test]
    fn pgm_round_trip((a, _) in image_pair()) {
        prop_assert_eq!(parse_pgm(&write_pgm(&a)).unwrap(), a);
    }
}
