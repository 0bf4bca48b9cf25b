use prism_core::segmentation::{NucleusMask, Provenance};
use prism_core::zones::{approximate_cell_boundary, decompose, dilate};
use prism_core::{BinaryMask, Grid};
use proptest::prelude::*;

fn blob(cx: f64, cy: f64, rx: f64, ry: f64) -> BinaryMask {
    BinaryMask::from_fn(128, 128, |x, y| ((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2) <= 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rings_partition_inside_the_cell(
        cx in 30.0f64..98.0, cy in 30.0f64..98.0,
        rx in 3.0f64..25.0, ry in 3.0f64..25.0,
        grow in 0usize..30, d1 in 4usize..16, extra in 0usize..20,
    ) {
        let nucleus = NucleusMask::from_mask(blob(cx, cy, rx, ry), Provenance::Otsu);
        prop_assume!(nucleus.area > 0);
        let cell = dilate(&nucleus.mask, grow).union(&blob(cx + 5.0, cy, rx * 2.0, ry * 1.5));
        let z = decompose(&nucleus, &cell, d1, d1 + extra).unwrap();
        prop_assert_eq!(z.invariant_violations(), 0);
        prop_assert!(z.radii.0 <= z.radii.1);
    }

    #[test]
    fn derived_cell_always_contains_the_nucleus(
        cx in 30.0f64..98.0, r in 4.0f64..20.0, level in 0.0f64..1.0, noise in 0usize..7,
    ) {
        let nucleus = NucleusMask::from_mask(blob(cx, 64.0, r, r), Provenance::Otsu);
        let sat = Grid::from_fn(128, 128, |x, y| (level + ((x * 13 + y * 7) % (noise + 1)) as f64 * 0.05).min(1.0));
        let cell = approximate_cell_boundary(&sat, &nucleus, 24, 2);
        prop_assert!(nucleus.mask.is_subset_of(&cell));
        let z = decompose(&nucleus, &cell, 10, 24).unwrap();
        prop_assert_eq!(z.invariant_violations(), 0);
    }
}
