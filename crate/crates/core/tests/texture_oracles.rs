//! Texture descriptors against brute-force references.

use prism_core::features::{glcm, lbp};
use prism_core::{BinaryMask, Grid};
use proptest::prelude::*;

/// Enumerates every ordered pixel pair and keeps those at `±offset`.
fn oracle_matrix(levels: &Grid<u8>, n: usize, domain: &BinaryMask, offset: (isize, isize)) -> Option<Vec<f64>> {
    let pts: Vec<(isize, isize)> = domain.pixels().map(|(x, y)| (x as isize, y as isize)).collect();
    let mut m = vec![0.0; n * n];
    let mut total = 0.0;
    for &(x1, y1) in &pts {
        for &(x2, y2) in &pts {
            let d = (x2 - x1, y2 - y1);
            let hits = (d == offset) as u32 + (d == (-offset.0, -offset.1)) as u32;
            if hits > 0 {
                let a = *levels.get(x1 as usize, y1 as usize) as usize;
                let b = *levels.get(x2 as usize, y2 as usize) as usize;
                m[a * n + b] += hits as f64;
                total += hits as f64;
            }
        }
    }
    (total > 0.0).then(|| m.into_iter().map(|v| v / total).collect())
}

fn oracle_descriptors(p: &[f64], n: usize) -> [f64; 4] {
    let cell = |i: usize, j: usize| p[i * n + j];
    let px: Vec<f64> = (0..n).map(|i| (0..n).map(|j| cell(i, j)).sum()).collect();
    let py: Vec<f64> = (0..n).map(|j| (0..n).map(|i| cell(i, j)).sum()).collect();
    let mx: f64 = px.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
    let my: f64 = py.iter().enumerate().map(|(j, v)| j as f64 * v).sum();
    let sx: f64 = px.iter().enumerate().map(|(i, v)| (i as f64 - mx).powi(2) * v).sum::<f64>().sqrt();
    let sy: f64 = py.iter().enumerate().map(|(j, v)| (j as f64 - my).powi(2) * v).sum::<f64>().sqrt();
    let (mut con, mut hom, mut asm, mut exy) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let v = cell(i, j);
            let d = (i as f64 - j as f64).abs();
            con += d * d * v;
            hom += v / (1.0 + d * d);
            asm += v * v;
            exy += (i * j) as f64 * v;
        }
    }
    let corr = if sx * sy < 1e-12 { 0.0 } else { (exy - mx * my) / (sx * sy) };
    [con, hom, asm.sqrt(), corr]
}

fn oracle_average(levels: &Grid<u8>, n: usize, domain: &BinaryMask) -> Option<[f64; 4]> {
    let per: Vec<[f64; 4]> = [1isize, 3]
        .iter()
        .flat_map(|&d| [(d, 0), (d, -d), (0, -d), (-d, -d)])
        .filter_map(|o| oracle_matrix(levels, n, domain, o))
        .map(|p| oracle_descriptors(&p, n))
        .collect();
    if per.is_empty() {
        return None;
    }
    let k = per.len() as f64;
    Some([0, 1, 2, 3].map(|c| per.iter().map(|d| d[c]).sum::<f64>() / k))
}

fn grid_strategy(w: usize, h: usize, levels: u8) -> impl Strategy<Value = Grid<u8>> {
    prop::collection::vec(0..levels, w * h).prop_map(move |v| Grid::from_vec(w, h, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn glcm_matches_pair_enumeration(levels in grid_strategy(8, 8, 8), holes in prop::collection::vec(any::<bool>(), 64)) {
        for domain in [BinaryMask::full(8, 8), BinaryMask::from_fn(8, 8, |x, y| !holes[y * 8 + x] || (x + y) % 3 == 0)] {
            let got = glcm::glcm_quantized(&levels, 8, &domain).map(|d| d.to_array());
            let want = oracle_average(&levels, 8, &domain);
            prop_assert_eq!(got.is_some(), want.is_some());
            if let (Some(g), Some(w)) = (got, want) {
                for c in 0..4 {
                    prop_assert!((g[c] - w[c]).abs() < 1e-9, "descriptor {}: {} vs {}", c, g[c], w[c]);
                }
            }
            for o in glcm::all_offsets() {
                if let Some(p) = glcm::cooccurrence(&levels, 8, &domain, o) {
                    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    for i in 0..8 {
                        for j in 0..8 {
                            prop_assert_eq!(p[i * 8 + j], p[j * 8 + i]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn glcm_is_invariant_to_quarter_turns(v in prop::collection::vec(0.0f64..255.0, 14 * 11), r in 2.0f64..6.0) {
        let gray = Grid::from_vec(14, 11, v);
        let domain = BinaryMask::from_fn(14, 11, |x, y| ((x as f64 - 6.0).powi(2) + (y as f64 - 5.0).powi(2)).sqrt() <= r + 2.0);
        let a = glcm::glcm_features(&gray, &domain).unwrap().to_array();
        let rotated = BinaryMask::from_grid(domain.grid().rotate90());
        let b = glcm::glcm_features(&gray.rotate90(), &rotated).unwrap().to_array();
        for c in 0..4 {
            prop_assert!((a[c] - b[c]).abs() < 1e-9, "{} vs {}", a[c], b[c]);
        }
    }

    #[test]
    fn lbp_conserves_counts(v in prop::collection::vec(0u8..6, 16 * 12), mask in prop::collection::vec(any::<bool>(), 16 * 12)) {
        let gray = Grid::from_vec(16, 12, v.into_iter().map(f64::from).collect());
        let domain = BinaryMask::from_grid(Grid::from_vec(16, 12, mask));
        let raw = lbp::raw_histogram(&gray, &domain);
        let valid = domain.pixels().filter(|&(x, y)| x >= 1 && y >= 1 && x <= 14 && y <= 10).count() as u64;
        prop_assert_eq!(raw.iter().sum::<u64>(), valid);
        match lbp::lbp_histogram(&gray, &domain) {
            Some(h) => prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12),
            None => prop_assert_eq!(valid, 0),
        }
    }

    #[test]
    fn lbp_codes_match_direct_comparison(v in prop::collection::vec(0u8..4, 25)) {
        let gray = Grid::from_vec(5, 5, v.into_iter().map(f64::from).collect());
        // East first, then counter-clockwise with y pointing down.
        let ring = [(3, 2), (3, 1), (2, 1), (1, 1), (1, 2), (1, 3), (2, 3), (3, 3)];
        let c = *gray.get(2, 2);
        let want: u32 = ring.iter().enumerate().map(|(k, &(x, y))| if *gray.get(x, y) >= c { 1 << k } else { 0 }).sum();
        prop_assert_eq!(lbp::code_at(&gray, 2, 2) as u32, want);
    }
}
