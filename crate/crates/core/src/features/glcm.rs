//! Gray-level co-occurrence descriptors over a masked domain.
//!
//! Pairs are counted only when both pixels lie in the domain. Matrices are
//! symmetric and normalized; descriptors are averaged over distances
//! {1, 3} and the four orientations 0°, 45°, 90°, 135°.

use serde::{Deserialize, Serialize};

use crate::grid::{BinaryMask, Grid};

pub const LEVELS: usize = 32;
pub const DISTANCES: [isize; 2] = [1, 3];

/// `(dx, dy)` for 0°, 45°, 90°, 135° at distance `d` (y grows downward).
pub fn offsets(d: isize) -> [(isize, isize); 4] {
    [(d, 0), (d, -d), (0, -d), (-d, -d)]
}

/// All eight displacement vectors used for averaging.
pub fn all_offsets() -> Vec<(isize, isize)> {
    DISTANCES.iter().flat_map(|&d| offsets(d)).collect()
}

/// Quantizes `gray` to `levels` bins over the min–max range of the domain.
/// Pixels outside the domain get level 0; a flat domain maps to level 0.
pub fn quantize(gray: &Grid<f64>, domain: &BinaryMask, levels: usize) -> Grid<u8> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in domain.pixels() {
        let v = *gray.get(x, y);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Grid::from_fn(gray.width(), gray.height(), |x, y| {
        if !domain.get(x, y) || hi <= lo {
            return 0;
        }
        let f = ((*gray.get(x, y) - lo) / (hi - lo) * levels as f64).floor();
        f.clamp(0.0, (levels - 1) as f64) as u8
    })
}

/// Symmetric normalized co-occurrence matrix (row-major `levels × levels`)
/// for one displacement; `None` when no in-domain pair exists.
pub fn cooccurrence(levels: &Grid<u8>, n_levels: usize, domain: &BinaryMask, offset: (isize, isize)) -> Option<Vec<f64>> {
    let mut counts = vec![0u64; n_levels * n_levels];
    let mut total = 0u64;
    for (x, y) in domain.pixels() {
        let (nx, ny) = (x as isize + offset.0, y as isize + offset.1);
        if !domain.at(nx, ny) {
            continue;
        }
        let a = *levels.get(x, y) as usize;
        let b = *levels.get(nx as usize, ny as usize) as usize;
        counts[a * n_levels + b] += 1;
        counts[b * n_levels + a] += 1;
        total += 2;
    }
    (total > 0).then(|| counts.iter().map(|&c| c as f64 / total as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlcmDescriptors {
    pub contrast: f64,
    pub homogeneity: f64,
    /// Square root of the angular second moment.
    pub energy: f64,
    /// 0 when either marginal has zero variance.
    pub correlation: f64,
}

impl GlcmDescriptors {
    pub fn to_array(self) -> [f64; 4] {
        [self.contrast, self.homogeneity, self.energy, self.correlation]
    }
}

pub fn descriptors(p: &[f64], n_levels: usize) -> GlcmDescriptors {
    let mut contrast = 0.0;
    let mut homogeneity = 0.0;
    let mut asm = 0.0;
    let mut mean_i = 0.0;
    let mut mean_j = 0.0;
    for i in 0..n_levels {
        for j in 0..n_levels {
            let v = p[i * n_levels + j];
            let d = i as f64 - j as f64;
            contrast += v * d * d;
            homogeneity += v / (1.0 + d * d);
            asm += v * v;
            mean_i += i as f64 * v;
            mean_j += j as f64 * v;
        }
    }
    let mut var_i = 0.0;
    let mut var_j = 0.0;
    let mut cov = 0.0;
    for i in 0..n_levels {
        for j in 0..n_levels {
            let v = p[i * n_levels + j];
            var_i += (i as f64 - mean_i).powi(2) * v;
            var_j += (j as f64 - mean_j).powi(2) * v;
            cov += (i as f64 - mean_i) * (j as f64 - mean_j) * v;
        }
    }
    let correlation = if var_i < 1e-15 || var_j < 1e-15 {
        0.0
    } else {
        cov / (var_i * var_j).sqrt()
    };
    GlcmDescriptors {
        contrast,
        homogeneity,
        energy: asm.sqrt(),
        correlation,
    }
}

/// Descriptors averaged over every displacement that has at least one pair.
pub fn glcm_quantized(levels: &Grid<u8>, n_levels: usize, domain: &BinaryMask) -> Option<GlcmDescriptors> {
    let per: Vec<GlcmDescriptors> = all_offsets()
        .into_iter()
        .filter_map(|o| cooccurrence(levels, n_levels, domain, o))
        .map(|p| descriptors(&p, n_levels))
        .collect();
    if per.is_empty() {
        return None;
    }
    let k = per.len() as f64;
    let sum = per.iter().fold([0.0; 4], |mut acc, d| {
        for (a, v) in acc.iter_mut().zip(d.to_array()) {
            *a += v;
        }
        acc
    });
    Some(GlcmDescriptors {
        contrast: sum[0] / k,
        homogeneity: sum[1] / k,
        energy: sum[2] / k,
        correlation: sum[3] / k,
    })
}

/// Quantizes to [`LEVELS`] over the domain range and averages descriptors;
/// `None` when the domain has no pixel pairs.
pub fn glcm_features(gray: &Grid<f64>, domain: &BinaryMask) -> Option<GlcmDescriptors> {
    let levels = quantize(gray, domain, LEVELS);
    glcm_quantized(&levels, LEVELS, domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_region_conventions() {
        let g = Grid::filled(10, 10, 80.0);
        let d = glcm_features(&g, &BinaryMask::full(10, 10)).unwrap();
        assert_eq!(d.contrast, 0.0);
        assert_eq!(d.homogeneity, 1.0);
        assert_eq!(d.energy, 1.0);
        assert_eq!(d.correlation, 0.0);
    }

    #[test]
    fn checkerboard_horizontal_contrast() {
        let levels = Grid::from_fn(8, 8, |x, y| ((x + y) % 2) as u8);
        let p = cooccurrence(&levels, 2, &BinaryMask::full(8, 8), (1, 0)).unwrap();
        // Every horizontal neighbour pair differs by one level.
        assert_eq!(descriptors(&p, 2).contrast, 1.0);
    }

    #[test]
    fn single_pixel_has_no_pairs() {
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        assert!(glcm_features(&Grid::filled(5, 5, 1.0), &m).is_none());
    }

    #[test]
    fn matrices_are_symmetric_and_normalized() {
        let g = Grid::from_fn(12, 9, |x, y| ((x * 5 + y * 11) % 13) as f64);
        let m = BinaryMask::from_fn(12, 9, |x, y| (x + y) % 5 != 0);
        let levels = quantize(&g, &m, 8);
        for o in all_offsets() {
            let p = cooccurrence(&levels, 8, &m, o).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..8 {
                for j in 0..8 {
                    assert_eq!(p[i * 8 + j], p[j * 8 + i]);
                }
            }
        }
    }
}
