//! First-order color moments and nucleus-to-ring gradients.

use crate::grid::{BinaryMask, Grid};

/// Channel order: R, G, B, gray.
pub const CHANNELS: [&str; 4] = ["r", "g", "b", "gray"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ColorStats {
    pub mean: [f64; 4],
    /// Population standard deviation.
    pub std: [f64; 4],
}

impl ColorStats {
    pub fn to_array(self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&self.mean);
        out[4..].copy_from_slice(&self.std);
        out
    }
}

/// Moments of the four planes over the domain; `None` for an empty domain.
pub fn color_stats(planes: [&Grid<f64>; 4], domain: &BinaryMask) -> Option<ColorStats> {
    let n = domain.count();
    if n == 0 {
        return None;
    }
    let mut stats = ColorStats::default();
    for (c, plane) in planes.iter().enumerate() {
        let mean = domain.pixels().map(|(x, y)| *plane.get(x, y)).sum::<f64>() / n as f64;
        let var = domain
            .pixels()
            .map(|(x, y)| (*plane.get(x, y) - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        stats.mean[c] = mean;
        stats.std[c] = var.sqrt();
    }
    Some(stats)
}

/// `(Δμ, Δσ)` per channel, nucleus minus zone.
pub fn spatial_gradients(nucleus: &ColorStats, zone: &ColorStats) -> ColorStats {
    ColorStats {
        mean: [0, 1, 2, 3].map(|c| nucleus.mean[c] - zone.mean[c]),
        std: [0, 1, 2, 3].map(|c| nucleus.std[c] - zone.std[c]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_region() {
        let g = Grid::filled(4, 4, 77.0);
        let s = color_stats([&g, &g, &g, &g], &BinaryMask::full(4, 4)).unwrap();
        assert_eq!(s.mean, [77.0; 4]);
        assert_eq!(s.std, [0.0; 4]);
    }

    #[test]
    fn two_pixel_population_std() {
        let g = Grid::from_vec(2, 1, vec![0.0, 255.0]);
        let s = color_stats([&g, &g, &g, &g], &BinaryMask::full(2, 1)).unwrap();
        assert_eq!(s.mean[0], 127.5);
        assert_eq!(s.std[0], 127.5);
    }

    #[test]
    fn empty_domain() {
        let g = Grid::filled(2, 2, 1.0);
        assert!(color_stats([&g, &g, &g, &g], &BinaryMask::empty(2, 2)).is_none());
    }

    #[test]
    fn gradients_subtract_and_are_antisymmetric() {
        let a = ColorStats { mean: [200.0, 10.0, 5.0, 1.0], std: [3.0, 2.0, 1.0, 0.5] };
        let b = ColorStats { mean: [150.0, 20.0, 5.0, 2.0], std: [1.0, 2.0, 4.0, 0.0] };
        assert_eq!(spatial_gradients(&a, &b).mean[0], 50.0);
        assert_eq!(spatial_gradients(&a, &a).to_array(), [0.0; 8]);
        let ab = spatial_gradients(&a, &b).to_array();
        let ba = spatial_gradients(&b, &a).to_array();
        assert!(ab.iter().zip(ba).all(|(x, y)| *x == -y));
    }
}
