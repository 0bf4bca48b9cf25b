//! Synthetic two-class single-cell corpus.
//!
//! Lymphoblasts (label 1) get a larger nucleus relative to the cell, a
//! basophilic cytoplasm that fades with distance from the nucleus, and fine
//! low-contrast chromatin. Healthy lymphocytes (label 0) get a smaller
//! nucleus, flat pale cytoplasm and coarse clumped chromatin. The N:C
//! ranges of the two classes overlap.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::imgproc::PlanarImage;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Native frame side; the pipeline resamples to the working size.
    pub size: usize,
    pub cell_radius: (f64, f64),
    pub healthy_nc: (f64, f64),
    pub blast_nc: (f64, f64),
    pub pixel_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            size: 257,
            cell_radius: (62.0, 82.0),
            healthy_nc: (0.28, 0.50),
            blast_nc: (0.44, 0.72),
            pixel_noise: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCell {
    /// ALL-IDB2-style stem, e.g. `Im007_1`.
    pub id: String,
    pub label: u8,
    pub image: PlanarImage,
}

const BACKGROUND: [f64; 3] = [236.0, 228.0, 224.0];
const CYTOPLASM: [f64; 3] = [184.0, 182.0, 224.0];
const BASOPHILIC: [f64; 3] = [152.0, 156.0, 222.0];
const NUCLEUS: [f64; 3] = [98.0, 62.0, 152.0];

/// Bilinearly interpolated lattice noise in `[-1, 1]` with feature size
/// `spacing` pixels.
fn value_noise(rng: &mut ChaCha8Rng, size: usize, spacing: f64) -> Grid<f64> {
    let n = (size as f64 / spacing).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Grid::from_fn(size, size, |x, y| {
        let (fx, fy) = (x as f64 / spacing, y as f64 / spacing);
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| lattice[j * n + i];
        let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
        let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|c| a[c] + (b[c] - a[c]) * t)
}

/// Smooth star-shaped outline: radius modulated by two low harmonics.
struct Outline {
    radius: f64,
    amp: [f64; 2],
    phase: [f64; 2],
    aspect: f64,
    tilt: f64,
}

impl Outline {
    fn random(rng: &mut ChaCha8Rng, radius: f64, wobble: f64) -> Self {
        Self {
            radius,
            amp: [rng.random_range(0.0..wobble), rng.random_range(0.0..wobble * 0.6)],
            phase: [rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::TAU)],
            aspect: rng.random_range(0.88..1.0),
            tilt: rng.random_range(0.0..std::f64::consts::PI),
        }
    }

    /// Normalized radial coordinate: below 1 inside.
    fn rho(&self, dx: f64, dy: f64) -> f64 {
        let (s, c) = self.tilt.sin_cos();
        let u = dx * c + dy * s;
        let v = (-dx * s + dy * c) / self.aspect;
        let theta = v.atan2(u);
        let r = self.radius * (1.0 + self.amp[0] * (2.0 * theta + self.phase[0]).sin() + self.amp[1] * (3.0 * theta + self.phase[1]).sin());
        (u * u + v * v).sqrt() / r
    }
}

/// Renders one cell of the given class from its own seed.
pub fn render(label: u8, cfg: &SynthConfig, seed: u64) -> PlanarImage {
    let mut rng = seed::rng_from(seed);
    let size = cfg.size;
    let blast = label == 1;
    let cell_r = rng.random_range(cfg.cell_radius.0..cfg.cell_radius.1);
    let (lo, hi) = if blast { cfg.blast_nc } else { cfg.healthy_nc };
    let nc = rng.random_range(lo..hi);
    let nuc_r = cell_r * nc.sqrt();
    let centre = size as f64 / 2.0;
    let (cx, cy) = (centre + rng.random_range(-8.0..8.0), centre + rng.random_range(-8.0..8.0));
    let (nx, ny) = (cx + rng.random_range(-0.12..0.12) * cell_r, cy + rng.random_range(-0.12..0.12) * cell_r);
    let cell = Outline::random(&mut rng, cell_r, 0.05);
    let nucleus = Outline::random(&mut rng, nuc_r, if blast { 0.08 } else { 0.04 });

    let (spacing, amplitude) = if blast {
        (rng.random_range(1.5..2.5), rng.random_range(0.06..0.14))
    } else {
        (rng.random_range(5.0..9.0), rng.random_range(0.20..0.32))
    };
    let chromatin = value_noise(&mut rng, size, spacing);
    // Perinuclear basophilia: strength and decay length in pixels.
    let (halo, decay) = if blast {
        (rng.random_range(0.55..1.0), rng.random_range(10.0..22.0))
    } else {
        (rng.random_range(0.0..0.25), rng.random_range(4.0..10.0))
    };
    let stain = rng.random_range(-6.0..6.0);
    let noise = Normal::new(0.0, cfg.pixel_noise.max(1e-9)).expect("finite sigma");

    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let rn = nucleus.rho(fx - nx, fy - ny);
            let rc = cell.rho(fx - cx, fy - cy);
            let base = if rn < 1.0 {
                // Chromatin darkens or lightens the nuclear stain.
                let t = 1.0 - amplitude * chromatin.get(x, y);
                [NUCLEUS[0] * t, NUCLEUS[1] * t, NUCLEUS[2] * t.min(1.0 + amplitude * 0.3)]
            } else if rc < 1.0 {
                let dist = (rn - 1.0) * nuc_r;
                mix(CYTOPLASM, BASOPHILIC, halo * (-dist / decay).exp())
            } else {
                BACKGROUND
            };
            // Soft edge one pixel wide at the cell boundary.
            let edge = ((rc - 1.0) * cell_r).clamp(-0.5, 0.5) + 0.5;
            let colour = if rn >= 1.0 && rc < 1.0 + 1.0 / cell_r { mix(base, BACKGROUND, edge) } else { base };
            pixels.push(colour.map(|v| (v + stain + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8));
        }
    }
    PlanarImage::rgb_from_fn(size, size, |x, y| pixels[y * size + x])
}

/// Cell `i` of a corpus: label `i mod 2`, drawn from
/// `derive(seed, "synth/{i}")`.
pub fn cell(i: usize, cfg: &SynthConfig, seed: u64) -> SyntheticCell {
    let label = (i % 2) as u8;
    SyntheticCell {
        id: format!("Im{:03}_{label}", i + 1),
        label,
        image: render(label, cfg, seed::derive(seed, &format!("synth/{i}"))),
    }
}

/// Cells `0..n` (balanced for even `n`).
pub fn corpus(n: usize, cfg: &SynthConfig, seed: u64) -> Vec<SyntheticCell> {
    crate::par::map_range(n, |i| cell(i, cfg, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_are_reproducible_and_sized() {
        let cfg = SynthConfig::default();
        let a = render(1, &cfg, 7);
        assert_eq!((a.width(), a.height()), (257, 257));
        assert_eq!(a.planes(), render(1, &cfg, 7).planes());
        assert_ne!(a.planes(), render(1, &cfg, 8).planes());
    }

    #[test]
    fn corpus_is_balanced_and_named() {
        let c = corpus(6, &SynthConfig { size: 64, cell_radius: (14.0, 18.0), ..Default::default() }, 1);
        assert_eq!(c.iter().filter(|s| s.label == 1).count(), 3);
        assert_eq!(c[0].id, "Im001_0");
        assert_eq!(c[5].id, "Im006_1");
    }
}
