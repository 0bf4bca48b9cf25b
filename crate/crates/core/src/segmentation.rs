//! Nucleus segmentation: chromatic scoring, Otsu thresholding estimated on
//! a central crop, a k-means fallback for anomalous splits, morphological
//! refinement and fitness-ranked component selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Grid};
use crate::imgproc::{self, ColorSpace, PlanarImage};
use crate::morphology::{self, ShapeMetrics};
use crate::seed;

/// Tunables for the segmentation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub clahe_clip_limit: f64,
    pub clahe_tiles: (usize, usize),
    pub blur_sigma: f64,
    /// Side fraction of the centered window used to estimate the threshold.
    pub crop_fraction: f64,
    pub min_area_fraction: f64,
    pub max_area_fraction: f64,
    pub kmeans_k: usize,
    /// Minimum cluster mean saturation on the [0, 1] scale.
    pub kmeans_min_saturation: f64,
    pub kmeans_max_iterations: usize,
    pub refine_radius: usize,
    /// Components smaller than this fraction of the frame are discarded.
    pub min_component_fraction: f64,
    pub seed: u64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            clahe_clip_limit: 2.0,
            clahe_tiles: (8, 8),
            blur_sigma: 2.0,
            crop_fraction: 0.75,
            min_area_fraction: 0.01,
            max_area_fraction: 0.65,
            kmeans_k: 3,
            kmeans_min_saturation: 0.15,
            kmeans_max_iterations: 100,
            refine_radius: 2,
            min_component_fraction: 0.005,
            seed: 42,
        }
    }
}

/// `S_chroma = (255 − B) + 0.5·S` on 8-bit-scaled b* and saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaticScoreMap(pub Grid<f64>);

pub fn chromatic_score(b_scaled: &Grid<f64>, s_scaled: &Grid<f64>) -> Result<ChromaticScoreMap> {
    if !b_scaled.same_shape(s_scaled) {
        return Err(Error::Input("score inputs differ in size".into()));
    }
    let data = b_scaled
        .as_slice()
        .iter()
        .zip(s_scaled.as_slice())
        .map(|(b, s)| (255.0 - b) + 0.5 * s)
        .collect();
    Ok(ChromaticScoreMap(Grid::from_vec(b_scaled.width(), b_scaled.height(), data)))
}

/// Maps b* from [-128, 127] onto [0, 255].
pub fn scale_b(lab: &PlanarImage) -> Grid<f64> {
    lab.plane(2).map(|&b| (b + 128.0).clamp(0.0, 255.0))
}

/// Maps HSV saturation from [0, 1] onto [0, 255].
pub fn scale_s(hsv: &PlanarImage) -> Grid<f64> {
    hsv.plane(1).map(|&s| s * 255.0)
}

pub const OTSU_BINS: usize = 256;

/// Between-class-variance maximizing split of a histogram. Returns the first
/// bin `t` of the upper class (`1 ≤ t < len`), or `None` when no split has
/// two non-empty classes. The criterion `(n₁s₀ − n₀s₁)² / (n₀n₁)` is compared
/// exactly in integer arithmetic; ties resolve to the lowest `t`.
pub fn otsu_threshold(hist: &[u64]) -> Option<usize> {
    let total_n: u128 = hist.iter().map(|&c| c as u128).sum();
    let total_s: u128 = hist.iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();
    let mut n0: u128 = 0;
    let mut s0: u128 = 0;
    let mut best: Option<(usize, u128, u128)> = None;
    for t in 1..hist.len() {
        n0 += hist[t - 1] as u128;
        s0 += (t as u128 - 1) * hist[t - 1] as u128;
        let n1 = total_n - n0;
        let s1 = total_s - s0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let a = n1 * s0;
        let b = n0 * s1;
        let diff = a.abs_diff(b);
        let num = diff * diff;
        let den = n0 * n1;
        match best {
            None => best = Some((t, num, den)),
            Some((_, bn, bd)) => {
                if num * bd > bn * den {
                    best = Some((t, num, den));
                }
            }
        }
    }
    best.filter(|&(_, num, _)| num > 0).map(|(t, _, _)| t)
}

/// Result of a non-degenerate Otsu split.
#[derive(Debug, Clone, PartialEq)]
pub struct OtsuSplit {
    pub mask: BinaryMask,
    /// First bin of the foreground class.
    pub threshold_bin: usize,
    /// Score value at the lower edge of `threshold_bin`.
    pub threshold: f64,
    pub range: (f64, f64),
}

/// Centered window spanning `fraction` of each axis.
pub fn central_window(width: usize, height: usize, fraction: f64) -> (usize, usize, usize, usize) {
    let cw = ((width as f64 * fraction).round() as usize).clamp(1, width);
    let ch = ((height as f64 * fraction).round() as usize).clamp(1, height);
    let x0 = (width - cw) / 2;
    let y0 = (height - ch) / 2;
    (x0, y0, x0 + cw, y0 + ch)
}

fn bin_of(v: f64, lo: f64, hi: f64) -> usize {
    let f = ((v - lo) / (hi - lo) * OTSU_BINS as f64).floor();
    f.clamp(0.0, (OTSU_BINS - 1) as f64) as usize
}

/// Otsu threshold estimated on the central crop and applied frame-wide:
/// foreground = pixels whose score bin is at or above the split. `None`
/// signals a degenerate (unsplittable) crop.
pub fn otsu_segment(scores: &ChromaticScoreMap, crop_fraction: f64) -> Result<Option<OtsuSplit>> {
    otsu_split(&scores.0, crop_fraction)
}

/// [`otsu_segment`] on an arbitrary real plane.
pub fn otsu_split(g: &Grid<f64>, crop_fraction: f64) -> Result<Option<OtsuSplit>> {
    if !(crop_fraction > 0.0 && crop_fraction <= 1.0) {
        return Err(Error::Input(format!("crop fraction {crop_fraction} outside (0, 1]")));
    }
    let (x0, y0, x1, y1) = central_window(g.width(), g.height(), crop_fraction);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for y in y0..y1 {
        for x in x0..x1 {
            let v = *g.get(x, y);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(hi > lo) {
        return Ok(None);
    }
    let mut hist = [0u64; OTSU_BINS];
    for y in y0..y1 {
        for x in x0..x1 {
            hist[bin_of(*g.get(x, y), lo, hi)] += 1;
        }
    }
    let Some(t) = otsu_threshold(&hist) else {
        return Ok(None);
    };
    let mask = BinaryMask::from_grid(g.map(|&v| bin_of(v, lo, hi) >= t));
    Ok(Some(OtsuSplit {
        mask,
        threshold_bin: t,
        threshold: lo + t as f64 * (hi - lo) / OTSU_BINS as f64,
        range: (lo, hi),
    }))
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Outcome of k-means on per-pixel colors.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Surviving (non-empty) centroids.
    pub centroids: Vec<[f64; 3]>,
    /// Cluster index into `centroids` per pixel.
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

/// Lloyd's k-means with seeded k-means++ initialization. Runs until every
/// centroid moves less than `1e-4` or `max_iterations` is reached. Empty
/// clusters are dropped.
pub fn kmeans(points: &[[f64; 3]], k: usize, seed: u64, max_iterations: usize) -> KMeansResult {
    let mut rng = seed::rng_from(seed);
    let n = points.len();
    let mut centroids: Vec<[f64; 3]> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
    }

    let mut assignment = vec![0usize; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        for (a, p) in assignment.iter_mut().zip(points) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = dist2(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            *a = best;
        }
        let mut sums = vec![[0.0f64; 3]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (&a, p) in assignment.iter().zip(points) {
            counts[a] += 1;
            for c in 0..3 {
                sums[a][c] += p[c];
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..centroids.len() {
            if counts[j] > 0 {
                let next = sums[j].map(|s| s / counts[j] as f64);
                shift = shift.max(dist2(&next, &centroids[j]).sqrt());
                centroids[j] = next;
            }
        }
        if shift < 1e-4 || iterations >= max_iterations {
            // Drop empty clusters and compact the labels.
            let mut remap = vec![usize::MAX; centroids.len()];
            let mut kept = Vec::new();
            for j in 0..centroids.len() {
                if counts[j] > 0 {
                    remap[j] = kept.len();
                    kept.push(centroids[j]);
                }
            }
            for a in assignment.iter_mut() {
                *a = remap[*a];
            }
            return KMeansResult {
                centroids: kept,
                assignment,
                iterations,
            };
        }
    }
}

/// k-means on (L, a, b); returns the darkest cluster among those whose mean
/// saturation (HSV, [0, 1]) reaches `min_saturation`, or the darkest overall
/// when none qualifies.
pub fn kmeans_fallback(
    lab: &PlanarImage,
    saturation: &Grid<f64>,
    k: usize,
    seed: u64,
    min_saturation: f64,
    max_iterations: usize,
) -> Result<BinaryMask> {
    if lab.colorspace() != ColorSpace::Lab {
        return Err(Error::Conversion {
            from: lab.colorspace(),
            to: ColorSpace::Lab,
        });
    }
    if k == 0 {
        return Err(Error::Input("k-means needs k ≥ 1".into()));
    }
    let n = lab.width() * lab.height();
    let points: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            [
                lab.plane(0).as_slice()[i],
                lab.plane(1).as_slice()[i],
                lab.plane(2).as_slice()[i],
            ]
        })
        .collect();
    let km = kmeans(&points, k, seed, max_iterations);
    let mut sat_sum = vec![0.0; km.centroids.len()];
    let mut counts = vec![0usize; km.centroids.len()];
    for (&a, &s) in km.assignment.iter().zip(saturation.as_slice()) {
        sat_sum[a] += s;
        counts[a] += 1;
    }
    let darkest = |candidates: &mut dyn Iterator<Item = usize>| {
        candidates.min_by(|&a, &b| {
            km.centroids[a][0]
                .partial_cmp(&km.centroids[b][0])
                .unwrap()
                .then(a.cmp(&b))
        })
    };
    let saturated = darkest(&mut (0..km.centroids.len()).filter(|&j| sat_sum[j] / counts[j] as f64 >= min_saturation));
    let chosen = saturated
        .or_else(|| darkest(&mut (0..km.centroids.len())))
        .expect("k-means keeps at least one cluster");
    let data = km.assignment.iter().map(|&a| a == chosen).collect();
    Ok(BinaryMask::from_grid(Grid::from_vec(lab.width(), lab.height(), data)))
}

/// Opening, closing (disk of `radius`), then hole filling.
pub fn refine(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let opened = morphology::open(mask, radius);
    let closed = morphology::close(&opened, radius);
    morphology::fill_holes(&closed)
}

/// A connected component scored for nucleus selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCandidate {
    pub mask: BinaryMask,
    pub shape: ShapeMetrics,
    /// Mean saturation over the component on the [0, 255] scale.
    pub mean_saturation: f64,
    pub touches_border: bool,
    pub centroid: (f64, f64),
    pub fitness: f64,
}

/// `0.55·solidity + 0.35·circularity + 0.10·(S̄/255)`.
pub fn fitness(solidity: f64, circularity: f64, mean_saturation: f64) -> f64 {
    0.55 * solidity + 0.35 * circularity + 0.10 * (mean_saturation / 255.0)
}

pub fn score_component(mask: BinaryMask, s_scaled: &Grid<f64>) -> ComponentCandidate {
    let shape = morphology::shape_metrics(&mask);
    let (sum, n) = mask
        .pixels()
        .fold((0.0, 0usize), |(s, n), (x, y)| (s + *s_scaled.get(x, y), n + 1));
    let mean_saturation = if n > 0 { sum / n as f64 } else { 0.0 };
    ComponentCandidate {
        touches_border: mask.touches_border(),
        centroid: mask.centroid().unwrap_or((0.0, 0.0)),
        fitness: fitness(shape.solidity, shape.circularity, mean_saturation),
        mask,
        shape,
        mean_saturation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Otsu,
    KmeansFallback,
}

/// The selected nuclear mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NucleusMask {
    pub mask: BinaryMask,
    pub area: usize,
    /// `sqrt(area / π)`.
    pub equivalent_radius: f64,
    pub provenance: Provenance,
    pub fitness: f64,
    pub shape: ShapeMetrics,
}

impl NucleusMask {
    /// Wraps an arbitrary non-empty mask (fixtures, externally supplied masks).
    pub fn from_mask(mask: BinaryMask, provenance: Provenance) -> Self {
        let area = mask.count();
        let shape = morphology::shape_metrics(&mask);
        Self {
            area,
            equivalent_radius: (area as f64 / std::f64::consts::PI).sqrt(),
            provenance,
            fitness: fitness(shape.solidity, shape.circularity, 0.0),
            shape,
            mask,
        }
    }

    pub fn area_fraction(&self) -> f64 {
        self.area as f64 / (self.mask.width() * self.mask.height()) as f64
    }
}

/// Candidates that survive the border and minimum-size filters.
pub fn candidates(mask: &BinaryMask, s_scaled: &Grid<f64>, min_component_fraction: f64) -> Vec<ComponentCandidate> {
    let frame = (mask.width() * mask.height()) as f64;
    morphology::components(mask)
        .into_iter()
        .filter(|c| c.len() as f64 >= min_component_fraction * frame)
        .map(|c| morphology::mask_from_pixels(mask.width(), mask.height(), &c))
        .filter(|m| !m.touches_border())
        .map(|m| score_component(m, s_scaled))
        .collect()
}

/// Picks the surviving component with maximal fitness; ties go to the larger
/// area, then to the topmost-leftmost centroid.
pub fn select_nucleus(
    mask: &BinaryMask,
    s_scaled: &Grid<f64>,
    min_component_fraction: f64,
    provenance: Provenance,
) -> Result<NucleusMask> {
    let best = candidates(mask, s_scaled, min_component_fraction)
        .into_iter()
        .max_by(|a, b| {
            a.fitness
                .total_cmp(&b.fitness)
                .then(a.shape.area.cmp(&b.shape.area))
                .then(b.centroid.1.total_cmp(&a.centroid.1))
                .then(b.centroid.0.total_cmp(&a.centroid.0))
        })
        .ok_or_else(|| Error::Segmentation("no component survives the border and size filters".into()))?;
    let area = best.shape.area;
    Ok(NucleusMask {
        mask: best.mask,
        area,
        equivalent_radius: (area as f64 / std::f64::consts::PI).sqrt(),
        provenance,
        fitness: best.fitness,
        shape: best.shape,
    })
}

/// Standardized image after enhancement, in every color space later stages
/// need.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// Standardized input.
    pub rgb: PlanarImage,
    /// CIELAB with CLAHE-enhanced lightness.
    pub lab: PlanarImage,
    /// Enhanced image back in RGB.
    pub enhanced_rgb: PlanarImage,
    /// HSV of the enhanced image.
    pub hsv: PlanarImage,
}

pub fn preprocess(rgb: &PlanarImage, config: &SegmentationConfig) -> Result<Preprocessed> {
    let lab = imgproc::convert(rgb, ColorSpace::Lab)?;
    let lab = imgproc::clahe_lightness(&lab, config.clahe_clip_limit, config.clahe_tiles)?;
    let enhanced_rgb = imgproc::convert(&lab, ColorSpace::Rgb8)?;
    let hsv = imgproc::convert(&enhanced_rgb, ColorSpace::Hsv)?;
    Ok(Preprocessed {
        rgb: rgb.clone(),
        lab,
        enhanced_rgb,
        hsv,
    })
}

/// Runs score → blur → cropped Otsu → (k-means fallback) → refine → select
/// on an already preprocessed image.
pub fn segment_preprocessed(pre: &Preprocessed, config: &SegmentationConfig) -> Result<NucleusMask> {
    if pre.rgb.width() != pre.rgb.height() || pre.rgb.width() == 0 {
        return Err(Error::Input("segmentation expects a square working frame".into()));
    }
    let s_scaled = scale_s(&pre.hsv);
    let scores = chromatic_score(&scale_b(&pre.lab), &s_scaled)?;
    let smoothed = ChromaticScoreMap(imgproc::gaussian_blur(&scores.0, config.blur_sigma)?);
    let frame = (pre.rgb.width() * pre.rgb.height()) as f64;

    let otsu = otsu_segment(&smoothed, config.crop_fraction)?.filter(|split| {
        let fraction = split.mask.count() as f64 / frame;
        fraction >= config.min_area_fraction && fraction <= config.max_area_fraction
    });
    let (raw, provenance) = match otsu {
        Some(split) => (split.mask, Provenance::Otsu),
        None => (
            kmeans_fallback(
                &pre.lab,
                pre.hsv.plane(1),
                config.kmeans_k,
                seed::derive(config.seed, "segmentation/kmeans"),
                config.kmeans_min_saturation,
                config.kmeans_max_iterations,
            )?,
            Provenance::KmeansFallback,
        ),
    };
    let refined = refine(&raw, config.refine_radius);
    select_nucleus(&refined, &s_scaled, config.min_component_fraction, provenance)
}

/// Full segmentation of a standardized RGB image.
pub fn segment(rgb: &PlanarImage, config: &SegmentationConfig) -> Result<NucleusMask> {
    segment_preprocessed(&preprocess(rgb, config)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn filled(w: usize, h: usize, v: f64) -> Grid<f64> {
        Grid::filled(w, h, v)
    }

    #[test]
    fn chromatic_score_formula() {
        let one = |b, s| chromatic_score(&filled(1, 1, b), &filled(1, 1, s)).unwrap().0.as_slice()[0];
        assert_eq!(one(100.0, 50.0), 180.0);
        assert_eq!(one(255.0, 0.0), 0.0);
        assert_eq!(one(0.0, 255.0), 382.5);
        assert!(chromatic_score(&filled(2, 1, 0.0), &filled(1, 2, 0.0)).is_err());
    }

    /// Brute force: evaluate w₀w₁(μ₀−μ₁)² independently for every cut.
    fn oracle_threshold(hist: &[u64]) -> Option<usize> {
        let total: f64 = hist.iter().map(|&c| c as f64).sum();
        let mut best: Option<(usize, f64)> = None;
        for t in 1..hist.len() {
            let (lo, hi) = hist.split_at(t);
            let n0: f64 = lo.iter().map(|&c| c as f64).sum();
            let n1: f64 = hi.iter().map(|&c| c as f64).sum();
            if n0 == 0.0 || n1 == 0.0 {
                continue;
            }
            let m0 = lo.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum::<f64>() / n0;
            let m1 = hi.iter().enumerate().map(|(i, &c)| (i + t) as f64 * c as f64).sum::<f64>() / n1;
            let v = (n0 / total) * (n1 / total) * (m0 - m1).powi(2);
            if best.is_none_or(|(_, b)| v > b * (1.0 + 1e-12)) {
                best = Some((t, v));
            }
        }
        best.map(|(t, _)| t)
    }

    #[test]
    fn bimodal_crop_splits_exactly() {
        let g = Grid::from_fn(64, 64, |x, _| if x < 32 { 20.0 } else { 300.0 });
        let split = otsu_segment(&ChromaticScoreMap(g.clone()), 0.75).unwrap().unwrap();
        let expected = BinaryMask::from_grid(g.map(|&v| v == 300.0));
        assert_eq!(split.mask, expected);
    }

    #[test]
    fn constant_scores_are_degenerate() {
        let g = ChromaticScoreMap(filled(32, 32, 77.0));
        assert!(otsu_segment(&g, 0.75).unwrap().is_none());
    }

    #[test]
    fn outer_ring_does_not_move_threshold() {
        let base = Grid::from_fn(64, 64, |x, y| ((x * 13 + y * 7) % 200) as f64 + 50.0);
        let mut noisy = base.clone();
        let (x0, y0, x1, y1) = central_window(64, 64, 0.75);
        for y in 0..64 {
            for x in 0..64 {
                if !(x0..x1).contains(&x) || !(y0..y1).contains(&y) {
                    *noisy.get_mut(x, y) = if (x + y) % 2 == 0 { 0.0 } else { 382.5 };
                }
            }
        }
        let a = otsu_segment(&ChromaticScoreMap(base), 0.75).unwrap().unwrap();
        let b = otsu_segment(&ChromaticScoreMap(noisy), 0.75).unwrap().unwrap();
        assert_eq!(a.threshold, b.threshold);
        assert_eq!(a.threshold_bin, b.threshold_bin);
    }

    fn blob_image() -> (PlanarImage, BinaryMask) {
        // Dark saturated, dark unsaturated and bright regions.
        let truth = BinaryMask::disk(64, 64, 20.0, 20.0, 9.0);
        let grayish = BinaryMask::disk(64, 64, 44.0, 44.0, 9.0);
        let rgb = PlanarImage::rgb_from_fn(64, 64, |x, y| {
            let jitter = ((x * 7 + y * 3) % 5) as u8;
            if truth.get(x, y) {
                [60 + jitter, 20, 110 + jitter]
            } else if grayish.get(x, y) {
                [70 + jitter, 70 + jitter, 72]
            } else {
                [235 - jitter, 225, 220]
            }
        });
        (rgb, truth)
    }

    #[test]
    fn kmeans_picks_dark_saturated_cluster() {
        let (rgb, truth) = blob_image();
        let lab = imgproc::convert(&rgb, ColorSpace::Lab).unwrap();
        let hsv = imgproc::convert(&rgb, ColorSpace::Hsv).unwrap();
        let mask = kmeans_fallback(&lab, hsv.plane(1), 3, 7, 0.15, 100).unwrap();
        assert_eq!(mask, truth);

        // Nearest-centroid check on the converged clustering.
        let points: Vec<[f64; 3]> = (0..64 * 64)
            .map(|i| [lab.plane(0).as_slice()[i], lab.plane(1).as_slice()[i], lab.plane(2).as_slice()[i]])
            .collect();
        let km = kmeans(&points, 3, 7, 100);
        for (p, &a) in points.iter().zip(&km.assignment) {
            let d = dist2(p, &km.centroids[a]);
            assert!(km.centroids.iter().all(|c| dist2(p, c) >= d));
        }
    }

    #[test]
    fn kmeans_handles_two_colors_with_three_clusters() {
        let truth = BinaryMask::disk(32, 32, 16.0, 16.0, 6.0);
        let rgb = PlanarImage::rgb_from_fn(32, 32, |x, y| if truth.get(x, y) { [50, 20, 120] } else { [240, 235, 230] });
        let lab = imgproc::convert(&rgb, ColorSpace::Lab).unwrap();
        let hsv = imgproc::convert(&rgb, ColorSpace::Hsv).unwrap();
        let a = kmeans_fallback(&lab, hsv.plane(1), 3, 1, 0.15, 100).unwrap();
        let b = kmeans_fallback(&lab, hsv.plane(1), 3, 1, 0.15, 100).unwrap();
        assert_eq!(a, truth);
        assert_eq!(a, b);
    }

    #[test]
    fn refine_fills_holes_and_drops_specks() {
        let disk = BinaryMask::disk(100, 100, 50.0, 50.0, 30.0);
        let mut m = disk.clone();
        for x in 45..50 {
            m.set(x, 50, false);
        }
        m.set(5, 5, true);
        let out = refine(&m, 2);
        assert!(out.get(47, 50));
        assert!(!out.get(5, 5));
        // Convex disk survives up to a one-pixel boundary ring.
        assert!(out.difference(&disk).is_subset_of(&morphology::dilate(&disk, 1).difference(&disk)));
        assert!(disk.difference(&out).is_subset_of(&disk.difference(&morphology::erode(&disk, 1))));
    }

    #[test]
    fn ideal_disk_has_fitness_near_one() {
        let disk = BinaryMask::disk(128, 128, 64.0, 64.0, 30.0);
        let c = score_component(disk, &filled(128, 128, 255.0));
        assert!((c.fitness - 1.0).abs() <= 0.03, "{}", c.fitness);
    }

    #[test]
    fn disk_beats_square_of_same_size() {
        let disk = BinaryMask::disk(200, 200, 50.0, 100.0, 30.0);
        let side = (disk.count() as f64).sqrt().round() as usize;
        let square = BinaryMask::from_fn(200, 200, |x, y| (120..120 + side).contains(&x) && (80..80 + side).contains(&y));
        let s = filled(200, 200, 128.0);
        let fd = score_component(disk.clone(), &s).fitness;
        let fs = score_component(square.clone(), &s).fitness;
        // Hand values: disk ≈ 0.55 + 0.35·1 + 0.10·128/255, square ≈ 0.55 + 0.35·0.785 + 0.0502.
        assert!((fd - 0.9502).abs() < 0.03 && (fs - 0.8750).abs() < 0.03, "{fd} {fs}");
        let both = disk.union(&square);
        let n = select_nucleus(&both, &s, 0.005, Provenance::Otsu).unwrap();
        assert_eq!(n.mask, disk);
    }

    #[test]
    fn border_component_fails_selection() {
        let m = BinaryMask::disk(64, 64, 2.0, 32.0, 10.0);
        let err = select_nucleus(&m, &filled(64, 64, 200.0), 0.005, Provenance::Otsu).unwrap_err();
        assert!(matches!(err, Error::Segmentation(_)));
    }

    fn synthetic_cell(radius: f64) -> (PlanarImage, BinaryMask) {
        let truth = BinaryMask::disk(256, 256, 128.0, 128.0, radius);
        let cell = BinaryMask::disk(256, 256, 128.0, 128.0, radius + 30.0);
        let rgb = PlanarImage::rgb_from_fn(256, 256, |x, y| {
            let n = ((x * 31 + y * 17) % 7) as u8;
            if truth.get(x, y) {
                [70 + n, 40 + n, 150 + n]
            } else if cell.get(x, y) {
                [200 + n, 190, 215]
            } else {
                [238, 222 + n, 208]
            }
        });
        (rgb, truth)
    }

    #[test]
    fn segments_synthetic_cell() {
        let (rgb, truth) = synthetic_cell(40.0);
        let n = segment(&rgb, &SegmentationConfig::default()).unwrap();
        assert_eq!(n.provenance, Provenance::Otsu);
        assert!(n.mask.dice(&truth) >= 0.95, "dice {}", n.mask.dice(&truth));
        assert!(!n.mask.touches_border());
    }

    #[test]
    fn constant_frame_fails() {
        let rgb = PlanarImage::solid_rgb(256, 256, [120, 130, 140]);
        assert!(matches!(segment(&rgb, &SegmentationConfig::default()), Err(Error::Segmentation(_))));
    }

    #[test]
    fn small_otsu_area_triggers_fallback() {
        // 0.8% of the frame: radius ≈ 12.9 px.
        let r = (0.008 * 65536.0 / std::f64::consts::PI).sqrt();
        let (rgb, truth) = synthetic_cell(r);
        let n = segment(&rgb, &SegmentationConfig::default()).unwrap();
        assert_eq!(n.provenance, Provenance::KmeansFallback);
        assert!(n.mask.dice(&truth) > 0.8);
    }

    proptest! {
        #[test]
        fn otsu_matches_exhaustive_search(hist in proptest::collection::vec(0u64..500, 256)) {
            prop_assert_eq!(otsu_threshold(&hist), oracle_threshold(&hist));
        }

        #[test]
        fn candidate_fitness_in_unit_interval(bits in proptest::collection::vec(proptest::bool::weighted(0.35), 40 * 40)) {
            let m = refine(&BinaryMask::from_grid(Grid::from_vec(40, 40, bits)), 1);
            let s = Grid::from_fn(40, 40, |x, y| ((x * y) % 256) as f64);
            for c in candidates(&m, &s, 0.0) {
                prop_assert!(c.fitness > 0.0 && c.fitness <= 1.0, "{}", c.fitness);
            }
        }
    }
}
