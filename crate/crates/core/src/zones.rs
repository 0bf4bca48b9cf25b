//! Perinuclear zonal decomposition.
//!
//! Around the nuclear mask `M_n` two disk dilations `E₁ = D(δ₁*)` and
//! `E₂ = D(δ₂*)` are taken, with radii bounded by the nucleus size:
//! `δ* = min(d, max(6, ⌊1.6·R_eq⌋))`. The proximal ring is
//! `Z₁ = (E₁ \ M_n) ∩ C` and the distal ring `Z₂ = (E₂ \ E₁) ∩ C`, where `C`
//! is a gross cell boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Grid};
use crate::imgproc::{ColorSpace, PlanarImage};
use crate::morphology;
use crate::segmentation::{self, NucleusMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZoneConfig {
    /// Base offset of the proximal ring, pixels.
    pub d1: usize,
    /// Base offset of the distal ring, pixels.
    pub d2: usize,
    /// Refinement radius for the saturation-based cell mask.
    pub cell_refine_radius: usize,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            d1: 10,
            d2: 24,
            cell_refine_radius: 2,
        }
    }
}

/// Smallest admissible dilation radius.
pub const MIN_RADIUS: usize = 6;

/// `min(d, max(6, ⌊1.6·sqrt(area/π)⌋))`.
pub fn adaptive_radius(area: f64, base_offset: usize) -> usize {
    let r_eq = (area / std::f64::consts::PI).sqrt();
    let scaled = (1.6 * r_eq).floor() as usize;
    base_offset.min(MIN_RADIUS.max(scaled))
}

/// Disk dilation, re-exported for the zone construction.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    morphology::dilate(mask, radius)
}

/// Gross cell region: Otsu on the HSV saturation plane, the component under
/// the nucleus centroid, refined, and unioned with `D(δ₂*)(M_n)`. Falls back
/// to the dilation alone when the saturation split is unusable.
pub fn approximate_cell_boundary(saturation: &Grid<f64>, nucleus: &NucleusMask, delta2: usize, refine_radius: usize) -> BinaryMask {
    let envelope = dilate(&nucleus.mask, delta2);
    let Some((cx, cy)) = nucleus.mask.centroid() else {
        return envelope;
    };
    let (cx, cy) = (cx.round() as usize, cy.round() as usize);
    let split = match segmentation::otsu_split(saturation, 1.0) {
        Ok(Some(split)) => split,
        _ => return envelope,
    };
    let component = morphology::component_containing(&split.mask, cx, cy);
    if component.is_empty() {
        return envelope;
    }
    segmentation::refine(&component, refine_radius).union(&envelope)
}

/// The four spatial domains plus the radii that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalDecomposition {
    pub nucleus: BinaryMask,
    pub proximal: BinaryMask,
    pub distal: BinaryMask,
    pub cell: BinaryMask,
    /// `(δ₁*, δ₂*)`.
    pub radii: (usize, usize),
    /// `(d₁, d₂)`.
    pub base_offsets: (usize, usize),
}

impl ZonalDecomposition {
    /// Checks pairwise disjointness of `M_n`, `Z₁`, `Z₂` and containment in `C`.
    pub fn invariant_violations(&self) -> usize {
        let checks = [
            self.proximal.is_disjoint(&self.nucleus),
            self.distal.is_disjoint(&self.proximal),
            self.distal.is_disjoint(&self.nucleus),
            self.proximal.is_subset_of(&self.cell),
            self.distal.is_subset_of(&self.cell),
            self.nucleus.is_subset_of(&self.cell),
        ];
        checks.iter().filter(|ok| !**ok).count()
    }
}

/// Set algebra of the rings. Empty rings are allowed.
pub fn decompose(nucleus: &NucleusMask, cell: &BinaryMask, d1: usize, d2: usize) -> Result<ZonalDecomposition> {
    if !nucleus.mask.is_subset_of(cell) {
        return Err(Error::Input("nucleus mask is not contained in the cell mask".into()));
    }
    let area = nucleus.area as f64;
    let delta1 = adaptive_radius(area, d1);
    let delta2 = adaptive_radius(area, d2);
    let e1 = dilate(&nucleus.mask, delta1);
    let e2 = dilate(&nucleus.mask, delta2);
    Ok(ZonalDecomposition {
        nucleus: nucleus.mask.clone(),
        proximal: e1.difference(&nucleus.mask).intersection(cell),
        distal: e2.difference(&e1).intersection(cell),
        cell: cell.clone(),
        radii: (delta1, delta2),
        base_offsets: (d1, d2),
    })
}

/// Builds `C` from the saturation plane and decomposes.
pub fn zones_for(hsv: &PlanarImage, nucleus: &NucleusMask, config: &ZoneConfig) -> Result<ZonalDecomposition> {
    if hsv.colorspace() != ColorSpace::Hsv {
        return Err(Error::Conversion {
            from: hsv.colorspace(),
            to: ColorSpace::Hsv,
        });
    }
    let delta2 = adaptive_radius(nucleus.area as f64, config.d2);
    let cell = approximate_cell_boundary(hsv.plane(1), nucleus, delta2, config.cell_refine_radius);
    decompose(nucleus, &cell, config.d1, config.d2)
}

/// Overlay blend weight.
pub const OVERLAY_ALPHA: f64 = 0.45;
pub const NUCLEUS_TINT: [f64; 3] = [220.0, 40.0, 160.0];
pub const PROXIMAL_TINT: [f64; 3] = [40.0, 200.0, 80.0];
pub const DISTAL_TINT: [f64; 3] = [250.0, 190.0, 30.0];

/// Tints `M_n`, `Z₁`, `Z₂` over the image: `round((1−α)·pixel + α·tint)`.
pub fn render_overlay(image: &PlanarImage, zones: &ZonalDecomposition) -> Result<PlanarImage> {
    if image.colorspace() != ColorSpace::Rgb8 {
        return Err(Error::Conversion {
            from: image.colorspace(),
            to: ColorSpace::Rgb8,
        });
    }
    Ok(PlanarImage::rgb_from_fn(image.width(), image.height(), |x, y| {
        let px = [0, 1, 2].map(|c| *image.plane(c).get(x, y));
        let tint = if zones.nucleus.get(x, y) {
            Some(NUCLEUS_TINT)
        } else if zones.proximal.get(x, y) {
            Some(PROXIMAL_TINT)
        } else if zones.distal.get(x, y) {
            Some(DISTAL_TINT)
        } else {
            None
        };
        let out = match tint {
            Some(t) => [0, 1, 2].map(|c| (1.0 - OVERLAY_ALPHA) * px[c] + OVERLAY_ALPHA * t[c]),
            None => px,
        };
        out.map(|v| v.round().clamp(0.0, 255.0) as u8)
    }))
}
