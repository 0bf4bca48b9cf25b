//! Fixed-schema feature vectors.
//!
//! A vector is a concatenation, in schema order, of:
//!
//! * five nucleus morphology values (`area`, `circularity`, `solidity`,
//!   `roughness`, `nc_ratio`);
//! * for each of `M_n`, `Z₁`, `Z₂` and `C`: eight color moments, four GLCM
//!   descriptors and 32 LBP groups;
//! * the nucleus-minus-ring color gradients for `Z₁` and `Z₂` (eight each).
//!
//! An empty domain contributes zeros and is listed in
//! [`FeatureVector::degraded_domains`].

pub mod color;
pub mod glcm;
pub mod lbp;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Grid};
use crate::imgproc::{self, ColorSpace, PlanarImage};
use crate::morphology;
use crate::zones::ZonalDecomposition;

pub use color::{color_stats, spatial_gradients, ColorStats};
pub use glcm::{glcm_features, GlcmDescriptors};
pub use lbp::lbp_histogram;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "m_n")]
    Nucleus,
    #[serde(rename = "z1")]
    Proximal,
    #[serde(rename = "z2")]
    Distal,
    #[serde(rename = "c")]
    Cell,
    #[serde(rename = "d_n_z1")]
    DeltaProximal,
    #[serde(rename = "d_n_z2")]
    DeltaDistal,
}

impl Domain {
    pub const REGIONS: [Domain; 4] = [Domain::Nucleus, Domain::Proximal, Domain::Distal, Domain::Cell];

    pub fn tag(self) -> &'static str {
        match self {
            Domain::Nucleus => "m_n",
            Domain::Proximal => "z1",
            Domain::Distal => "z2",
            Domain::Cell => "c",
            Domain::DeltaProximal => "d_n_z1",
            Domain::DeltaDistal => "d_n_z2",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Morph,
    Color,
    Glcm,
    Lbp,
    Ratio,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Morph => "morph",
            Family::Color => "color",
            Family::Glcm => "glcm",
            Family::Lbp => "lbp",
            Family::Ratio => "ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub domain: Domain,
    pub family: Family,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub schema_id: String,
    pub features: Vec<FeatureSpec>,
}

const MORPH_STATS: [&str; 4] = ["area", "circularity", "solidity", "roughness"];
const COLOR_STATS: [&str; 8] = [
    "mean_r", "mean_g", "mean_b", "mean_gray", "std_r", "std_g", "std_b", "std_gray",
];
const GLCM_STATS: [&str; 4] = ["contrast", "homogeneity", "energy", "correlation"];
const DELTA_STATS: [&str; 8] = [
    "dmean_r", "dmean_g", "dmean_b", "dmean_gray", "dstd_r", "dstd_g", "dstd_b", "dstd_gray",
];

impl FeatureSchema {
    /// The schema every extraction in this crate produces.
    pub fn standard() -> Self {
        let mut features = Vec::new();
        let mut push = |domain: Domain, family: Family, stat: &str| {
            features.push(FeatureSpec {
                name: format!("{}.{}.{}", domain.tag(), family.tag(), stat),
                domain,
                family,
            });
        };
        for stat in MORPH_STATS {
            push(Domain::Nucleus, Family::Morph, stat);
        }
        push(Domain::Nucleus, Family::Ratio, "nc_ratio");
        for domain in Domain::REGIONS {
            for stat in COLOR_STATS {
                push(domain, Family::Color, stat);
            }
            for stat in GLCM_STATS {
                push(domain, Family::Glcm, stat);
            }
            for g in 0..lbp::GROUPS {
                push(domain, Family::Lbp, &format!("g{g:02}"));
            }
        }
        for domain in [Domain::DeltaProximal, Domain::DeltaDistal] {
            for stat in DELTA_STATS {
                push(domain, Family::Color, stat);
            }
        }
        let schema_id = schema_hash(SCHEMA_VERSION, &features);
        Self {
            version: SCHEMA_VERSION,
            schema_id,
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Indices of every feature tagged with one of `domains`.
    pub fn indices_for(&self, domains: &[Domain]) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| domains.contains(&f.domain))
            .map(|(i, _)| i)
            .collect()
    }

    /// Recomputes the id from the feature list.
    pub fn is_consistent(&self) -> bool {
        self.schema_id == schema_hash(self.version, &self.features)
    }
}

fn schema_hash(version: u32, features: &[FeatureSpec]) -> String {
    let mut h = Sha256::new();
    h.update(version.to_le_bytes());
    for f in features {
        h.update(f.name.as_bytes());
        h.update([0]);
        h.update(f.domain.tag().as_bytes());
        h.update([0]);
        h.update(f.family.tag().as_bytes());
        h.update([0]);
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_id: String,
    pub degraded_domains: BTreeSet<Domain>,
}

/// `[area, circularity, solidity, roughness, nc_ratio]`.
pub fn morphology_features(nucleus: &BinaryMask, cell: &BinaryMask) -> Result<[f64; 5]> {
    let cell_area = cell.count();
    if cell_area == 0 {
        return Err(Error::Feature("cell mask is empty".into()));
    }
    if nucleus.is_empty() {
        return Err(Error::Feature("nucleus mask is empty".into()));
    }
    let shape = morphology::shape_metrics(nucleus);
    Ok([
        shape.area as f64,
        shape.circularity,
        shape.solidity,
        shape.roughness,
        nc_ratio(shape.area, cell_area),
    ])
}

pub fn nc_ratio(nucleus_area: usize, cell_area: usize) -> f64 {
    nucleus_area as f64 / cell_area as f64
}

/// Per-region block: color, GLCM, LBP (44 values) and its color moments.
fn region_block(planes: [&Grid<f64>; 4], domain: &BinaryMask) -> (Vec<f64>, Option<ColorStats>, bool) {
    let stats = color_stats(planes, domain);
    let texture = glcm_features(planes[3], domain);
    let lbp = lbp_histogram(planes[3], domain);
    let degraded = stats.is_none() || texture.is_none() || lbp.is_none();
    let mut out = Vec::with_capacity(44);
    out.extend(stats.unwrap_or_default().to_array());
    out.extend(texture.unwrap_or_default().to_array());
    out.extend(lbp.unwrap_or([0.0; lbp::GROUPS]));
    (out, stats, degraded)
}

/// Extracts the standard vector from an RGB8 image and its zones.
pub fn build_vector(image: &PlanarImage, zones: &ZonalDecomposition, schema: &FeatureSchema) -> Result<FeatureVector> {
    let standard = FeatureSchema::standard();
    if schema.schema_id != standard.schema_id {
        return Err(Error::Schema {
            expected: standard.schema_id,
            found: schema.schema_id.clone(),
        });
    }
    if image.colorspace() != ColorSpace::Rgb8 {
        return Err(Error::Conversion {
            from: image.colorspace(),
            to: ColorSpace::Rgb8,
        });
    }
    if !zones.nucleus.same_shape(&BinaryMask::empty(image.width(), image.height())) {
        return Err(Error::Input("zone masks and image differ in size".into()));
    }
    let gray = imgproc::convert(image, ColorSpace::Gray)?;
    let planes = [image.plane(0), image.plane(1), image.plane(2), gray.plane(0)];

    let mut values = Vec::with_capacity(standard.len());
    let mut degraded = BTreeSet::new();
    values.extend(morphology_features(&zones.nucleus, &zones.cell)?);

    let masks = [&zones.nucleus, &zones.proximal, &zones.distal, &zones.cell];
    let mut stats = Vec::with_capacity(4);
    for (domain, mask) in Domain::REGIONS.into_iter().zip(masks) {
        let (block, s, flag) = region_block(planes, mask);
        values.extend(block);
        stats.push(s);
        if flag {
            degraded.insert(domain);
        }
    }
    let nucleus_stats = stats[0].unwrap_or_default();
    for (domain, zone) in [(Domain::DeltaProximal, stats[1]), (Domain::DeltaDistal, stats[2])] {
        match zone {
            Some(z) => values.extend(spatial_gradients(&nucleus_stats, &z).to_array()),
            None => {
                values.extend([0.0; 8]);
                degraded.insert(domain);
            }
        }
    }
    debug_assert_eq!(values.len(), standard.len());
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Feature(format!("non-finite value for {}", standard.features[i].name)));
    }
    Ok(FeatureVector {
        values,
        schema_id: standard.schema_id,
        degraded_domains: degraded,
    })
}
