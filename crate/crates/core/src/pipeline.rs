//! Per-image chain from raw pixels to a feature vector, and batch helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{build_vector, FeatureSchema, FeatureVector};
use crate::imgproc::{self, PlanarImage};
use crate::ml::{FeatureTable, Matrix};
use crate::par;
use crate::segmentation::{self, NucleusMask, Preprocessed, SegmentationConfig};
use crate::zones::{self, ZonalDecomposition, ZoneConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub segmentation: SegmentationConfig,
    pub zones: ZoneConfig,
}

#[derive(Debug, Clone)]
pub struct Processed {
    pub preprocessed: Preprocessed,
    pub nucleus: NucleusMask,
    pub zones: ZonalDecomposition,
}

/// Standardize, enhance, segment and decompose a native-resolution RGB image.
pub fn segment_image(rgb: &PlanarImage, cfg: &PipelineConfig) -> Result<Processed> {
    let standard = imgproc::standardize(rgb)?;
    let preprocessed = segmentation::preprocess(&standard, &cfg.segmentation)?;
    let nucleus = segmentation::segment_preprocessed(&preprocessed, &cfg.segmentation)?;
    let zones = zones::zones_for(&preprocessed.hsv, &nucleus, &cfg.zones)?;
    Ok(Processed {
        preprocessed,
        nucleus,
        zones,
    })
}

/// Features are measured on the contrast-enhanced RGB frame.
pub fn extract(processed: &Processed, schema: &FeatureSchema) -> Result<FeatureVector> {
    build_vector(&processed.preprocessed.enhanced_rgb, &processed.zones, schema)
}

pub fn process_image(rgb: &PlanarImage, cfg: &PipelineConfig, schema: &FeatureSchema) -> Result<(Processed, FeatureVector)> {
    let p = segment_image(rgb, cfg)?;
    let v = extract(&p, schema)?;
    Ok((p, v))
}

/// Runs [`process_image`] on every input, keeping per-image failures.
pub fn process_batch(images: &[PlanarImage], cfg: &PipelineConfig, schema: &FeatureSchema) -> Vec<Result<FeatureVector>> {
    par::map(images, |img| process_image(img, cfg, schema).map(|(_, v)| v))
}

/// Assembles successful vectors into a table.
pub fn feature_table(schema: &FeatureSchema, rows: Vec<(String, u8, FeatureVector)>) -> Result<FeatureTable> {
    let mut ids = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * schema.len());
    for (id, label, v) in rows {
        if v.schema_id != schema.schema_id || v.values.len() != schema.len() {
            return Err(Error::Schema {
                expected: schema.schema_id.clone(),
                found: v.schema_id,
            });
        }
        ids.push(id);
        labels.push(label);
        data.extend(v.values);
    }
    let n = ids.len();
    FeatureTable::new(
        schema.schema_id.clone(),
        schema.names().into_iter().map(String::from).collect(),
        ids,
        labels,
        Matrix::from_vec(n, schema.len(), data),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{render, SynthConfig};

    #[test]
    fn synthetic_cells_segment_and_extract() {
        let schema = FeatureSchema::standard();
        let cfg = PipelineConfig::default();
        for (i, label) in [(0u64, 0u8), (1, 1), (2, 0), (3, 1)] {
            let img = render(label, &SynthConfig::default(), i);
            let (p, v) = process_image(&img, &cfg, &schema).unwrap();
            assert_eq!(p.zones.invariant_violations(), 0);
            assert_eq!(v.values.len(), schema.len());
            assert!(v.degraded_domains.is_empty(), "{:?}", v.degraded_domains);
            assert!(v.values.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn blank_frame_reports_segmentation_error() {
        let img = PlanarImage::solid_rgb(300, 200, [230, 230, 230]);
        let r = process_image(&img, &PipelineConfig::default(), &FeatureSchema::standard());
        assert!(matches!(r, Err(Error::Segmentation(_))));
    }
}
