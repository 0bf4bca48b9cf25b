//! Decoding, 256×256 standardization, color-space conversion, CLAHE on the
//! CIELAB lightness plane and separable Gaussian smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Working resolution after standardization.
pub const WORKING_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorSpace {
    /// R, G, B planes in [0, 255].
    Rgb8,
    /// L in [0, 100], a and b in [-128, 127].
    Lab,
    /// H in [0, 360), S and V in [0, 1].
    Hsv,
    /// Single luma plane in [0, 255].
    Gray,
    /// Single real-valued score plane.
    Score,
}

impl ColorSpace {
    pub fn plane_count(self) -> usize {
        match self {
            ColorSpace::Rgb8 | ColorSpace::Lab | ColorSpace::Hsv => 3,
            ColorSpace::Gray | ColorSpace::Score => 1,
        }
    }
}

/// A multi-plane raster; every plane shares the same dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    colorspace: ColorSpace,
    planes: Vec<Grid<f64>>,
}

impl PlanarImage {
    pub fn new(colorspace: ColorSpace, planes: Vec<Grid<f64>>) -> Result<Self> {
        if planes.len() != colorspace.plane_count() {
            return Err(Error::Input(format!(
                "{colorspace:?} needs {} planes, got {}",
                colorspace.plane_count(),
                planes.len()
            )));
        }
        if planes.iter().any(|p| !p.same_shape(&planes[0])) {
            return Err(Error::Input("planes differ in size".into()));
        }
        if planes[0].is_empty() {
            return Err(Error::Input("zero-dimension image".into()));
        }
        Ok(Self { colorspace, planes })
    }

    /// Solid RGB frame.
    pub fn solid_rgb(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let planes = rgb
            .iter()
            .map(|&c| Grid::filled(width, height, c as f64))
            .collect();
        Self {
            colorspace: ColorSpace::Rgb8,
            planes,
        }
    }

    /// Builds an RGB image from a per-pixel closure.
    pub fn rgb_from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut planes = [(); 3].map(|_| Vec::with_capacity(width * height));
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for c in 0..3 {
                    planes[c].push(px[c] as f64);
                }
            }
        }
        Self {
            colorspace: ColorSpace::Rgb8,
            planes: planes
                .into_iter()
                .map(|p| Grid::from_vec(width, height, p))
                .collect(),
        }
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn plane(&self, index: usize) -> &Grid<f64> {
        &self.planes[index]
    }

    pub fn planes(&self) -> &[Grid<f64>] {
        &self.planes
    }

    fn pixel3(&self, i: usize) -> [f64; 3] {
        [
            self.planes[0].as_slice()[i],
            self.planes[1].as_slice()[i],
            self.planes[2].as_slice()[i],
        ]
    }

    fn map_pixels3(&self, target: ColorSpace, f: impl Fn([f64; 3]) -> [f64; 3]) -> PlanarImage {
        let n = self.width() * self.height();
        let mut out = [(); 3].map(|_| Vec::with_capacity(n));
        for i in 0..n {
            let v = f(self.pixel3(i));
            for c in 0..3 {
                out[c].push(v[c]);
            }
        }
        PlanarImage {
            colorspace: target,
            planes: out
                .into_iter()
                .map(|p| Grid::from_vec(self.width(), self.height(), p))
                .collect(),
        }
    }

    /// Converts an RGB8 image to an 8-bit `image` buffer (values rounded and clamped).
    pub fn to_rgb8(&self) -> Result<image::RgbImage> {
        if self.colorspace != ColorSpace::Rgb8 {
            return Err(Error::Conversion {
                from: self.colorspace,
                to: ColorSpace::Rgb8,
            });
        }
        let (w, h) = (self.width(), self.height());
        let mut buf = image::RgbImage::new(w as u32, h as u32);
        for (i, px) in buf.pixels_mut().enumerate() {
            let p = self.pixel3(i);
            *px = image::Rgb([to_u8(p[0]), to_u8(p[1]), to_u8(p[2])]);
        }
        Ok(buf)
    }
}

#[inline]
fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Decodes PNG/TIFF/JPEG/BMP bytes at native resolution.
pub fn decode(encoded: &[u8]) -> Result<PlanarImage> {
    let img = image::load_from_memory(encoded).map_err(|e| Error::Format(e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Input("zero-dimension image".into()));
    }
    Ok(PlanarImage::rgb_from_fn(w, h, |x, y| {
        rgb.get_pixel(x as u32, y as u32).0
    }))
}

/// Decodes and resamples to the 256×256 working frame.
pub fn load_standardize(encoded: &[u8]) -> Result<PlanarImage> {
    standardize(&decode(encoded)?)
}

pub fn standardize(image: &PlanarImage) -> Result<PlanarImage> {
    if image.colorspace() != ColorSpace::Rgb8 {
        return Err(Error::Conversion {
            from: image.colorspace(),
            to: ColorSpace::Rgb8,
        });
    }
    Ok(resize_bilinear(image, WORKING_SIZE, WORKING_SIZE, true))
}

/// Bilinear resampling with pixel-center alignment. Same-size input is
/// returned unchanged. When `round` is set the output is rounded to the
/// nearest integer (RGB8 storage).
pub fn resize_bilinear(image: &PlanarImage, width: usize, height: usize, round: bool) -> PlanarImage {
    if image.width() == width && image.height() == height {
        return image.clone();
    }
    let sx = image.width() as f64 / width as f64;
    let sy = image.height() as f64 / height as f64;
    let max_x = image.width() as f64 - 1.0;
    let max_y = image.height() as f64 - 1.0;
    let planes = image
        .planes
        .iter()
        .map(|plane| {
            Grid::from_fn(width, height, |x, y| {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
                let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
                let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
                let x1 = (x0 + 1).min(plane.width() - 1);
                let y1 = (y0 + 1).min(plane.height() - 1);
                let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
                let top = *plane.get(x0, y0) * (1.0 - tx) + *plane.get(x1, y0) * tx;
                let bottom = *plane.get(x0, y1) * (1.0 - tx) + *plane.get(x1, y1) * tx;
                let v = top * (1.0 - ty) + bottom * ty;
                if round {
                    v.round()
                } else {
                    v
                }
            })
        })
        .collect();
    PlanarImage {
        colorspace: image.colorspace,
        planes,
    }
}

// D65 reference white.
const WHITE_X: f64 = 0.950_47;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.088_83;

fn srgb_to_linear(c: f64) -> f64 {
    let c = c / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    let v = if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    };
    v * 255.0
}

const EPS: f64 = 216.0 / 24_389.0; // (6/29)^3
const KAPPA: f64 = 24_389.0 / 27.0;

fn lab_f(t: f64) -> f64 {
    if t > EPS {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > EPS {
        t
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// sRGB (0–255) to CIELAB under D65, clamped to L∈[0,100], a,b∈[-128,127].
pub fn rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let r = srgb_to_linear(rgb[0]);
    let g = srgb_to_linear(rgb[1]);
    let b = srgb_to_linear(rgb[2]);
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let fx = lab_f(x / WHITE_X);
    let fy = lab_f(y / WHITE_Y);
    let fz = lab_f(z / WHITE_Z);
    [
        (116.0 * fy - 16.0).clamp(0.0, 100.0),
        (500.0 * (fx - fy)).clamp(-128.0, 127.0),
        (200.0 * (fy - fz)).clamp(-128.0, 127.0),
    ]
}

/// CIELAB to sRGB (0–255, unrounded, clamped to the 8-bit range).
pub fn lab_to_rgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let x = lab_f_inv(fx) * WHITE_X;
    let y = lab_f_inv(fy) * WHITE_Y;
    let z = lab_f_inv(fz) * WHITE_Z;
    let r = 3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z;
    let g = -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z;
    let b = 0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z;
    [r, g, b].map(|c| linear_to_srgb(c.max(0.0)).clamp(0.0, 255.0))
}

/// sRGB (0–255) to HSV with H∈[0,360), S,V∈[0,1].
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| c / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    [if h >= 360.0 { h - 360.0 } else { h }, s, max]
}

pub fn luma(rgb: [f64; 3]) -> f64 {
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

/// Converts between color spaces. Supported: RGB8 → {LAB, HSV, GRAY} and
/// LAB → RGB8.
pub fn convert(image: &PlanarImage, target: ColorSpace) -> Result<PlanarImage> {
    match (image.colorspace(), target) {
        (ColorSpace::Rgb8, ColorSpace::Lab) => Ok(image.map_pixels3(ColorSpace::Lab, rgb_to_lab)),
        (ColorSpace::Rgb8, ColorSpace::Hsv) => Ok(image.map_pixels3(ColorSpace::Hsv, rgb_to_hsv)),
        (ColorSpace::Lab, ColorSpace::Rgb8) => {
            Ok(image.map_pixels3(ColorSpace::Rgb8, |p| lab_to_rgb(p).map(f64::round)))
        }
        (ColorSpace::Rgb8, ColorSpace::Gray) => {
            let n = image.width() * image.height();
            let data = (0..n).map(|i| luma(image.pixel3(i))).collect();
            Ok(PlanarImage {
                colorspace: ColorSpace::Gray,
                planes: vec![Grid::from_vec(image.width(), image.height(), data)],
            })
        }
        (from, to) => Err(Error::Conversion { from, to }),
    }
}

/// Contrast-limited adaptive histogram equalization of the L plane; a and b
/// are copied through untouched.
pub fn clahe_lightness(lab: &PlanarImage, clip_limit: f64, tile_grid: (usize, usize)) -> Result<PlanarImage> {
    if lab.colorspace() != ColorSpace::Lab {
        return Err(Error::Conversion {
            from: lab.colorspace(),
            to: ColorSpace::Lab,
        });
    }
    if !(clip_limit > 0.0) || tile_grid.0 == 0 || tile_grid.1 == 0 {
        return Err(Error::Input("CLAHE needs clip_limit > 0 and a tile grid of at least 1×1".into()));
    }
    let l = lab.plane(0);
    let (w, h) = (l.width(), l.height());
    let tiles_x = tile_grid.0.min(w);
    let tiles_y = tile_grid.1.min(h);
    let bins = l.map(|&v| (v * 255.0 / 100.0).round().clamp(0.0, 255.0) as usize);

    let bounds = |i: usize, n: usize, len: usize| (i * len / n, (i + 1) * len / n);
    let mut luts = vec![[0.0f64; 256]; tiles_x * tiles_y];
    for ty in 0..tiles_y {
        let (y0, y1) = bounds(ty, tiles_y, h);
        for tx in 0..tiles_x {
            let (x0, x1) = bounds(tx, tiles_x, w);
            let mut hist = [0usize; 256];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[*bins.get(x, y)] += 1;
                }
            }
            let area = (x1 - x0) * (y1 - y0);
            let limit = ((clip_limit * area as f64 / 256.0) as usize).max(1);
            let mut excess = 0usize;
            for v in hist.iter_mut() {
                if *v > limit {
                    excess += *v - limit;
                    *v = limit;
                }
            }
            // Uniform batch, then the residual spread from bin 0 at a fixed stride.
            let batch = excess / 256;
            let mut residual = excess - batch * 256;
            hist.iter_mut().for_each(|v| *v += batch);
            if residual > 0 {
                let stride = (256 / residual).max(1);
                let mut b = 0;
                while b < 256 && residual > 0 {
                    hist[b] += 1;
                    residual -= 1;
                    b += stride;
                }
            }
            let scale = 255.0 / area as f64;
            let lut = &mut luts[ty * tiles_x + tx];
            let mut cdf = 0usize;
            for (b, v) in hist.iter().enumerate() {
                cdf += v;
                lut[b] = (cdf as f64 * scale).round().min(255.0);
            }
        }
    }

    // Bilinear blend between the four surrounding tile centers.
    let tile_w = w as f64 / tiles_x as f64;
    let tile_h = h as f64 / tiles_y as f64;
    let locate = |p: usize, size: f64, n: usize| -> (usize, usize, f64) {
        let f = p as f64 / size - 0.5;
        if f <= 0.0 {
            (0, 0, 0.0)
        } else if f >= (n - 1) as f64 {
            (n - 1, n - 1, 0.0)
        } else {
            let i = f.floor() as usize;
            (i, i + 1, f - i as f64)
        }
    };
    let out = Grid::from_fn(w, h, |x, y| {
        let b = *bins.get(x, y);
        let (xa, xb, fx) = locate(x, tile_w, tiles_x);
        let (ya, yb, fy) = locate(y, tile_h, tiles_y);
        let lut = |tx: usize, ty: usize| luts[ty * tiles_x + tx][b];
        let top = lut(xa, ya) * (1.0 - fx) + lut(xb, ya) * fx;
        let bottom = lut(xa, yb) * (1.0 - fx) + lut(xb, yb) * fx;
        ((top * (1.0 - fy) + bottom * fy) * 100.0 / 255.0).clamp(0.0, 100.0)
    });
    Ok(PlanarImage {
        colorspace: ColorSpace::Lab,
        planes: vec![out, lab.plane(1).clone(), lab.plane(2).clone()],
    })
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian smoothing with edge replication.
pub fn gaussian_blur(plane: &Grid<f64>, sigma: f64) -> Result<Grid<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::Input("gaussian sigma must be positive".into()));
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (plane.width(), plane.height());
    let horizontal = Grid::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, k)| k * plane.clamped(x as isize + i as isize - r, y as isize))
            .sum::<f64>()
    });
    Ok(Grid::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, k)| k * horizontal.clamped(x as isize, y as isize + i as isize - r))
            .sum::<f64>()
    }))
}
