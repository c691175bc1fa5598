//! Color-transfer pipeline: image quantization, histogram/cost construction,
//! barycentric projection, and recoloring.
//!
//! Images move through the pipeline as 8-bit RGB (PPM P6 on disk); all color
//! math happens on centroids in `[0,1]^3` with plain Euclidean distances.

mod kmeans;
mod ppm;
mod transfer;

pub use kmeans::{kmeans_quantize, KmeansOutcome};
pub use ppm::{read_ppm, write_ppm};
pub use transfer::{
    barycentric_project, build_cost, recolor, synth_three_color, ProjectedCentroids,
};

use ndarray::Array1;

use crate::error::{Result, SrotError};

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != 3 * width * height {
            return Err(SrotError::Format(format!(
                "pixel buffer has {} bytes, expected {}",
                pixels.len(),
                3 * width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn bytes(&self) -> &[u8] {
        &self.pixels
    }

    /// Pixel as a point in `[0,1]^3`.
    pub fn pixel_rgb(&self, index: usize) -> [f64; 3] {
        let at = 3 * index;
        [
            f64::from(self.pixels[at]) / 255.0,
            f64::from(self.pixels[at + 1]) / 255.0,
            f64::from(self.pixels[at + 2]) / 255.0,
        ]
    }
}

/// An image reduced to a palette: centroids in `[0,1]^3`, a per-pixel
/// assignment, and the normalized assignment histogram.
#[derive(Debug, Clone)]
pub struct QuantizedImage {
    pub centroids: Vec<[f64; 3]>,
    pub assignment: Vec<usize>,
    pub histogram: Array1<f64>,
    pub width: usize,
    pub height: usize,
}

impl QuantizedImage {
    /// Exact quantization of an image with few distinct colors: the palette
    /// is the distinct colors in order of first appearance. Errors if the
    /// image has more than `max_colors` distinct colors.
    pub fn from_exact_palette(img: &RgbImage, max_colors: usize) -> Result<Self> {
        let mut centroids: Vec<[f64; 3]> = Vec::new();
        let mut keys: Vec<[u8; 3]> = Vec::new();
        let mut assignment = Vec::with_capacity(img.pixel_count());
        for p in 0..img.pixel_count() {
            let at = 3 * p;
            let key = [img.pixels[at], img.pixels[at + 1], img.pixels[at + 2]];
            let idx = match keys.iter().position(|k| *k == key) {
                Some(idx) => idx,
                None => {
                    if keys.len() == max_colors {
                        return Err(SrotError::Format(format!(
                            "image has more than {max_colors} distinct colors"
                        )));
                    }
                    keys.push(key);
                    centroids.push(img.pixel_rgb(p));
                    keys.len() - 1
                }
            };
            assignment.push(idx);
        }
        let histogram = histogram_from_assignment(&assignment, centroids.len(), img.pixel_count());
        Ok(Self {
            centroids,
            assignment,
            histogram,
            width: img.width,
            height: img.height,
        })
    }

    /// Sum of squared distances between pixels and their assigned centroids.
    pub fn distortion(&self, img: &RgbImage) -> f64 {
        let mut total = 0.0;
        for (p, &c) in self.assignment.iter().enumerate() {
            let px = img.pixel_rgb(p);
            let ct = self.centroids[c];
            total += sq_dist(&px, &ct);
        }
        total
    }
}

pub(crate) fn histogram_from_assignment(
    assignment: &[usize],
    k: usize,
    pixels: usize,
) -> Array1<f64> {
    let mut counts = vec![0usize; k];
    for &a in assignment {
        counts[a] += 1;
    }
    counts.iter().map(|&c| c as f64 / pixels as f64).collect()
}

pub(crate) fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dr = a[0] - b[0];
    let dg = a[1] - b[1];
    let db = a[2] - b[2];
    dr * dr + dg * dg + db * db
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_palette_orders_by_first_appearance() {
        // 2 red, 1 green, 1 blue
        let img = RgbImage::new(2, 2, vec![255, 0, 0, 255, 0, 0, 0, 255, 0, 0, 0, 255]).unwrap();
        let q = QuantizedImage::from_exact_palette(&img, 16).unwrap();
        assert_eq!(q.centroids.len(), 3);
        assert_eq!(q.assignment, vec![0, 0, 1, 2]);
        assert!((q.histogram[0] - 0.5).abs() < 1e-15);
        assert!((q.histogram.sum() - 1.0).abs() < 1e-15);
        assert_eq!(q.distortion(&img), 0.0);
    }
}
