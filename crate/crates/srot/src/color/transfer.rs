//! Cost construction, barycentric projection, recoloring, and the synthetic
//! three-color pair.

use ndarray::Array2;

use crate::error::{Result, SrotError};
use crate::problem::TransportPlan;

use super::{QuantizedImage, RgbImage};

/// Euclidean distance matrix between the two palettes:
/// `C[i][j] = ||x_i - y_j||`.
pub fn build_cost(src: &QuantizedImage, reference: &QuantizedImage) -> Array2<f64> {
    let m = src.centroids.len();
    let n = reference.centroids.len();
    Array2::from_shape_fn((m, n), |(i, j)| {
        super::sq_dist(&src.centroids[i], &reference.centroids[j]).sqrt()
    })
}

/// New source centroids from barycentric projection.
#[derive(Debug, Clone)]
pub struct ProjectedCentroids {
    pub centroids: Vec<[f64; 3]>,
    /// Rows whose plan mass was zero; their original centroid was kept.
    pub starved_rows: Vec<usize>,
}

/// Barycentric projection: row `i` of the plan maps centroid `i` to the
/// plan-weighted average of the reference centroids,
/// `x_i = sum_j T_ij y_j / sum_j T_ij`, clamped to `[0,1]^3`. A semi-relaxed
/// plan can starve a row entirely; such rows keep their original centroid
/// and are flagged.
pub fn barycentric_project(
    plan: &TransportPlan,
    src_centroids: &[[f64; 3]],
    ref_centroids: &[[f64; 3]],
) -> Result<ProjectedCentroids> {
    let (m, n) = (plan.rows(), plan.cols());
    if src_centroids.len() != m || ref_centroids.len() != n {
        return Err(SrotError::Config(format!(
            "plan is {m}x{n} but palettes have {} and {} colors",
            src_centroids.len(),
            ref_centroids.len()
        )));
    }
    let mut centroids = Vec::with_capacity(m);
    let mut starved_rows = Vec::new();
    for (i, src) in src_centroids.iter().enumerate() {
        let row_sum: f64 = (0..n).map(|j| plan.matrix()[(i, j)]).sum();
        if row_sum <= 0.0 {
            starved_rows.push(i);
            centroids.push(*src);
            continue;
        }
        let mut c = [0.0f64; 3];
        for (j, reference) in ref_centroids.iter().enumerate() {
            let w = plan.matrix()[(i, j)] / row_sum;
            for ch in 0..3 {
                c[ch] += w * reference[ch];
            }
        }
        for v in c.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        centroids.push(c);
    }
    Ok(ProjectedCentroids {
        centroids,
        starved_rows,
    })
}

/// Substitutes each pixel's assigned centroid, quantizing to 8 bits with
/// round-half-up.
pub fn recolor(src: &QuantizedImage, new_centroids: &[[f64; 3]]) -> Result<RgbImage> {
    if new_centroids.len() != src.centroids.len() {
        return Err(SrotError::Config(format!(
            "{} new centroids for a {}-color palette",
            new_centroids.len(),
            src.centroids.len()
        )));
    }
    let bytes: Vec<[u8; 3]> = new_centroids
        .iter()
        .map(|c| [to_u8(c[0]), to_u8(c[1]), to_u8(c[2])])
        .collect();
    let mut pixels = Vec::with_capacity(3 * src.assignment.len());
    for &a in &src.assignment {
        pixels.extend_from_slice(&bytes[a]);
    }
    RgbImage::new(src.width, src.height, pixels)
}

fn to_u8(v: f64) -> u8 {
    // round half up; f64::round is half away from zero, which agrees on [0,1]
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Source colors of the synthetic three-color pair.
pub const SYNTH_SOURCE_COLORS: [[u8; 3]; 3] = [[230, 25, 25], [25, 204, 51], [38, 51, 217]];
/// Reference colors; their (0.6, 0.3, 0.1)-weighted mix lands on a brown.
pub const SYNTH_REFERENCE_COLORS: [[u8; 3]; 3] = [[204, 128, 51], [77, 77, 77], [77, 51, 26]];

/// Two 20x20 three-color images whose exact quantization gives histograms
/// (0.1, 0.3, 0.6) for the source and (0.6, 0.3, 0.1) for the reference.
pub fn synth_three_color() -> (RgbImage, RgbImage) {
    let src = block_image(&SYNTH_SOURCE_COLORS, &[40, 120, 240]);
    let reference = block_image(&SYNTH_REFERENCE_COLORS, &[240, 120, 40]);
    (src, reference)
}

fn block_image(colors: &[[u8; 3]; 3], counts: &[usize; 3]) -> RgbImage {
    let total: usize = counts.iter().sum();
    debug_assert_eq!(total, 400);
    let mut pixels = Vec::with_capacity(3 * total);
    for (color, &count) in colors.iter().zip(counts.iter()) {
        for _ in 0..count {
            pixels.extend_from_slice(color);
        }
    }
    RgbImage::new(20, 20, pixels).expect("block image dimensions match")
}
