//! Lloyd's k-means with k-means++ seeding for palette extraction.

use rand::Rng;

use crate::error::{Result, SrotError};
use crate::gen;

use super::{histogram_from_assignment, sq_dist, QuantizedImage, RgbImage};

/// Quantization result plus a flag for the degenerate case where the image
/// had fewer distinct colors than requested clusters.
#[derive(Debug, Clone)]
pub struct KmeansOutcome {
    pub quantized: QuantizedImage,
    /// Set when `k` was reduced to the number of distinct colors.
    pub reduced_k: bool,
}

/// Quantizes an image into (at most) `k` colors. Deterministic for a fixed
/// seed: k-means++ seeding, Lloyd iterations until assignments stop changing
/// or `max_iters` is hit, empty clusters re-seeded to the farthest pixel.
pub fn kmeans_quantize(
    img: &RgbImage,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KmeansOutcome> {
    if k == 0 {
        return Err(SrotError::Config("k must be at least 1".into()));
    }
    if img.pixel_count() == 0 {
        return Err(SrotError::Config("image is empty".into()));
    }
    let pixels: Vec<[f64; 3]> = (0..img.pixel_count()).map(|p| img.pixel_rgb(p)).collect();
    let distinct = count_distinct(img, k);
    let (k, reduced_k) = if distinct < k {
        (distinct, true)
    } else {
        (k, false)
    };

    let mut rng = gen::seeded_rng(seed);
    let mut centroids = seed_plus_plus(&pixels, k, &mut rng);
    let mut assignment = vec![0usize; pixels.len()];
    let mut changed = true;
    let mut iter = 0;
    while changed && iter < max_iters {
        changed = false;
        for (p, px) in pixels.iter().enumerate() {
            let mut best = f64::INFINITY;
            let mut best_c = 0;
            for (c, ct) in centroids.iter().enumerate() {
                let d = sq_dist(px, ct);
                if d < best {
                    best = d;
                    best_c = c;
                }
            }
            if assignment[p] != best_c {
                assignment[p] = best_c;
                changed = true;
            }
        }
        // means, with farthest-point repair for empty clusters
        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in assignment.iter().enumerate() {
            for ch in 0..3 {
                sums[c][ch] += pixels[p][ch];
            }
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let farthest = farthest_pixel(&pixels, &centroids, &assignment);
                centroids[c] = pixels[farthest];
                changed = true;
            } else {
                for ch in 0..3 {
                    centroids[c][ch] = sums[c][ch] / counts[c] as f64;
                }
            }
        }
        iter += 1;
    }

    let histogram = histogram_from_assignment(&assignment, k, pixels.len());
    Ok(KmeansOutcome {
        quantized: QuantizedImage {
            centroids,
            assignment,
            histogram,
            width: img.width(),
            height: img.height(),
        },
        reduced_k,
    })
}

/// Greedy k-means++: first center uniform, later centers drawn
/// proportionally to the squared distance from the nearest chosen center,
/// with several candidates per round and the one minimizing the resulting
/// potential kept.
fn seed_plus_plus(pixels: &[[f64; 3]], k: usize, rng: &mut gen::SrotRng) -> Vec<[f64; 3]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(pixels[rng.random_range(0..pixels.len())]);
    let mut dist: Vec<f64> = pixels.iter().map(|px| sq_dist(px, &centroids[0])).collect();
    let candidates = 2 + (k as f64).ln().ceil() as usize;
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let mut best_pick = None;
        for _ in 0..candidates {
            let pick = if total <= 0.0 {
                // all remaining mass is at distance zero; any pixel works
                rng.random_range(0..pixels.len())
            } else {
                let mut u = rng.random::<f64>() * total;
                let mut chosen = pixels.len() - 1;
                for (p, &d) in dist.iter().enumerate() {
                    u -= d;
                    if u <= 0.0 {
                        chosen = p;
                        break;
                    }
                }
                chosen
            };
            let potential: f64 = pixels
                .iter()
                .zip(dist.iter())
                .map(|(px, &d)| d.min(sq_dist(px, &pixels[pick])))
                .sum();
            match best_pick {
                Some((_, best)) if best <= potential => {}
                _ => best_pick = Some((pick, potential)),
            }
        }
        let (pick, _) = best_pick.expect("at least one candidate");
        centroids.push(pixels[pick]);
        for (p, px) in pixels.iter().enumerate() {
            let d = sq_dist(px, &pixels[pick]);
            if d < dist[p] {
                dist[p] = d;
            }
        }
    }
    centroids
}

fn farthest_pixel(pixels: &[[f64; 3]], centroids: &[[f64; 3]], assignment: &[usize]) -> usize {
    let mut best = 0usize;
    let mut best_d = -1.0;
    for (p, px) in pixels.iter().enumerate() {
        let d = sq_dist(px, &centroids[assignment[p]]);
        if d > best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

fn count_distinct(img: &RgbImage, cap: usize) -> usize {
    let mut seen: Vec<[u8; 3]> = Vec::new();
    for p in 0..img.pixel_count() {
        let at = 3 * p;
        let key = [img.bytes()[at], img.bytes()[at + 1], img.bytes()[at + 2]];
        if !seen.contains(&key) {
            seen.push(key);
            if seen.len() > cap {
                return cap + 1;
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_color_image() -> RgbImage {
        let mut pixels = Vec::new();
        for _ in 0..10 {
            pixels.extend_from_slice(&[255, 0, 0]);
        }
        for _ in 0..30 {
            pixels.extend_from_slice(&[0, 255, 0]);
        }
        for _ in 0..60 {
            pixels.extend_from_slice(&[0, 0, 255]);
        }
        RgbImage::new(10, 10, pixels).unwrap()
    }

    #[test]
    fn exact_colors_are_recovered() {
        let img = three_color_image();
        let out = kmeans_quantize(&img, 3, 1, 100).unwrap();
        assert!(!out.reduced_k);
        assert_eq!(out.quantized.distortion(&img), 0.0);
        let mut hist: Vec<f64> = out.quantized.histogram.to_vec();
        hist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(hist, vec![0.1, 0.3, 0.6]);
    }

    #[test]
    fn k1_returns_the_mean_pixel() {
        let img = RgbImage::new(2, 1, vec![0, 0, 0, 255, 255, 255]).unwrap();
        let out = kmeans_quantize(&img, 1, 5, 100).unwrap();
        let c = out.quantized.centroids[0];
        for ch in 0..3 {
            assert!((c[ch] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn k_reduces_when_colors_run_out() {
        let img = RgbImage::new(2, 1, vec![9, 9, 9, 9, 9, 9]).unwrap();
        let out = kmeans_quantize(&img, 4, 0, 100).unwrap();
        assert!(out.reduced_k);
        assert_eq!(out.quantized.centroids.len(), 1);
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let img = three_color_image();
        let a = kmeans_quantize(&img, 2, 42, 100).unwrap();
        let b = kmeans_quantize(&img, 2, 42, 100).unwrap();
        assert_eq!(a.quantized.centroids, b.quantized.centroids);
        assert_eq!(a.quantized.assignment, b.quantized.assignment);
    }

    #[test]
    fn seeded_result_is_near_the_best_of_many_restarts() {
        // random 100-pixel image
        let mut rng = gen::seeded_rng(1234);
        let pixels: Vec<u8> = (0..300).map(|_| rng.random::<u8>()).collect();
        let img = RgbImage::new(10, 10, pixels).unwrap();
        let ours = kmeans_quantize(&img, 3, 42, 200)
            .unwrap()
            .quantized
            .distortion(&img);
        let mut best = f64::INFINITY;
        for seed in 0..200u64 {
            let d = kmeans_quantize(&img, 3, seed, 200)
                .unwrap()
                .quantized
                .distortion(&img);
            best = best.min(d);
        }
        assert!(
            ours <= best * 1.05 + 1e-12,
            "seed-42 distortion {ours} vs best restart {best}"
        );
    }
}
