//! Procedural seven-segment digits, used when no IDX data is supplied.
//! Each glyph gets a random box, shear, stroke width, intensity and endpoint
//! jitter; 15% of glyphs have one segment toggled, so neighbouring classes
//! overlap.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::store::ImageStore;
use crate::error::Result;
use crate::nn::Shape;
use crate::seed;

pub const DIGIT_SIZE: usize = 28;

// Segment endpoints in a unit box (y grows downward): A top, B upper right,
// C lower right, D bottom, E lower left, F upper left, G middle.
const SEGMENTS: [[(f64, f64); 2]; 7] = [
    [(0.0, 0.0), (1.0, 0.0)],
    [(1.0, 0.0), (1.0, 0.5)],
    [(1.0, 0.5), (1.0, 1.0)],
    [(0.0, 1.0), (1.0, 1.0)],
    [(0.0, 0.5), (0.0, 1.0)],
    [(0.0, 0.0), (0.0, 0.5)],
    [(0.0, 0.5), (1.0, 0.5)],
];

const DIGITS: [u8; 10] = [
    0b011_1111, // 0: ABCDEF
    0b000_0110, // 1: BC
    0b101_1011, // 2: ABGED
    0b100_1111, // 3: ABGCD
    0b110_0110, // 4: FGBC
    0b110_1101, // 5: AFGCD
    0b111_1101, // 6: AFGEDC
    0b000_0111, // 7: ABC
    0b111_1111, // 8
    0b110_1111, // 9: ABCDFG
];

fn seg_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
    (qx * qx + qy * qy).sqrt()
}

fn render(label: usize, rng: &mut seed::Rng) -> Vec<f32> {
    let n = DIGIT_SIZE as f64;
    let w = rng.random_range(8.0..13.0);
    let h = rng.random_range(14.0..20.0);
    let cx = n / 2.0 + rng.random_range(-3.0..3.0);
    let cy = n / 2.0 + rng.random_range(-2.0..2.0);
    let shear = rng.random_range(-0.3..0.3);
    let half = rng.random_range(0.9..1.8);
    let ink = rng.random_range(0.6..1.0);
    let mut mask = DIGITS[label];
    if rng.random::<f64>() < 0.15 {
        mask ^= 1 << rng.random_range(0..7);
    }
    let to_px = |(u, v): (f64, f64)| {
        let y = cy + (v - 0.5) * h;
        let x = cx + (u - 0.5) * w - shear * (v - 0.5) * h;
        (x, y)
    };
    let segs: Vec<((f64, f64), (f64, f64))> = (0..7)
        .filter(|s| mask & (1 << s) != 0)
        .map(|s| {
            let mut jit = || rng.random_range(-1.0..1.0);
            let (a, b) = (to_px(SEGMENTS[s][0]), to_px(SEGMENTS[s][1]));
            ((a.0 + jit(), a.1 + jit()), (b.0 + jit(), b.1 + jit()))
        })
        .collect();
    let mut img = vec![0.0f32; DIGIT_SIZE * DIGIT_SIZE];
    for y in 0..DIGIT_SIZE {
        for x in 0..DIGIT_SIZE {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let d = segs
                .iter()
                .map(|&(a, b)| seg_distance(px, py, a, b))
                .fold(f64::INFINITY, f64::min);
            let v = ink * (half + 0.5 - d).clamp(0.0, 1.0);
            img[y * DIGIT_SIZE + x] = v as f32;
        }
    }
    img
}

/// `n` class-balanced 28×28 digit images (labels cycle through 0..9 before
/// a seeded shuffle).
pub fn synthetic_digits(n: usize, seed: u64) -> Result<ImageStore> {
    let mut rng = seed::rng_for(seed, "digits", 0);
    let mut labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
    labels.shuffle(&mut rng);
    let mut pixels = Vec::with_capacity(n * DIGIT_SIZE * DIGIT_SIZE);
    for (i, &l) in labels.iter().enumerate() {
        let mut r = seed::rng_for(seed, "digit", i as u64);
        pixels.extend(render(l, &mut r));
    }
    ImageStore::from_parts(Shape::new(1, DIGIT_SIZE, DIGIT_SIZE), 10, pixels, labels)
}
