use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::store::{ImageStore, Provenance};
use crate::error::{HalError, Result};
use crate::nn::Shape;
use crate::seed;

/// Replaces `dup_fraction` of the store with noisy copies of kept originals.
///
/// The kept originals are a class-interleaved seeded sample; duplicates are
/// spread over the classes present among them with per-class counts that
/// differ by at most one, each copying a uniformly chosen kept original of
/// its class plus i.i.d. Gaussian pixel noise clamped to `[0, 1]`. Copies keep
/// their source label. Output order is shuffled.
pub fn make_duplicated_pool(store: &ImageStore, dup_fraction: f64, noise_sigma: f64, seed: u64) -> Result<ImageStore> {
    if store.is_empty() {
        return Err(HalError::Empty("source store"));
    }
    if !(0.0..1.0).contains(&dup_fraction) {
        return Err(HalError::InvalidArgument(format!("dup_fraction {dup_fraction} outside [0, 1)")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(HalError::InvalidArgument(format!("noise sigma {noise_sigma}")));
    }
    let n = store.len();
    let n_dup = ((dup_fraction * n as f64).round() as usize).min(n - 1);
    if n_dup == 0 {
        return Ok(store.clone());
    }
    let n_orig = n - n_dup;
    let mut rng = seed::rng_for(seed, "duplicate", 0);

    // Interleave shuffled class lists so the kept originals stay balanced.
    let mut lists = store.class_indices();
    for l in &mut lists {
        l.shuffle(&mut rng);
    }
    let mut kept = Vec::with_capacity(n_orig);
    let mut depth = 0;
    while kept.len() < n_orig {
        for l in &lists {
            if let Some(&i) = l.get(depth) {
                if kept.len() < n_orig {
                    kept.push(i);
                }
            }
        }
        depth += 1;
    }

    let mut kept_by_class = vec![Vec::new(); store.classes()];
    for &i in &kept {
        kept_by_class[store.label(i)].push(i);
    }
    let mut present: Vec<usize> = (0..store.classes()).filter(|&k| !kept_by_class[k].is_empty()).collect();
    present.shuffle(&mut rng);
    let base = n_dup / present.len();
    let extra = n_dup % present.len();

    let shape = store.shape();
    let mut pixels = Vec::with_capacity(n * shape.len());
    let mut labels = Vec::with_capacity(n);
    let mut prov = Vec::with_capacity(n);
    for &i in &kept {
        pixels.extend_from_slice(store.image(i));
        labels.push(store.label(i));
        prov.push(store.provenance(i));
    }
    let normal = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut sources: Vec<usize> = Vec::with_capacity(n_dup);
    for (rank, &k) in present.iter().enumerate() {
        let count = base + usize::from(rank < extra);
        for _ in 0..count {
            sources.push(*kept_by_class[k].choose(&mut rng).expect("class present"));
        }
    }
    sources.sort_unstable();
    for src in sources {
        let img = store.image(src);
        if noise_sigma == 0.0 {
            pixels.extend_from_slice(img);
        } else {
            pixels.extend(img.iter().map(|&p| {
                (f64::from(p) + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32
            }));
        }
        labels.push(store.label(src));
        prov.push(Provenance::Duplicate { source: src });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let assembled = ImageStore::new(shape, store.classes(), pixels, labels, prov)?;
    Ok(assembled.subset(&order))
}

/// `(1 − s)·g + s·|g − f|`.
pub fn blend_pixel(gray: f64, field: f64, strength: f64) -> f64 {
    (1.0 - strength) * gray + strength * (gray - field).abs()
}

/// Smooth RGB field: a 4×4 grid of uniform colors bilinearly upsampled to
/// `height × width`, returned channel-major (`3 × H × W`).
pub fn color_field(height: usize, width: usize, rng: &mut seed::Rng) -> Vec<f64> {
    const G: usize = 4;
    let grid: Vec<f64> = (0..3 * G * G).map(|_| rng.random::<f64>()).collect();
    let coord = |p: usize, n: usize| {
        if n <= 1 {
            0.0
        } else {
            p as f64 * (G - 1) as f64 / (n - 1) as f64
        }
    };
    let mut out = vec![0.0; 3 * height * width];
    for c in 0..3 {
        for y in 0..height {
            let gy = coord(y, height);
            let y0 = (gy.floor() as usize).min(G - 2);
            let ty = gy - y0 as f64;
            for x in 0..width {
                let gx = coord(x, width);
                let x0 = (gx.floor() as usize).min(G - 2);
                let tx = gx - x0 as f64;
                let at = |yy: usize, xx: usize| grid[(c * G + yy) * G + xx];
                let top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
                let bot = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
                out[(c * height + y) * width + x] = top * (1.0 - ty) + bot * ty;
            }
        }
    }
    out
}

/// Blends one grayscale plane with a `3 × H × W` field into an RGB image.
pub fn shift_with_field(gray: &[f64], field: &[f64], strength: f64) -> Vec<f32> {
    let plane = gray.len();
    assert_eq!(field.len(), 3 * plane, "field must be 3 x H x W");
    (0..3 * plane)
        .map(|j| blend_pixel(gray[j % plane], field[j], strength).clamp(0.0, 1.0) as f32)
        .collect()
}

/// Grayscale → RGB domain shift: every image is replicated to three channels
/// and blended with its own seeded smooth color field. Multi-channel inputs
/// are reduced to luminance first. Labels are preserved.
pub fn make_domain_shift(store: &ImageStore, blend_strength: f64, seed: u64) -> Result<ImageStore> {
    if !(0.0..=1.0).contains(&blend_strength) {
        return Err(HalError::InvalidArgument(format!("blend strength {blend_strength} outside [0, 1]")));
    }
    let s = store.shape();
    let shape = Shape::new(3, s.height, s.width);
    let mut pixels = Vec::with_capacity(store.len() * shape.len());
    for i in 0..store.len() {
        let mut rng = seed::rng_for(seed, "color-field", i as u64);
        let field = color_field(s.height, s.width, &mut rng);
        pixels.extend(shift_with_field(&store.luminance(i), &field, blend_strength));
    }
    ImageStore::new(
        shape,
        store.classes(),
        pixels,
        store.labels().to_vec(),
        vec![Provenance::Shifted; store.len()],
    )
}
