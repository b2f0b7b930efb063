//! Big-endian IDX files (the MNIST distribution format).

use std::fs;
use std::path::{Path, PathBuf};

use super::store::ImageStore;
use crate::error::{HalError, Result};
use crate::nn::Shape;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| HalError::Truncated(path.to_path_buf()))
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(HalError::WrongMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Parses an image file (magic 2051) and a label file (magic 2049). Pixels
/// are scaled from bytes to `[0, 1]`; the class count is `max label + 1`
/// (at least 2).
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<ImageStore> {
    let (ipath, lpath) = (images.as_ref(), labels.as_ref());
    let ib = fs::read(ipath)?;
    let lb = fs::read(lpath)?;
    check_magic(&ib, IDX_IMAGES_MAGIC, ipath)?;
    check_magic(&lb, IDX_LABELS_MAGIC, lpath)?;
    let n_images = be_u32(&ib, 4, ipath)? as usize;
    let rows = be_u32(&ib, 8, ipath)? as usize;
    let cols = be_u32(&ib, 12, ipath)? as usize;
    let n_labels = be_u32(&lb, 4, lpath)? as usize;
    if n_images != n_labels {
        return Err(HalError::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let body = &ib[16..];
    if body.len() < n_images * rows * cols {
        return Err(HalError::Truncated(ipath.to_path_buf()));
    }
    let lbody = &lb[8..];
    if lbody.len() < n_labels {
        return Err(HalError::Truncated(lpath.to_path_buf()));
    }
    let pixels = body[..n_images * rows * cols]
        .iter()
        .map(|&b| f32::from(b) / 255.0)
        .collect();
    let labels: Vec<usize> = lbody[..n_labels].iter().map(|&b| usize::from(b)).collect();
    let classes = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
    ImageStore::from_parts(Shape::new(1, rows, cols), classes, pixels, labels)
}

/// Standard training-set file names inside a data directory.
pub fn idx_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))
}

pub fn load_idx_dir(dir: impl AsRef<Path>) -> Result<ImageStore> {
    let (i, l) = idx_paths(dir.as_ref());
    load_idx(i, l)
}

/// Writes a single-channel store as an IDX pair (pixels rounded to bytes).
pub fn write_idx(store: &ImageStore, images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<()> {
    let shape = store.shape();
    if shape.channels != 1 {
        return Err(HalError::InvalidArgument("IDX export needs single-channel images".into()));
    }
    let n = store.len() as u32;
    let mut ib = Vec::with_capacity(16 + store.len() * shape.len());
    ib.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    ib.extend_from_slice(&n.to_be_bytes());
    ib.extend_from_slice(&(shape.height as u32).to_be_bytes());
    ib.extend_from_slice(&(shape.width as u32).to_be_bytes());
    for i in 0..store.len() {
        ib.extend(store.image(i).iter().map(|&p| (p * 255.0).round() as u8));
    }
    let mut lb = Vec::with_capacity(8 + store.len());
    lb.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lb.extend_from_slice(&n.to_be_bytes());
    lb.extend(store.labels().iter().map(|&l| l as u8));
    fs::write(images, ib)?;
    fs::write(labels, lb)?;
    Ok(())
}
