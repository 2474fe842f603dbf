//! Row-major 2D rasters and the handful of binary-mask operations the
//! pipeline needs.
//!
//! Pixel convention: `(row, col)` with the origin at the top-left corner and
//! pixel centers at integer coordinates.

use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::IoError;

/// A dense `height × width` raster stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit RGB image.
pub type Image = Grid<[u8; 3]>;
/// Binary mask.
pub type Mask = Grid<bool>;
/// Scalar field such as a depth map.
pub type Field = Grid<f32>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    /// Wraps row-major `data`. Returns `None` if the length does not match.
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == width * height).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    /// Bounds-checked lookup with signed coordinates.
    #[inline]
    pub fn try_get(&self, row: isize, col: isize) -> Option<&T> {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Iterates `(row, col, &value)` in row-major order.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / w, i % w, v))
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// Set pixels as `(row, col)` in row-major order.
    pub fn set_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indexed().filter(|(_, _, &b)| b).map(|(r, c, _)| (r, c))
    }

    pub fn union_with(&mut self, other: &Mask) {
        debug_assert_eq!(self.dims(), other.dims());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a |= b;
        }
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Mask) -> Mask {
        debug_assert_eq!(self.dims(), other.dims());
        Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && !b)
                .collect(),
        }
    }

    /// 3×3 dilation. Pixels outside the raster count as unset.
    pub fn dilate(&self) -> Mask {
        self.neighborhood(false, |acc, v| acc || v, false)
    }

    /// 3×3 erosion. Pixels outside the raster count as set, so erosion never
    /// eats into a mask that touches the border.
    pub fn erode(&self) -> Mask {
        self.neighborhood(true, |acc, v| acc && v, true)
    }

    /// 3×3 morphological closing (dilate, then erode). Extensive: the result
    /// always contains `self`.
    pub fn close(&self) -> Mask {
        self.dilate().erode()
    }

    fn neighborhood(&self, init: bool, op: impl Fn(bool, bool) -> bool, outside: bool) -> Mask {
        let (h, w) = (self.height as isize, self.width as isize);
        Grid::from_fn(self.height, self.width, |r, c| {
            let mut acc = init;
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    let v = if rr < 0 || cc < 0 || rr >= h || cc >= w {
                        outside
                    } else {
                        *self.get(rr as usize, cc as usize)
                    };
                    acc = op(acc, v);
                }
            }
            acc
        })
    }
}

pub fn load_rgb_png(path: &Path) -> Result<Image, IoError> {
    let img = image::open(path)
        .map_err(|e| IoError::decode(path, e))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0).collect();
    Ok(Grid::from_vec(h as usize, w as usize, data).expect("decoder returned w*h pixels"))
}

pub fn save_rgb_png(img: &Image, path: &Path) -> Result<(), IoError> {
    let mut buf = RgbImage::new(img.width() as u32, img.height() as u32);
    for (r, c, px) in img.indexed() {
        buf.put_pixel(c as u32, r as u32, Rgb(*px));
    }
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::encode(path, e))
}

/// Loads an 8-bit mask PNG. Any nonzero value counts as set.
pub fn load_mask_png(path: &Path) -> Result<Mask, IoError> {
    let img = image::open(path)
        .map_err(|e| IoError::decode(path, e))?
        .into_luma8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0[0] != 0).collect();
    Ok(Grid::from_vec(h as usize, w as usize, data).expect("decoder returned w*h pixels"))
}

/// Writes a mask as an 8-bit PNG with values 0/255.
pub fn save_mask_png(mask: &Mask, path: &Path) -> Result<(), IoError> {
    let mut buf = GrayImage::new(mask.width() as u32, mask.height() as u32);
    for (r, c, &b) in mask.indexed() {
        buf.put_pixel(c as u32, r as u32, Luma([if b { 255 } else { 0 }]));
    }
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::encode(path, e))
}

/// Loads a 16-bit grayscale PNG as raw unit values.
pub fn load_u16_png(path: &Path) -> Result<Grid<u16>, IoError> {
    let img = image::open(path)
        .map_err(|e| IoError::decode(path, e))?
        .into_luma16();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0[0]).collect();
    Ok(Grid::from_vec(h as usize, w as usize, data).expect("decoder returned w*h pixels"))
}

pub fn save_u16_png(grid: &Grid<u16>, path: &Path) -> Result<(), IoError> {
    let mut buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::new(grid.width() as u32, grid.height() as u32);
    for (r, c, &v) in grid.indexed() {
        buf.put_pixel(c as u32, r as u32, Luma([v]));
    }
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::encode(path, e))
}

/// Encodes an image as PNG bytes in memory.
pub fn encode_rgb_png(img: &Image) -> Vec<u8> {
    let mut buf = RgbImage::new(img.width() as u32, img.height() as u32);
    for (r, c, px) in img.indexed() {
        buf.put_pixel(c as u32, r as u32, Rgb(*px));
    }
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}

pub fn encode_mask_png(mask: &Mask) -> Vec<u8> {
    let mut buf = GrayImage::new(mask.width() as u32, mask.height() as u32);
    for (r, c, &b) in mask.indexed() {
        buf.put_pixel(c as u32, r as u32, Luma([if b { 255 } else { 0 }]));
    }
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> Mask {
        Grid::from_fn(rows.len(), rows[0].len(), |r, c| {
            rows[r].as_bytes()[c] == b'#'
        })
    }

    #[test]
    fn closing_fills_single_pixel_holes() {
        let m = mask_from(&["#####", "##.##", "#####"]);
        assert_eq!(m.close().count(), 15);
    }

    #[test]
    fn closing_is_extensive_at_border() {
        let m = mask_from(&["#....", "##...", "....."]);
        let closed = m.close();
        assert!(m.set_pixels().all(|(r, c)| *closed.get(r, c)));
    }

    #[test]
    fn closing_keeps_rectangles() {
        let m = Grid::from_fn(10, 12, |r, c| (2..7).contains(&r) && (3..9).contains(&c));
        assert_eq!(m.close(), m);
    }

    #[test]
    fn difference_and_union() {
        let a = mask_from(&["##..", "##.."]);
        let b = mask_from(&[".##.", ".##."]);
        assert_eq!(a.difference(&b), mask_from(&["#...", "#..."]));
        let mut u = a.clone();
        u.union_with(&b);
        assert_eq!(u.count(), 6);
    }

    #[test]
    fn png_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let img = Grid::from_fn(5, 7, |r, c| [r as u8 * 10, c as u8 * 20, 7]);
        let p = dir.path().join("a.png");
        save_rgb_png(&img, &p).unwrap();
        assert_eq!(load_rgb_png(&p).unwrap(), img);

        let m = Grid::from_fn(5, 7, |r, c| (r + c) % 3 == 0);
        let p = dir.path().join("m.png");
        save_mask_png(&m, &p).unwrap();
        assert_eq!(load_mask_png(&p).unwrap(), m);

        let d = Grid::from_fn(3, 4, |r, c| (r * 1000 + c) as u16);
        let p = dir.path().join("d.png");
        save_u16_png(&d, &p).unwrap();
        assert_eq!(load_u16_png(&p).unwrap(), d);
    }
}
