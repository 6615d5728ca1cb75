use serde::{Deserialize, Serialize};

/// Binary grid of line pixels, row-major, one bit per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRaster {
    width: u32,
    height: u32,
    bits: Vec<u64>,
}

impl EdgeRaster {
    pub fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            bits: vec![0; n.div_ceil(64)],
        }
    }

    /// Builds a raster from pixel coordinates; pixels outside the grid are ignored.
    pub fn from_pixels(width: u32, height: u32, pixels: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut r = Self::new(width, height);
        for (x, y) in pixels {
            r.set(x, y);
        }
        r
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn index(&self, x: u32, y: u32) -> Option<usize> {
        (x < self.width && y < self.height).then(|| y as usize * self.width as usize + x as usize)
    }

    pub fn set(&mut self, x: u32, y: u32) {
        if let Some(i) = self.index(x, y) {
            self.bits[i / 64] |= 1 << (i % 64);
        }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.index(x, y)
            .map(|i| self.bits[i / 64] & (1 << (i % 64)) != 0)
            .unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let width = self.width as usize;
        self.bits.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                let i = wi * 64 + tz;
                Some(((i % width) as u32, (i / width) as u32))
            })
        })
    }

    /// Draw a straight segment between two points (inclusive), clipped to the grid.
    pub fn draw_line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            // the tolerance keeps integer endpoints from flooring one cell short
            let x = (x0 + (x1 - x0) * t + 1e-9).floor();
            let y = (y0 + (y1 - y0) * t + 1e-9).floor();
            if x >= 0.0 && y >= 0.0 {
                self.set(x as u32, y as u32);
            }
        }
    }

    pub fn to_pixel_list(&self) -> Vec<[u32; 2]> {
        self.iter_set().map(|(x, y)| [x, y]).collect()
    }
}

/// `[x, y]` pairs as they appear in fixture files.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct PixelList(pub Vec<[u32; 2]>);
