//! Axis-aligned boxes in pixel space (origin top-left, y pointing down).

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

/// An axis-aligned rectangle `(x, y, w, h)`.
///
/// Serialized as a JSON array `[x, y, w, h]`; coordinates that are whole
/// numbers are written as integers so fixture files stay integral.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.x.is_finite() && self.y.is_finite()
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let ix = (self.right().min(other.right()) - self.x.max(other.x)).max(0.0);
        let iy = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0.0);
        ix * iy
    }

    /// Intersection area divided by the smaller of the two areas.
    pub fn overlap_ratio(&self, other: &BBox) -> f64 {
        let smaller = self.area().min(other.area());
        if smaller <= 0.0 {
            return 0.0;
        }
        self.intersection_area(other) / smaller
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }

    /// Clamp into `[0, width] x [0, height]`, keeping at least one pixel of extent.
    pub fn clamp_to(&self, width: f64, height: f64) -> BBox {
        let x0 = self.x.clamp(0.0, (width - 1.0).max(0.0));
        let y0 = self.y.clamp(0.0, (height - 1.0).max(0.0));
        let x1 = self.right().clamp(x0 + 1.0, width.max(x0 + 1.0));
        let y1 = self.bottom().clamp(y0 + 1.0, height.max(y0 + 1.0));
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Horizontal slice covering characters `[start, end)` of a line holding
    /// `total` characters, split proportionally by character count.
    pub fn char_slice(&self, start: usize, end: usize, total: usize) -> BBox {
        if total == 0 {
            return *self;
        }
        let unit = self.w / total as f64;
        BBox::new(self.x + unit * start as f64, self.y, unit * (end - start) as f64, self.h)
    }

    /// Smallest box covering every point in `points`.
    pub fn hull_of(points: impl IntoIterator<Item = (f64, f64)>) -> BBox {
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.x, self.y),
            (self.right(), self.y),
            (self.right(), self.bottom()),
            (self.x, self.bottom()),
        ]
    }
}

/// Writes whole numbers as integers, everything else as floats.
pub(crate) fn serialize_number<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        s.serialize_i64(v as i64)
    } else {
        s.serialize_f64(v)
    }
}

struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_number(self.0, s)
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        for v in [self.x, self.y, self.w, self.h] {
            seq.serialize_element(&Num(v))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct BoxVisitor;
        impl<'de> Visitor<'de> for BoxVisitor {
            type Value = BBox;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array [x, y, w, h]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<BBox, A::Error> {
                let mut v = [0.0f64; 4];
                for (i, slot) in v.iter_mut().enumerate() {
                    *slot = seq
                        .next_element()?
                        .ok_or_else(|| de::Error::invalid_length(i, &self))?;
                }
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(5, &self));
                }
                Ok(BBox::new(v[0], v[1], v[2], v[3]))
            }
        }
        d.deserialize_seq(BoxVisitor)
    }
}

/// Exact `(cos, sin)` for multiples of 90 degrees, libm otherwise.
pub fn cos_sin_deg(deg: f64) -> (f64, f64) {
    let norm = deg.rem_euclid(360.0);
    let quarter = norm / 90.0;
    if (quarter - quarter.round()).abs() < 1e-12 {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        let r = norm.to_radians();
        (r.cos(), r.sin())
    }
}

/// Rotate a vector clockwise on screen (y down) by `deg`.
pub fn rotate_cw(dx: f64, dy: f64, deg: f64) -> (f64, f64) {
    let (c, s) = cos_sin_deg(deg);
    (dx * c - dy * s, dx * s + dy * c)
}
