//! The fixture raster format and its validated in-memory form.

use super::raster::{EdgeRaster, PixelList};
use crate::geometry::{serialize_number, BBox};
use crate::types::TextRegion;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

/// A detector output: candidate ticket area with its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredBox {
    pub bbox: BBox,
    pub score: f64,
}

impl ScoredBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, score: f64) -> Self {
        Self {
            bbox: BBox::new(x, y, w, h),
            score,
        }
    }
}

struct Num(f64);
impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_number(self.0, s)
    }
}

impl Serialize for ScoredBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let b = self.bbox;
        let mut seq = s.serialize_seq(Some(5))?;
        for v in [b.x, b.y, b.w, b.h] {
            seq.serialize_element(&Num(v))?;
        }
        seq.serialize_element(&self.score)?;
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ScoredBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ScoredBox;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array [x, y, w, h, score]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<ScoredBox, A::Error> {
                let mut v = [0.0f64; 5];
                for (i, slot) in v.iter_mut().enumerate() {
                    *slot = seq
                        .next_element()?
                        .ok_or_else(|| de::Error::invalid_length(i, &self))?;
                }
                Ok(ScoredBox::new(v[0], v[1], v[2], v[3], v[4]))
            }
        }
        d.deserialize_seq(V)
    }
}

/// Fixture payload describing what a perfect reader would see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub category: String,
    #[serde(default)]
    pub regions: Vec<TextRegion>,
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    /// Confidence the fixture classifier reports (defaults to 1.0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_conf: Option<f64>,
    /// Clockwise rotation, in degrees, applied to the upright ticket.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub rotation_deg: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// Rotation bookkeeping: the upright frame this image was derived from and
/// the net clockwise rotation applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub upright_width: u32,
    pub upright_height: u32,
    pub net_rotation_deg: f64,
}

/// Wire form of a fixture raster file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub ticket_boxes: Vec<ScoredBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_pixels: Option<PixelList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Frame>,
}

/// A validated ticket image as consumed by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FixtureFile", into = "FixtureFile")]
pub struct RawTicketImage {
    pub id: Option<String>,
    pub width_px: u32,
    pub height_px: u32,
    pub ticket_boxes: Vec<ScoredBox>,
    pub edge_raster: Option<EdgeRaster>,
    pub ground_truth: Option<GroundTruth>,
    pub frame: Option<Frame>,
}

impl RawTicketImage {
    pub fn new(width_px: u32, height_px: u32) -> Self {
        Self {
            id: None,
            width_px,
            height_px,
            ticket_boxes: Vec::new(),
            edge_raster: None,
            ground_truth: None,
            frame: None,
        }
    }

    /// Single full-frame ticket box with score 1.
    pub fn with_full_frame_box(mut self) -> Self {
        self.ticket_boxes = vec![ScoredBox::new(0.0, 0.0, self.width_px as f64, self.height_px as f64, 1.0)];
        self
    }

    pub fn regions(&self) -> &[TextRegion] {
        self.ground_truth.as_ref().map(|g| g.regions.as_slice()).unwrap_or(&[])
    }

    pub fn frame_or_default(&self) -> Frame {
        self.frame.unwrap_or(Frame {
            upright_width: self.width_px,
            upright_height: self.height_px,
            net_rotation_deg: 0.0,
        })
    }

    /// Explicit id, or a content hash when the fixture carries none.
    pub fn resolved_id(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        let file = FixtureFile::from(self.clone());
        let bytes = serde_json::to_vec(&file).expect("fixture serializes");
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
        format!("t-{hex}")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.width_px == 0 {
            return Err("width: must be positive".into());
        }
        if self.height_px == 0 {
            return Err("height: must be positive".into());
        }
        for (i, b) in self.ticket_boxes.iter().enumerate() {
            if !b.bbox.is_valid() {
                return Err(format!("ticket_boxes[{i}]: width and height must be positive"));
            }
            if !(0.0..=1.0).contains(&b.score) {
                return Err(format!("ticket_boxes[{i}]: score must lie in [0, 1]"));
            }
        }
        if let Some(r) = &self.edge_raster {
            if r.width() != self.width_px || r.height() != self.height_px {
                return Err("edge_pixels: raster dimensions differ from the image".into());
            }
        }
        if let Some(gt) = &self.ground_truth {
            for (i, r) in gt.regions.iter().enumerate() {
                if !r.bbox.is_valid() {
                    return Err(format!("ground_truth.regions[{i}].bbox: width and height must be positive"));
                }
                if !(0.0..=1.0).contains(&r.confidence) {
                    return Err(format!("ground_truth.regions[{i}].conf: must lie in [0, 1]"));
                }
            }
            if let Some(c) = gt.class_conf {
                if !(0.0..=1.0).contains(&c) {
                    return Err("ground_truth.class_conf: must lie in [0, 1]".into());
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<FixtureFile> for RawTicketImage {
    type Error = String;

    fn try_from(f: FixtureFile) -> Result<Self, String> {
        if f.width == 0 || f.height == 0 {
            let name = if f.width == 0 { "width" } else { "height" };
            return Err(format!("{name}: must be positive"));
        }
        let edge_raster = match f.edge_pixels {
            Some(PixelList(px)) => {
                if let Some([x, y]) = px.iter().find(|[x, y]| *x >= f.width || *y >= f.height) {
                    return Err(format!("edge_pixels: pixel [{x}, {y}] lies outside the image"));
                }
                Some(EdgeRaster::from_pixels(f.width, f.height, px.into_iter().map(|[x, y]| (x, y))))
            }
            None => None,
        };
        let img = RawTicketImage {
            id: f.id,
            width_px: f.width,
            height_px: f.height,
            ticket_boxes: f.ticket_boxes,
            edge_raster,
            ground_truth: f.ground_truth,
            frame: f.frame,
        };
        img.validate()?;
        Ok(img)
    }
}

impl From<RawTicketImage> for FixtureFile {
    fn from(img: RawTicketImage) -> Self {
        FixtureFile {
            id: img.id,
            width: img.width_px,
            height: img.height_px,
            ticket_boxes: img.ticket_boxes,
            edge_pixels: img.edge_raster.map(|r| PixelList(r.to_pixel_list())),
            ground_truth: img.ground_truth,
            frame: img.frame,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "width": 100, "height": 50,
        "ticket_boxes": [[0, 0, 100, 50, 0.9]],
        "edge_pixels": [[1, 2], [3, 4]],
        "ground_truth": {
            "category": "quota ticket",
            "regions": [{"bbox": [10, 10, 40, 12], "text": "Amount", "conf": 1, "kind": "keyword-field"}],
            "fields": {"Amount": "12.50"}
        }
    }"#;

    #[test]
    fn parses_fixture_format() {
        let img: RawTicketImage = serde_json::from_str(SAMPLE).unwrap();
        assert_eq!((img.width_px, img.height_px), (100, 50));
        assert_eq!(img.edge_raster.as_ref().unwrap().count(), 2);
        assert_eq!(img.regions()[0].text, "Amount");
        // whole-number coordinates stay integral on the way out
        let out = serde_json::to_string(&img).unwrap();
        assert!(out.contains("\"bbox\":[10,10,40,12]"));
        assert!(out.contains("\"ticket_boxes\":[[0,0,100,50,0.9]]"));
    }

    #[test]
    fn rejects_out_of_bounds_pixels_and_zero_width() {
        let bad = SAMPLE.replace("[3, 4]", "[300, 4]");
        assert!(serde_json::from_str::<RawTicketImage>(&bad).is_err());
        let zero = SAMPLE.replace("\"width\": 100", "\"width\": 0");
        let err = serde_json::from_str::<RawTicketImage>(&zero).unwrap_err();
        assert!(err.to_string().contains("width"));
    }

    #[test]
    fn content_hash_id_is_stable() {
        let a: RawTicketImage = serde_json::from_str(SAMPLE).unwrap();
        let b: RawTicketImage = serde_json::from_str(SAMPLE).unwrap();
        assert_eq!(a.resolved_id(), b.resolved_id());
        let mut c = b.clone();
        c.id = Some("explicit".into());
        assert_eq!(c.resolved_id(), "explicit");
    }
}
