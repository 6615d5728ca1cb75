//! Seeded perturbation of ground-truth regions, standing in for OCR errors.

use crate::config::ConfigError;
use crate::geometry::BBox;
use crate::types::TextRegion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::OnceLock;

const SHIPPED_CONFUSABLES: &str = include_str!("../../data/confusables.json");

/// Confidence lost per deleted or substituted character.
pub const CONFIDENCE_PENALTY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p_sub: f64,
    pub p_del: f64,
    pub sigma_jitter_px: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::identity(0)
    }
}

impl NoiseModel {
    pub fn identity(seed: u64) -> Self {
        Self {
            p_sub: 0.0,
            p_del: 0.0,
            sigma_jitter_px: 0.0,
            seed,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.p_sub == 0.0 && self.p_del == 0.0 && self.sigma_jitter_px == 0.0
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.p_sub) {
            return Err(ConfigError::Noise("p_sub"));
        }
        if !(0.0..=1.0).contains(&self.p_del) {
            return Err(ConfigError::Noise("p_del"));
        }
        if !(self.sigma_jitter_px >= 0.0 && self.sigma_jitter_px.is_finite()) {
            return Err(ConfigError::Noise("sigma_jitter_px"));
        }
        Ok(())
    }

    /// Generator for one ticket: the model seed mixed with a digest of the
    /// ticket id, so results do not depend on processing order.
    pub fn rng_for(&self, stream: &str) -> ChaCha8Rng {
        let digest = Sha256::digest(stream.as_bytes());
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(word))
    }
}

/// Both directions of the shipped confusable pairs.
pub fn confusables() -> &'static HashMap<char, char> {
    static TABLE: OnceLock<HashMap<char, char>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let pairs: Vec<(String, String)> =
            serde_json::from_str(SHIPPED_CONFUSABLES).expect("shipped confusable table is valid JSON");
        let mut map = HashMap::new();
        for (a, b) in pairs {
            let (a, b) = (a.chars().next().unwrap(), b.chars().next().unwrap());
            map.insert(a, b);
            map.insert(b, a);
        }
        map
    })
}

fn jitter(b: &BBox, rng: &mut ChaCha8Rng, sigma: f64, width: f64, height: f64) -> BBox {
    let mut d = [0.0; 4];
    for v in d.iter_mut() {
        *v = rng.random_range(-1.0..=1.0) * sigma;
    }
    if sigma == 0.0 {
        return *b;
    }
    let x0 = (b.x + d[0]).clamp(0.0, (width - 1.0).max(0.0));
    let y0 = (b.y + d[1]).clamp(0.0, (height - 1.0).max(0.0));
    let x1 = (b.right() + d[2]).clamp(x0 + 1.0, width.max(x0 + 1.0));
    let y1 = (b.bottom() + d[3]).clamp(y0 + 1.0, height.max(y0 + 1.0));
    BBox::new(x0, y0, x1 - x0, y1 - y0)
}

/// Perturb regions with the model. `stream` selects the per-ticket random
/// stream; `bounds` is the image size used to clamp jittered boxes.
pub fn apply_noise(model: &NoiseModel, regions: &[TextRegion], stream: &str, bounds: (f64, f64)) -> Vec<TextRegion> {
    if model.is_identity() {
        return regions.to_vec();
    }
    let table = confusables();
    let mut rng = model.rng_for(stream);
    regions
        .iter()
        .map(|r| {
            let mut text = String::with_capacity(r.text.len());
            let mut hits = 0u32;
            for c in r.text.chars() {
                // two draws per character keep the stream aligned whatever happens
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                if u < model.p_del {
                    hits += 1;
                    continue;
                }
                match table.get(&c) {
                    Some(&alt) if v < model.p_sub => {
                        text.push(alt);
                        hits += 1;
                    }
                    _ => text.push(c),
                }
            }
            let bbox = jitter(&r.bbox, &mut rng, model.sigma_jitter_px, bounds.0, bounds.1);
            TextRegion {
                bbox,
                text,
                confidence: (r.confidence - CONFIDENCE_PENALTY * hits as f64).max(0.0),
                kind: r.kind,
                field: r.field.clone(),
            }
        })
        .collect()
}
