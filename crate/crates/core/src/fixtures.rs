//! Deterministic synthetic ticket fixtures.
//!
//! Type I and II tickets carry a title, a label/value pair per information
//! field and filler codes; type III tickets carry inline `Keyword:Value`
//! lines among the filler. Default sizes and text-region counts follow the
//! per-category averages of the evaluation corpus.

use crate::config::{CategoryInfo, CategoryRegistry};
use crate::geometry::BBox;
use crate::preprocess::{rotate_clockwise, EdgeRaster, GroundTruth, RawTicketImage};
use crate::recognize::TITLE_LABEL;
use crate::structure::fuzzy_match_keyword;
use crate::types::{RegionKind, TextRegion, TicketRecord, TicketType};
use crate::metrics::SampleEval;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixtureError {
    #[error("category {0:?} is not in the registry")]
    UnknownCategory(String),
    #[error("category {category:?}: {message}")]
    InvalidTemplate { category: String, message: String },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

/// Page size and text-region count for one category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub width: u32,
    pub height: u32,
    pub text_regions: usize,
}

/// Built-in layout for the categories the generator knows.
pub fn default_layout(category: &str) -> Option<Layout> {
    let (width, height, text_regions) = match category {
        "VAT ticket" => (2047, 1210, 75),
        "toll ticket" => (1057, 904, 18),
        "quota ticket" => (1283, 894, 16),
        "train ticket" => (534, 1530, 17),
        "taxi ticket" => (1047, 667, 52),
        "bank receipt" => (2420, 1733, 39),
        "plane ticket" => (1180, 560, 20),
        _ => return None,
    };
    Some(Layout {
        width,
        height,
        text_regions,
    })
}

/// Fewest regions a category's layout can hold: title plus its fields.
pub fn min_regions(info: &CategoryInfo) -> usize {
    let per_field = if info.ticket_type == TicketType::III { 1 } else { 2 };
    1 + per_field * info.field_keywords.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub category: String,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Layout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub n_class: u32,
    /// Share of fixtures turned by a random non-zero multiple of 360/n_class.
    pub fraction: f64,
}

/// Generator input: categories with counts and layouts, plus layout-level
/// perturbations. OCR noise is not baked in; the pipeline applies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub categories: Vec<CategorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationSpec>,
    /// Share of fixtures whose classifier confidence is set to 0.5.
    #[serde(default)]
    pub low_confidence_fraction: f64,
    /// Draw a short baseline under every text region into the edge raster.
    #[serde(default)]
    pub edge_pixels: bool,
}

impl GenSpec {
    /// `per_category` tickets of each of the six evaluation categories.
    pub fn evaluation_corpus(per_category: usize) -> Self {
        let cats = ["VAT ticket", "toll ticket", "quota ticket", "train ticket", "taxi ticket", "bank receipt"];
        Self {
            categories: cats
                .iter()
                .map(|c| CategorySpec {
                    category: c.to_string(),
                    count: per_category,
                    layout: None,
                })
                .collect(),
            rotation: None,
            low_confidence_fraction: 0.0,
            edge_pixels: false,
        }
    }

    pub fn validate(&self, registry: &CategoryRegistry) -> Result<(), FixtureError> {
        let frac = |v: f64, name: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(FixtureError::InvalidSpec(format!("{name} must lie in [0, 1]")))
            }
        };
        frac(self.low_confidence_fraction, "low_confidence_fraction")?;
        if let Some(r) = &self.rotation {
            frac(r.fraction, "rotation.fraction")?;
            if r.n_class < 2 {
                return Err(FixtureError::InvalidSpec("rotation.n_class must be at least 2".into()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.categories {
            let info = registry
                .get(&c.category)
                .ok_or_else(|| FixtureError::UnknownCategory(c.category.clone()))?;
            if !seen.insert(c.category.as_str()) {
                return Err(FixtureError::InvalidSpec(format!("category {:?} listed twice", c.category)));
            }
            let layout = c.layout.or_else(|| default_layout(&c.category)).ok_or_else(|| {
                FixtureError::InvalidTemplate {
                    category: c.category.clone(),
                    message: "no built-in layout; supply one".into(),
                }
            })?;
            check_layout(&c.category, info, &layout)?;
        }
        Ok(())
    }
}

fn check_layout(category: &str, info: &CategoryInfo, l: &Layout) -> Result<(), FixtureError> {
    let bad = |m: String| {
        Err(FixtureError::InvalidTemplate {
            category: category.to_string(),
            message: m,
        })
    };
    if l.width < 200 || l.height < 200 {
        return bad(format!("page {}x{} is too small", l.width, l.height));
    }
    if l.text_regions < min_regions(info) {
        return bad(format!("{} text regions cannot hold {} fields", l.text_regions, info.field_keywords.len()));
    }
    let (rows, row_h) = grid(info, l);
    if row_h < 12.0 {
        return bad(format!("{rows} rows do not fit in height {}", l.height));
    }
    Ok(())
}

const COLUMNS: usize = 4;

fn cells_needed(info: &CategoryInfo, l: &Layout) -> usize {
    let fields = info.field_keywords.len();
    let filler = l.text_regions - min_regions(info);
    // every field takes two cells either way: label + value, or one wide inline line
    2 * fields + filler
}

fn grid(info: &CategoryInfo, l: &Layout) -> (usize, f64) {
    let rows = cells_needed(info, l).div_ceil(COLUMNS).max(1);
    let usable = l.height as f64 * 0.78;
    (rows, (usable / rows as f64).floor())
}

/// Per-fixture stream so fixtures do not depend on generation order.
fn fixture_rng(seed: u64, category: &str, index: usize) -> ChaCha8Rng {
    let digest = Sha256::digest(format!("{category}\n{index}").as_bytes());
    let mut k = [0u8; 8];
    k.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(seed ^ u64::from_le_bytes(k))
}

const COMPANIES: &[&str] = &[
    "Hexa Trading",
    "Kite Media",
    "Mirth Foods",
    "Nimbus Tech",
    "Quarry Works",
    "Vetch Farms",
    "Wren Textiles",
    "Yarrow Print",
    "Juniper Haus",
    "Tavern Ice",
    "Quince Motors",
    "Ferrum Tools",
];
const DETAILS: &[&str] = &[
    "printer paper",
    "toner cartridge",
    "stationery",
    "diesel",
    "gasoline",
    "hotel",
    "consulting",
    "laptop",
    "catering",
    "electricity",
    "office lease",
    "courier",
    "software",
    "service charge",
];
const MONTHS: &[&str] = &["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];
const STATIONS: &[&str] = &["Hangzhou East", "Ningbo West", "Jiaxing South", "Wenzhou North", "Huzhou", "Jinhua"];
const SURNAMES: &[char] = &[
    '王', '李', '张', '刘', '陈', '杨', '赵', '黄', '周', '吴', '徐', '孙', '胡', '朱', '高', '林', '何', '郭', '马', '罗',
];
const GIVEN: &[char] = &['伟', '芳', '娜', '敏', '静', '强', '磊', '军', '洋', '勇', '艳', '杰', '涛', '明', '超', '秀'];
const CURRENCIES: &[&str] = &["CNY", "USD", "EUR", "HKD", "JPY"];
const REMARKS: &[&str] = &["invoice settled", "advance payment", "quarterly fee", "deposit refund", "final instalment"];
const BANKS: &[&str] = &["Bank of China", "Harbor Bank", "Maple Bank", "Union Credit"];

fn digits(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().unwrap_or_default()
}

fn money(rng: &mut ChaCha8Rng) -> String {
    format!("{}.{}", rng.random_range(10..1000u32), digits(rng, 2))
}

fn date(rng: &mut ChaCha8Rng) -> String {
    format!("{} {}", pick(rng, MONTHS), rng.random_range(3..29u32))
}

fn person(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    s.push(*SURNAMES.choose(rng).unwrap_or(&'王'));
    for _ in 0..rng.random_range(1..3) {
        s.push(*GIVEN.choose(rng).unwrap_or(&'伟'));
    }
    s
}

/// Plausible content for a field label.
fn field_value(field: &str, rng: &mut ChaCha8Rng) -> String {
    match field {
        "Code" | "Number" | "Serial No" => digits(rng, 6),
        "Date" | "Value Date" => date(rng),
        "Buyer" | "Seller" | "Payer" | "Payee" => pick(rng, COMPANIES).to_string(),
        "Details" | "Purpose" => pick(rng, DETAILS).to_string(),
        "Total" | "Fee" | "Amount" | "Fare" => money(rng),
        "Entrance" | "Exit" => pick(rng, STATIONS).to_string(),
        "Vehicle" => format!("K{}", digits(rng, 4)),
        "Passed On" => format!("{} {}:{}", date(rng), rng.random_range(10..24u32), digits(rng, 2)),
        "Mileage" => format!("{} km", rng.random_range(3..80u32)),
        "Passenger" => person(rng),
        "Train No" => format!("G{}", rng.random_range(100..9999u32)),
        "Seat" => format!("{}{}", rng.random_range(1..20u32), ['A', 'C', 'D', 'F'][rng.random_range(0..4)]),
        "Flight" => format!("MU{}", rng.random_range(1000..9999u32)),
        "Class" => pick(rng, &["Economy", "Business", "First"]).to_string(),
        "Currency" => pick(rng, CURRENCIES).to_string(),
        "Remarks" => pick(rng, REMARKS).to_string(),
        "Postscript" => format!("ref {}", digits(rng, 4)),
        "Account No" => digits(rng, 8),
        "Bank Name" => pick(rng, BANKS).to_string(),
        _ => digits(rng, 5),
    }
}

/// Text that no keyword or title of `registry` will spot.
fn is_clean(text: &str, registry: &CategoryRegistry) -> bool {
    registry.iter().all(|(_, info)| {
        fuzzy_match_keyword(text, &info.title_keyword).is_none()
            && info.field_keywords.iter().all(|k| fuzzy_match_keyword(text, k).is_none())
    })
}

fn clean_value(field: &str, rng: &mut ChaCha8Rng, registry: &CategoryRegistry) -> String {
    for _ in 0..32 {
        let v = field_value(field, rng);
        if is_clean(&v, registry) {
            return v;
        }
    }
    digits(rng, 6)
}

fn filler(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..3) {
        0 => format!("{}-{}", digits(rng, 4), digits(rng, 3)),
        1 => format!("No.{}", digits(rng, 5)),
        _ => format!("{}/{}", digits(rng, 3), digits(rng, 2)),
    }
}

struct Grid {
    margin: f64,
    top: f64,
    cell_w: f64,
    row_h: f64,
}

impl Grid {
    /// Box for `span` cells starting at flat cell index `cell`.
    fn cell(&self, cell: usize, span: usize, text_len: usize) -> BBox {
        let row = cell / COLUMNS;
        let col = cell % COLUMNS;
        let h = (self.row_h * 0.6).round().max(8.0);
        let avail = self.cell_w * span as f64 - 8.0;
        let w = (text_len.max(1) as f64 * h * 0.55).min(avail).max(8.0).round();
        BBox::new(
            (self.margin + col as f64 * self.cell_w).round(),
            (self.top + row as f64 * self.row_h).round(),
            w,
            h,
        )
    }
}

/// One upright ticket of `category` with the given layout.
pub fn generate_ticket(
    id: &str,
    category: &str,
    layout: &Layout,
    registry: &CategoryRegistry,
    rng: &mut ChaCha8Rng,
) -> Result<RawTicketImage, FixtureError> {
    let info = registry
        .get(category)
        .ok_or_else(|| FixtureError::UnknownCategory(category.to_string()))?;
    check_layout(category, info, layout)?;
    let (w, h) = (layout.width as f64, layout.height as f64);
    let (_, row_h) = grid(info, layout);
    let g = Grid {
        margin: (w * 0.04).round(),
        top: (h * 0.16).round(),
        cell_w: ((w * 0.92) / COLUMNS as f64).floor(),
        row_h,
    };

    let mut regions = Vec::with_capacity(layout.text_regions);
    let title_h = (h * 0.05).round().clamp(16.0, 80.0);
    let title_w = (info.title_keyword.chars().count() as f64 * title_h * 0.55).min(w * 0.8).round();
    let title_box = BBox::new(((w - title_w) / 2.0).round(), (h * 0.04).round(), title_w, title_h);
    let title_kind = if info.ticket_type == TicketType::III {
        TextRegion::new(title_box, info.title_keyword.clone(), 1.0, RegionKind::FreeText)
    } else {
        TextRegion::new(title_box, info.title_keyword.clone(), 1.0, RegionKind::KeywordField).with_field(TITLE_LABEL)
    };
    regions.push(title_kind);

    // fields occupy paired cells (0,1) or (2,3); filler takes what is left
    let mut fields = BTreeMap::new();
    let mut used = vec![false; cells_needed(info, layout).div_ceil(COLUMNS) * COLUMNS];
    let mut pair_slots: Vec<usize> = (0..used.len() / 2).map(|p| p * 2).collect();
    let mut order: Vec<usize> = (0..pair_slots.len()).collect();
    // spread fields over the page but keep them in reading order
    order.sort_by_key(|&i| (i * 7919) % pair_slots.len());
    let mut chosen: Vec<usize> = order.into_iter().take(info.field_keywords.len()).collect();
    chosen.sort_unstable();
    let slots: Vec<usize> = chosen.iter().map(|&i| pair_slots[i]).collect();
    pair_slots.clear();

    for (keyword, &cell) in info.field_keywords.iter().zip(&slots) {
        used[cell] = true;
        used[cell + 1] = true;
        let value = clean_value(keyword, rng, registry);
        if info.ticket_type == TicketType::III {
            let text = format!("{keyword}:{value}");
            let b = g.cell(cell, 2, text.chars().count());
            regions.push(TextRegion::new(b, text, 1.0, RegionKind::FreeText));
        } else {
            let label = format!("{keyword}:");
            let lb = g.cell(cell, 1, label.chars().count());
            let vb = g.cell(cell + 1, 1, value.chars().count());
            regions.push(TextRegion::new(lb, label, 1.0, RegionKind::FreeText));
            regions.push(TextRegion::new(vb, value.clone(), 1.0, RegionKind::KeywordField).with_field(keyword.clone()));
        }
        fields.insert(keyword.clone(), value);
    }
    let mut free = used.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i);
    while regions.len() < layout.text_regions {
        let Some(cell) = free.next() else { break };
        let mut text = filler(rng);
        while !is_clean(&text, registry) {
            text = filler(rng);
        }
        let b = g.cell(cell, 1, text.chars().count());
        regions.push(TextRegion::new(b, text, 1.0, RegionKind::FreeText));
    }
    regions.sort_by(|a, b| crate::structure::reading_order(&a.bbox, &b.bbox));

    let mut img = RawTicketImage::new(layout.width, layout.height).with_full_frame_box();
    img.id = Some(id.to_string());
    img.ground_truth = Some(GroundTruth {
        category: category.to_string(),
        regions,
        fields,
        class_conf: None,
        rotation_deg: 0.0,
    });
    Ok(img)
}

/// Short baselines under each text region.
pub fn draw_baselines(img: &mut RawTicketImage) {
    let mut raster = EdgeRaster::new(img.width_px, img.height_px);
    for r in img.regions() {
        let y = (r.bbox.bottom() + 1.0).min(img.height_px as f64 - 1.0);
        let x1 = (r.bbox.x + r.bbox.w.min(64.0)).min(img.width_px as f64 - 1.0);
        raster.draw_line(r.bbox.x, y, x1, y);
    }
    img.edge_raster = Some(raster);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub total: usize,
    pub categories: BTreeMap<String, usize>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    /// (file name, fixture) in file-name order.
    pub fixtures: Vec<(String, RawTicketImage)>,
    pub manifest: Manifest,
    pub warnings: Vec<String>,
}

fn slug(category: &str) -> String {
    category
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

/// Build the whole corpus described by `spec`.
pub fn generate_corpus(spec: &GenSpec, registry: &CategoryRegistry, seed: u64) -> Result<GeneratedCorpus, FixtureError> {
    spec.validate(registry)?;
    let mut fixtures = Vec::new();
    let mut categories = BTreeMap::new();
    let mut warnings = Vec::new();
    for c in &spec.categories {
        if c.count == 0 {
            warnings.push(format!("category {:?} has count 0 and is omitted", c.category));
            continue;
        }
        let layout = c.layout.or_else(|| default_layout(&c.category)).expect("validated");
        for i in 0..c.count {
            let id = format!("{}-{:04}", slug(&c.category), i + 1);
            let mut rng = fixture_rng(seed, &c.category, i);
            let mut img = generate_ticket(&id, &c.category, &layout, registry, &mut rng)?;
            if rng.random::<f64>() < spec.low_confidence_fraction {
                if let Some(gt) = img.ground_truth.as_mut() {
                    gt.class_conf = Some(0.5);
                }
            }
            if spec.edge_pixels {
                draw_baselines(&mut img);
            }
            if let Some(rot) = &spec.rotation {
                if rng.random::<f64>() < rot.fraction {
                    let k = rng.random_range(1..rot.n_class);
                    img = rotate_clockwise(&img, k as f64 * 360.0 / rot.n_class as f64);
                }
            }
            fixtures.push((format!("{id}.json"), img));
        }
        categories.insert(c.category.clone(), c.count);
    }
    fixtures.sort_by(|a, b| a.0.cmp(&b.0));
    let manifest = Manifest {
        seed,
        total: fixtures.len(),
        categories,
        files: fixtures.iter().map(|(n, _)| n.clone()).collect(),
    };
    Ok(GeneratedCorpus {
        fixtures,
        manifest,
        warnings,
    })
}

/// Compare recognised fields with the planted ones: one string per field.
pub fn evaluate_fields(record: &TicketRecord, truth: &BTreeMap<String, String>) -> SampleEval {
    let correct = truth
        .iter()
        .filter(|(k, v)| record.fields.get(*k) == Some(*v))
        .count() as u64;
    let n = truth.len() as u64;
    SampleEval::new(correct, n, correct == n)
}

/// Upright ticket for orientation experiments: a framed page with ruled
/// lines and a title in the top band, all drawn into the edge raster.
pub fn rotation_fixture(rng: &mut ChaCha8Rng, width: u32, height: u32, title: &str) -> RawTicketImage {
    let (w, h) = (width as f64, height as f64);
    let mut raster = EdgeRaster::new(width, height);
    let m = 6.0;
    raster.draw_line(m, m, w - m, m);
    raster.draw_line(m, h - m, w - m, h - m);
    raster.draw_line(m, m, m, h - m);
    raster.draw_line(w - m, m, w - m, h - m);
    let title_box = BBox::new((w * 0.3).round(), (h * 0.06).round(), (w * 0.4).round(), (h * 0.08).round());
    let mut regions = vec![TextRegion::new(title_box, title, 1.0, RegionKind::FreeText)];
    let rows = rng.random_range(5..9);
    let top = h * 0.22;
    let step = (h * 0.72) / rows as f64;
    for i in 0..rows {
        let y = (top + i as f64 * step).round();
        let x0 = (w * rng.random_range(0.06..0.15)).round();
        let x1 = (w * rng.random_range(0.75..0.94)).round();
        raster.draw_line(x0, y, x1, y);
        let b = BBox::new(x0, (y - step * 0.5).round().max(0.0), ((x1 - x0) * 0.4).round(), (step * 0.4).round().max(2.0));
        regions.push(TextRegion::new(b, format!("{}", rng.random_range(1000..9999u32)), 1.0, RegionKind::FreeText));
    }
    let mut img = RawTicketImage::new(width, height).with_full_frame_box();
    img.edge_raster = Some(raster);
    img.ground_truth = Some(GroundTruth {
        category: String::new(),
        regions,
        fields: BTreeMap::new(),
        class_conf: None,
        rotation_deg: 0.0,
    });
    img
}
