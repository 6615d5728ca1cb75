//! Inputs shared by the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ticketflow_core::fixtures::{default_layout, generate_ticket, rotation_fixture};
use ticketflow_core::preprocess::rotate_clockwise;
use ticketflow_core::structure::StructureInput;
use ticketflow_core::{CategoryRegistry, RawTicketImage, TicketType};

pub const ROTATION_TITLE: &str = "Receipt Voucher";

/// One upright ticket of `category` with its default layout.
pub fn ticket(category: &str, seed: u64) -> RawTicketImage {
    let registry = CategoryRegistry::shipped();
    let layout = default_layout(category).expect("shipped category");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_ticket(&format!("bench-{seed}"), category, &layout, &registry, &mut rng).expect("valid layout")
}

/// An edge-raster fixture turned `deg` degrees clockwise.
pub fn rotated(deg: f64, seed: u64) -> RawTicketImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rotate_clockwise(&rotation_fixture(&mut rng, 240, 160, ROTATION_TITLE), deg)
}

/// The text regions of a generated bank receipt with its field keywords.
pub fn bank_receipt_input(seed: u64) -> StructureInput {
    let registry = CategoryRegistry::shipped();
    let info = registry.get("bank receipt").expect("shipped category");
    StructureInput {
        input_list: ticket("bank receipt", seed).regions().to_vec(),
        keyword_list: info.field_keywords.clone(),
        ticket_type: TicketType::III,
    }
}
