//! Variable-length batching: slice long pieces, snap every segment to one
//! of a few log-spaced standard lengths, and batch by length.

mod grid;
mod plan;

pub use grid::{assign, build_grid, segment_layout, slice_long, Edit, LengthGrid, Placement};
pub use plan::{make_batches, plan_batches, Assignment, BatchConfig, BatchPlan, Exclusion, SegmentInfo};

/// File stem used for segment `segment` of piece `piece_id`.
pub fn segment_stem(piece_id: &str, segment: usize) -> String {
    format!("{piece_id}__{segment:03}")
}

/// Inverse of [`segment_stem`]; stems without a segment suffix are segment 0.
pub fn split_segment_stem(stem: &str) -> (String, usize) {
    if let Some((id, seg)) = stem.rsplit_once("__") {
        if let Ok(n) = seg.parse() {
            return (id.to_string(), n);
        }
    }
    (stem.to_string(), 0)
}
