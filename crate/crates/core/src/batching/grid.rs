use crate::error::{Error, Result};
use crate::midi::PianoRoll;

/// `(segment count, segment length)` for a piece of `n` samples.
pub fn segment_layout(n: usize, max_len: usize) -> (usize, usize) {
    assert!(max_len >= 1, "max_len must be positive");
    if n <= max_len {
        return (1, n);
    }
    let m = n.div_ceil(max_len);
    (m, n / m)
}

/// Split a long roll into `ceil(n / max_len)` equal consecutive segments of
/// `floor(n / m)` samples; the short remainder is dropped.
pub fn slice_long(roll: &PianoRoll, max_len: usize) -> Result<Vec<PianoRoll>> {
    if max_len == 0 {
        return Err(Error::invalid("max_len", "must be at least 1"));
    }
    let (m, len) = segment_layout(roll.n_samples(), max_len);
    if m == 1 {
        return Ok(vec![roll.clone()]);
    }
    (0..m).map(|i| roll.segment(i * len, len)).collect()
}

/// Log-spaced standard lengths from the k-th shortest piece up to `max_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthGrid {
    pub lengths: Vec<usize>,
    pub min_len: usize,
    pub max_len: usize,
    pub k: usize,
}

impl LengthGrid {
    /// Closed-form grid between two explicit endpoints.
    pub fn between(min_len: usize, max_len: usize, count: usize, k: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("grid", "count must be at least 2"));
        }
        if min_len == 0 || min_len > max_len {
            return Err(Error::invalid("grid", format!("bad endpoints {min_len}..{max_len}")));
        }
        let ratio = max_len as f64 / min_len as f64;
        let lengths = (0..count)
            .map(|i| (min_len as f64 * ratio.powf(i as f64 / (count - 1) as f64)).round() as usize)
            .collect();
        Ok(Self {
            lengths,
            min_len,
            max_len,
            k,
        })
    }

    /// Largest edit fraction any length inside the grid's span can need:
    /// the worst case is a length at the log-midpoint of two neighbours.
    pub fn worst_interior_fraction(&self) -> f64 {
        self.lengths
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0] as f64, w[1] as f64);
                let mid = (lo * hi).sqrt();
                ((mid - lo) / mid).max((hi - mid) / mid)
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_grid(piece_lengths: &[usize], k: usize, count: usize, max_len: usize) -> Result<LengthGrid> {
    if k == 0 {
        return Err(Error::invalid("grid", "k must be at least 1"));
    }
    if piece_lengths.len() < k {
        return Err(Error::invalid(
            "grid",
            format!("need at least k = {k} pieces, have {}", piece_lengths.len()),
        ));
    }
    let mut sorted = piece_lengths.to_vec();
    sorted.sort_unstable();
    LengthGrid::between(sorted[k - 1], max_len, count, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edit {
    Pad,
    Truncate,
    None,
}

impl Edit {
    pub fn as_str(self) -> &'static str {
        match self {
            Edit::Pad => "pad",
            Edit::Truncate => "truncate",
            Edit::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pad" => Some(Edit::Pad),
            "truncate" => Some(Edit::Truncate),
            "none" => Some(Edit::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    Assigned { target: usize, edit: Edit, fraction: f64 },
    Excluded { nearest: usize, fraction: f64 },
}

/// Nearest standard length in log distance (ties to the smaller length).
pub fn assign(roll_length: usize, grid: &LengthGrid, max_fraction: f64) -> Placement {
    let ln_len = (roll_length.max(1) as f64).ln();
    let mut best = grid.lengths[0];
    let mut best_dist = f64::INFINITY;
    for &g in &grid.lengths {
        let d = (ln_len - (g as f64).ln()).abs();
        if d < best_dist {
            best = g;
            best_dist = d;
        }
    }
    let fraction = best.abs_diff(roll_length) as f64 / roll_length.max(1) as f64;
    if fraction > max_fraction {
        return Placement::Excluded {
            nearest: best,
            fraction,
        };
    }
    let edit = match roll_length.cmp(&best) {
        std::cmp::Ordering::Greater => Edit::Truncate,
        std::cmp::Ordering::Less => Edit::Pad,
        std::cmp::Ordering::Equal => Edit::None,
    };
    Placement::Assigned {
        target: best,
        edit,
        fraction,
    }
}
