use super::smf::NoteEvent;

pub const MIN_TEMPO: f64 = 40.0;
pub const MAX_TEMPO: f64 = 300.0;
pub const FALLBACK_TEMPO: f64 = 120.0;

const ONSET_TOLERANCE: f64 = 1e-9;

/// Events per minute from the median inter-onset interval over distinct
/// onsets, clamped to `[MIN_TEMPO, MAX_TEMPO]`.
pub fn estimate_tempo(events: &[NoteEvent]) -> f64 {
    let mut onsets: Vec<f64> = events.iter().map(|e| e.onset).collect();
    onsets.sort_by(f64::total_cmp);
    onsets.dedup_by(|a, b| (*a - *b).abs() <= ONSET_TOLERANCE);
    if onsets.len() < 2 {
        return FALLBACK_TEMPO;
    }
    let mut iois: Vec<f64> = onsets.windows(2).map(|w| w[1] - w[0]).collect();
    iois.sort_by(f64::total_cmp);
    let mid = iois.len() / 2;
    let median = if iois.len().is_multiple_of(2) {
        0.5 * (iois[mid - 1] + iois[mid])
    } else {
        iois[mid]
    };
    (60.0 / median).clamp(MIN_TEMPO, MAX_TEMPO)
}
