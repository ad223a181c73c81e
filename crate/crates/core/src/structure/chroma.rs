use crate::midi::PianoRoll;

pub const N_CLASSES: usize = 12;

/// Pitch-class counts per sample, 12 × n, stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaSequence {
    columns: Vec<[f64; N_CLASSES]>,
}

impl ChromaSequence {
    pub fn from_columns(columns: Vec<[f64; N_CLASSES]>) -> Self {
        debug_assert!(columns.iter().flatten().all(|&v| v >= 0.0));
        Self { columns }
    }

    pub fn n_samples(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, s: usize) -> &[f64; N_CLASSES] {
        &self.columns[s]
    }

    pub fn columns(&self) -> &[[f64; N_CLASSES]] {
        &self.columns
    }
}

/// Fold a sample of per-pitch weights into its 12 pitch classes.
pub fn fold_sample<T: Copy + Into<f64>>(sample: &[T]) -> [f64; N_CLASSES] {
    let mut col = [0.0; N_CLASSES];
    for (p, &v) in sample.iter().enumerate() {
        col[p % N_CLASSES] += v.into();
    }
    col
}

pub fn chroma(roll: &PianoRoll) -> ChromaSequence {
    ChromaSequence::from_columns(roll.samples().map(fold_sample).collect())
}
