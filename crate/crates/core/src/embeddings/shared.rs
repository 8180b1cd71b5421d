use std::sync::atomic::{AtomicU64, Ordering};

/// Flat parameter buffer that worker threads update without locks.
///
/// Reads and writes are individually atomic but read-modify-write is not, so
/// concurrent updates may be lost. With a single thread the buffer behaves
/// exactly like a `Vec<f64>`.
pub(crate) struct SharedParams {
    data: Vec<AtomicU64>,
}

impl SharedParams {
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        SharedParams {
            data: values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    pub(crate) fn read_into(&self, offset: usize, out: &mut [f64]) {
        for (slot, cell) in out.iter_mut().zip(&self.data[offset..]) {
            *slot = f64::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    pub(crate) fn get(&self, index: usize) -> f64 {
        f64::from_bits(self.data[index].load(Ordering::Relaxed))
    }

    pub(crate) fn set(&self, index: usize, value: f64) {
        self.data[index].store(value.to_bits(), Ordering::Relaxed);
    }

    pub(crate) fn add_scaled(&self, offset: usize, scale: f64, delta: &[f64]) {
        for (cell, d) in self.data[offset..].iter().zip(delta) {
            let v = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((v + scale * d).to_bits(), Ordering::Relaxed);
        }
    }

    pub(crate) fn into_vec(self) -> Vec<f64> {
        self.data
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect()
    }
}
