//! Temporal Window Queue: a fixed-capacity FIFO of the T most recent lidar
//! scans, zero-padded after every environmental termination.

/// Rows are read newest-to-oldest; length is always exactly T.
#[derive(Debug, Clone)]
pub struct Twq {
    window_len: usize,
    scan_len: usize,
    /// rows[0] is the newest scan.
    rows: Vec<Vec<f32>>,
}

impl Twq {
    pub fn new(window_len: usize, scan_len: usize) -> Self {
        assert!(window_len > 0 && scan_len > 0);
        Twq {
            window_len,
            scan_len,
            rows: vec![vec![0.0; scan_len]; window_len],
        }
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn scan_len(&self) -> usize {
        self.scan_len
    }

    /// Insert the newest scan, evicting the oldest row.
    pub fn push(&mut self, scan: &[f32]) {
        assert_eq!(scan.len(), self.scan_len, "scan length mismatch");
        self.rows.pop();
        self.rows.insert(0, scan.to_vec());
    }

    /// Zero-pad the whole queue (environmental termination).
    pub fn reset(&mut self) {
        for row in &mut self.rows {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Flattened T x n window, newest row first.
    pub fn window(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.window_len * self.scan_len);
        for row in &self.rows {
            out.extend_from_slice(row);
        }
        out
    }

    /// The window that `push(scan)` would produce, without mutating.
    pub fn window_after(&self, scan: &[f32]) -> Vec<f32> {
        assert_eq!(scan.len(), self.scan_len);
        let mut out = Vec::with_capacity(self.window_len * self.scan_len);
        out.extend_from_slice(scan);
        for row in &self.rows[..self.window_len - 1] {
            out.extend_from_slice(row);
        }
        out
    }
}
