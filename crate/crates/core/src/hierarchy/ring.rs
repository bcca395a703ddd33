use num_complex::Complex64 as C64;

/// Fixed-depth history of equally sized rows, indexed by absolute step.
///
/// A ring of depth `2k+1` holds the steps `n-2k ..= n`; pushing step `n+1`
/// drops step `n-2k`, so callers compute new rows before pushing.
#[derive(Clone, Debug)]
pub struct Ring {
    depth: usize,
    width: usize,
    data: Vec<C64>,
    len: usize,
}

impl Ring {
    pub fn new(depth: usize, width: usize) -> Self {
        assert!(depth > 0);
        Self { depth, width, data: vec![C64::new(0.0, 0.0); depth * width], len: 0 }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of steps pushed so far; the newest step index is `len - 1`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<C64>()
    }

    pub fn push(&mut self, row: &[C64]) {
        assert_eq!(row.len(), self.width);
        let slot = self.len % self.depth;
        self.data[slot * self.width..(slot + 1) * self.width].copy_from_slice(row);
        self.len += 1;
    }

    /// Row of step `m`; panics if it has already been overwritten.
    pub fn get(&self, m: usize) -> &[C64] {
        assert!(m < self.len && m + self.depth >= self.len, "step {m} outside history window");
        let slot = m % self.depth;
        &self.data[slot * self.width..(slot + 1) * self.width]
    }

    pub fn newest(&self) -> &[C64] {
        self.get(self.len - 1)
    }
}
