/// Uniform cell-centred grid on `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
}

impl UniformGrid {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Self {
        assert!(upper > lower, "grid upper bound must exceed lower bound");
        assert!(cells >= 1, "grid needs at least one cell");
        Self { lower, upper, cells }
    }

    /// Grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, cells: usize) -> Self {
        Self::new(-half_width, half_width, cells)
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.spacing()
    }

    /// Face `i` sits between cells `i - 1` and `i`; faces run over `0..=cells`.
    #[inline]
    pub fn face(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }

    pub fn same_as(&self, other: &UniformGrid) -> bool {
        self.cells == other.cells
            && (self.lower - other.lower).abs() <= 1e-12 * (1.0 + self.lower.abs())
            && (self.upper - other.upper).abs() <= 1e-12 * (1.0 + self.upper.abs())
    }

    /// Index of the cell containing `x`, if inside the grid.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower && x < self.upper) {
            return None;
        }
        let i = ((x - self.lower) / self.spacing()) as usize;
        Some(i.min(self.cells - 1))
    }
}
