//! Second-order finite-difference Laplacians on a uniform grid over `[0, 1]`
//! with a symmetry condition at `x = 0`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// `(1/x^2) d/dx (x^2 dw/dx)`.
    Spherical,
    /// `d^2 w / dx^2`.
    Planar,
}

/// Tridiagonal operator. The last row is a placeholder for the Dirichlet
/// condition at `x = 1` and is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub geometry: Geometry,
    pub h: f64,
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Laplacian {
    pub fn new(n: usize, geometry: Geometry) -> Self {
        assert!(n >= 3, "grid needs at least 3 points");
        let h = 1.0 / (n - 1) as f64;
        let h2 = h * h;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];

        // Symmetry at the centre: w(-h) = w(h). In a sphere the Laplacian
        // tends to 3 w''(0).
        let centre = match geometry {
            Geometry::Spherical => 6.0,
            Geometry::Planar => 2.0,
        };
        diag[0] = -centre / h2;
        upper[0] = centre / h2;

        for i in 1..n - 1 {
            let first = match geometry {
                Geometry::Spherical => 1.0 / ((i as f64 * h) * h),
                Geometry::Planar => 0.0,
            };
            lower[i] = 1.0 / h2 - first;
            diag[i] = -2.0 / h2;
            upper[i] = 1.0 / h2 + first;
        }
        Self {
            geometry,
            h,
            lower,
            diag,
            upper,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// `(L w)_i` for row `i`; zero on the boundary row.
    #[inline]
    pub fn apply_row(&self, w: &[f64], i: usize) -> f64 {
        let n = self.len();
        if i == n - 1 {
            return 0.0;
        }
        let mut v = self.diag[i] * w[i] + self.upper[i] * w[i + 1];
        if i > 0 {
            v += self.lower[i] * w[i - 1];
        }
        v
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.apply_row(w, i)).collect()
    }
}
