use super::PolyError;

const ORTHO_TOL: f64 = 1e-12;

/// An affine subspace `q + span(e_1..e_m)` with orthonormal directions.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFrame {
    base: Vec<f64>,
    dirs: Vec<Vec<f64>>,
}

impl AffineFrame {
    pub fn new(base: Vec<f64>, dirs: Vec<Vec<f64>>) -> Result<Self, PolyError> {
        let n = base.len();
        if base.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinite("frame base point"));
        }
        for d in &dirs {
            if d.len() != n {
                return Err(PolyError::DimensionMismatch {
                    expected: n,
                    got: d.len(),
                });
            }
        }
        if dirs.len() > n {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                got: dirs.len(),
            });
        }
        let mut defect: f64 = 0.0;
        for (i, a) in dirs.iter().enumerate() {
            for (j, b) in dirs.iter().enumerate().skip(i) {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((dot - want).abs());
            }
        }
        if defect.is_nan() || defect > ORTHO_TOL {
            return Err(PolyError::NotOrthonormal(defect));
        }
        Ok(AffineFrame { base, dirs })
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    /// Ambient point `q + Σ u_j e_j`.
    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        let mut x = self.base.clone();
        for (uj, d) in u.iter().zip(&self.dirs) {
            for (xi, di) in x.iter_mut().zip(d) {
                *xi += uj * di;
            }
        }
        x
    }

    /// Coordinates of the orthogonal projection of `x` onto the frame.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.dirs
            .iter()
            .map(|d| {
                d.iter()
                    .zip(x.iter().zip(&self.base))
                    .map(|(di, (xi, qi))| di * (xi - qi))
                    .sum()
            })
            .collect()
    }
}
