use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Column-unitary `S x M` projection onto the principal subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    basis: DMatrix<f64>,
}

const UNITARY_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

impl PcaProjection {
    /// Wraps an explicit basis after checking `basis^T basis = I`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (s, m) = basis.shape();
        if m == 0 || m > s {
            return Err(Error::invalid(format!("basis must satisfy 1 <= M <= S, got S={s}, M={m}")));
        }
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::<f64>::identity(m, m)).amax();
        if dev > UNITARY_TOL {
            return Err(Error::invalid(format!("basis is not column-unitary (max deviation {dev:e})")));
        }
        Ok(PcaProjection { basis })
    }

    pub fn identity(dim: usize) -> Self {
        PcaProjection {
            basis: DMatrix::identity(dim, dim),
        }
    }

    /// Top-`target_dim` principal directions of the centered sample covariance.
    ///
    /// Columns are ordered by decreasing eigenvalue and signed so that their
    /// largest-magnitude entry is positive.
    pub fn fit(samples: &[DVector<f64>], target_dim: usize) -> Result<Self> {
        if target_dim == 0 {
            return Err(Error::invalid("target dimension must be at least 1"));
        }
        if samples.len() < target_dim {
            return Err(Error::NotEnoughSamples {
                needed: target_dim,
                got: samples.len(),
            });
        }
        let s = samples[0].len();
        if target_dim > s {
            return Err(Error::invalid(format!("target dimension {target_dim} exceeds data dimension {s}")));
        }
        if let Some(bad) = samples.iter().find(|x| x.len() != s) {
            return Err(Error::DimensionMismatch {
                what: "sample length",
                expected: s,
                got: bad.len(),
            });
        }
        let n = samples.len();
        let mean = samples.iter().fold(DVector::zeros(s), |acc, x| acc + x) / n as f64;
        let mut cov = DMatrix::<f64>::zeros(s, s);
        for x in samples {
            let d = x - &mean;
            cov.syger(1.0, &d, &d, 1.0);
        }
        if n > 1 {
            cov /= (n - 1) as f64;
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]];
        let rank = if top > 0.0 {
            order
                .iter()
                .filter(|&&i| eig.eigenvalues[i] > RANK_TOL * top)
                .count()
        } else {
            0
        };
        if rank < target_dim {
            return Err(Error::RankDeficient {
                rank,
                requested: target_dim,
            });
        }
        let mut basis = DMatrix::<f64>::zeros(s, target_dim);
        for (j, &i) in order.iter().take(target_dim).enumerate() {
            let mut col = eig.eigenvectors.column(i).clone_owned();
            let lead = col.iamax();
            if col[lead] < 0.0 {
                col.neg_mut();
            }
            basis.set_column(j, &col);
        }
        PcaProjection::new(basis)
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn raw_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `basis^T raw`.
    pub fn project(&self, raw: &DVector<f64>) -> Result<DVector<f64>> {
        if raw.len() != self.raw_dim() {
            return Err(Error::DimensionMismatch {
                what: "raw vector length",
                expected: self.raw_dim(),
                got: raw.len(),
            });
        }
        Ok(self.basis.tr_mul(raw))
    }
}
