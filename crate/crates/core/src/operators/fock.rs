//! Dense operators in the truncated number basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;

/// Largest entry of `A − A†`, relative to the largest entry of `A`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// An operator on the truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: CMatrix,
    hermitian: bool,
}

impl FockOperator {
    /// Wrap a square matrix. When `hermitian` is set the Hermiticity
    /// invariant is checked.
    pub fn new(matrix: CMatrix, hermitian: bool) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDimension {
                dim: matrix.nrows(),
                reason: format!("operator must be square, got {}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        if hermitian {
            let defect = hermiticity_defect(&matrix);
            if defect >= HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
        }
        Ok(Self { matrix, hermitian })
    }

    pub fn from_real(matrix: DMatrix<f64>, hermitian: bool) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)), hermitian)
    }

    /// Hermitian part `(A + A†)/2` flagged as Hermitian.
    pub fn hermitian_part(matrix: &CMatrix) -> Self {
        let h = (matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Self {
            matrix: h,
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let prod = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// True if every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    pub fn require_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Eigen-decomposition `A = V Λ V†` of a Hermitian operator, eigenvalues
/// ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn of(op: &FockOperator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian(hermiticity_defect(op.matrix())));
        }
        let n = op.dim();
        let (values, vectors) = if op.is_real() {
            let real = op.matrix().map(|z| z.re);
            let eig = SymmetricEigen::new(real);
            (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
        } else {
            let eig = SymmetricEigen::new(op.matrix().clone());
            (eig.eigenvalues, eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| values[k]));
        let mut eigenvectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &vectors.column(src));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(Λ) V†`.
    pub fn apply_fn<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= w;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `max |A − V Λ V†|`.
    pub fn reconstruction_error(&self, op: &FockOperator) -> f64 {
        let rebuilt = self.apply_fn(|l| Complex64::new(l, 0.0));
        max_abs(&(rebuilt - op.matrix()))
    }

    /// Express `op` in this eigenbasis: `V† A V`.
    pub fn to_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * op * &self.eigenvectors
    }

    /// Smallest gap between consecutive eigenvalues and the index below it.
    pub fn min_gap(&self) -> Option<(usize, f64)> {
        self.eigenvalues
            .as_slice()
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[1] - w[0]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Spectral exponential `V exp(scale·Λ) V†` of a Hermitian operator.
pub fn herm_exp(op: &FockOperator, scale: Complex64) -> Result<FockOperator> {
    let spectrum = Spectrum::of(op)?;
    Ok(herm_exp_with(&spectrum, scale))
}

/// As [`herm_exp`] with a precomputed spectrum. Hermitian iff `scale` is real.
pub fn herm_exp_with(spectrum: &Spectrum, scale: Complex64) -> FockOperator {
    let m = spectrum.apply_fn(|l| (scale * l).exp());
    FockOperator {
        matrix: m,
        hermitian: scale.im == 0.0,
    }
}

/// A density matrix in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validate Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let rho = Self::hermitian_unchecked(matrix)?;
        let trace = rho.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Consistency(format!(
                "density matrix trace {trace:.15} differs from 1"
            )));
        }
        let spectrum = Spectrum::of(&FockOperator {
            matrix: rho.matrix.clone(),
            hermitian: true,
        })?;
        let lowest = spectrum.eigenvalues()[0];
        if lowest < -POSITIVITY_TOL {
            return Err(Error::Consistency(format!(
                "density matrix has negative eigenvalue {lowest:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Only checks Hermiticity; used for intermediate states whose trace is
    /// checked by the caller.
    pub(crate) fn hermitian_unchecked(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDimension {
                dim: matrix.nrows(),
                reason: "density matrix must be square".into(),
            });
        }
        let defect = hermiticity_defect(&matrix);
        if defect >= HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        // Remove the rounding-level anti-Hermitian part.
        let matrix = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self { matrix })
    }

    /// Normalize a Hermitian positive matrix to unit trace.
    pub fn normalized(matrix: CMatrix) -> Result<Self> {
        let tr: Complex64 = matrix.trace();
        if !(tr.re.is_finite() && tr.re > 0.0) {
            return Err(Error::Consistency(format!("cannot normalize trace {tr}")));
        }
        Self::new(matrix / Complex64::new(tr.re, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Total population of the top `levels` number states.
    pub fn tail_population(&self, levels: usize) -> f64 {
        let n = self.dim();
        (n.saturating_sub(levels)..n)
            .map(|i| self.matrix[(i, i)].re)
            .sum()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `Tr[A ρ]`.
    pub fn expectation(&self, op: &FockOperator) -> Complex64 {
        let n = self.dim();
        let a = op.matrix();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += a[(i, k)] * self.matrix[(k, i)];
            }
        }
        acc
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &FockOperator) -> Result<Self> {
        u.require_dim(self.dim())?;
        Self::hermitian_unchecked(u.matrix() * &self.matrix * u.matrix().adjoint())
    }

    /// Entry-wise complex conjugate, the anti-unitary time reversal in the
    /// number basis.
    pub fn conjugate(&self) -> Self {
        Self {
            matrix: self.matrix.map(|z| z.conj()),
        }
    }

    /// Frobenius norm of the part off the diagonal of `basis`'s eigenvectors.
    pub fn off_diagonal_norm(&self, basis: &Spectrum) -> f64 {
        let r = basis.to_eigenbasis(&self.matrix);
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    acc += r[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Trace distance `½ Σ |eig(ρ − σ)|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let diff = FockOperator::hermitian_part(&(&self.matrix - &other.matrix));
        let spectrum = Spectrum::of(&diff)?;
        Ok(0.5 * spectrum.eigenvalues().iter().map(|l| l.abs()).sum::<f64>())
    }
}
