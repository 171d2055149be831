//! Dense complex linear algebra at small fixed dimensions, plus builders for
//! the operators used throughout: ladder operators, parity, displacement, the
//! displaced parity `Y`, and the cat-subspace qubit encoding. Also partial
//! trace, von Neumann entropy, and the trace norm.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues below this floor are treated as numerical zeros when taking
/// entropies.
pub const ENTROPY_EIGENVALUE_FLOOR: f64 = 1e-14;

/// A pure state over a finite basis (qubit pair or truncated Fock space).
///
/// The carrier of all dynamics. Construction rejects zero or non-finite
/// vectors; a state is considered normalized when `|‖ψ‖ − 1| < 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidConfiguration(
                "state vector has non-finite amplitudes".into(),
            ));
        }
        let n = amps.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidConfiguration(
                "state vector must have nonzero finite norm".into(),
            ));
        }
        Ok(Self { amps })
    }

    pub fn from_components(components: &[C64]) -> Result<Self> {
        Self::new(CVector::from_row_slice(components))
    }

    /// Basis state |k⟩ in dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut amps = CVector::zeros(dim);
        amps[k] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-10
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            amps: self.amps.map(|a| a / n),
        }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_vector(self) -> CVector {
        self.amps
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Normalized expectation ⟨ψ|M|ψ⟩ / ⟨ψ|ψ⟩ (complex in general).
    pub fn expectation_c(&self, op: &CMatrix) -> C64 {
        self.amps.dotc(&(op * &self.amps)) / C64::new(self.amps.norm_squared(), 0.0)
    }

    /// Real part of the normalized expectation; exact for Hermitian `op`.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        self.expectation_c(op).re
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            amps: self.amps.kronecker(&other.amps),
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            amps: self.amps.map(|a| a * c),
        }
    }
}

/// Truncated Fock space: dimension `dim` and the largest coherent/displacement
/// amplitude the truncation supports.
///
/// The truncation is adequate when the Poisson tail
/// `e^{−α²} α^{2N} / N!` at `α = max_amplitude` is below 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    dim: usize,
    max_amplitude: f64,
}

impl FockConfig {
    pub fn new(dim: usize, max_amplitude: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfiguration(format!(
                "Fock dimension must be at least 2, got {dim}"
            )));
        }
        if !(max_amplitude >= 0.0) {
            return Err(Error::InvalidConfiguration(
                "max_amplitude must be non-negative".into(),
            ));
        }
        if poisson_tail(dim, max_amplitude) >= 1e-12 {
            return Err(Error::InvalidConfiguration(format!(
                "dimension {dim} cannot hold amplitudes up to {max_amplitude}: \
                 truncation tail {:.3e} >= 1e-12",
                poisson_tail(dim, max_amplitude)
            )));
        }
        Ok(Self {
            dim,
            max_amplitude,
        })
    }

    /// Smallest adequate truncation for amplitudes up to `max_amplitude`,
    /// never below 64.
    pub fn for_amplitude(max_amplitude: f64) -> Result<Self> {
        if !(max_amplitude >= 0.0) || !max_amplitude.is_finite() {
            return Err(Error::InvalidConfiguration(
                "max_amplitude must be finite and non-negative".into(),
            ));
        }
        let mut dim = 64;
        while poisson_tail(dim, max_amplitude) >= 1e-12 {
            dim *= 2;
            if dim > 4096 {
                return Err(Error::InvalidConfiguration(format!(
                    "amplitude {max_amplitude} needs a Fock dimension beyond 4096"
                )));
            }
        }
        Self::new(dim, max_amplitude)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_amplitude(&self) -> f64 {
        self.max_amplitude
    }

    fn check_amplitude(&self, amplitude: f64) -> Result<()> {
        if amplitude > self.max_amplitude + 1e-12 {
            return Err(Error::TruncationRisk {
                amplitude,
                max: self.max_amplitude,
            });
        }
        Ok(())
    }
}

/// Poisson weight `e^{−α²} (α²)^n / n!`, evaluated in log space.
fn poisson_tail(n: usize, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let lam = alpha * alpha;
    let nf = n as f64;
    (nf * lam.ln() - lam - ln_factorial(n)).exp()
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Ladder, number, and parity operators on the truncated space.
pub struct FockOps {
    /// Annihilation operator `a`, with ⟨n−1|a|n⟩ = √n.
    pub annihilate: CMatrix,
    /// Creation operator `a†`.
    pub create: CMatrix,
    /// Number operator `a†a`.
    pub number: CMatrix,
    /// Parity `e^{iπ a†a}` = diag((−1)ⁿ).
    pub parity: CMatrix,
}

/// Builds a, a†, a†a and the parity operator for `config`.
///
/// In the truncated basis `[a, a†] = 𝟙` holds exactly on levels `0..dim−1`;
/// only the top diagonal entry is wrong, which is inherent to any finite
/// truncation.
pub fn build_fock_ops(config: &FockConfig) -> Result<FockOps> {
    let n = config.dim();
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let create = a.adjoint();
    let number = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let parity = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(FockOps {
        annihilate: a,
        create,
        number,
        parity,
    })
}

/// Displacement operator D(β) = exp(βa† − β*a), by Padé scaling-and-squaring.
///
/// Unitary to ~1e-10 on levels well below the truncation as long as
/// `|β| ≤ max_amplitude`.
pub fn displacement(config: &FockConfig, beta: C64) -> Result<CMatrix> {
    config.check_amplitude(beta.norm())?;
    let ops = build_fock_ops(config)?;
    let gen = &ops.create * beta - &ops.annihilate * beta.conj();
    Ok(gen.exp())
}

/// Coherent state |α⟩ = e^{−|α|²/2} Σₙ αⁿ/√(n!) |n⟩ in the truncated basis.
pub fn coherent_state(config: &FockConfig, alpha: C64) -> Result<StateVector> {
    config.check_amplitude(alpha.norm())?;
    let n = config.dim();
    let mut amps = CVector::zeros(n);
    let mut coeff = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps[0] = coeff;
    for k in 1..n {
        coeff *= alpha / C64::new((k as f64).sqrt(), 0.0);
        amps[k] = coeff;
    }
    StateVector::new(amps)
}

/// Operators attached to the two-dimensional cat subspace span{|α⟩, |−α⟩}.
///
/// Two views are provided. The Fock-space view (`projector`, `sigma_x`,
/// `sigma_y`, `y_compressed`) works with the exact rank-2 projector built by
/// symmetric (Löwdin) orthogonalization of the non-orthogonal pair. The
/// encoded view (`parity_encoded`, `y_encoded`) is the 2×2 matrix of raw
/// matrix elements between the encoding states |0⟩ ≡ |α⟩, |1⟩ ≡ |−α⟩, which
/// is the object the qubit encoding actually uses; the closed-form trace-norm
/// identities
///
/// ```text
/// ‖enc(P) − σx‖₁ = 2 e^{−2|α|²}
/// ‖enc(Y) − σy‖₁ = 2 (1 − e^{−π²/(32|α|²)})      at β = −iπ/(8α)
/// ```
///
/// hold exactly for the encoded view. For the Fock-space compression the same
/// expressions are asymptotic, with a residual of order `e^{−4|α|²}`.
pub struct CatSubspaceOps {
    /// Orthogonal projector onto span{|α⟩, |−α⟩} (rank 2, exact).
    pub projector: CMatrix,
    /// σx analogue |α⟩⟨−α| + |−α⟩⟨α| as a Fock-space operator.
    pub sigma_x: CMatrix,
    /// σy analogue i|α⟩⟨−α| − i|−α⟩⟨α| (sign convention of the cat encoding,
    /// the negative of the common qubit convention).
    pub sigma_y: CMatrix,
    /// ℙ_α Y ℙ_α with β = −iπ/(8α).
    pub y_compressed: CMatrix,
    /// 2×2 matrix elements ⟨s_i|P|s_j⟩ over the encoding states.
    pub parity_encoded: CMatrix,
    /// 2×2 matrix elements ⟨s_i|Y|s_j⟩ over the encoding states.
    pub y_encoded: CMatrix,
    /// Smallest eigenvalue of the Gram matrix of {|α⟩, |−α⟩}; this is the
    /// real conditioning hazard at small |α|.
    pub gram_min_eigenvalue: f64,
    /// False when |α| < 1, where the encoding pair becomes ill-conditioned.
    pub well_conditioned: bool,
}

/// Builds the cat-subspace operators at amplitude `alpha`.
///
/// `|α| < 1` is not an error: the operators are still returned, flagged as
/// ill-conditioned.
pub fn cat_subspace_ops(config: &FockConfig, alpha: C64) -> Result<CatSubspaceOps> {
    let ka = coherent_state(config, alpha)?;
    let kma = coherent_state(config, -alpha)?;
    let n = config.dim();

    let mut basis = CMatrix::zeros(n, 2);
    basis.column_mut(0).copy_from(ka.amplitudes());
    basis.column_mut(1).copy_from(kma.amplitudes());

    // Gram matrix and its inverse square root (symmetric orthogonalization).
    let gram = basis.adjoint() * &basis;
    let eig = gram.clone().symmetric_eigen();
    let gram_min = eig.eigenvalues.min();
    let inv_sqrt = &eig.eigenvectors
        * CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                C64::new(1.0 / eig.eigenvalues[i].sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        * eig.eigenvectors.adjoint();
    let ortho = &basis * inv_sqrt;
    let projector = &ortho * ortho.adjoint();

    let outer = |u: &StateVector, v: &StateVector| -> CMatrix {
        let uc = u.amplitudes();
        let vc = v.amplitudes();
        CMatrix::from_fn(n, n, |i, j| uc[i] * vc[j].conj())
    };
    let i_c = C64::new(0.0, 1.0);
    let sigma_x = outer(&ka, &kma) + outer(&kma, &ka);
    let sigma_y = outer(&ka, &kma) * i_c - outer(&kma, &ka) * i_c;

    let beta = -i_c * C64::new(std::f64::consts::PI / 8.0, 0.0) / alpha;
    let ops = build_fock_ops(config)?;
    let d = displacement(config, beta)?;
    let y = d.adjoint() * &ops.parity * &d;
    let y_compressed = &projector * &y * &projector;

    let parity_encoded = basis.adjoint() * &ops.parity * &basis;
    let y_encoded = basis.adjoint() * &y * &basis;

    Ok(CatSubspaceOps {
        projector,
        sigma_x,
        sigma_y,
        y_compressed,
        parity_encoded,
        y_encoded,
        gram_min_eigenvalue: gram_min,
        well_conditioned: alpha.norm() >= 1.0,
    })
}

/// Which factor of the bipartite split to keep when tracing out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// A reduced density matrix together with its base-2 von Neumann entropy.
pub struct ReducedState {
    pub rho: CMatrix,
    pub entropy: f64,
}

/// Partial trace of a pure bipartite state (A-major ordering: index = i·dB + j)
/// and the entanglement entropy of the kept factor.
///
/// Base-2 entropy, so a maximally entangled qubit pair scores 1.
pub fn partial_trace_and_entropy(
    psi: &StateVector,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<ReducedState> {
    let (da, db) = dims;
    if da * db != psi.dim() {
        return Err(Error::ShapeMismatch(format!(
            "state dimension {} is not {da}x{db}",
            psi.dim()
        )));
    }
    let amps = psi.normalized();
    let m = CMatrix::from_fn(da, db, |i, j| amps.amplitudes()[i * db + j]);
    let rho = match keep {
        Subsystem::A => &m * m.adjoint(),
        Subsystem::B => (m.adjoint() * &m).transpose(),
    };
    let entropy = entropy_of_density(&rho);
    Ok(ReducedState { rho, entropy })
}

/// Base-2 von Neumann entropy of a Hermitian positive semidefinite matrix.
/// Eigenvalues below [`ENTROPY_EIGENVALUE_FLOOR`] are dropped.
pub fn entropy_of_density(rho: &CMatrix) -> f64 {
    let eig = rho.clone().symmetric_eigen();
    -eig.eigenvalues
        .iter()
        .filter(|&&l| l > ENTROPY_EIGENVALUE_FLOOR)
        .map(|&l| l * l.log2())
        .sum::<f64>()
}

/// Trace norm ‖M‖₁ = sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        // The definition extends to rectangular matrices; the callers only
        // ever pass square ones, but there is no reason to reject.
    }
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Identity matrix of dimension `n`.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest elementwise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max elementwise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}
