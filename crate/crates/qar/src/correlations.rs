//! Stationary correlations: reduced states, the virtual-qubit/cold-qubit
//! two-qubit state, entropies, mutual information, classical correlations,
//! quantum discord and the partial-transpose entanglement test.
//!
//! The stationary state of the machine is an X-state whose only coherence
//! connects |010⟩ and |101⟩ — precisely the two-dimensional subspaces put in
//! contact by the three-body interaction. Tracing down to any qubit pair
//! kills that coherence, so genuine quantum correlations can only live
//! between the machine virtual qubit v (the {|10⟩, |01⟩} subspace of
//! work ⊗ hot) and the cold qubit. That two-qubit state is
//!
//! ```text
//! ρ_vc = P ρ∞ P / Tr{P ρ∞ P},   P = (|10⟩⟨10| + |01⟩⟨01|)_wh ⊗ 𝟙_c
//! ```
//!
//! Discord is quantified against rank-1 projective measurements on the cold
//! qubit: D = I(ρ_vc) − max_{θ,φ} I(σ_vc), where σ_vc is the dephased state
//! after measuring the Bloch direction (θ, φ). The maximization runs a
//! coarse 64×128 grid followed by golden-section refinement in θ; for a
//! single-coherence X-state the landscape is exactly φ-independent, which
//! the tests assert rather than assume.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::DensityMatrix;
use crate::model::{cre, czero, Bath, CMatrix};

#[derive(Debug, Error)]
pub enum CorrelationsError {
    #[error("the projected subspace carries no weight (norm {norm:e})")]
    EmptySubspace { norm: f64 },
    #[error("measurement optimizer stalled: grid best {grid} vs refined {refined}")]
    OptimizerStall { grid: f64, refined: f64 },
    #[error("not a two-qubit state: {0}")]
    InvalidState(String),
}

/// Two-qubit density matrix with labels for its factors. Basis order:
/// |A0 B0⟩, |A0 B1⟩, |A1 B0⟩, |A1 B1⟩.
#[derive(Debug, Clone)]
pub struct TwoQubitState {
    m: CMatrix,
    labels: [&'static str; 2],
}

impl TwoQubitState {
    pub fn new(m: CMatrix, labels: [&'static str; 2]) -> Result<Self, CorrelationsError> {
        if m.shape() != (4, 4) {
            return Err(CorrelationsError::InvalidState("dimension != 4".into()));
        }
        let herm = (&m - m.adjoint()).norm();
        if herm > 1e-10 {
            return Err(CorrelationsError::InvalidState(format!(
                "hermiticity violation {herm:e}"
            )));
        }
        if (m.trace().re - 1.0).abs() > 1e-10 {
            return Err(CorrelationsError::InvalidState(format!(
                "trace {} != 1",
                m.trace().re
            )));
        }
        let lam = crate::dynamics::min_hermitian_eigenvalue(&m);
        if lam < -1e-10 {
            return Err(CorrelationsError::InvalidState(format!(
                "negative eigenvalue {lam:e}"
            )));
        }
        Ok(Self { m, labels })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn labels(&self) -> [&'static str; 2] {
        self.labels
    }

    /// Reduced state of the first factor.
    pub fn marginal_a(&self) -> CMatrix {
        let mut out = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                out[(i, j)] = self.m[(2 * i, 2 * j)] + self.m[(2 * i + 1, 2 * j + 1)];
            }
        }
        out
    }

    /// Reduced state of the second factor.
    pub fn marginal_b(&self) -> CMatrix {
        let mut out = CMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = self.m[(a, b)] + self.m[(2 + a, 2 + b)];
            }
        }
        out
    }
}

/// Reduced state over the kept qubits (in fixed (w, h, c) order). Keeping all
/// three returns the state unchanged.
pub fn partial_trace(rho: &DensityMatrix, keep: &[Bath]) -> CMatrix {
    partial_trace_matrix(rho.matrix(), keep)
}

pub(crate) fn partial_trace_matrix(m: &CMatrix, keep: &[Bath]) -> CMatrix {
    let mut kept: Vec<Bath> = Vec::new();
    for bath in [Bath::Work, Bath::Hot, Bath::Cold] {
        if keep.contains(&bath) {
            kept.push(bath);
        }
    }
    let kdim = 1usize << kept.len();
    let traced: Vec<Bath> = [Bath::Work, Bath::Hot, Bath::Cold]
        .into_iter()
        .filter(|b| !kept.contains(b))
        .collect();
    let tdim = 1usize << traced.len();

    // Map (kept bits, traced bits) back to a computational index.
    let index = |kbits: usize, tbits: usize| -> usize {
        let mut idx = 0;
        for (pos, bath) in kept.iter().enumerate() {
            if kbits >> (kept.len() - 1 - pos) & 1 != 0 {
                idx |= bath.mask();
            }
        }
        for (pos, bath) in traced.iter().enumerate() {
            if tbits >> (traced.len() - 1 - pos) & 1 != 0 {
                idx |= bath.mask();
            }
        }
        idx
    };

    let mut out = CMatrix::zeros(kdim, kdim);
    for i in 0..kdim {
        for j in 0..kdim {
            let mut s = czero();
            for t in 0..tdim {
                s += m[(index(i, t), index(j, t))];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Computational indices spanned by the virtual-qubit ⊗ cold-qubit subspace,
/// in its basis order {|10⟩, |01⟩}_wh ⊗ {|0⟩, |1⟩}_c.
const VC_INDICES: [usize; 4] = [4, 5, 2, 3];

/// The machine-virtual-qubit ⊗ cold-qubit state: project onto the subspace
/// spanned by |10⟩_wh and |01⟩_wh (the cold factor untouched) and normalize.
pub fn virtual_cold_state(rho: &DensityMatrix) -> Result<TwoQubitState, CorrelationsError> {
    let m = rho.matrix();
    let mut out = CMatrix::zeros(4, 4);
    for (a, &ia) in VC_INDICES.iter().enumerate() {
        for (b, &ib) in VC_INDICES.iter().enumerate() {
            out[(a, b)] = m[(ia, ib)];
        }
    }
    let norm = out.trace().re;
    if norm <= 1e-14 {
        return Err(CorrelationsError::EmptySubspace { norm });
    }
    TwoQubitState::new(out.map(|z| z / norm), ["v", "c"])
}

/// Minimum eigenvalue of the partial transpose over the second factor.
/// Negative iff the state is entangled (for two qubits the test is exact).
pub fn ppt_min_eigenvalue(state: &TwoQubitState) -> f64 {
    let m = state.matrix();
    let mut pt = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    pt[(2 * i + a, 2 * j + b)] = m[(2 * i + b, 2 * j + a)];
                }
            }
        }
    }
    crate::dynamics::min_hermitian_eigenvalue(&pt)
}

/// Von Neumann entropy −Σ λ ln λ in nats, with 0·ln 0 = 0. Eigenvalues that
/// round slightly negative are treated as zero.
pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    rho.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&lam| if lam > 0.0 { -lam * lam.ln() } else { 0.0 })
        .sum()
}

fn entropy2x2(trace: f64, det: f64) -> f64 {
    let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
    let lam = [(trace + disc) / 2.0, (trace - disc) / 2.0];
    lam.iter()
        .map(|&l| if l > 0.0 { -l * l.ln() } else { 0.0 })
        .sum()
}

/// Directions of a rank-1 projective measurement along the Bloch angle
/// (θ, φ): |n₀⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩ and its complement.
fn measurement_vectors(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let e = Complex64::new(0.0, phi).exp();
    [[cre(c), e * s], [cre(s), -e * c]]
}

/// Mutual information of the dephased state after projecting the second
/// factor onto (θ, φ): I(σ) = S(ρ_A) − Σ_b p_b S(ρ_{A|b}). (Measuring B
/// leaves the A marginal untouched, so S(σ_A) = S(ρ_A).)
fn measured_information(m: &CMatrix, s_a: f64, theta: f64, phi: f64) -> f64 {
    let vecs = measurement_vectors(theta, phi);
    let mut total = s_a;
    for n in &vecs {
        // ρ̃_b[i][j] = Σ_{k,l} n*_k ρ[(ik),(jl)] n_l
        let mut r00 = czero();
        let mut r01 = czero();
        let mut r11 = czero();
        for k in 0..2 {
            for l in 0..2 {
                let w = n[k].conj() * n[l];
                r00 += w * m[(k, l)];
                r01 += w * m[(k, 2 + l)];
                r11 += w * m[(2 + k, 2 + l)];
            }
        }
        let p = r00.re + r11.re;
        if p > 1e-15 {
            let det = (r00 * r11 - r01 * r01.conj()).re / (p * p);
            total -= p * entropy2x2(1.0, det);
        }
    }
    total
}

/// Total, classical and quantum correlations of a two-qubit state, with the
/// measurement optimized over rank-1 projectors on the second factor.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    /// I(ρ) = S(ρ_A) + S(ρ_B) − S(ρ_AB), in nats.
    pub mutual_information: f64,
    /// max over projective measurements on B of I(σ).
    pub classical: f64,
    /// D = I − classical, clamped at zero.
    pub discord: f64,
    pub optimal_theta: f64,
    pub optimal_phi: f64,
    pub ppt_min_eigenvalue: f64,
}

impl CorrelationReport {
    pub const CSV_HEADER: &'static str =
        "omega_c,mutual_information,classical,discord,optimal_theta,optimal_phi,ppt_min_eigenvalue";

    pub fn csv_row(&self, omega_c: f64) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            omega_c,
            self.mutual_information,
            self.classical,
            self.discord,
            self.optimal_theta,
            self.optimal_phi,
            self.ppt_min_eigenvalue
        )
    }
}

/// Grid resolution of the coarse measurement scan (θ intervals × φ points).
pub const GRID_THETA: usize = 64;
pub const GRID_PHI: usize = 128;

pub fn correlations_report(state: &TwoQubitState) -> Result<CorrelationReport, CorrelationsError> {
    correlations_report_with_grid(state, GRID_THETA, GRID_PHI)
}

/// Report with an explicit grid resolution (the default is 64×128); exposed
/// so convergence under grid doubling is testable.
pub fn correlations_report_with_grid(
    state: &TwoQubitState,
    n_theta: usize,
    n_phi: usize,
) -> Result<CorrelationReport, CorrelationsError> {
    let m = state.matrix();
    let rho_a = state.marginal_a();
    let rho_b = state.marginal_b();
    let det2 = |r: &CMatrix| (r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)]).re;
    let s_a = entropy2x2(rho_a.trace().re, det2(&rho_a));
    let s_b = entropy2x2(rho_b.trace().re, det2(&rho_b));
    let mutual_information = s_a + s_b - von_neumann_entropy(m);

    // Coarse scan.
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for k in 0..=n_theta {
        let theta = std::f64::consts::PI * k as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let val = measured_information(m, s_a, theta, phi);
            if val > best.0 {
                best = (val, theta, phi);
            }
        }
    }

    // Golden-section refinement in θ along the best φ.
    let h = std::f64::consts::PI / n_theta as f64;
    let (grid_best, theta0, phi0) = best;
    let (mut lo, mut hi) = ((theta0 - h).max(0.0), (theta0 + h).min(std::f64::consts::PI));
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = measured_information(m, s_a, x1, phi0);
    let mut f2 = measured_information(m, s_a, x2, phi0);
    for _ in 0..64 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = measured_information(m, s_a, x2, phi0);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = measured_information(m, s_a, x1, phi0);
        }
    }
    let (refined, theta_star) = if f1 > f2 { (f1, x1) } else { (f2, x2) };
    if refined < grid_best - 1e-6 {
        return Err(CorrelationsError::OptimizerStall {
            grid: grid_best,
            refined,
        });
    }
    let (classical, optimal_theta) = if refined >= grid_best {
        (refined, theta_star)
    } else {
        (grid_best, theta0)
    };

    let discord = mutual_information - classical;
    if discord < -1e-9 {
        return Err(CorrelationsError::OptimizerStall {
            grid: classical,
            refined: mutual_information,
        });
    }
    Ok(CorrelationReport {
        mutual_information,
        classical,
        discord: discord.max(0.0),
        optimal_theta,
        optimal_phi: phi0,
        ppt_min_eigenvalue: ppt_min_eigenvalue(state),
    })
}
