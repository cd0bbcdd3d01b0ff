//! Lindblad generators of the refrigerator and their stationary states.
//!
//! Three dissipation models share the coherent part −i[H_ref, ·]:
//!
//! * `Delocalized` — the consistent weak-coupling construction. Jump
//!   operators are the global eigenoperators A_{α,ω} of H_ref; every bath
//!   drives transitions of the whole three-qubit register at the six
//!   frequencies {±ω_α, ±(ω_α ± g)}.
//! * `Localized` — the idealization in which each bath couples to its own
//!   qubit through the ladder operators σ_∓ ⊗ 𝟙 with the thermal rates
//!   Γ_α(±ω_α). This is exactly the g → 0 limit of the channel set above.
//! * `LocalizedFlat` — the same ladder operators, but each qubit relaxes
//!   toward its Gibbs state at the frequency-independent total rate γ
//!   (emission γ·τ_g, absorption γ·τ_e). This is the reference model behind
//!   the ½·ε_C bound and the closed-form optimal cold frequency: with the
//!   damping decoupled from the transition frequency, the cooling power is
//!   maximized at half the window instead of three quarters of it.
//!
//! Superoperators act on column-stacked density matrices:
//! vec(ρ)[j·8 + i] = ρ_ij, so vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
//!
//! Γ_{α,ω} is the full golden-rule rate, already first order in γ. The jump
//! operators inherit a cosmetic √γ from the coupling operator √γ σ_x, so the
//! dissipators are assembled with the unit-normalized operators A/√γ and the
//! rates Γ_{α,ω}; heat currents then scale linearly with γ, as they must.
//!
//! The stationary state is the kernel of the generator, computed from the
//! trace-bordered linear system [L; tr]·vec(ρ) = [0; 1] by dense SVD with a
//! kernel-dimension cross-check, then polished by iterative refinement with
//! double-double residual accumulation. The refinement matters: stiff
//! parameter sets (γ orders of magnitude below the Bohr frequencies) leave a
//! plain double-precision solve with enough error along the slow modes to
//! contaminate the heat-current balance downstream.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::OnceLock;
use thiserror::Error;

use crate::dd::{matvec_c64_cdd, Cdd, Dd};
use crate::model::{
    self, build_href, cre, sigma_minus_on, spectral_rate, Bath, CMatrix, ModelError,
    RefrigeratorParams, BATHS, DIM,
};

const VDIM: usize = DIM * DIM;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("generator kernel has dimension {dimension} at tolerance {tolerance:e}")]
    DegenerateKernel { dimension: usize, tolerance: f64 },
    #[error("steady-state solve did not converge (relative residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("dt·‖L‖₁ = {product:e} exceeds the explicit integrator's stability margin")]
    StepTooLarge { product: f64 },
    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),
}

/// Which dissipator family enters the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DissipationMode {
    Delocalized,
    Localized,
    LocalizedFlat,
}

impl DissipationMode {
    pub fn label(self) -> &'static str {
        match self {
            DissipationMode::Delocalized => "delocalized",
            DissipationMode::Localized => "localized",
            DissipationMode::LocalizedFlat => "localized-flat",
        }
    }

    /// Rate of a local σ∓ channel at signed frequency ω for this mode.
    pub(crate) fn local_rate(
        self,
        omega: f64,
        temperature: f64,
        gamma: f64,
    ) -> Result<f64, ModelError> {
        match self {
            DissipationMode::Delocalized | DissipationMode::Localized => {
                spectral_rate(omega, temperature, gamma)
            }
            DissipationMode::LocalizedFlat => {
                crate::model::flat_thermal_rate(omega, temperature, gamma)
            }
        }
    }
}

impl std::str::FromStr for DissipationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delocalized" => Ok(DissipationMode::Delocalized),
            "localized" => Ok(DissipationMode::Localized),
            "localized-flat" => Ok(DissipationMode::LocalizedFlat),
            other => Err(format!(
                "unknown mode '{other}' (expected delocalized|localized|localized-flat)"
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// A density matrix: Hermitian, unit trace, positive semidefinite within
/// numerical tolerance (min eigenvalue ≥ −1e-10).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self, DynamicsError> {
        if !m.is_square() {
            return Err(DynamicsError::InvalidDensityMatrix("not square".into()));
        }
        let herm = (&m - m.adjoint()).norm();
        if herm > 1e-12 {
            return Err(DynamicsError::InvalidDensityMatrix(format!(
                "hermiticity violation {herm:e}"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(DynamicsError::InvalidDensityMatrix(format!(
                "trace {tr} is not 1"
            )));
        }
        let lam = min_hermitian_eigenvalue(&m);
        if lam < -1e-10 {
            return Err(DynamicsError::InvalidDensityMatrix(format!(
                "negative eigenvalue {lam:e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim).scale(1.0 / dim as f64),
        }
    }

    /// Product of single-qubit Gibbs states τ_w ⊗ τ_h ⊗ τ_c, each at its own
    /// bath temperature.
    pub fn thermal_product(params: &RefrigeratorParams) -> Self {
        let pop1 = |bath: Bath| {
            let x = (-params.omega(bath) / params.temperature(bath)).exp();
            x / (1.0 + x)
        };
        let (pw, ph, pc) = (pop1(Bath::Work), pop1(Bath::Hot), pop1(Bath::Cold));
        let mut m = CMatrix::zeros(DIM, DIM);
        for k in 0..DIM {
            let f = |bit: usize, p: f64| if bit != 0 { p } else { 1.0 - p };
            m[(k, k)] = cre(f(k & 4, pw) * f(k & 2, ph) * f(k & 1, pc));
        }
        Self { m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.m)
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.m - &other.m;
        let eig = diff.symmetric_eigen();
        0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn to_json(&self) -> serde_json::Value {
        cmatrix_to_json(&self.m)
    }
}

pub(crate) fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Complex matrix as nested JSON arrays of [re, im] pairs, row-major.
pub fn cmatrix_to_json(m: &CMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    serde_json::json!(rows)
}

pub fn cmatrix_from_json(v: &serde_json::Value) -> Option<CMatrix> {
    let rows = v.as_array()?;
    let nr = rows.len();
    let nc = rows.first()?.as_array()?.len();
    let mut m = CMatrix::zeros(nr, nc);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array()?;
        if row.len() != nc {
            return None;
        }
        for (j, z) in row.iter().enumerate() {
            let pair = z.as_array()?;
            m[(i, j)] = Complex64::new(pair.first()?.as_f64()?, pair.get(1)?.as_f64()?);
        }
    }
    Some(m)
}

// ---------------------------------------------------------------------------
// Liouvillian
// ---------------------------------------------------------------------------

struct SolverCache {
    /// SVD of the real embedding of the trace-bordered generator (130×128).
    bordered_svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    bordered_smax: f64,
    /// Singular values of the (unbordered) generator, descending.
    kernel_singulars: Vec<f64>,
    l1_norm: f64,
}

/// The master-equation generator: the coherent part, the three per-bath
/// dissipators (kept separate because heat currents need them one by one),
/// and their sum. Immutable after construction; safe to share across sweep
/// workers.
pub struct Liouvillian {
    mode: DissipationMode,
    params: RefrigeratorParams,
    hamiltonian: CMatrix,
    coherent: CMatrix,
    dissipators: [CMatrix; 3],
    total: CMatrix,
    cache: OnceLock<SolverCache>,
}

/// Superoperator of the dissipator Â ρ Â† − ½{Â†Â, ρ} for Â = op/√γ, scaled
/// by the thermal rate.
fn dissipator_superop(op: &CMatrix, rate_over_gamma: f64) -> CMatrix {
    let id = CMatrix::identity(DIM, DIM);
    let adag = op.adjoint();
    let adaga = &adag * op;
    let jump = op.map(|z| z.conj()).kronecker(op);
    let anti = id.kronecker(&adaga).scale(0.5) + adaga.transpose().kronecker(&id).scale(0.5);
    (jump - anti).scale(rate_over_gamma)
}

/// Assemble the Lindblad generator for the requested dissipation model.
pub fn build_liouvillian(
    params: &RefrigeratorParams,
    mode: DissipationMode,
) -> Result<Liouvillian, DynamicsError> {
    let h = build_href(params);
    let id = CMatrix::identity(DIM, DIM);
    let minus_i = Complex64::new(0.0, -1.0);
    let coherent = (id.kronecker(&h) - h.transpose().kronecker(&id)) * minus_i;

    let mut dissipators = [
        CMatrix::zeros(VDIM, VDIM),
        CMatrix::zeros(VDIM, VDIM),
        CMatrix::zeros(VDIM, VDIM),
    ];
    match mode {
        DissipationMode::Delocalized => {
            for ch in model::jump_channels(params)? {
                dissipators[ch.bath.index()] +=
                    dissipator_superop(&ch.operator, ch.rate / params.gamma());
            }
        }
        DissipationMode::Localized | DissipationMode::LocalizedFlat => {
            for bath in BATHS {
                let omega = params.omega(bath);
                let temperature = params.temperature(bath);
                let minus = sigma_minus_on(bath).scale(params.gamma().sqrt());
                let plus = minus.adjoint();
                let down = mode.local_rate(omega, temperature, params.gamma())?;
                let up = mode.local_rate(-omega, temperature, params.gamma())?;
                dissipators[bath.index()] = dissipator_superop(&minus, down / params.gamma())
                    + dissipator_superop(&plus, up / params.gamma());
            }
        }
    }

    let mut total = coherent.clone();
    for d in &dissipators {
        total += d;
    }

    Ok(Liouvillian {
        mode,
        params: *params,
        hamiltonian: h,
        coherent,
        dissipators,
        total,
        cache: OnceLock::new(),
    })
}

impl Liouvillian {
    pub fn mode(&self) -> DissipationMode {
        self.mode
    }

    pub fn params(&self) -> &RefrigeratorParams {
        &self.params
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn total(&self) -> &CMatrix {
        &self.total
    }

    pub fn coherent(&self) -> &CMatrix {
        &self.coherent
    }

    pub fn dissipator(&self, bath: Bath) -> &CMatrix {
        &self.dissipators[bath.index()]
    }

    /// L[ρ] as an 8×8 matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvec(&(&self.total * vec_of(rho)))
    }

    /// Matrix 1-norm (max column sum) of the generator.
    pub fn norm_l1(&self) -> f64 {
        self.solver().l1_norm
    }

    /// Spectral norm estimate (largest singular value).
    pub fn norm_spectral(&self) -> f64 {
        self.solver().kernel_singulars[0]
    }

    /// Singular values of the generator, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.solver().kernel_singulars
    }

    fn solver(&self) -> &SolverCache {
        self.cache.get_or_init(|| {
            let mut bordered = CMatrix::zeros(VDIM + 1, VDIM);
            bordered.view_mut((0, 0), (VDIM, VDIM)).copy_from(&self.total);
            for i in 0..DIM {
                bordered[(VDIM, i * DIM + i)] = cre(1.0);
            }
            let svd = real_embed(&bordered).svd(true, true);
            let bordered_smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
            let mut kernel_singulars: Vec<f64> = real_embed(&self.total)
                .svd(false, false)
                .singular_values
                .iter()
                .copied()
                .collect();
            kernel_singulars.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let l1_norm = (0..VDIM)
                .map(|j| self.total.column(j).iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0f64, f64::max);
            SolverCache {
                bordered_svd: svd,
                bordered_smax,
                kernel_singulars,
                l1_norm,
            }
        })
    }

    /// Residual of the trace-bordered system, with the generator applied as
    /// the exact (unrounded) sum coherent + Σ_α D_α in double-double.
    fn bordered_residual_dd(&self, x: &[Cdd], scratch: &mut [Cdd]) -> Vec<Cdd> {
        let mut r = vec![Cdd::ZERO; VDIM + 1];
        for part in std::iter::once(&self.coherent).chain(self.dissipators.iter()) {
            matvec_c64_cdd(part.as_slice(), VDIM, VDIM, x, scratch);
            for (ri, si) in r.iter_mut().zip(scratch.iter()) {
                *ri = ri.sub(*si);
            }
        }
        let mut tr = Cdd::ZERO;
        for i in 0..DIM {
            tr = tr.add(x[i * DIM + i]);
        }
        r[VDIM] = Cdd {
            re: Dd::from(1.0).sub(tr.re),
            im: tr.im.neg(),
        };
        r
    }

    /// Iteratively refine a stationary-state candidate against the bordered
    /// system, carrying the iterate in double-double. Returns the refined,
    /// Hermitized, trace-normalized vec(ρ).
    pub(crate) fn refine_steady_dd(&self, start: &CMatrix, iters: usize) -> Vec<Cdd> {
        let cache = self.solver();
        let mut x: Vec<Cdd> = vec_of(start)
            .iter()
            .map(|&z| Cdd::from_c64(z))
            .collect();
        let mut scratch = vec![Cdd::ZERO; VDIM];
        for _ in 0..iters {
            let r = self.bordered_residual_dd(&x, &mut scratch);
            let rmax = r
                .iter()
                .map(|c| c.re.hi.abs().max(c.im.hi.abs()))
                .fold(0.0f64, f64::max);
            if rmax < 1e-28 * (1.0 + cache.l1_norm) {
                break;
            }
            let rv: Vec<Complex64> = r.iter().map(|c| c.to_c64()).collect();
            let delta = cache
                .bordered_svd
                .solve(&real_embed_vec(&rv), cache.bordered_smax * 1e-13)
                .expect("svd solve");
            for (xi, dz) in x.iter_mut().zip(complexify(&delta)) {
                *xi = Cdd {
                    re: xi.re.add_f64(dz.re),
                    im: xi.im.add_f64(dz.im),
                };
            }
        }
        // Hermitize, then normalize the trace exactly.
        for i in 0..DIM {
            for j in i..DIM {
                let a = x[j * DIM + i];
                let b = x[i * DIM + j];
                let avg = a.add(b.conj());
                let half = Cdd {
                    re: avg.re.mul_f64(0.5),
                    im: avg.im.mul_f64(0.5),
                };
                x[j * DIM + i] = half;
                x[i * DIM + j] = half.conj();
            }
        }
        let mut tr = Dd::ZERO;
        for i in 0..DIM {
            tr = tr.add(x[i * DIM + i].re);
        }
        for xi in x.iter_mut() {
            *xi = xi.div_real(tr);
        }
        x
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode.label(),
            "params": self.params,
            "stacking": "column",
            "total": cmatrix_to_json(&self.total),
            "dissipators": {
                "w": cmatrix_to_json(self.dissipator(Bath::Work)),
                "h": cmatrix_to_json(self.dissipator(Bath::Hot)),
                "c": cmatrix_to_json(self.dissipator(Bath::Cold)),
            },
        })
    }
}

pub(crate) fn vec_of(rho: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(rho.as_slice())
}

pub(crate) fn unvec(v: &DVector<Complex64>) -> CMatrix {
    CMatrix::from_column_slice(DIM, DIM, v.as_slice())
}

fn real_embed(a: &CMatrix) -> DMatrix<f64> {
    let (m, n) = a.shape();
    DMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let z = a[(i % m, j % n)];
        match (i >= m, j >= n) {
            (false, false) | (true, true) => z.re,
            (false, true) => -z.im,
            (true, false) => z.im,
        }
    })
}

fn real_embed_vec(x: &[Complex64]) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

fn complexify(v: &DVector<f64>) -> Vec<Complex64> {
    let n = v.len() / 2;
    (0..n).map(|i| Complex64::new(v[i], v[i + n])).collect()
}

// ---------------------------------------------------------------------------
// Steady state and propagation
// ---------------------------------------------------------------------------

/// Relative tolerance (vs the largest singular value) below which a singular
/// value counts as zero in the kernel-dimension check.
pub const KERNEL_TOLERANCE: f64 = 1e-10;

/// The unique stationary state of the generator: kernel vector normalized to
/// unit trace, refined until ‖Lρ‖ is far below 1e-10·‖L‖·‖ρ‖.
pub fn steady_state(liouvillian: &Liouvillian) -> Result<DensityMatrix, DynamicsError> {
    let cache = liouvillian.solver();

    // The real embedding doubles every singular value's multiplicity, so a
    // unique complex kernel direction shows up as exactly two tiny values.
    let smax = cache.kernel_singulars[0];
    let nzero = cache
        .kernel_singulars
        .iter()
        .filter(|&&s| s <= KERNEL_TOLERANCE * smax)
        .count();
    if nzero > 2 {
        return Err(DynamicsError::DegenerateKernel {
            dimension: nzero / 2,
            tolerance: KERNEL_TOLERANCE,
        });
    }
    if nzero < 2 {
        return Err(DynamicsError::NoConvergence {
            residual: cache.kernel_singulars.last().copied().unwrap_or(f64::NAN) / smax,
        });
    }

    // Least-squares seed from the bordered system, then double-double polish.
    let mut b = DVector::<f64>::zeros(2 * (VDIM + 1));
    b[VDIM] = 1.0;
    let seed = cache
        .bordered_svd
        .solve(&b, cache.bordered_smax * 1e-13)
        .map_err(|_| DynamicsError::NoConvergence { residual: f64::NAN })?;
    let seed = unvec(&DVector::from_vec(complexify(&seed)));
    let x = liouvillian.refine_steady_dd(&seed, 5);
    let rho = unvec(&DVector::from_vec(x.iter().map(|c| c.to_c64()).collect()));

    let residual = (&liouvillian.total * vec_of(&rho)).norm();
    let rel = residual / (smax * rho.norm());
    if rel > 1e-10 {
        return Err(DynamicsError::NoConvergence { residual: rel });
    }
    DensityMatrix::new(rho).map_err(|e| match e {
        DynamicsError::InvalidDensityMatrix(_) => DynamicsError::NoConvergence { residual: rel },
        other => other,
    })
}

/// Fourth-order explicit (classical Runge–Kutta) integration of
/// dρ/dt = L[ρ] up to time `t` with step `dt`. A validation oracle for
/// `steady_state`, not a production propagator: pick dt ≈ 0.05/‖L‖₁.
pub fn propagate(
    liouvillian: &Liouvillian,
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix, DynamicsError> {
    if t < 0.0 || dt <= 0.0 {
        return Err(DynamicsError::StepTooLarge { product: f64::NAN });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let product = dt * liouvillian.norm_l1();
    if product > 0.1 {
        return Err(DynamicsError::StepTooLarge { product });
    }

    let l = &liouvillian.total;
    let mut v = vec_of(rho0.matrix());
    let mut remaining = t;
    while remaining > 0.0 {
        let h = dt.min(remaining);
        let k1 = l * &v;
        let k2 = l * (&v + &k1 * cre(h / 2.0));
        let k3 = l * (&v + &k2 * cre(h / 2.0));
        let k4 = l * (&v + &k3 * cre(h));
        v += (k1 + k2 * cre(2.0) + k3 * cre(2.0) + k4) * cre(h / 6.0);
        remaining -= h;
    }
    let m = unvec(&v);
    // Propagation preserves Hermiticity and trace to integrator accuracy;
    // tidy the rounding so downstream invariant checks see a clean state.
    let m = (&m + m.adjoint()).scale(0.5);
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / tr))
}

// ---------------------------------------------------------------------------
// Reduced solvers
// ---------------------------------------------------------------------------
//
// Both generators leave small invariant subspaces that contain the steady
// state, and campaign code leans on them:
//
// * Delocalized: the generator is secular, so eigenbasis populations close on
//   themselves. The steady state is diagonal in the H_ref eigenbasis and
//   solves a classical 8-state Pauli master equation.
// * Localized: the computational-basis populations close together with the
//   single ⟨010|ρ|101⟩ coherence (an X-state sector of 8 + 2 real
//   dimensions; the real part of the coherence decays to zero).
//
// Unit tests and the acceptance suite cross-check these against the full
// 64-dimensional solver.

/// Steady state of the delocalized generator in population space:
/// eigenbasis populations plus per-bath heat currents.
pub(crate) struct ReducedDelocalized {
    channels: Vec<model::EigenChannel>,
    eigensystem: model::EnergyEigensystem,
}

impl ReducedDelocalized {
    pub fn new(params: &RefrigeratorParams) -> Result<Self, DynamicsError> {
        Ok(Self {
            channels: model::eigen_channels(params)?,
            eigensystem: model::eigensystem(params)?,
        })
    }

    /// Classical rate matrix M with M[m][n] = Σ Γ·c² over transitions n → m.
    fn rate_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(DIM, DIM);
        for ch in &self.channels {
            for &(row, col, c) in &ch.terms {
                let w = ch.rate * c * c;
                m[(row, col)] += w;
                m[(col, col)] -= w;
            }
        }
        m
    }

    pub fn steady_populations(&self) -> Result<[f64; DIM], DynamicsError> {
        let m = self.rate_matrix();
        let mut a = m.clone();
        for j in 0..DIM {
            a[(0, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(DIM);
        b[0] = 1.0;
        let lu = a.clone().full_piv_lu();
        let mut p = lu
            .solve(&b)
            .ok_or(DynamicsError::NoConvergence { residual: f64::NAN })?;
        // One refinement pass tightens the balance residual to rounding.
        let r = &b - &a * &p;
        if let Some(dp) = lu.solve(&r) {
            p += dp;
        }
        let sum: f64 = p.iter().sum();
        let mut out = [0.0; DIM];
        for (o, x) in out.iter_mut().zip(p.iter()) {
            *o = x / sum;
        }
        Ok(out)
    }

    /// Q̇_α = −Σ_ω ω Γ_{α,ω} ⟨Â†Â⟩: each quantum ω leaves bath α at the
    /// channel's occupied-weighted rate. Also returns the one-way flux scale
    /// (the size of the terms that cancel), the natural noise floor for the
    /// net currents.
    pub fn heat_currents(&self, populations: &[f64; DIM]) -> ([f64; 3], f64) {
        let mut q = [0.0; 3];
        let mut flux = 0.0f64;
        for ch in &self.channels {
            let occ: f64 = ch
                .terms
                .iter()
                .map(|&(_, col, c)| c * c * populations[col])
                .sum();
            q[ch.bath.index()] -= ch.frequency * ch.rate * occ;
            flux = flux.max((ch.frequency * ch.rate * occ).abs());
        }
        (q, flux)
    }

    /// Steady density matrix in the computational basis.
    pub fn density(&self, populations: &[f64; DIM]) -> CMatrix {
        let v = &self.eigensystem.vectors;
        let diag = CMatrix::from_diagonal(&DVector::from_iterator(
            DIM,
            populations.iter().map(|&p| cre(p)),
        ));
        v * diag * v.adjoint()
    }
}

/// Steady state of the localized generator in its X-sector: computational
/// populations plus the imaginary part of the ⟨010|ρ|101⟩ coherence (the
/// real part is damped to zero and carries no current).
pub(crate) struct ReducedLocalized {
    params: RefrigeratorParams,
    /// (emission rate Γ(ω_α), absorption rate Γ(−ω_α)) per bath.
    rates: [(f64, f64); 3],
}

impl ReducedLocalized {
    pub fn new(params: &RefrigeratorParams, mode: DissipationMode) -> Result<Self, DynamicsError> {
        let mut rates = [(0.0, 0.0); 3];
        for bath in BATHS {
            let omega = params.omega(bath);
            let temperature = params.temperature(bath);
            rates[bath.index()] = (
                mode.local_rate(omega, temperature, params.gamma())?,
                mode.local_rate(-omega, temperature, params.gamma())?,
            );
        }
        Ok(Self {
            params: *params,
            rates,
        })
    }

    /// Solve for the steady (populations, Im ρ_{010,101}) pair.
    pub fn steady(&self) -> Result<([f64; DIM], f64), DynamicsError> {
        let g = self.params.g();
        let lambda: f64 = self.rates.iter().map(|(d, u)| 0.5 * (d + u)).sum();
        let n = DIM + 1;
        let mut a = DMatrix::<f64>::zeros(n, n);
        // Population balance under single-qubit thermal flips.
        for k in 0..DIM {
            for bath in BATHS {
                let mask = bath.mask();
                let (down, up) = self.rates[bath.index()];
                let (rate_out, rate_in) = if k & mask != 0 { (down, up) } else { (up, down) };
                a[(k ^ mask, k)] += rate_out;
                a[(k, k)] -= rate_out;
                let _ = rate_in;
            }
        }
        // Coherent exchange between |010⟩ (index 2) and |101⟩ (index 5)
        // through the coherence y = Im ρ_{2,5}: ṗ₂ -= 2g·y, ṗ₅ += 2g·y,
        // ẏ = −g(p₅ − p₂) − λ y.
        a[(2, DIM)] = -2.0 * g;
        a[(5, DIM)] = 2.0 * g;
        a[(DIM, 2)] = g;
        a[(DIM, 5)] = -g;
        a[(DIM, DIM)] = -lambda;
        // Replace one redundant balance row by the normalization Σp = 1.
        for j in 0..DIM {
            a[(0, j)] = 1.0;
        }
        a[(0, DIM)] = 0.0;
        let mut b = DVector::<f64>::zeros(n);
        b[0] = 1.0;
        let lu = a.clone().full_piv_lu();
        let mut z = lu
            .solve(&b)
            .ok_or(DynamicsError::NoConvergence { residual: f64::NAN })?;
        let r = &b - &a * &z;
        if let Some(dz) = lu.solve(&r) {
            z += dz;
        }
        let mut p = [0.0; DIM];
        let sum: f64 = z.iter().take(DIM).sum();
        for (o, x) in p.iter_mut().zip(z.iter()) {
            *o = x / sum;
        }
        Ok((p, z[DIM] / sum))
    }

    /// Q̇_α = ω_α (Γ(−ω_α) P₀ − Γ(ω_α) P₁): pure local quanta exchange. The
    /// interaction-energy part Tr{H_I D_α ρ} vanishes at stationarity because
    /// the surviving coherence is purely imaginary. Also returns the one-way
    /// flux scale.
    pub fn heat_currents(&self, populations: &[f64; DIM]) -> ([f64; 3], f64) {
        let mut q = [0.0; 3];
        let mut flux = 0.0f64;
        for bath in BATHS {
            let mask = bath.mask();
            let (down, up) = self.rates[bath.index()];
            let p1: f64 = (0..DIM)
                .filter(|k| k & mask != 0)
                .map(|k| populations[k])
                .sum();
            let omega = self.params.omega(bath);
            q[bath.index()] = omega * (up * (1.0 - p1) - down * p1);
            flux = flux.max((omega * up * (1.0 - p1)).abs().max((omega * down * p1).abs()));
        }
        (q, flux)
    }

    pub fn density(&self, populations: &[f64; DIM], y: f64) -> CMatrix {
        let mut m = CMatrix::zeros(DIM, DIM);
        for (k, &p) in populations.iter().enumerate() {
            m[(k, k)] = cre(p);
        }
        m[(2, 5)] = Complex64::new(0.0, y);
        m[(5, 2)] = Complex64::new(0.0, -y);
        m
    }
}

/// Steady state through the reduced (invariant-subspace) solvers. Same state
/// as `steady_state`, at a fraction of the cost; campaign code uses this.
pub(crate) fn steady_state_reduced(
    params: &RefrigeratorParams,
    mode: DissipationMode,
) -> Result<CMatrix, DynamicsError> {
    match mode {
        DissipationMode::Delocalized => {
            let red = ReducedDelocalized::new(params)?;
            let p = red.steady_populations()?;
            Ok(red.density(&p))
        }
        DissipationMode::Localized | DissipationMode::LocalizedFlat => {
            let red = ReducedLocalized::new(params, mode)?;
            let (p, y) = red.steady()?;
            Ok(red.density(&p, y))
        }
    }
}

/// Heat currents (Q̇_w, Q̇_h, Q̇_c) and the one-way flux scale, through the
/// reduced solvers.
pub(crate) fn heat_currents_reduced(
    params: &RefrigeratorParams,
    mode: DissipationMode,
) -> Result<([f64; 3], f64), DynamicsError> {
    match mode {
        DissipationMode::Delocalized => {
            let red = ReducedDelocalized::new(params)?;
            let p = red.steady_populations()?;
            Ok(red.heat_currents(&p))
        }
        DissipationMode::Localized | DissipationMode::LocalizedFlat => {
            let red = ReducedLocalized::new(params, mode)?;
            let (p, _) = red.steady()?;
            Ok(red.heat_currents(&p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::czero;
    use crate::rng::SplitMix64;

    fn fig2_params(omega_c: f64) -> RefrigeratorParams {
        RefrigeratorParams::new(56.87, omega_c, 0.1, 1e-6, 127.33, 66.25, 4.78).unwrap()
    }

    fn mild_params() -> RefrigeratorParams {
        RefrigeratorParams::new(1.3, 0.7, 0.15, 0.05, 9.0, 4.0, 1.6).unwrap()
    }

    fn random_params(rng: &mut SplitMix64) -> RefrigeratorParams {
        loop {
            let t_c = rng.log_uniform(1.0, 10.0);
            let t_h = t_c * rng.log_uniform(1.5, 6.0);
            let t_w = t_h * rng.log_uniform(1.5, 6.0);
            let omega_w = rng.log_uniform(0.1, 0.8) * t_h;
            let omega_c = rng.log_uniform(0.05, 0.5) * omega_w;
            let g = rng.log_uniform(0.01, 0.3) * omega_c;
            let gamma = rng.log_uniform(1e-7, 1e-4);
            if let Ok(p) = RefrigeratorParams::new(omega_w, omega_c, g, gamma, t_w, t_h, t_c) {
                if p.check_nondegenerate().is_ok() {
                    return p;
                }
            }
        }
    }

    #[test]
    fn generator_annihilates_the_trace_functional() {
        for mode in [DissipationMode::Delocalized, DissipationMode::Localized] {
            let l = build_liouvillian(&fig2_params(1.0), mode).unwrap();
            // Row functional tr∘L: sum the rows of L that sit on vec-diagonal
            // slots; must vanish columnwise.
            let mut worst = 0.0f64;
            for j in 0..VDIM {
                let mut s = czero();
                for i in 0..DIM {
                    s += l.total()[(i * DIM + i, j)];
                }
                worst = worst.max(s.norm());
            }
            assert!(worst <= 1e-12 * (1.0 + l.norm_l1()), "tr∘L = {worst:e}");
        }
    }

    #[test]
    fn generator_maps_mixed_state_to_traceless_hermitian() {
        let l = build_liouvillian(&mild_params(), DissipationMode::Delocalized).unwrap();
        let out = l.apply(DensityMatrix::maximally_mixed(DIM).matrix());
        assert!(out.trace().norm() <= 1e-14 * (1.0 + l.norm_l1()));
        assert!((&out - out.adjoint()).norm() <= 1e-13);
    }

    #[test]
    fn generator_preserves_hermiticity() {
        let mut rng = SplitMix64::keyed(21, 0, 0);
        let l = build_liouvillian(&mild_params(), DissipationMode::Delocalized).unwrap();
        for _ in 0..5 {
            let mut m = CMatrix::zeros(DIM, DIM);
            for i in 0..DIM {
                for j in 0..DIM {
                    m[(i, j)] = Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5);
                }
            }
            let herm = (&m + m.adjoint()).scale(0.5);
            let out = l.apply(&herm);
            assert!((&out - out.adjoint()).norm() <= 1e-13 * l.norm_l1() * herm.norm());
        }
    }

    #[test]
    fn coupling_free_localized_steady_state_is_the_gibbs_product() {
        let params = RefrigeratorParams::new(2.0, 1.0, 0.0, 1e-3, 9.0, 5.0, 2.0).unwrap();
        let l = build_liouvillian(&params, DissipationMode::Localized).unwrap();
        let rho = steady_state(&l).unwrap();
        let gibbs = DensityMatrix::thermal_product(&params);
        assert!(rho.trace_distance(&gibbs) <= 1e-10);
    }

    #[test]
    fn delocalized_steady_state_has_x_structure() {
        let l = build_liouvillian(&fig2_params(1.0), DissipationMode::Delocalized).unwrap();
        let rho = steady_state(&l).unwrap();
        let m = rho.matrix();
        for i in 0..DIM {
            for j in 0..DIM {
                if i != j && !((i == 2 && j == 5) || (i == 5 && j == 2)) {
                    assert!(m[(i, j)].norm() <= 1e-10, "({i},{j}) = {}", m[(i, j)]);
                }
            }
        }
        assert!(m[(2, 5)].norm() > 0.0);
    }

    #[test]
    fn steady_state_meets_residual_and_positivity_contract() {
        let mut rng = SplitMix64::keyed(22, 0, 0);
        for _ in 0..10 {
            let p = random_params(&mut rng);
            for mode in [DissipationMode::Delocalized, DissipationMode::Localized] {
                let l = build_liouvillian(&p, mode).unwrap();
                let rho = steady_state(&l).unwrap();
                let rel = (l.total() * vec_of(rho.matrix())).norm()
                    / (l.norm_spectral() * rho.matrix().norm());
                assert!(rel <= 1e-10, "relative residual {rel:e}");
                assert!(rho.min_eigenvalue() >= -1e-10);

                let smax = l.singular_values()[0];
                let nzero = l
                    .singular_values()
                    .iter()
                    .filter(|&&s| s <= KERNEL_TOLERANCE * smax)
                    .count();
                assert_eq!(nzero, 2, "kernel must be one complex dimension");
            }
        }
    }

    #[test]
    fn delocalized_and_localized_generators_converge_as_g_shrinks() {
        let mut last = f64::INFINITY;
        for &g in &[1e-2, 1e-3, 1e-4] {
            let p = RefrigeratorParams::new(1.3, 0.7, g, 1e-4, 9.0, 4.0, 1.6).unwrap();
            let del = build_liouvillian(&p, DissipationMode::Delocalized).unwrap();
            let loc = build_liouvillian(&p, DissipationMode::Localized).unwrap();
            let diff = (del.total() - loc.total()).norm() / loc.total().norm();
            assert!(diff < last, "superoperator gap must shrink with g");
            last = diff;
        }
    }

    #[test]
    fn steady_states_converge_as_g_shrinks() {
        // γ must stay far below g across the whole sequence (the same g ≫ γ
        // constraint under which both dissipation models are meaningful).
        let mut last = f64::INFINITY;
        for &frac in &[1e-1, 1e-2, 1e-3] {
            let p = RefrigeratorParams::new(1.3, 0.7, frac * 0.7, 1e-8, 9.0, 4.0, 1.6).unwrap();
            let del = steady_state(&build_liouvillian(&p, DissipationMode::Delocalized).unwrap())
                .unwrap();
            let loc =
                steady_state(&build_liouvillian(&p, DissipationMode::Localized).unwrap()).unwrap();
            let d = del.trace_distance(&loc);
            assert!(d < last, "steady-state gap must shrink with g, got {d}");
            last = d;
        }
    }

    #[test]
    fn propagate_identity_at_zero_time_and_trace_preservation() {
        let p = mild_params();
        let l = build_liouvillian(&p, DissipationMode::Delocalized).unwrap();
        let rho0 = DensityMatrix::thermal_product(&p);
        let same = propagate(&l, &rho0, 0.0, 0.1).unwrap();
        assert_eq!(same.matrix(), rho0.matrix());

        let dt = 0.05 / l.norm_l1();
        let rho = propagate(&l, &rho0, 3.0, dt).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() <= 1e-9);

        assert!(matches!(
            propagate(&l, &rho0, 1.0, 1.0),
            Err(DynamicsError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn propagate_step_halving_gains_fourth_order() {
        let p = mild_params();
        let l = build_liouvillian(&p, DissipationMode::Delocalized).unwrap();
        let rho0 = DensityMatrix::thermal_product(&p);
        let t = 0.08 / l.norm_l1();
        let coarse = propagate(&l, &rho0, t, t).unwrap();
        let fine = propagate(&l, &rho0, t, t / 2.0).unwrap();
        let finest = propagate(&l, &rho0, t, t / 4.0).unwrap();
        let e1 = coarse.trace_distance(&fine);
        let e2 = fine.trace_distance(&finest);
        // Local error O(dt⁵), global here O(dt⁴): halving should gain ≈ 2⁴.
        let gain = e1 / e2;
        assert!((8.0..64.0).contains(&gain), "Richardson gain {gain}");
    }

    #[test]
    fn propagation_reaches_the_steady_state() {
        let p = RefrigeratorParams::new(1.3, 0.7, 0.2, 0.1, 9.0, 4.0, 1.6).unwrap();
        let l = build_liouvillian(&p, DissipationMode::Delocalized).unwrap();
        let target = steady_state(&l).unwrap();
        let dt = 0.05 / l.norm_l1();
        let evolved = propagate(&l, &DensityMatrix::maximally_mixed(DIM), 50.0 / p.gamma(), dt)
            .unwrap();
        assert!(evolved.trace_distance(&target) <= 1e-6);
    }

    #[test]
    fn reduced_delocalized_solver_matches_full_solver() {
        let mut rng = SplitMix64::keyed(23, 0, 0);
        for _ in 0..8 {
            let p = random_params(&mut rng);
            let l = build_liouvillian(&p, DissipationMode::Delocalized).unwrap();
            let full = steady_state(&l).unwrap();
            let red = steady_state_reduced(&p, DissipationMode::Delocalized).unwrap();
            let dist = DensityMatrix::new(red).unwrap().trace_distance(&full);
            assert!(dist <= 1e-9, "reduced vs full mismatch {dist:e}");
        }
    }

    #[test]
    fn reduced_localized_solver_matches_full_solver() {
        let mut rng = SplitMix64::keyed(24, 0, 0);
        for _ in 0..4 {
            let p = random_params(&mut rng);
            for mode in [DissipationMode::Localized, DissipationMode::LocalizedFlat] {
                let l = build_liouvillian(&p, mode).unwrap();
                let full = steady_state(&l).unwrap();
                let red = steady_state_reduced(&p, mode).unwrap();
                let dist = DensityMatrix::new(red).unwrap().trace_distance(&full);
                assert!(dist <= 1e-9, "reduced vs full mismatch {dist:e}");
            }
        }
    }

    #[test]
    fn density_matrix_json_roundtrip() {
        let p = mild_params();
        let rho = DensityMatrix::thermal_product(&p);
        let v = rho.to_json();
        let back = cmatrix_from_json(&v).unwrap();
        assert!((rho.matrix() - back).norm() <= 1e-15);
    }
}
