//! Microscopic model of the three-qubit absorption refrigerator.
//!
//! Three qubits labelled after the bath each one touches — work (w), hot (h),
//! cold (c) — with free energies ω_α and the resonance condition
//! ω_h = ω_c + ω_w. A three-body exchange term of strength g couples the
//! doubly-degenerate pair |101⟩, |010⟩:
//!
//! ```text
//! H_ref = Σ_α ω_α |1⟩⟨1|_α + g (|101⟩⟨010| + |010⟩⟨101|)
//! ```
//!
//! Each qubit dissipates into its own bosonic bath through a σ_x coupling at
//! rate γ. Decomposing √γ σ_x_α into eigenoperators of H_ref yields six decay
//! channels per bath at frequencies {±ω_α, ±(ω_α ± g)}: the global (fully
//! delocalized) picture of dissipation. All quantities use natural units
//! ħ = k_B = 1.
//!
//! Basis convention: computational product basis ordered by the binary value
//! of (w, h, c), i.e. |000⟩, |001⟩, |010⟩, |011⟩, |100⟩, |101⟩, |110⟩, |111⟩,
//! zero-indexed 0..=7. Matrix element (2, 5) is therefore the ⟨010|·|101⟩
//! coherence.
//!
//! Ref: Breuer & Petruccione, "The Theory of Open Quantum Systems" (2002),
//! ch. 3, for the eigenoperator decomposition and the thermal spectral
//! functions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex matrix over the three-qubit computational basis (or a subspace).
pub type CMatrix = DMatrix<Complex64>;

/// Hilbert space dimension of the three-qubit register.
pub const DIM: usize = 8;

/// Relative degeneracy floor (in units of ω_h) below which two eigenvalues
/// are treated as coinciding and the secular channel construction refuses to
/// run.
pub const DEFAULT_DEGENERACY_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("temperatures must satisfy T_w > T_h > T_c, got ({t_w}, {t_h}, {t_c})")]
    TemperatureOrderViolation { t_w: f64, t_h: f64, t_c: f64 },
    #[error("eigenvalues {a} and {b} coincide within the floor {floor:e}")]
    DegenerateSpectrum { a: f64, b: f64, floor: f64 },
    #[error("zero transition frequency has no thermal rate (dephasing limit rejected)")]
    ZeroFrequency,
    #[error("config: {0}")]
    Config(String),
}

/// The bath (equivalently, the qubit) a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bath {
    Work,
    Hot,
    Cold,
}

pub const BATHS: [Bath; 3] = [Bath::Work, Bath::Hot, Bath::Cold];

impl Bath {
    pub fn label(self) -> &'static str {
        match self {
            Bath::Work => "w",
            Bath::Hot => "h",
            Bath::Cold => "c",
        }
    }

    /// Bit mask of this qubit in the computational index (w is the most
    /// significant bit).
    pub(crate) fn mask(self) -> usize {
        match self {
            Bath::Work => 4,
            Bath::Hot => 2,
            Bath::Cold => 1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Bath::Work => 0,
            Bath::Hot => 1,
            Bath::Cold => 2,
        }
    }
}

/// Validity-of-regime flags. These are soft: outside the regime the generator
/// is still well defined, but the weak-coupling secular derivation behind it
/// is no longer controlled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeFlags {
    /// g/γ ≥ 100 (rotating-wave approximation; vacuous at g = 0).
    pub rotating_wave_ok: bool,
    /// min(T_α)/γ ≥ 1000 (Born–Markov approximation).
    pub born_markov_ok: bool,
}

/// The refrigerator family at fixed temperatures, work frequency, coupling
/// and rate, with the cold frequency ω_c left free. Sweeps and optimizers
/// move along ω_c inside a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefrigeratorFamily {
    omega_w: f64,
    g: f64,
    gamma: f64,
    t_w: f64,
    t_h: f64,
    t_c: f64,
}

impl RefrigeratorFamily {
    pub fn new(
        omega_w: f64,
        g: f64,
        gamma: f64,
        t_w: f64,
        t_h: f64,
        t_c: f64,
    ) -> Result<Self, ModelError> {
        check_positive("omega_w", omega_w)?;
        check_nonnegative("g", g)?;
        check_positive("gamma", gamma)?;
        check_positive("T_w", t_w)?;
        check_positive("T_h", t_h)?;
        check_positive("T_c", t_c)?;
        if !(t_w > t_h && t_h > t_c) {
            return Err(ModelError::TemperatureOrderViolation { t_w, t_h, t_c });
        }
        Ok(Self {
            omega_w,
            g,
            gamma,
            t_w,
            t_h,
            t_c,
        })
    }

    /// Fix the cold frequency, producing a full parameter set.
    pub fn at(&self, omega_c: f64) -> Result<RefrigeratorParams, ModelError> {
        RefrigeratorParams::new(
            self.omega_w,
            omega_c,
            self.g,
            self.gamma,
            self.t_w,
            self.t_h,
            self.t_c,
        )
    }

    pub fn omega_w(&self) -> f64 {
        self.omega_w
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn t_w(&self) -> f64 {
        self.t_w
    }
    pub fn t_h(&self) -> f64 {
        self.t_h
    }
    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    /// Same family with a rescaled dissipation rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self, ModelError> {
        Self::new(self.omega_w, self.g, gamma, self.t_w, self.t_h, self.t_c)
    }
}

/// The seven physical parameters of the machine. ω_h is derived, never
/// stored. Construction validates the hard invariants (positivity, ordering);
/// spectral non-degeneracy is a separate check because the local-dissipation
/// idealization is perfectly happy with g = 0 while the global channel
/// construction is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefrigeratorParams {
    omega_w: f64,
    omega_c: f64,
    g: f64,
    gamma: f64,
    #[serde(rename = "T_w")]
    t_w: f64,
    #[serde(rename = "T_h")]
    t_h: f64,
    #[serde(rename = "T_c")]
    t_c: f64,
    #[serde(skip)]
    degeneracy_floor_rel: f64,
}

impl RefrigeratorParams {
    /// Validate and build a parameter set. g = 0 is allowed (the coupling-free
    /// limit used by the localized model); everything else must be strictly
    /// positive and the temperatures ordered T_w > T_h > T_c.
    pub fn new(
        omega_w: f64,
        omega_c: f64,
        g: f64,
        gamma: f64,
        t_w: f64,
        t_h: f64,
        t_c: f64,
    ) -> Result<Self, ModelError> {
        check_positive("omega_c", omega_c)?;
        let family = RefrigeratorFamily::new(omega_w, g, gamma, t_w, t_h, t_c)?;
        Ok(Self {
            omega_w: family.omega_w,
            omega_c,
            g: family.g,
            gamma: family.gamma,
            t_w: family.t_w,
            t_h: family.t_h,
            t_c: family.t_c,
            degeneracy_floor_rel: DEFAULT_DEGENERACY_FLOOR,
        })
    }

    /// Adjust the relative degeneracy floor (units of ω_h).
    pub fn with_degeneracy_floor(mut self, rel: f64) -> Self {
        self.degeneracy_floor_rel = rel;
        self
    }

    pub fn omega_w(&self) -> f64 {
        self.omega_w
    }
    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }
    /// ω_h = ω_c + ω_w, always derived.
    pub fn omega_h(&self) -> f64 {
        self.omega_c + self.omega_w
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn t_w(&self) -> f64 {
        self.t_w
    }
    pub fn t_h(&self) -> f64 {
        self.t_h
    }
    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    pub fn omega(&self, bath: Bath) -> f64 {
        match bath {
            Bath::Work => self.omega_w,
            Bath::Hot => self.omega_h(),
            Bath::Cold => self.omega_c,
        }
    }

    pub fn temperature(&self, bath: Bath) -> f64 {
        match bath {
            Bath::Work => self.t_w,
            Bath::Hot => self.t_h,
            Bath::Cold => self.t_c,
        }
    }

    pub fn family(&self) -> RefrigeratorFamily {
        RefrigeratorFamily {
            omega_w: self.omega_w,
            g: self.g,
            gamma: self.gamma,
            t_w: self.t_w,
            t_h: self.t_h,
            t_c: self.t_c,
        }
    }

    pub fn degeneracy_floor(&self) -> f64 {
        self.degeneracy_floor_rel * self.omega_h()
    }

    /// The analytic spectrum of H_ref, in the fixed label order
    /// (|1⟩..|8⟩ of the eigensystem, not sorted by energy).
    pub fn analytic_energies(&self) -> [f64; DIM] {
        let (ww, wc, wh, g) = (self.omega_w, self.omega_c, self.omega_h(), self.g);
        [
            0.0,
            ww,
            2.0 * wh,
            wc,
            ww + wh,
            wh + wc,
            wh - g,
            wh + g,
        ]
    }

    /// Reject parameter sets where two eigenvalues of H_ref collide within
    /// the floor (e.g. g = ω_c, or g = 0). The secular channel construction
    /// needs distinct transition frequencies per bath.
    pub fn check_nondegenerate(&self) -> Result<(), ModelError> {
        let e = self.analytic_energies();
        let floor = self.degeneracy_floor();
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                if (e[i] - e[j]).abs() <= floor {
                    return Err(ModelError::DegenerateSpectrum {
                        a: e[i],
                        b: e[j],
                        floor,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn regime_warnings(&self) -> RegimeFlags {
        let t_min = self.t_c.min(self.t_h).min(self.t_w);
        RegimeFlags {
            rotating_wave_ok: self.g == 0.0 || self.g / self.gamma >= 100.0,
            born_markov_ok: t_min / self.gamma >= 1000.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(ModelError::NonPositiveParameter { name, value });
    }
    Ok(())
}

fn check_nonnegative(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(ModelError::NonPositiveParameter { name, value });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Key-value config files
// ---------------------------------------------------------------------------

/// Parameter set as read from a flat key-value config file. `omega_c` is
/// optional because sweep commands scan it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawParams {
    pub omega_w: f64,
    pub omega_c: Option<f64>,
    pub g: f64,
    pub gamma: f64,
    #[serde(rename = "T_w")]
    pub t_w: f64,
    #[serde(rename = "T_h")]
    pub t_h: f64,
    #[serde(rename = "T_c")]
    pub t_c: f64,
}

impl RawParams {
    pub fn family(&self) -> Result<RefrigeratorFamily, ModelError> {
        RefrigeratorFamily::new(self.omega_w, self.g, self.gamma, self.t_w, self.t_h, self.t_c)
    }

    pub fn params(&self) -> Result<RefrigeratorParams, ModelError> {
        let omega_c = self
            .omega_c
            .ok_or_else(|| ModelError::Config("omega_c is required here".into()))?;
        self.family()?.at(omega_c)
    }
}

/// Parse a flat `key = value` config. Lines starting with `#` and blank lines
/// are skipped. Keys: omega_w, omega_c, g, gamma, T_w, T_h, T_c; all values
/// in natural units.
pub fn parse_config(text: &str) -> Result<RawParams, ModelError> {
    let mut seen: std::collections::BTreeMap<&str, f64> = Default::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ModelError::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| ModelError::Config(format!("line {}: bad number ({e})", lineno + 1)))?;
        let canonical = match key {
            "omega_w" | "omega_c" | "g" | "gamma" | "T_w" | "T_h" | "T_c" => key,
            other => {
                return Err(ModelError::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        };
        if seen.insert(canonical, value).is_some() {
            return Err(ModelError::Config(format!("duplicate key '{canonical}'")));
        }
    }
    let get = |k: &str| {
        seen.get(k)
            .copied()
            .ok_or_else(|| ModelError::Config(format!("missing key '{k}'")))
    };
    Ok(RawParams {
        omega_w: get("omega_w")?,
        omega_c: seen.get("omega_c").copied(),
        g: get("g")?,
        gamma: get("gamma")?,
        t_w: get("T_w")?,
        t_h: get("T_h")?,
        t_c: get("T_c")?,
    })
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

pub(crate) fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub(crate) fn cre(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// σ_x on qubit α, identity elsewhere.
pub fn sigma_x_on(bath: Bath) -> CMatrix {
    let mask = bath.mask();
    let mut m = CMatrix::zeros(DIM, DIM);
    for k in 0..DIM {
        m[(k ^ mask, k)] = cre(1.0);
    }
    m
}

/// σ₋ = |0⟩⟨1| on qubit α, identity elsewhere.
pub fn sigma_minus_on(bath: Bath) -> CMatrix {
    let mask = bath.mask();
    let mut m = CMatrix::zeros(DIM, DIM);
    for k in 0..DIM {
        if k & mask != 0 {
            m[(k ^ mask, k)] = cre(1.0);
        }
    }
    m
}

/// The refrigerator Hamiltonian H_ref in the computational basis.
pub fn build_href(params: &RefrigeratorParams) -> CMatrix {
    let mut h = CMatrix::zeros(DIM, DIM);
    for k in 0..DIM {
        let mut e = 0.0;
        if k & 4 != 0 {
            e += params.omega_w();
        }
        if k & 2 != 0 {
            e += params.omega_h();
        }
        if k & 1 != 0 {
            e += params.omega_c();
        }
        h[(k, k)] = cre(e);
    }
    // g (|101⟩⟨010| + h.c.); |101⟩ = index 5, |010⟩ = index 2.
    h[(5, 2)] = cre(params.g());
    h[(2, 5)] = cre(params.g());
    h
}

/// Eigensystem of H_ref with the fixed analytic labels: six computational
/// states plus the split pair (|101⟩ ∓ |010⟩)/√2 at energies ω_h ∓ g.
#[derive(Debug, Clone)]
pub struct EnergyEigensystem {
    /// Energies in label order (not sorted by value).
    pub energies: [f64; DIM],
    /// Column k is the eigenvector with label k.
    pub vectors: CMatrix,
}

impl EnergyEigensystem {
    pub fn vector(&self, label: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.vectors.column(label)
    }
}

/// Analytic eigensystem of the refrigerator Hamiltonian.
pub fn eigensystem(params: &RefrigeratorParams) -> Result<EnergyEigensystem, ModelError> {
    params.check_nondegenerate()?;
    let mut v = CMatrix::zeros(DIM, DIM);
    // Labels 0..=5: computational states |000⟩,|100⟩,|111⟩,|001⟩,|110⟩,|011⟩.
    let comp = [0usize, 4, 7, 1, 6, 3];
    for (label, &idx) in comp.iter().enumerate() {
        v[(idx, label)] = cre(1.0);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Label 6: (|101⟩ − |010⟩)/√2, energy ω_h − g.
    v[(5, 6)] = cre(s);
    v[(2, 6)] = cre(-s);
    // Label 7: (|101⟩ + |010⟩)/√2, energy ω_h + g.
    v[(5, 7)] = cre(s);
    v[(2, 7)] = cre(s);
    Ok(EnergyEigensystem {
        energies: params.analytic_energies(),
        vectors: v,
    })
}

/// One decay channel: the bath it belongs to, the signed transition frequency,
/// the (non-Hermitian) jump operator in the computational basis, and the
/// thermal rate Γ_{α,ω}.
#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub bath: Bath,
    pub frequency: f64,
    pub operator: CMatrix,
    pub rate: f64,
}

/// Thermal spectral rate Γ(ω) = γ ω³ e^{ω/2T} / sinh(ω/2T) of an unstructured
/// bosonic bath with flat spectral density, evaluated in the numerically
/// stable form 2γω³/(1 − e^{−ω/T}). Strictly positive for every ω ≠ 0 and
/// satisfying the KMS condition Γ(ω) = e^{ω/T} Γ(−ω).
pub fn spectral_rate(omega: f64, temperature: f64, gamma: f64) -> Result<f64, ModelError> {
    check_positive("T", temperature)?;
    check_positive("gamma", gamma)?;
    if omega == 0.0 {
        return Err(ModelError::ZeroFrequency);
    }
    let x = omega / temperature;
    Ok(2.0 * gamma * omega.powi(3) / (-f64::exp_m1(-x)))
}

/// Thermal rate of a two-level transition that relaxes toward its Gibbs
/// state at the frequency-independent total rate γ: emission γ·τ_g and
/// absorption γ·τ_e, where τ_g, τ_e are the thermal occupations. In one
/// signed-frequency formula: rate(ω) = γ/(1 + e^{−ω/T}), so that
/// rate(ω) + rate(−ω) = γ exactly while the KMS condition
/// rate(ω) = e^{ω/T} rate(−ω) still holds. This is the damping law of the
/// reference model whose per-qubit rates do not track the transition
/// frequency.
pub fn flat_thermal_rate(omega: f64, temperature: f64, gamma: f64) -> Result<f64, ModelError> {
    check_positive("T", temperature)?;
    check_positive("gamma", gamma)?;
    if omega == 0.0 {
        return Err(ModelError::ZeroFrequency);
    }
    Ok(gamma / (1.0 + (-omega / temperature).exp()))
}

/// Entries of the nine emission-side jump operators in the eigenbasis:
/// (bath, frequency kind, list of (row label, column label, coefficient)).
/// The frequency kinds are ω_α, ω_α + g, ω_α − g.
struct ChannelSpec {
    bath: Bath,
    dg: f64, // frequency offset in units of g: 0, +1, -1
    terms: &'static [(usize, usize, f64)],
}

/// A decay channel expressed by its matrix elements between eigenstate
/// labels: A_{α,ω} = √γ Σ c |m⟩⟨n|, stored as terms (m, n, c). Used by the
/// reduced (population-space) solvers, which never leave the eigenbasis.
#[derive(Debug, Clone)]
pub(crate) struct EigenChannel {
    pub bath: Bath,
    pub frequency: f64,
    pub rate: f64,
    pub terms: Vec<(usize, usize, f64)>,
}

/// All 18 channels in eigenbasis form (9 emission + 9 absorption).
pub(crate) fn eigen_channels(params: &RefrigeratorParams) -> Result<Vec<EigenChannel>, ModelError> {
    params.check_nondegenerate()?;
    let mut out = Vec::with_capacity(18);
    for spec in &CHANNEL_SPECS {
        let omega = params.omega(spec.bath) + spec.dg * params.g();
        let temperature = params.temperature(spec.bath);
        out.push(EigenChannel {
            bath: spec.bath,
            frequency: omega,
            rate: spectral_rate(omega, temperature, params.gamma())?,
            terms: spec.terms.to_vec(),
        });
        out.push(EigenChannel {
            bath: spec.bath,
            frequency: -omega,
            rate: spectral_rate(-omega, temperature, params.gamma())?,
            terms: spec.terms.iter().map(|&(m, n, c)| (n, m, c)).collect(),
        });
    }
    Ok(out)
}

const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;

const CHANNEL_SPECS: [ChannelSpec; 9] = [
    // Work bath: √γ(|1⟩⟨2| + |6⟩⟨3|); √γ(|4⟩⟨8| − |7⟩⟨5|)/√2; √γ(|4⟩⟨7| + |8⟩⟨5|)/√2
    ChannelSpec { bath: Bath::Work, dg: 0.0, terms: &[(0, 1, 1.0), (5, 2, 1.0)] },
    ChannelSpec { bath: Bath::Work, dg: 1.0, terms: &[(3, 7, FRAC), (6, 4, -FRAC)] },
    ChannelSpec { bath: Bath::Work, dg: -1.0, terms: &[(3, 6, FRAC), (7, 4, FRAC)] },
    // Hot bath: √γ(|2⟩⟨5| + |4⟩⟨6|); √γ(|7⟩⟨3| + |1⟩⟨8|)/√2; √γ(|8⟩⟨3| − |1⟩⟨7|)/√2
    ChannelSpec { bath: Bath::Hot, dg: 0.0, terms: &[(1, 4, 1.0), (3, 5, 1.0)] },
    ChannelSpec { bath: Bath::Hot, dg: 1.0, terms: &[(6, 2, FRAC), (0, 7, FRAC)] },
    ChannelSpec { bath: Bath::Hot, dg: -1.0, terms: &[(7, 2, FRAC), (0, 6, -FRAC)] },
    // Cold bath: √γ(|1⟩⟨4| + |5⟩⟨3|); √γ(|2⟩⟨8| − |7⟩⟨6|)/√2; √γ(|2⟩⟨7| + |8⟩⟨6|)/√2
    ChannelSpec { bath: Bath::Cold, dg: 0.0, terms: &[(0, 3, 1.0), (4, 2, 1.0)] },
    ChannelSpec { bath: Bath::Cold, dg: 1.0, terms: &[(1, 7, FRAC), (6, 5, -FRAC)] },
    ChannelSpec { bath: Bath::Cold, dg: -1.0, terms: &[(1, 6, FRAC), (7, 5, FRAC)] },
];

/// The eighteen decay channels of the delocalized master equation: for each
/// bath the emission operators at ω_α and ω_α ± g, plus their adjoints at the
/// negated frequencies. Each channel carries its thermal rate Γ_{α,ω}.
pub fn jump_channels(params: &RefrigeratorParams) -> Result<Vec<JumpChannel>, ModelError> {
    let eig = eigensystem(params)?;
    let sqrt_gamma = params.gamma().sqrt();
    eigen_channels(params)?
        .into_iter()
        .map(|ch| {
            let mut op = CMatrix::zeros(DIM, DIM);
            for &(row, col, coeff) in &ch.terms {
                let vi = eig.vector(row);
                let vj = eig.vector(col);
                op += (vi * vj.adjoint()).scale(coeff);
            }
            op.scale_mut(sqrt_gamma);
            Ok(JumpChannel {
                bath: ch.bath,
                frequency: ch.frequency,
                rate: ch.rate,
                operator: op,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    pub(crate) fn fig2_family() -> RefrigeratorFamily {
        RefrigeratorFamily::new(56.87, 0.1, 1e-6, 127.33, 66.25, 4.78).unwrap()
    }

    fn fig2_params() -> RefrigeratorParams {
        fig2_family().at(1.0).unwrap()
    }

    /// Random valid parameter set in a mild, well-conditioned regime.
    pub(crate) fn random_params(rng: &mut SplitMix64) -> RefrigeratorParams {
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
    fn fig2_parameters_are_valid() {
        let p = fig2_params();
        assert_eq!(p.omega_h(), 57.87);
        let flags = p.regime_warnings();
        assert!(flags.rotating_wave_ok);
        assert!(flags.born_markov_ok);
        assert!(p.check_nondegenerate().is_ok());
    }

    #[test]
    fn equal_temperatures_are_rejected() {
        let err = RefrigeratorParams::new(1.0, 0.5, 0.01, 1e-4, 5.0, 5.0, 1.0).unwrap_err();
        assert!(matches!(err, ModelError::TemperatureOrderViolation { .. }));
    }

    #[test]
    fn nonpositive_parameters_are_rejected() {
        assert!(matches!(
            RefrigeratorParams::new(-1.0, 0.5, 0.01, 1e-4, 5.0, 3.0, 1.0),
            Err(ModelError::NonPositiveParameter { name: "omega_w", .. })
        ));
        assert!(matches!(
            RefrigeratorParams::new(1.0, 0.5, 0.01, 0.0, 5.0, 3.0, 1.0),
            Err(ModelError::NonPositiveParameter { name: "gamma", .. })
        ));
    }

    #[test]
    fn g_equal_omega_c_is_degenerate() {
        // ω_h − g collides with ω_w when g = ω_c.
        let p = RefrigeratorParams::new(1.0, 0.3, 0.3, 1e-4, 5.0, 3.0, 1.0).unwrap();
        assert!(matches!(
            p.check_nondegenerate(),
            Err(ModelError::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn href_is_hermitian_and_has_the_right_coupling() {
        let p = fig2_params();
        let h = build_href(&p);
        let herm = (&h - h.adjoint()).norm();
        assert!(herm <= 1e-14 * h.norm());
        // ⟨101|H|010⟩ = g
        assert_relative_eq!(h[(5, 2)].re, p.g(), max_relative = 1e-15);
    }

    #[test]
    fn href_without_coupling_is_the_free_diagonal() {
        let p = RefrigeratorParams::new(2.0, 1.0, 0.0, 1e-4, 9.0, 5.0, 2.0).unwrap();
        let h = build_href(&p);
        let (wc, wh, ww) = (1.0, 3.0, 2.0);
        let expect = [
            0.0,
            wc,
            wh,
            wh + wc,
            ww,
            ww + wc,
            ww + wh,
            ww + wh + wc,
        ];
        for (k, e) in expect.iter().enumerate() {
            assert_relative_eq!(h[(k, k)].re, *e, epsilon = 1e-15);
        }
        assert_relative_eq!((&h - CMatrix::from_diagonal(&h.diagonal())).norm(), 0.0);
    }

    #[test]
    fn analytic_eigensystem_matches_numerical_diagonalization() {
        let mut rng = SplitMix64::keyed(11, 0, 0);
        for _ in 0..100 {
            let p = random_params(&mut rng);
            let h = build_href(&p);
            let eig = eigensystem(&p).unwrap();

            // Residuals H v = E v.
            for k in 0..DIM {
                let v = eig.vector(k).clone_owned();
                let res = (&h * &v - v.scale(eig.energies[k])).norm();
                assert!(res <= 1e-12 * (1.0 + eig.energies[k].abs()), "residual {res}");
            }

            // Orthonormality.
            let gram = eig.vectors.adjoint() * &eig.vectors;
            assert!((gram - CMatrix::identity(DIM, DIM)).norm() <= 1e-12);

            // Eigenvalues against a general-purpose dense solver.
            let se = h.clone().symmetric_eigen();
            let mut num: Vec<f64> = se.eigenvalues.iter().copied().collect();
            let mut ana = eig.energies.to_vec();
            num.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ana.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let scale = p.omega_h().max(1.0);
            for (a, b) in num.iter().zip(ana.iter()) {
                assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
            }

            // Eigenvectors up to phase: match each numerical vector to the
            // analytic one with the closest eigenvalue.
            for k in 0..DIM {
                let (j, _) = eig
                    .energies
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        (se.eigenvalues[k] - **a)
                            .abs()
                            .partial_cmp(&(se.eigenvalues[k] - **b).abs())
                            .unwrap()
                    })
                    .unwrap();
                let overlap = (eig.vector(j).adjoint() * se.eigenvectors.column(k))[(0, 0)].norm();
                assert!(overlap >= 1.0 - 1e-12, "overlap {overlap}");
            }
        }
    }

    #[test]
    fn split_pair_energies_and_degenerate_limit() {
        let p = fig2_params();
        let eig = eigensystem(&p).unwrap();
        assert_relative_eq!(eig.energies[6], p.omega_h() - p.g(), max_relative = 1e-15);
        assert_relative_eq!(eig.energies[7], p.omega_h() + p.g(), max_relative = 1e-15);

        let p0 = RefrigeratorParams::new(56.87, 1.0, 0.0, 1e-6, 127.33, 66.25, 4.78).unwrap();
        assert!(matches!(
            eigensystem(&p0),
            Err(ModelError::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn channels_complete_to_sigma_x() {
        let p = fig2_params();
        let channels = jump_channels(&p).unwrap();
        assert_eq!(channels.len(), 18);
        for bath in BATHS {
            let mut sum = CMatrix::zeros(DIM, DIM);
            for ch in channels.iter().filter(|c| c.bath == bath) {
                sum += &ch.operator;
            }
            let target = sigma_x_on(bath).scale(p.gamma().sqrt());
            assert!((sum - target).norm() <= 1e-12);
        }
    }

    #[test]
    fn channels_are_eigenoperators() {
        let mut rng = SplitMix64::keyed(12, 0, 0);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let h = build_href(&p);
            for ch in jump_channels(&p).unwrap() {
                let comm = &h * &ch.operator - &ch.operator * &h;
                let res = (comm + ch.operator.scale(ch.frequency)).norm();
                assert!(res <= 1e-12 * (1.0 + p.omega_h()), "residual {res}");
            }
        }
    }

    #[test]
    fn adjoint_pairing_and_kms_balance() {
        let mut rng = SplitMix64::keyed(13, 0, 0);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let channels = jump_channels(&p).unwrap();
            for ch in &channels {
                let partner = channels
                    .iter()
                    .find(|d| d.bath == ch.bath && d.frequency == -ch.frequency)
                    .expect("negated-frequency partner");
                assert!((partner.operator.clone() - ch.operator.adjoint()).norm() <= 1e-14);
                let t = p.temperature(ch.bath);
                let ratio = ch.rate / partner.rate;
                assert_relative_eq!(ratio, (ch.frequency / t).exp(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn channels_recombine_to_ladder_operators_at_tiny_g() {
        let p = RefrigeratorParams::new(56.87, 1.0, 1e-12, 1e-6, 127.33, 66.25, 4.78)
            .unwrap()
            .with_degeneracy_floor(1e-16);
        let channels = jump_channels(&p).unwrap();
        for bath in BATHS {
            let mut sum = CMatrix::zeros(DIM, DIM);
            for ch in channels.iter().filter(|c| c.bath == bath && c.frequency > 0.0) {
                sum += &ch.operator;
            }
            let target = sigma_minus_on(bath).scale(p.gamma().sqrt());
            assert!((sum - target).norm() <= 1e-9);
        }
    }

    #[test]
    fn spectral_rate_matches_direct_formula_and_value() {
        // Independent route: γ ω³ e^{x} / sinh(x) with x = ω/2T.
        let direct = |omega: f64, t: f64, gamma: f64| {
            let x = omega / (2.0 * t);
            gamma * omega.powi(3) * x.exp() / x.sinh()
        };
        for &(omega, t, gamma) in &[(1.0, 1.0, 1.0), (3.5, 0.7, 2e-3), (-2.0, 5.0, 1e-6)] {
            let ours = spectral_rate(omega, t, gamma).unwrap();
            assert_relative_eq!(ours, direct(omega, t, gamma), max_relative = 1e-13);
            assert!(ours > 0.0);
        }
        // Frozen value of Γ(1, 1, 1) = 2/(1 − e^{−1}).
        assert_relative_eq!(
            spectral_rate(1.0, 1.0, 1.0).unwrap(),
            3.163953413738653,
            max_relative = 1e-14
        );
    }

    #[test]
    fn spectral_rate_kms_and_small_frequency_limit() {
        let (t, gamma) = (2.5, 0.3);
        for &omega in &[0.1, 1.0, 7.0] {
            let up = spectral_rate(omega, t, gamma).unwrap();
            let down = spectral_rate(-omega, t, gamma).unwrap();
            assert_relative_eq!(up / down, (omega / t).exp(), max_relative = 1e-12);
        }
        // ω → 0⁺: Γ → 2γTω².
        let omega = 1e-7;
        let rate = spectral_rate(omega, t, gamma).unwrap();
        assert_relative_eq!(rate, 2.0 * gamma * t * omega * omega, max_relative = 1e-6);
        assert!(matches!(
            spectral_rate(0.0, t, gamma),
            Err(ModelError::ZeroFrequency)
        ));
    }

    #[test]
    fn delocalized_rate_splitting_shrinks_with_g() {
        let fam = fig2_family();
        let mut last = f64::INFINITY;
        for &g in &[3e-1, 1e-1, 3e-2, 1e-2, 3e-3] {
            let p = RefrigeratorParams::new(
                fam.omega_w(),
                1.0,
                g,
                fam.gamma(),
                fam.t_w(),
                fam.t_h(),
                fam.t_c(),
            )
            .unwrap();
            let diff = (spectral_rate(p.omega_c() + g, p.t_c(), p.gamma()).unwrap()
                - spectral_rate(p.omega_c() - g, p.t_c(), p.gamma()).unwrap())
            .abs();
            assert!(diff < last, "splitting must decrease as g drops");
            last = diff;
        }
    }

    #[test]
    fn config_roundtrip_and_errors() {
        let text = "# three-qubit machine\nomega_w = 56.87\nomega_c = 1.0\ng = 0.1\ngamma = 1e-6\nT_w = 127.33\nT_h = 66.25\nT_c = 4.78\n";
        let raw = parse_config(text).unwrap();
        let p = raw.params().unwrap();
        assert_eq!(p.omega_h(), 57.87);
        let json = p.to_json();
        assert!(json.contains("\"T_h\": 66.25"));

        assert!(parse_config("omega_w = oops").is_err());
        assert!(parse_config("unknown = 1.0").is_err());
        let no_wc = "omega_w = 1.0\ng = 0.01\ngamma = 1e-6\nT_w = 9\nT_h = 5\nT_c = 2\n";
        let raw = parse_config(no_wc).unwrap();
        assert!(raw.family().is_ok());
        assert!(raw.params().is_err());
    }
}
