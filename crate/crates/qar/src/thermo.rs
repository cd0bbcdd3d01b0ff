//! Stationary thermodynamics: heat currents, coefficient of performance,
//! Carnot ceiling, cooling window, virtual temperature, entropy production.
//!
//! The heat current fed by bath α into the machine is
//! Q̇_α = Tr{H_ref · D_α[ρ∞]}. At stationarity the three currents balance
//! (first law) and the entropy production σ = −Σ_α Q̇_α/T_α is nonnegative
//! (Spohn's inequality). Refrigeration means Q̇_c > 0: heat leaves the cold
//! bath. The coefficient of performance is ε = Q̇_c/Q̇_w, bounded by the
//! Carnot value ε_C = (1 − T_h/T_w)/(T_h/T_c − 1).
//!
//! Numerics: the currents are tiny differences of large one-way fluxes, so
//! they are evaluated in double-double arithmetic from a refined stationary
//! vector. This keeps |ΣQ̇_α| at the rounding level of the reported values
//! themselves rather than at the (much coarser) level of the fluxes.

use serde::Serialize;
use thiserror::Error;

use crate::dd::{matvec_c64_cdd, Cdd};
use crate::dynamics::{vec_of, DensityMatrix, DynamicsError, Liouvillian};
use crate::model::{ModelError, RefrigeratorFamily, RefrigeratorParams, BATHS, DIM};

const VDIM: usize = DIM * DIM;

#[derive(Debug, Error)]
pub enum ThermoError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("state is not stationary (relative residual {residual:e})")]
    NotStationary { residual: f64 },
    #[error("work current is zero at this precision; the COP is undefined")]
    ZeroWorkCurrent,
}

/// Operating regime of a stationary point with respect to refrigeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CopStatus {
    /// Q̇_c > 0 and Q̇_w > 0: the machine refrigerates and ε is meaningful.
    Cooling,
    /// Currents are finite but the machine is not refrigerating.
    NonCooling,
    /// |Q̇_w| sits below 1e-14 of the current scale; ε is ill-defined.
    ZeroWork,
}

/// Stationary heat currents and the derived performance figures. `cop` and
/// `cop_ratio` are present only in the cooling regime; outside it the raw
/// currents still tell the story.
#[derive(Debug, Clone, Serialize)]
pub struct HeatCurrentReport {
    pub qdot_w: f64,
    pub qdot_h: f64,
    pub qdot_c: f64,
    pub cop: Option<f64>,
    pub carnot: f64,
    pub cop_ratio: Option<f64>,
    /// σ = −Σ_α Q̇_α/T_α.
    pub entropy_production: f64,
    pub status: CopStatus,
}

impl HeatCurrentReport {
    /// Column order of `csv_row`.
    pub const CSV_HEADER: &'static str =
        "omega_c,qdot_w,qdot_h,qdot_c,cop,carnot,cop_ratio,entropy_production";

    /// One CSV row, prefixed by the cold frequency it belongs to. Fields
    /// without a value (non-cooling points) are left empty.
    pub fn csv_row(&self, omega_c: f64) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            omega_c,
            self.qdot_w,
            self.qdot_h,
            self.qdot_c,
            opt(self.cop),
            self.carnot,
            opt(self.cop_ratio),
            self.entropy_production
        )
    }

    /// The COP, or an error when the work current is too small to divide by.
    pub fn cop_checked(&self) -> Result<f64, ThermoError> {
        match self.status {
            CopStatus::ZeroWork => Err(ThermoError::ZeroWorkCurrent),
            _ => Ok(self.qdot_c / self.qdot_w),
        }
    }

    pub(crate) fn from_currents(params: &RefrigeratorParams, q: [f64; 3], flux_scale: f64) -> Self {
        let [qdot_w, qdot_h, qdot_c] = q;
        let carnot = carnot_cop(params.t_w(), params.t_h(), params.t_c())
            .expect("validated temperatures");
        // A net current below 1e-14 of the one-way fluxes it is the
        // difference of sits at the rounding floor: treat it as zero.
        let status = if qdot_w.abs() <= 1e-14 * flux_scale {
            CopStatus::ZeroWork
        } else if qdot_c > 0.0 && qdot_w > 0.0 {
            CopStatus::Cooling
        } else {
            CopStatus::NonCooling
        };
        let cop = match status {
            CopStatus::Cooling => Some(qdot_c / qdot_w),
            _ => None,
        };
        let entropy_production =
            -(qdot_w / params.t_w() + qdot_h / params.t_h() + qdot_c / params.t_c());
        HeatCurrentReport {
            qdot_w,
            qdot_h,
            qdot_c,
            cop,
            carnot,
            cop_ratio: cop.map(|e| e / carnot),
            entropy_production,
            status,
        }
    }
}

/// Relative stationarity tolerance accepted by `heat_currents`.
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

/// Heat currents Q̇_α = Tr{H_ref · D_α[ρ∞]} of a stationary state, one per
/// bath, plus the derived COP figures.
///
/// The passed state is verified to be stationary, then polished against the
/// generator (double-double iterative refinement) so that the reported
/// currents obey the first law to roughly the rounding of their own values.
pub fn heat_currents(
    liouvillian: &Liouvillian,
    rho_inf: &DensityMatrix,
) -> Result<HeatCurrentReport, ThermoError> {
    let residual = (liouvillian.total() * vec_of(rho_inf.matrix())).norm()
        / (liouvillian.norm_spectral() * rho_inf.matrix().norm());
    if residual > STATIONARITY_TOLERANCE {
        return Err(ThermoError::NotStationary { residual });
    }
    let x = liouvillian.refine_steady_dd(rho_inf.matrix(), 4);

    // Tr{H M} = vec(H)† vec(M) for Hermitian H under column stacking.
    let h = liouvillian.hamiltonian();
    let hvec = vec_of(h);
    let xabs: Vec<f64> = x.iter().map(|c| c.to_c64().norm()).collect();
    let mut scratch = vec![Cdd::ZERO; VDIM];
    let mut q = [0.0f64; 3];
    let mut flux_scale = 0.0f64;
    for bath in BATHS {
        let d = liouvillian.dissipator(bath);
        matvec_c64_cdd(d.as_slice(), VDIM, VDIM, &x, &mut scratch);
        let mut acc = Cdd::ZERO;
        for (hk, yk) in hvec.iter().zip(scratch.iter()) {
            acc = acc.add(yk.mul_c64(hk.conj()));
        }
        debug_assert!(acc.im.to_f64().abs() <= 1e-20 * (1.0 + acc.re.to_f64().abs()));
        q[bath.index()] = acc.re.to_f64();
        // One-way flux magnitude: the same trace with every cancellation
        // removed, |H|ᵀ·|D_α|·|ρ|. The net current is meaningful only well
        // above rounding relative to this.
        let mut mag = 0.0f64;
        for (k, hk) in hvec.iter().enumerate() {
            if hk.norm() == 0.0 {
                continue;
            }
            let mut row = 0.0f64;
            for (j, xj) in xabs.iter().enumerate() {
                row += d[(k, j)].norm() * xj;
            }
            mag += hk.norm() * row;
        }
        flux_scale = flux_scale.max(mag);
    }
    Ok(HeatCurrentReport::from_currents(
        liouvillian.params(),
        q,
        flux_scale,
    ))
}

/// Report built through the reduced solvers; same contract as
/// `heat_currents`, used by sweeps and campaigns.
pub(crate) fn heat_report_reduced(
    params: &RefrigeratorParams,
    mode: crate::dynamics::DissipationMode,
) -> Result<HeatCurrentReport, ThermoError> {
    let (q, flux_scale) = crate::dynamics::heat_currents_reduced(params, mode)?;
    Ok(HeatCurrentReport::from_currents(params, q, flux_scale))
}

/// Carnot COP ε_C = (1 − T_h/T_w)/(T_h/T_c − 1). Returns +∞ once T_c is
/// within relative 1e-12 of T_h (the pole of the formula).
pub fn carnot_cop(t_w: f64, t_h: f64, t_c: f64) -> Result<f64, ThermoError> {
    if !(t_w > t_h && t_h > t_c && t_c > 0.0) {
        return Err(ThermoError::Model(ModelError::TemperatureOrderViolation {
            t_w,
            t_h,
            t_c,
        }));
    }
    let denom = t_h / t_c - 1.0;
    if denom < 1e-12 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 - t_h / t_w) / denom)
}

/// Upper edge of the cooling window in the cold frequency, with
/// ω_h = ω_c + ω_w already eliminated:
/// ω_c,max = ω_w · T_c (T_w − T_h) / (T_w (T_h − T_c)).
///
/// At ω_c = ω_c,max the virtual temperature equals T_c and cooling stops.
pub fn cooling_window_max(family: &RefrigeratorFamily) -> f64 {
    family.omega_w() * family.t_c() * (family.t_w() - family.t_h())
        / (family.t_w() * (family.t_h() - family.t_c()))
}

/// Virtual temperature of the work+hot pair seen by the cold qubit:
/// T_v = (ω_h − ω_w)/(ω_h/T_h − ω_w/T_w). May be negative or infinite for
/// non-cooling configurations; see `is_cooling_configuration`.
pub fn virtual_temperature(params: &RefrigeratorParams) -> f64 {
    virtual_temperature_raw(params.omega_w(), params.omega_h(), params.t_w(), params.t_h())
}

/// Same formula on raw values (no parameter-ordering requirements).
pub fn virtual_temperature_raw(omega_w: f64, omega_h: f64, t_w: f64, t_h: f64) -> f64 {
    (omega_h - omega_w) / (omega_h / t_h - omega_w / t_w)
}

/// Whether the configuration filters a virtual temperature inside [0, T_c],
/// i.e. sits inside the cooling window.
pub fn is_cooling_configuration(params: &RefrigeratorParams) -> bool {
    let tv = virtual_temperature(params);
    (0.0..=params.t_c()).contains(&tv)
}
