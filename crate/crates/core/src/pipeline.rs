//! End-to-end driver: mollify a projection field, certify the spectral gap,
//! take the upper spectral projection, and record every metric needed to
//! re-check ‖p − q‖∞ ≤ 2δ and L(q) ≤ L(p₁)/(1 − 2δ) without rerunning.

use serde::{Deserialize, Serialize};

use crate::bounds::BOUND_RTOL;
use crate::bundles::{chern_number, ChernReport};
use crate::calculus::{apply_calculus, spectral_gap_field, SpectrumReport};
use crate::error::{Error, Result};
use crate::grid_field::{is_projection, lipschitz_constant, sup_distance, MatrixField};
use crate::mollifier::{
    discretize, second_difference_diagnostic, smooth, MollifierKernel, DEFAULT_PLATEAU,
};

pub const DEFAULT_MAX_RETRIES: usize = 8;
/// Tolerance for "p is a projection" on input.
pub const INPUT_PROJECTION_TOL: f64 = 1e-8;
/// Tolerance for "q is a projection" on output.
pub const OUTPUT_PROJECTION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Auto,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub target_eps: f64,
    pub delta: Choice,
    pub epsilon_smooth: Choice,
    pub kernel_plateau: f64,
    pub max_retries: usize,
    pub check_chern: bool,
}

impl PipelineConfig {
    pub fn new(target_eps: f64) -> Self {
        Self {
            target_eps,
            delta: Choice::Auto,
            epsilon_smooth: Choice::Auto,
            kernel_plateau: DEFAULT_PLATEAU,
            max_retries: DEFAULT_MAX_RETRIES,
            check_chern: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_eps > 0.0 && self.target_eps.is_finite()) {
            return Err(Error::Parameter(format!(
                "target epsilon {} must be positive",
                self.target_eps
            )));
        }
        if let Choice::Value(d) = self.delta {
            if !(d > 0.0 && d < 0.5) {
                return Err(Error::Parameter(format!("delta {d} not in (0, 1/2)")));
            }
        }
        if let Choice::Value(e) = self.epsilon_smooth {
            if !(e > 0.0 && e < 0.5) {
                return Err(Error::Parameter(format!(
                    "smoothing radius {e} not in (0, 1/2)"
                )));
            }
        }
        if self.max_retries < 1 {
            return Err(Error::Parameter("max_retries must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub delta: f64,
    pub epsilon_smooth: f64,
    pub l_p: f64,
    /// The smoothing radius was raised to the two-grid-step floor, so the a
    /// priori bound L(p)·ε_smooth ≤ δ/2 no longer holds and the distance
    /// ‖p − p₁‖∞ is certified a posteriori instead.
    pub clamped: bool,
}

/// δ = min(0.1, ε/4); ε_smooth = δ/(2·L(p)) so that L(p)·ε_smooth ≤ δ/2,
/// raised to at least two grid steps and capped at 1/4.
pub fn choose_parameters(config: &PipelineConfig, p: &MatrixField) -> Result<Parameters> {
    config.validate()?;
    let proj = is_projection(p, INPUT_PROJECTION_TOL);
    if !proj.ok {
        return Err(Error::NotProjection(format!(
            "idempotence defect {:e}, self-adjointness defect {:e}",
            proj.max_idem_defect, proj.max_sa_defect
        )));
    }
    let l_p = lipschitz_constant(p)?.value;
    let delta = match config.delta {
        Choice::Value(d) => d,
        Choice::Auto => auto_delta(config.target_eps),
    };
    let floor = 2.0 * p.grid().max_step();
    if floor >= 0.25 {
        return Err(Error::CoarseGrid(format!(
            "two grid steps ({floor}) do not fit inside the smoothing radius cap 1/4"
        )));
    }
    let (epsilon_smooth, clamped) = match config.epsilon_smooth {
        Choice::Value(e) => (e, false),
        Choice::Auto => {
            let raw = auto_smoothing_radius(l_p, delta);
            if raw < floor {
                (floor, true)
            } else {
                (raw.min(0.25), false)
            }
        }
    };
    Ok(Parameters {
        delta,
        epsilon_smooth,
        l_p,
        clamped,
    })
}

pub fn auto_delta(target_eps: f64) -> f64 {
    (target_eps / 4.0).min(0.1)
}

/// Largest radius with L·ε ≤ δ/2 (unbounded for constant fields).
pub fn auto_smoothing_radius(l_p: f64, delta: f64) -> f64 {
    if l_p > 0.0 {
        delta / (2.0 * l_p)
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub epsilon_smooth: f64,
    pub stencil_size: usize,
    pub sup_p_p1: f64,
    pub gap_certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub grid_sizes: Vec<usize>,
    pub matrix_dim: usize,
    pub delta_used: f64,
    pub epsilon_smooth_used: f64,
    pub smoothing_clamped: bool,
    pub kernel_norm_const: f64,
    pub attempts: Vec<Attempt>,
    pub retries_used: usize,
    pub spectrum_p1: SpectrumReport,
    pub l_p: f64,
    pub l_p1: f64,
    pub l_q: f64,
    pub sup_p_p1: f64,
    pub sup_q_p1: f64,
    pub sup_q_p: f64,
    pub idem_defect_q: f64,
    pub sa_defect_q: f64,
    /// L(p₁)/(1 − 2δ)
    pub lipschitz_bound: f64,
    pub projection_ok: bool,
    pub bound_ok: bool,
    pub eps_ok: bool,
    pub twodelta_ok: bool,
    /// L(q) < L(p) + ε
    pub lipschitz_eps_ok: bool,
    pub chern_p: Option<ChernReport>,
    pub chern_q: Option<ChernReport>,
    pub chern_ok: Option<bool>,
    /// Largest centered second difference of p and q (diagnostic only).
    pub roughness_p: f64,
    pub roughness_q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

impl PipelineReport {
    /// All certified flags hold.
    pub fn certified(&self) -> bool {
        self.projection_ok
            && self.bound_ok
            && self.eps_ok
            && self.twodelta_ok
            && self.chern_ok.unwrap_or(true)
    }

    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }
}

pub struct PipelineOutput {
    pub q: MatrixField,
    pub p1: MatrixField,
    pub report: PipelineReport,
}

/// Smooth a projection field and project it back onto projections.
pub fn smooth_project(p: &MatrixField, config: &PipelineConfig) -> Result<PipelineOutput> {
    let params = choose_parameters(config, p)?;
    let delta = params.delta;
    let kernel = MollifierKernel::new(p.grid().dim(), config.kernel_plateau)?;
    let ph = p.hermitize();

    let mut attempts = Vec::new();
    let mut eps_s = params.epsilon_smooth;
    let p1 = loop {
        let stencil = match discretize(&kernel, p.grid(), eps_s) {
            Ok(s) => s,
            Err(Error::Parameter(_)) if !attempts.is_empty() => {
                return Err(Error::RetriesExhausted {
                    retries: attempts.len() - 1,
                })
            }
            Err(e) => return Err(e),
        };
        let p1 = smooth(&ph, &stencil)?;
        let sup_p_p1 = sup_distance(p, &p1)?;
        let gap = spectral_gap_field(&p1, delta)?;
        let ok = gap.certified() && sup_p_p1 <= delta;
        attempts.push(Attempt {
            epsilon_smooth: eps_s,
            stencil_size: stencil.len(),
            sup_p_p1,
            gap_certified: gap.certified(),
        });
        if ok {
            break p1;
        }
        if attempts.len() > config.max_retries {
            return Err(Error::RetriesExhausted {
                retries: config.max_retries,
            });
        }
        eps_s *= 0.5;
    };
    let last = *attempts.last().unwrap();
    let spectrum_p1 = spectral_gap_field(&p1, delta)?;
    let q = apply_calculus(&p1, delta)?;

    let l_p = params.l_p;
    let l_p1 = lipschitz_constant(&p1)?.value;
    let l_q = lipschitz_constant(&q)?.value;
    let sup_q_p1 = sup_distance(&q, &p1)?;
    let sup_q_p = sup_distance(&q, p)?;
    let proj = is_projection(&q, OUTPUT_PROJECTION_TOL);
    let lipschitz_bound = l_p1 / (1.0 - 2.0 * delta);

    let (chern_p, chern_q) = if config.check_chern {
        (Some(chern_number(p)?), Some(chern_number(&q)?))
    } else {
        (None, None)
    };
    let chern_ok = match (&chern_p, &chern_q) {
        (Some(a), Some(b)) => Some(a.chern == b.chern),
        _ => None,
    };

    let report = PipelineReport {
        config: config.clone(),
        grid_sizes: p.grid().sizes().to_vec(),
        matrix_dim: p.m(),
        delta_used: delta,
        epsilon_smooth_used: last.epsilon_smooth,
        smoothing_clamped: params.clamped,
        kernel_norm_const: kernel.norm_const(),
        retries_used: attempts.len() - 1,
        attempts,
        spectrum_p1,
        l_p,
        l_p1,
        l_q,
        sup_p_p1: last.sup_p_p1,
        sup_q_p1,
        sup_q_p,
        idem_defect_q: proj.max_idem_defect,
        sa_defect_q: proj.max_sa_defect,
        lipschitz_bound,
        projection_ok: proj.ok,
        bound_ok: l_q <= lipschitz_bound * (1.0 + BOUND_RTOL),
        eps_ok: sup_q_p < config.target_eps,
        twodelta_ok: sup_q_p <= 2.0 * delta * (1.0 + 1e-12),
        lipschitz_eps_ok: l_q < l_p + config.target_eps,
        chern_p,
        chern_q,
        chern_ok,
        roughness_p: second_difference_diagnostic(p),
        roughness_q: second_difference_diagnostic(&q),
        generated_unix: None,
    };
    Ok(PipelineOutput { q, p1, report })
}

/// The calculus half of the pipeline on an already-smoothed Hermitian field:
/// returns q together with (L(p₁), L(q)).
pub fn project_smoothed(p1: &MatrixField, delta: f64) -> Result<(MatrixField, f64, f64)> {
    let q = apply_calculus(p1, delta)?;
    let l_p1 = lipschitz_constant(p1)?.value;
    let l_q = lipschitz_constant(&q)?.value;
    Ok((q, l_p1, l_q))
}

/// Scalar field on T¹ with plateaus at δ and 1 − δ joined by one-step ramps:
/// the grid analogue of the two-point extremal example.
pub fn two_level_field(n: usize, delta: f64) -> Result<MatrixField> {
    let grid = crate::grid_field::TorusGrid::circle(n)?;
    MatrixField::from_fn(grid, 1, true, move |x| {
        let v = if x[0] < 0.5 { delta } else { 1.0 - delta };
        crate::CMatrix::from_element(1, 1, crate::C64::new(v, 0.0))
    })
}
