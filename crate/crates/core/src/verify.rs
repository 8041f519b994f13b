//! Fixed-seed invariant suite behind the `verify` subcommand.
//!
//! Every check records how many instances it ran, the worst measured value
//! and the threshold that value is compared against. Failures are data: the
//! suite always runs to completion.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    inverse_seminorm_check, proposition_bound_check, sharpness_example, shifted_field,
};
use crate::bundles::{
    chern_number, fixture_bott_pullback, fixture_loring, fixture_random_near_projection,
    random_gapped_matrix,
};
use crate::calculus::{
    audit_edge_bounds, contour_projection, eigen_hermitian, spectral_gap,
    upper_projection_with_cut, upper_spectral_projection, ContourSpec,
};
use crate::error::{Error, Result};
use crate::grid_field::{
    largest_singular_value, lipschitz_constant, sup_distance, MatrixField, TorusGrid,
};
use crate::mollifier::{discretize, smooth, MollifierKernel};
use crate::pipeline::{smooth_project, PipelineConfig};
use crate::{CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Kernel,
    Smoothing,
    Calculus,
    Bounds,
    Bundles,
    Pipeline,
    All,
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kernel" => Scope::Kernel,
            "smoothing" => Scope::Smoothing,
            "calculus" => Scope::Calculus,
            "bounds" => Scope::Bounds,
            "bundles" => Scope::Bundles,
            "pipeline" => Scope::Pipeline,
            "all" => Scope::All,
            other => return Err(Error::Parameter(format!("unknown scope {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub scope: Scope,
    pub name: String,
    pub instances: usize,
    pub worst: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub scope: Scope,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }
}

struct Suite {
    scope: Scope,
    checks: Vec<CheckResult>,
}

impl Suite {
    /// Runs `body`, which returns (instances, worst); passes iff worst ≤ threshold.
    fn check<F>(&mut self, name: &str, threshold: f64, body: F)
    where
        F: FnOnce() -> Result<(usize, f64)>,
    {
        let result = match body() {
            Ok((instances, worst)) => CheckResult {
                scope: self.scope,
                name: name.into(),
                instances,
                worst,
                threshold,
                pass: worst <= threshold,
                error: None,
            },
            Err(e) => CheckResult {
                scope: self.scope,
                name: name.into(),
                instances: 0,
                worst: f64::NAN,
                threshold,
                pass: false,
                error: Some(e.to_string()),
            },
        };
        self.checks.push(result);
    }
}

pub fn run(scope: Scope) -> SuiteReport {
    let scopes: Vec<Scope> = match scope {
        Scope::All => vec![
            Scope::Kernel,
            Scope::Smoothing,
            Scope::Calculus,
            Scope::Bounds,
            Scope::Bundles,
            Scope::Pipeline,
        ],
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in scopes {
        let mut suite = Suite {
            scope: s,
            checks: Vec::new(),
        };
        match s {
            Scope::Kernel => kernel_checks(&mut suite),
            Scope::Smoothing => smoothing_checks(&mut suite),
            Scope::Calculus => calculus_checks(&mut suite),
            Scope::Bounds => bounds_checks(&mut suite),
            Scope::Bundles => bundles_checks(&mut suite),
            Scope::Pipeline => pipeline_checks(&mut suite),
            Scope::All => unreachable!(),
        }
        checks.extend(suite.checks);
    }
    let passed = checks.iter().all(|c| c.pass);
    SuiteReport {
        scope,
        checks,
        passed,
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn kernel_checks(suite: &mut Suite) {
    suite.check("kernel_mass_cartesian_quadrature", 1e-8, || {
        let mut worst = 0.0f64;
        let mut count = 0;
        for rp in [0.25, 0.5, 0.75] {
            for dim in [1, 2] {
                let k = MollifierKernel::new(dim, rp)?;
                // trapezoid on a Cartesian grid over [-1, 1]^n; endpoints vanish
                let n = 1200;
                let h = 2.0 / n as f64;
                let mass = if dim == 1 {
                    (0..=n).map(|i| k.profile(-1.0 + i as f64 * h)).sum::<f64>() * h
                } else {
                    let mut acc = 0.0;
                    for i in 0..=n {
                        let x = -1.0 + i as f64 * h;
                        for j in 0..=n {
                            let y = -1.0 + j as f64 * h;
                            acc += k.profile((x * x + y * y).sqrt());
                        }
                    }
                    acc * h * h
                };
                worst = worst.max((mass - 1.0).abs());
                count += 1;
            }
        }
        Ok((count, worst))
    });
    suite.check("kernel_plateau_and_support", 0.0, || {
        let mut bad = 0usize;
        let mut count = 0;
        for rp in [0.1, 0.5, 0.9] {
            let k = MollifierKernel::new(2, rp)?;
            let mut prev = f64::INFINITY;
            for i in 0..=1000 {
                let r = 1.2 * i as f64 / 1000.0;
                let v = k.profile(r);
                // values next to r = 1 may underflow to zero; monotonicity still holds
                let ok = v <= prev
                    && if r <= rp {
                        v == k.norm_const()
                    } else if r >= 1.0 {
                        v == 0.0
                    } else {
                        v >= 0.0 && v <= k.norm_const()
                    };
                prev = v;
                bad += usize::from(!ok);
                count += 1;
            }
        }
        Ok((count, bad as f64))
    });
}

fn smoothing_fixtures() -> Result<Vec<MatrixField>> {
    let sq = TorusGrid::square(24)?;
    let circle = TorusGrid::circle(64)?;
    let mut out = vec![
        fixture_loring(1, &sq)?,
        fixture_loring(2, &sq)?,
        fixture_bott_pullback(1, 1.0, &sq)?,
    ];
    for seed in 0..3 {
        out.push(fixture_random_near_projection(seed, &circle, 3, 0.2)?);
        out.push(fixture_random_near_projection(100 + seed, &sq, 2, 0.1)?);
    }
    Ok(out)
}

fn for_each_smoothing<F>(mut f: F) -> Result<(usize, f64)>
where
    F: FnMut(&MatrixField, &crate::mollifier::DiscreteStencil) -> Result<f64>,
{
    let mut worst = 0.0f64;
    let mut count = 0;
    for field in smoothing_fixtures()? {
        let kernel = MollifierKernel::new(field.grid().dim(), 0.5)?;
        for steps in [2.0, 3.0] {
            let stencil = discretize(&kernel, field.grid(), steps * field.grid().max_step())?;
            worst = worst.max(f(&field, &stencil)?);
            count += 1;
        }
    }
    Ok((count, worst))
}

fn smoothing_checks(suite: &mut Suite) {
    suite.check("constants_fixed_exactly", 0.0, || {
        for_each_smoothing(|f, s| {
            let c = MatrixField::constant(f.grid().clone(), &f.matrix(0), f.is_hermitian())?;
            sup_distance(&c, &smooth(&c, s)?)
        })
    });
    suite.check("contraction_ratio_minus_one", 1e-12, || {
        for_each_smoothing(|f, s| {
            let l = lipschitz_constant(f)?.value;
            let ls = lipschitz_constant(&smooth(f, s)?)?.value;
            Ok(ls / l - 1.0)
        })
    });
    suite.check("uniform_approximation_over_l_eps", 1.0, || {
        for_each_smoothing(|f, s| {
            let l = lipschitz_constant(f)?.value;
            Ok(sup_distance(f, &smooth(f, s)?)? / (l * s.epsilon))
        })
    });
    suite.check("linearity_defect", 1e-13, || {
        for_each_smoothing(|f, s| {
            let g = f.conjugate_by(&fixed_unitary(f.m()))?;
            let alpha = re(-1.7);
            let lhs = smooth(&f.axpy(alpha, &g)?, s)?;
            let rhs = smooth(f, s)?.axpy(alpha, &smooth(&g, s)?)?;
            sup_distance(&lhs, &rhs)
        })
    });
    suite.check("hermitian_defect_growth", 1e-13, || {
        for_each_smoothing(|f, s| {
            Ok(smooth(f, s)?.max_hermitian_defect() - f.max_hermitian_defect())
        })
    });
    suite.check("halved_radius_within_bound", 1.0, || {
        for_each_smoothing(|f, s| {
            let half = s.epsilon / 2.0;
            let kernel = MollifierKernel::new(f.grid().dim(), 0.5)?;
            let stencil = match discretize(&kernel, f.grid(), half) {
                Ok(st) => st,
                Err(_) => return Ok(0.0),
            };
            let l = lipschitz_constant(f)?.value;
            Ok(sup_distance(f, &smooth(f, &stencil)?)? / (l * half))
        })
    });
}

/// A fixed non-diagonal unitary of size m.
pub fn fixed_unitary(m: usize) -> CMatrix {
    let h = CMatrix::from_fn(m, m, |r, c| {
        if r == c {
            re(0.3 * r as f64)
        } else if r < c {
            C64::new(0.2 * (r + 1) as f64, 0.1 * (c + 1) as f64)
        } else {
            C64::new(0.2 * (c + 1) as f64, -0.1 * (r + 1) as f64)
        }
    });
    let e = eigen_hermitian(&h).expect("hermitian by construction");
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        e.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)),
    ));
    &e.vectors * d * e.vectors.adjoint()
}

const CALCULUS_DELTAS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

fn gapped_instances(count: u64) -> impl Iterator<Item = (CMatrix, f64)> {
    (0..count).map(|i| {
        let delta = CALCULUS_DELTAS[(i % 4) as usize];
        let m = 2 + (i % 5) as usize;
        (random_gapped_matrix(1000 + i, m, delta), delta)
    })
}

fn calculus_checks(suite: &mut Suite) {
    suite.check("contour_vs_eigen_projection", 1e-6, || {
        let mut worst = 0.0f64;
        for (a, delta) in gapped_instances(100) {
            let spec = ContourSpec::new(5.0, 16, delta)?;
            let c = contour_projection(&a, &spec)?;
            let q = upper_spectral_projection(&a, delta)?;
            worst = worst.max(largest_singular_value(&(c.projection - q)));
        }
        Ok((100, worst))
    });
    suite.check("resolvent_edge_bounds_ratio", 1.0 + 1e-10, || {
        let mut worst = 0.0f64;
        for (a, delta) in gapped_instances(100) {
            for s in [5.0, 50.0] {
                let audit = audit_edge_bounds(&a, &ContourSpec::new(s, 16, delta)?, 256)?;
                worst = worst.max(audit.worst_ratio);
            }
        }
        Ok((200, worst))
    });
    // each defect divided by its tolerance: 1e-12·m for idempotence and
    // self-adjointness, 1e-11·(1+‖a‖) for the commutator, 1e-12 for the trace
    suite.check("projection_axioms_relative_defect", 1.0, || {
        let mut worst = 0.0f64;
        for (a, delta) in gapped_instances(100) {
            let q = upper_spectral_projection(&a, delta)?;
            let gap = spectral_gap(&a, delta)?;
            let m = a.nrows() as f64;
            let scale = 1.0 + largest_singular_value(&a);
            worst = worst
                .max(largest_singular_value(&(&q * &q - &q)) / (1e-12 * m))
                .max(largest_singular_value(&(&q - q.adjoint())) / (1e-12 * m))
                .max(largest_singular_value(&(&q * &a - &a * &q)) / (1e-11 * scale))
                .max((q.trace().re - gap.upper_count as f64).abs() / 1e-12);
        }
        Ok((100, worst))
    });
    suite.check("cut_point_independence_mismatches", 0.0, || {
        let mut bad = 0usize;
        for (a, delta) in gapped_instances(100) {
            let base = upper_projection_with_cut(&a, delta, 0.5)?;
            for cut in [(delta + 0.5) / 2.0, 1.0 - delta - 1e-9] {
                bad += usize::from(upper_projection_with_cut(&a, delta, cut)? != base);
            }
        }
        Ok((200, bad as f64))
    });
    suite.check("distance_to_projection_minus_delta_plus_r", 0.0, || {
        let mut worst = f64::NEG_INFINITY;
        for (a, delta) in gapped_instances(100) {
            let q = upper_spectral_projection(&a, delta)?;
            let r = spectral_gap(&a, delta)?.r;
            let d = largest_singular_value(&(q - &a));
            worst = worst.max(d - (delta + r) * (1.0 + 1e-12));
        }
        Ok((100, worst))
    });
}

fn bounds_checks(suite: &mut Suite) {
    suite.check("sharpness_ratio_deviation", 1e-15, || {
        let mut worst = 0.0f64;
        for i in 0..9 {
            let delta = 0.05 + 0.04 * (i + 1) as f64;
            let r = sharpness_example(delta)?;
            worst = worst.max((r.l_fa / r.bound - 1.0).abs());
            if !r.bound_attained {
                worst = worst.max(1.0);
            }
        }
        Ok((9, worst))
    });
    suite.check("proposition_ratio", 1.0 + 1e-9, || {
        let mut worst = 0.0f64;
        let mut count = 0;
        for i in 0..40u64 {
            let delta = CALCULUS_DELTAS[(i % 4) as usize];
            let m = 2 + (i % 3) as usize;
            let grid = if i % 2 == 0 {
                TorusGrid::circle(32)?
            } else {
                TorusGrid::square(16)?
            };
            let a = fixture_random_near_projection(i, &grid, m, delta)?;
            worst = worst.max(proposition_bound_check(&a, delta)?.ratio);
            count += 1;
        }
        Ok((count, worst))
    });
    suite.check("inverse_seminorm_ratio", 1.0 + 1e-9, || {
        let mut worst = 0.0f64;
        let mut count = 0;
        let circle = TorusGrid::circle(64)?;
        let b = MatrixField::from_fn(circle.clone(), 1, true, |x| {
            CMatrix::from_element(1, 1, re(2.0 + (2.0 * PI * x[0]).sin()))
        })?;
        worst = worst.max(inverse_seminorm_check(&b)?.ratio);
        count += 1;
        for seed in 0..4u64 {
            let delta = 0.2;
            let a = fixture_random_near_projection(seed, &TorusGrid::circle(24)?, 2, delta)?;
            for s in [2.0, 10.0] {
                for node in crate::calculus::contour_nodes(s, 4) {
                    let r = inverse_seminorm_check(&shifted_field(&a, node.z)?)?;
                    worst = worst.max(r.ratio);
                    count += 1;
                }
            }
        }
        Ok((count, worst))
    });
    suite.check("seminorm_axioms_defect", 1e-12, || {
        let grid = TorusGrid::circle(32)?;
        let mut worst = 0.0f64;
        let one = MatrixField::constant(grid.clone(), &CMatrix::identity(3, 3), true)?;
        worst = worst.max(lipschitz_constant(&one)?.value);
        for seed in 0..5u64 {
            let a = fixture_random_near_projection(seed, &grid, 3, 0.2)?;
            let b = fixture_random_near_projection(seed + 50, &grid, 3, 0.2)?;
            let (la, lb) = (lipschitz_constant(&a)?.value, lipschitz_constant(&b)?.value);
            let alpha = -2.5 + seed as f64;
            let lscaled = lipschitz_constant(&a.scale(re(alpha)))?.value;
            worst = worst.max((lscaled - alpha.abs() * la).abs() / (alpha.abs() * la));
            let lsum = lipschitz_constant(&a.axpy(re(1.0), &b)?)?.value;
            worst = worst.max((lsum - la - lb) / (la + lb));
        }
        Ok((11, worst))
    });
}

fn bundles_checks(suite: &mut Suite) {
    suite.check("loring_chern_abs_error", 0.0, || {
        let mut worst = 0.0f64;
        for k in 1..=3i64 {
            for n in [64, 96] {
                let c = chern_number(&fixture_loring(k, &TorusGrid::square(n)?)?)?;
                worst = worst.max((c.chern.abs() - k).abs() as f64);
            }
        }
        Ok((6, worst))
    });
    suite.check("chern_residual", 0.1, || {
        let mut worst = 0.0f64;
        for k in 1..=3i64 {
            let g = TorusGrid::square(64)?;
            worst = worst.max(chern_number(&fixture_loring(k, &g)?)?.residual);
            worst = worst.max(chern_number(&fixture_bott_pullback(k, 1.0, &g)?)?.residual);
        }
        Ok((6, worst))
    });
    suite.check("chern_conjugation_and_sum_mismatches", 0.0, || {
        let g = TorusGrid::square(32)?;
        let p1 = fixture_loring(1, &g)?;
        let p2 = fixture_bott_pullback(2, 1.0, &g)?;
        let (c1, c2) = (chern_number(&p1)?.chern, chern_number(&p2)?.chern);
        let mut bad = 0;
        bad += usize::from(chern_number(&p1.conjugate_by(&fixed_unitary(2))?)?.chern != c1);
        bad += usize::from(chern_number(&p1.direct_sum(&p2)?)?.chern != c1 + c2);
        Ok((2, bad as f64))
    });
    suite.check("loring_lipschitz_refinement_change", 0.05, || {
        let l64 = lipschitz_constant(&fixture_loring(1, &TorusGrid::square(64)?)?)?.value;
        let l128 = lipschitz_constant(&fixture_loring(1, &TorusGrid::square(128)?)?)?.value;
        Ok((2, (l128 - l64).abs() / l128))
    });
}

fn pipeline_checks(suite: &mut Suite) {
    let run = || -> Result<(crate::pipeline::PipelineReport, String)> {
        let p = fixture_loring(1, &TorusGrid::square(64)?)?;
        let mut config = PipelineConfig::new(0.2);
        config.check_chern = true;
        let out = smooth_project(&p, &config)?;
        let json = out.report.to_json()?;
        Ok((out.report, json))
    };
    let first = run();
    suite.check("loring_certificate_failures", 0.0, || {
        let (r, _) = first.as_ref().map_err(|e| Error::Parameter(e.to_string()))?.clone();
        let flags = [r.projection_ok, r.bound_ok, r.eps_ok, r.twodelta_ok, r.chern_ok == Some(true)];
        Ok((flags.len(), flags.iter().filter(|f| !**f).count() as f64))
    });
    suite.check("retry_sup_increase", 0.0, || {
        let (r, _) = first.as_ref().map_err(|e| Error::Parameter(e.to_string()))?.clone();
        let worst = r
            .attempts
            .windows(2)
            .map(|w| w[1].sup_p_p1 - w[0].sup_p_p1)
            .fold(0.0, f64::max);
        Ok((r.attempts.len(), worst))
    });
    suite.check("report_determinism_mismatch", 0.0, || {
        let (_, a) = first.as_ref().map_err(|e| Error::Parameter(e.to_string()))?.clone();
        let (_, b) = run()?;
        Ok((2, f64::from(u8::from(a != b))))
    });
}
