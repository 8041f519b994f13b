//! Riesz projection by quadrature of (2πi)⁻¹∮(z−a)⁻¹dz over the rectangle
//! with vertices 1/2 ± si and (1+s) ± si, traversed anti-clockwise.
//!
//! The holomorphic function of the functional calculus is identically 1 on
//! and inside the rectangle, so it drops out of the integrand.

use serde::{Deserialize, Serialize};

use super::eigen::eigen_hermitian;
use super::{check_delta, spectral_gap};
use crate::error::{Error, Result};
use crate::grid_field::largest_singular_value;
use crate::{CMatrix, C64};

const MAX_DOUBLINGS: usize = 20;
const INTERNAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    /// Half-height of the rectangle; must exceed R.
    pub s: f64,
    /// Initial midpoint-rule segments per edge.
    pub segments: usize,
    pub delta: f64,
}

impl ContourSpec {
    pub fn new(s: f64, segments: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if segments < 16 {
            return Err(Error::Parameter(format!("need at least 16 segments, got {segments}")));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Parameter(format!("half-height {s} must be positive")));
        }
        Ok(Self { s, segments, delta })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    /// 1/2 − si → (1+s) − si
    Bottom,
    /// (1+s) − si → (1+s) + si
    Right,
    /// (1+s) + si → 1/2 + si
    Top,
    /// 1/2 + si → 1/2 − si
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourNode {
    pub edge: Edge,
    pub z: C64,
    pub dz: C64,
}

/// Midpoint nodes, edge by edge in traversal order, ascending parameter.
pub fn contour_nodes(s: f64, segments: usize) -> Vec<ContourNode> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let edges = [
        (Edge::Bottom, c(0.5, -s), c(1.0 + s, -s)),
        (Edge::Right, c(1.0 + s, -s), c(1.0 + s, s)),
        (Edge::Top, c(1.0 + s, s), c(0.5, s)),
        (Edge::Left, c(0.5, s), c(0.5, -s)),
    ];
    let mut nodes = Vec::with_capacity(4 * segments);
    for (edge, start, end) in edges {
        let dz = (end - start) / segments as f64;
        for k in 0..segments {
            let z = start + dz * (k as f64 + 0.5);
            nodes.push(ContourNode { edge, z, dz });
        }
    }
    nodes
}

fn resolvent(a: &CMatrix, z: C64) -> Option<CMatrix> {
    let n = a.nrows();
    (CMatrix::identity(n, n) * z - a).try_inverse()
}

#[derive(Clone, Debug)]
pub struct ContourResult {
    pub projection: CMatrix,
    pub segments_used: usize,
    pub last_change: f64,
    pub r: f64,
}

pub fn contour_projection(a: &CMatrix, spec: &ContourSpec) -> Result<ContourResult> {
    let gap = spectral_gap(a, spec.delta)?;
    if let Some(v) = gap.violations.first() {
        return Err(Error::GapViolation {
            index: 0,
            eigenvalue: v.eigenvalue,
            delta: spec.delta,
        });
    }
    if spec.s <= gap.r {
        return Err(Error::Parameter(format!(
            "half-height s = {} must exceed R = {}",
            spec.s, gap.r
        )));
    }
    let integrate = |segments: usize| -> Result<CMatrix> {
        let n = a.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for node in contour_nodes(spec.s, segments) {
            let res = resolvent(a, node.z).ok_or(Error::NearSpectrum {
                z_re: node.z.re,
                z_im: node.z.im,
            })?;
            acc += res * node.dz;
        }
        Ok(acc / C64::new(0.0, 2.0 * std::f64::consts::PI))
    };
    let mut segments = spec.segments;
    let mut prev = integrate(segments)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        segments *= 2;
        let next = integrate(segments)?;
        last_change = largest_singular_value(&(&next - &prev));
        prev = next;
        if last_change < INTERNAL_TOL {
            return Ok(ContourResult {
                projection: prev,
                segments_used: segments,
                last_change,
                r: gap.r,
            });
        }
    }
    Err(Error::QuadratureNonConvergence {
        doublings: MAX_DOUBLINGS,
        last_change,
    })
}

/// ‖(z − a)⁻¹‖ for Hermitian a.
pub fn resolvent_norm(a: &CMatrix, z: C64) -> Result<f64> {
    let e = eigen_hermitian(a)?;
    let dist = e
        .eigenvalues
        .iter()
        .map(|&l| (z - l).norm())
        .fold(f64::INFINITY, f64::min);
    if dist < 1e-12 {
        return Err(Error::NearSpectrum {
            z_re: z.re,
            z_im: z.im,
        });
    }
    let res = resolvent(a, z).ok_or(Error::NearSpectrum {
        z_re: z.re,
        z_im: z.im,
    })?;
    Ok(largest_singular_value(&res))
}

/// Upper bound on ‖(z − a)⁻¹‖² at a node, valid whenever the spectrum of a
/// lies in (−∞, δ] ∪ [1−δ, 1+R] and s > R:
/// s⁻² on the horizontal edges, ((1/2−δ)² + t²)⁻¹ on the left edge and
/// ((s−R)² + t²)⁻¹ on the right edge, with t = Im z.
pub fn edge_bound(node: &ContourNode, s: f64, delta: f64, r: f64) -> f64 {
    let t = node.z.im;
    match node.edge {
        Edge::Bottom | Edge::Top => 1.0 / (s * s),
        Edge::Left => 1.0 / ((0.5 - delta).powi(2) + t * t),
        Edge::Right => 1.0 / ((s - r).powi(2) + t * t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeAudit {
    pub nodes: usize,
    /// max over nodes of measured ‖(z−a)⁻¹‖² / bound.
    pub worst_ratio: f64,
    pub ok: bool,
}

/// Compares the measured squared resolvent norm with `edge_bound` at every
/// quadrature node.
pub fn audit_edge_bounds(a: &CMatrix, spec: &ContourSpec, segments: usize) -> Result<EdgeAudit> {
    let gap = spectral_gap(a, spec.delta)?;
    if !gap.certified() {
        let v = gap.violations[0];
        return Err(Error::GapViolation {
            index: 0,
            eigenvalue: v.eigenvalue,
            delta: spec.delta,
        });
    }
    let mut worst = 0.0f64;
    let nodes = contour_nodes(spec.s, segments);
    for node in &nodes {
        let res = resolvent(a, node.z).ok_or(Error::NearSpectrum {
            z_re: node.z.re,
            z_im: node.z.im,
        })?;
        let measured = largest_singular_value(&res).powi(2);
        worst = worst.max(measured / edge_bound(node, spec.s, spec.delta, gap.r));
    }
    Ok(EdgeAudit {
        nodes: nodes.len(),
        worst_ratio: worst,
        ok: worst <= 1.0 + 1e-10,
    })
}

/// The factor multiplying L(a) after integrating the edge bounds:
/// (1/2π)·(s⁻²(1+2s) + π/(1/2−δ) + π/(s−R)). Tends to 1/(1−2δ) as s → ∞.
pub fn contour_bound_factor(s: f64, delta: f64, r: f64) -> f64 {
    let pi = std::f64::consts::PI;
    ((1.0 + 2.0 * s) / (s * s) + pi / (0.5 - delta) + pi / (s - r)) / (2.0 * pi)
}
