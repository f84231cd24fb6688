//! Parametric surfaces `(fx, fy, fz)(u, v)` with optional sign quantization
//! per axis, `w ↦ w/|w|`.

use thiserror::Error;

use super::TriangleMesh;
use crate::expr::{EvalError, Expr, ParamSet, Program, Var, Vars};
use crate::field::{Axis, GridError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParametricError {
    #[error("parametric expressions may only use u and v, found `{0}`")]
    SpatialVariable(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSpec {
    pub fx: Expr,
    pub fy: Expr,
    pub fz: Expr,
    /// Axes passed through `w/|w|` after evaluation.
    pub sign: [bool; 3],
    pub u: Axis,
    pub v: Axis,
    pub params: ParamSet,
    /// Quads where any coordinate spreads wider than this are skipped.
    pub jump_threshold: f64,
}

impl ParametricSpec {
    pub const DEFAULT_JUMP_THRESHOLD: f64 = 1.0;

    pub fn new(fx: Expr, fy: Expr, fz: Expr, u: Axis, v: Axis) -> ParametricSpec {
        ParametricSpec {
            fx,
            fy,
            fz,
            sign: [false; 3],
            u,
            v,
            params: ParamSet::new(),
            jump_threshold: Self::DEFAULT_JUMP_THRESHOLD,
        }
    }

    pub fn with_sign(mut self, sign: [bool; 3]) -> ParametricSpec {
        self.sign = sign;
        self
    }

    pub fn with_params(mut self, params: ParamSet) -> ParametricSpec {
        self.params = params;
        self
    }

    pub fn validate(&self) -> Result<(), ParametricError> {
        self.u.validate('u')?;
        self.v.validate('v')?;
        for e in [&self.fx, &self.fy, &self.fz] {
            if let Some(v) = e
                .free_names()
                .variables
                .into_iter()
                .find(|v| matches!(v, Var::X | Var::Y | Var::Z))
            {
                return Err(ParametricError::SpatialVariable(v.name()));
            }
        }
        Ok(())
    }
}

fn quantize(w: f64) -> f64 {
    w / w.abs()
}

/// Samples the surface on the `(u, v)` lattice and triangulates every quad
/// whose four corners are defined and continuous.
///
/// Each kept quad `a b / d c` (u-fastest) becomes triangles `(a, b, c)` and
/// `(a, c, d)`. Only vertices used by some triangle are kept, in lattice
/// order.
pub fn sample_parametric_sign(spec: &ParametricSpec) -> Result<TriangleMesh, ParametricError> {
    spec.validate()?;
    let programs = [&spec.fx, &spec.fy, &spec.fz]
        .map(|e| Program::compile(e, &spec.params))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let (nu, nv) = (spec.u.count, spec.v.count);
    let mut stack = Vec::new();
    let mut points = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let vars = Vars::uv(spec.u.point(i), spec.v.point(j));
            let p: [f64; 3] = std::array::from_fn(|k| {
                let w = programs[k].eval_with(vars, &mut stack);
                if spec.sign[k] {
                    quantize(w)
                } else {
                    w
                }
            });
            points.push(p);
        }
    }

    let defined = |p: &[f64; 3]| p.iter().all(|c| c.is_finite());
    let mut quads = Vec::new();
    for j in 0..nv - 1 {
        for i in 0..nu - 1 {
            let ids = [j * nu + i, j * nu + i + 1, (j + 1) * nu + i + 1, (j + 1) * nu + i];
            let corners = ids.map(|k| points[k]);
            if !corners.iter().all(defined) {
                continue;
            }
            let jumps = (0..3).any(|k| {
                let (lo, hi) = corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[k]), hi.max(p[k]))
                });
                hi - lo > spec.jump_threshold
            });
            if !jumps {
                quads.push(ids);
            }
        }
    }

    let mut remap = vec![u32::MAX; points.len()];
    for q in &quads {
        for &k in q {
            remap[k] = 0;
        }
    }
    let mut mesh = TriangleMesh::default();
    for (k, slot) in remap.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = mesh.vertices.len() as u32;
            mesh.vertices.push(points[k]);
        }
    }
    for [a, b, c, d] in quads {
        let [a, b, c, d] = [a, b, c, d].map(|k| remap[k]);
        mesh.triangles.push([a, b, c]);
        mesh.triangles.push([a, c, d]);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn spec(fx: &str, fy: &str, fz: &str, u: Axis, v: Axis) -> ParametricSpec {
        ParametricSpec::new(parse(fx).unwrap(), parse(fy).unwrap(), parse(fz).unwrap(), u, v)
    }

    #[test]
    fn signed_x_takes_two_values() {
        let s = spec(
            "sign(cos(u))",
            "v",
            "sin(u)",
            Axis::new(0.1, 3.0, 32),
            Axis::new(0.0, 1.0, 8),
        );
        let m = sample_parametric_sign(&s).unwrap();
        m.validate().unwrap();
        assert!(!m.is_empty());
        assert!(m.vertices.iter().all(|p| p[0] == 1.0 || p[0] == -1.0));
        // Both plateaus survive; the quads straddling u = π/2 do not.
        assert!(m.vertices.iter().any(|p| p[0] == 1.0));
        assert!(m.vertices.iter().any(|p| p[0] == -1.0));
        assert_eq!(m.triangles.len(), 2 * 30 * 7);
    }

    #[test]
    fn fully_quantized_surface_collapses_to_cube_corners() {
        let s = spec(
            "cos(u)*cos(v)",
            "sin(u)*cos(v)",
            "sin(v)",
            Axis::new(-3.0, 3.0, 40),
            Axis::new(-1.5, 1.5, 20),
        )
        .with_sign([true; 3]);
        let m = sample_parametric_sign(&s).unwrap();
        let mut distinct: Vec<[u64; 3]> = m.vertices.iter().map(|p| p.map(f64::to_bits)).collect();
        distinct.sort();
        distinct.dedup();
        assert!(distinct.len() <= 8);
        assert!(m.vertices.iter().flatten().all(|c| c.abs() == 1.0));
    }

    #[test]
    fn zero_on_lattice_point_skips_its_quads() {
        // u = 0 is the middle lattice point; sign is undefined there.
        let s = spec("u", "v", "0", Axis::new(-1.0, 1.0, 3), Axis::new(0.0, 1.0, 2)).with_sign([true, false, false]);
        let m = sample_parametric_sign(&s).unwrap();
        assert!(m.is_empty());
        assert!(m.vertices.is_empty());

        let s = spec("u", "v", "0", Axis::new(-1.0, 1.0, 3), Axis::new(0.0, 1.0, 2));
        let m = sample_parametric_sign(&s).unwrap();
        assert_eq!(m.triangles.len(), 4);
        assert_eq!(m.vertices.len(), 6);
        assert!(m.vertices.iter().flatten().all(|c| c.is_finite()));
    }

    #[test]
    fn spatial_variables_are_rejected() {
        let s = spec("x", "v", "u", Axis::new(0.0, 1.0, 2), Axis::new(0.0, 1.0, 2));
        assert_eq!(sample_parametric_sign(&s), Err(ParametricError::SpatialVariable("x")));
    }

    #[test]
    fn unbound_parameter_and_bad_axis() {
        let s = spec("k*u", "v", "0", Axis::new(0.0, 1.0, 2), Axis::new(0.0, 1.0, 2));
        assert!(matches!(sample_parametric_sign(&s), Err(ParametricError::Eval(_))));
        let s = spec("u", "v", "0", Axis::new(0.0, 1.0, 1), Axis::new(0.0, 1.0, 2));
        assert!(matches!(sample_parametric_sign(&s), Err(ParametricError::Grid(_))));
    }
}
