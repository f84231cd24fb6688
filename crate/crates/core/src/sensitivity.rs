//! Parameter sweeps and comparison metrics between fields and meshes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::SceneSpec;
use crate::field::{classify, sample_field, SampleError, ScalarField};
use crate::mesh::{marching_cubes, TriangleMesh};

pub use crate::mesh::surface_cells;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error("fields have different dimensions: {0:?} vs {1:?}")]
    DimensionMismatch([usize; 3], [usize; 3]),
    #[error("mesh has no vertices")]
    EmptyMesh,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("parameter `{param}` does not occur in scene `{scene}`")]
    ParamNotFree { scene: String, param: String },
    #[error("sweep needs at least one value")]
    NoValues,
    #[error("sweep values must be finite and strictly increasing")]
    Unsorted,
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Fraction of lattice points whose inside/outside/unknown marks differ.
///
/// Index-aligned: the bounds of `a` and `b` may differ.
pub fn sign_distance(a: &ScalarField, b: &ScalarField, iso: f64) -> Result<f64, SensitivityError> {
    let (ca, cb) = (a.spec().counts(), b.spec().counts());
    if ca != cb {
        return Err(SensitivityError::DimensionMismatch(ca, cb));
    }
    let (ma, mb) = (classify(a, iso), classify(b, iso));
    let differ = ma.marks().iter().zip(mb.marks()).filter(|(x, y)| x != y).count();
    Ok(differ as f64 / ma.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub surface_cells: usize,
    pub inside_fraction: f64,
    pub unknown_fraction: f64,
    /// Against the previous row; `None` on the first row.
    pub sign_distance_prev: Option<f64>,
    pub mesh_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scene: String,
    pub param: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Samples `scene` once per value of `param` and measures each field.
pub fn sweep(scene: &SceneSpec, param: &str, values: &[f64]) -> Result<SweepReport, SweepError> {
    sweep_with(scene, param, values, |_, _| {})
}

/// [`sweep`], handing each row's mesh to `visit` as it is produced.
pub fn sweep_with(
    scene: &SceneSpec,
    param: &str,
    values: &[f64],
    mut visit: impl FnMut(&SweepRow, &TriangleMesh),
) -> Result<SweepReport, SweepError> {
    if !scene.expr.free_names().params.contains(param) {
        return Err(SweepError::ParamNotFree {
            scene: scene.name.clone(),
            param: param.to_string(),
        });
    }
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::Unsorted);
    }

    let mut rows = Vec::with_capacity(values.len());
    let mut prev: Option<ScalarField> = None;
    for &value in values {
        let mut params = scene.params.clone();
        params.set(param, value).map_err(|_| SweepError::Unsorted)?;
        let field = sample_field(&scene.expr, &scene.grid, &params)?;
        let occ = classify(&field, scene.iso);
        let mesh = marching_cubes(&field, scene.iso);
        let row = SweepRow {
            value,
            surface_cells: surface_cells(&field, scene.iso),
            inside_fraction: occ.inside() as f64 / occ.len() as f64,
            unknown_fraction: occ.unknown() as f64 / occ.len() as f64,
            sign_distance_prev: prev
                .as_ref()
                .map(|p| sign_distance(p, &field, scene.iso).expect("same grid")),
            mesh_vertices: mesh.vertices.len(),
        };
        visit(&row, &mesh);
        rows.push(row);
        prev = Some(field);
    }
    Ok(SweepReport {
        scene: scene.name.clone(),
        param: param.to_string(),
        rows,
    })
}

fn dist2(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum()
}

/// `max_{p ∈ a} min_{q ∈ b} |p − q|²`, with `b` sorted by x.
fn directed2(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.par_iter()
        .map(|p| {
            let start = b.partition_point(|q| q[0] < p[0]);
            let mut best = f64::INFINITY;
            // Walk outwards in x; stop each side once dx² alone exceeds best.
            for q in &b[start..] {
                let dx = q[0] - p[0];
                if dx * dx > best {
                    break;
                }
                best = best.min(dist2(p, q));
            }
            for q in b[..start].iter().rev() {
                let dx = p[0] - q[0];
                if dx * dx > best {
                    break;
                }
                best = best.min(dist2(p, q));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

fn sorted_by_x(m: &TriangleMesh) -> Vec<[f64; 3]> {
    let mut v = m.vertices.clone();
    v.sort_by(|p, q| p[0].total_cmp(&q[0]));
    v
}

/// Symmetric Hausdorff distance between the vertex sets of two meshes.
///
/// Exact over vertices; it approximates the surface distance to within the
/// mesh resolution.
pub fn hausdorff(a: &TriangleMesh, b: &TriangleMesh) -> Result<f64, SensitivityError> {
    if a.vertices.is_empty() || b.vertices.is_empty() {
        return Err(SensitivityError::EmptyMesh);
    }
    let (sa, sb) = (sorted_by_x(a), sorted_by_x(b));
    Ok(directed2(&a.vertices, &sb).max(directed2(&b.vertices, &sa)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, ParamSet};
    use crate::family::preset;
    use crate::field::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere(radius: f64, n: usize) -> ScalarField {
        let spec = GridSpec::cube(2.5, n).unwrap();
        let e = parse("x^2+y^2+z^2-r^2").unwrap();
        sample_field(&e, &spec, &ParamSet::new().with("r", radius).unwrap()).unwrap()
    }

    fn brute_hausdorff(a: &TriangleMesh, b: &TriangleMesh) -> f64 {
        let directed = |a: &TriangleMesh, b: &TriangleMesh| {
            a.vertices
                .iter()
                .map(|p| b.vertices.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        directed(a, b).max(directed(b, a)).sqrt()
    }

    #[test]
    fn sign_distance_extremes() {
        let spec = GridSpec::cube(1.0, 4).unwrap();
        let plus = ScalarField::from_fn(spec, |_| 1.0).unwrap();
        let minus = ScalarField::from_fn(spec, |_| -1.0).unwrap();
        assert_eq!(sign_distance(&plus, &plus, 0.0), Ok(0.0));
        assert_eq!(sign_distance(&plus, &minus, 0.0), Ok(1.0));
        let nan = ScalarField::from_fn(spec, |_| f64::NAN).unwrap();
        assert_eq!(sign_distance(&nan, &nan, 0.0), Ok(0.0));
        assert_eq!(sign_distance(&nan, &minus, 0.0), Ok(1.0));
        let other = ScalarField::from_fn(GridSpec::cube(1.0, 5).unwrap(), |_| 1.0).unwrap();
        assert!(matches!(
            sign_distance(&plus, &other, 0.0),
            Err(SensitivityError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn surface_cells_of_tiny_sphere() {
        let spec = GridSpec::cube(1.5, 3).unwrap();
        let f = sample_field(&parse("x^2+y^2+z^2-1").unwrap(), &spec, &ParamSet::new()).unwrap();
        // Brute force: each of the 8 cells has the inside centre and outside
        // far corners.
        let mut brute = 0;
        for iz in 0..2 {
            for iy in 0..2 {
                for ix in 0..2 {
                    let corners: Vec<f64> = (0..8)
                        .map(|c| f.get(ix + (c & 1), iy + ((c >> 1) & 1), iz + (c >> 2)))
                        .collect();
                    if corners.iter().any(|v| *v <= 0.0) && corners.iter().any(|v| *v > 0.0) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 8);
        assert_eq!(surface_cells(&f, 0.0), 8);
        let positive = ScalarField::from_fn(spec, |_| 3.0).unwrap();
        assert_eq!(surface_cells(&positive, 0.0), 0);
    }

    #[test]
    fn hausdorff_of_spheres() {
        let n = 24;
        let a = marching_cubes(&sphere(1.0, n), 0.0);
        let b = marching_cubes(&sphere(2.0, n), 0.0);
        assert_eq!(hausdorff(&a, &a), Ok(0.0));
        let d = hausdorff(&a, &b).unwrap();
        let diag = GridSpec::cube(2.5, n).unwrap().cell_diagonal();
        assert!((d - 1.0).abs() <= 2.0 * diag, "{d}");
        assert_eq!(d, brute_hausdorff(&a, &b));
        assert_eq!(
            hausdorff(&a, &TriangleMesh::default()),
            Err(SensitivityError::EmptyMesh)
        );
    }

    #[test]
    fn hausdorff_matches_brute_force_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut cloud = || {
                let n = rng.gen_range(1..60);
                TriangleMesh {
                    vertices: (0..n).map(|_| [0; 3].map(|_| rng.gen_range(-1.0..1.0))).collect(),
                    triangles: vec![],
                }
            };
            let (a, b) = (cloud(), cloud());
            let fast = hausdorff(&a, &b).unwrap();
            assert_eq!(fast, brute_hausdorff(&a, &b));
            assert_eq!(fast, hausdorff(&b, &a).unwrap());
        }
    }

    #[test]
    fn sweep_rows_and_errors() {
        let scene = crate::family::SceneSpec::implicit(
            "ball",
            parse("x^2+y^2+z^2-r^2").unwrap(),
            GridSpec::cube(2.5, 12).unwrap(),
            ParamSet::new().with("r", 1.0).unwrap(),
        );
        let mut seen = Vec::new();
        let report = sweep_with(&scene, "r", &[0.5, 1.0, 2.0], |row, mesh| {
            seen.push((row.value, mesh.vertices.len()))
        })
        .unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.rows[0].sign_distance_prev, None);
        for (row, (value, verts)) in report.rows.iter().zip(&seen) {
            assert_eq!(row.value, *value);
            assert_eq!(row.mesh_vertices, *verts);
            assert!(row.surface_cells > 0);
            assert!((0.0..=1.0).contains(&row.inside_fraction));
            assert_eq!(row.unknown_fraction, 0.0);
        }
        assert!(report
            .rows
            .windows(2)
            .all(|w| w[0].inside_fraction < w[1].inside_fraction));
        assert!(report.rows[1].sign_distance_prev.unwrap() > 0.0);

        let json = report.to_json();
        assert!(json.contains("\"sign_distance_prev\": null"));
        let back: SweepReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(sweep(&scene, "r", &[0.5, 1.0, 2.0]).unwrap().to_json(), json);

        assert!(matches!(
            sweep(&scene, "k", &[1.0]),
            Err(SweepError::ParamNotFree { .. })
        ));
        assert_eq!(sweep(&scene, "r", &[]), Err(SweepError::NoValues));
        assert_eq!(sweep(&scene, "r", &[2.0, 1.0]), Err(SweepError::Unsorted));
    }

    #[test]
    fn eq_b_grids_differ() {
        let i3 = preset("eqB-I3").unwrap().sample().unwrap();
        let i4 = preset("eqB-I4").unwrap().sample().unwrap();
        let d = sign_distance(&i3, &i4, 0.0).unwrap();
        assert!(d > 0.0 && d <= 1.0, "{d}");
    }
}
