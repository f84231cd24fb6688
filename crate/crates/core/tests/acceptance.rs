//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use implicitforge::constituents::{
    rectangular, sawtooth, staircase, triangular, PulseParams, RectangularVariant, SawtoothVariant, StaircaseVariant,
    TriangularVariant,
};
use implicitforge::expr::{BinaryOp, Expr, ParamSet, Program, UnaryOp, Var};
use implicitforge::family::{preset, SceneKind};
use implicitforge::field::{read_field, write_field, GridSpec, ScalarField};
use implicitforge::mesh::{export_obj, marching_cubes, surface_cells, TriangleMesh};
use implicitforge::sensitivity::{hausdorff, sign_distance, sweep};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn eval1(e: &Expr, x: f64) -> f64 {
    Program::compile(e, &ParamSet::new()).unwrap().eval_xyz(x, 0.0, 0.0)
}

/// Distance from `x` to the nearest multiple of `step` shifted by `offset`.
fn near_lattice(x: f64, step: f64, offset: f64) -> f64 {
    let k = ((x - offset) / step).round();
    (x - offset - k * step).abs()
}

fn identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let params = PulseParams::new(r, 10).unwrap();
        let (lo, hi) = params.window();
        let compile = |e: Expr| Program::compile(&e, &ParamSet::new()).unwrap();
        let saw = [SawtoothVariant::Sum, SawtoothVariant::Trig].map(|v| compile(sawtooth(v, &params).unwrap()));
        let tri = [
            TriangularVariant::Sum,
            TriangularVariant::Arccot,
            TriangularVariant::Acos,
        ]
        .map(|v| compile(triangular(v, &params).unwrap()));
        let stairs = [StaircaseVariant::Sum, StaircaseVariant::Trig].map(|v| compile(staircase(v, &params).unwrap()));
        let at = |p: &Program, x: f64| p.eval_xyz(x, 0.0, 0.0);
        let mut n = 0;
        while n < 10_000 {
            let x = rng.gen_range(lo..hi);
            // Knots of every form, including the r/2-shifted triangle.
            if near_lattice(x, r / 2.0, 0.0) < 1e-6 {
                continue;
            }
            n += 1;
            let pairs = [
                ("sawtooth sum/trig", at(&saw[0], x), at(&saw[1], x)),
                ("triangle sum/arccot", at(&tri[0], x), at(&tri[1], x)),
                ("staircase sum/trig", at(&stairs[0], x), at(&stairs[1], x)),
                ("triangle acos/arccot+r/2", at(&tri[2], x), at(&tri[1], x + r / 2.0)),
            ];
            for (name, a, b) in pairs {
                let err = (a - b).abs();
                if err.is_nan() || err >= 1e-9 {
                    failures.push(format!("{name} r={r} x={x}: {a} vs {b}"));
                }
                if !err.is_nan() {
                    worst = worst.max(err);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if let Some(first) = failures.first() {
        return Err(format!("{} mismatches, first: {first}", failures.len()));
    }
    check(
        elapsed < Duration::from_secs(5),
        format!(
            "120000 comparisons, max |diff| {worst:.2e}, {:.2?} (limit 5 s)",
            elapsed
        ),
    )
}

fn rectangular_ranges() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0usize;
    // (t, r); the sign and ratio forms have unit period and ignore r.
    for (t, r) in [(0.3, 1.0), (0.5, 2.0), (0.25, 1.0)] {
        let params = PulseParams::new(r, 10).unwrap().with_offset(t).unwrap();
        // Switching points of each form, as (step, offsets).
        let asin_t = t.asin() / PI;
        let forms: [(RectangularVariant, &[f64], f64, Vec<f64>); 3] = [
            (RectangularVariant::Sign, &[0.0, 1.0], 2.0, vec![-asin_t, 1.0 + asin_t]),
            (RectangularVariant::Arccot, &[0.0, 1.0], r, vec![0.0, -t]),
            (RectangularVariant::Ratio, &[-1.0, 0.0], 0.5, vec![0.0, -t]),
        ];
        for (variant, allowed, step, offsets) in forms {
            let e = rectangular(variant, &params).unwrap();
            let prog = Program::compile(&e, &ParamSet::new()).unwrap();
            let mut n = 0;
            while n < 10_000 {
                let x = rng.gen_range(-10.0..10.0);
                if offsets.iter().any(|&o| near_lattice(x, step, o) < 1e-6) {
                    continue;
                }
                n += 1;
                let v = prog.eval_xyz(x, 0.0, 0.0);
                if !allowed.iter().any(|a| (v - a).abs() <= 1e-9) {
                    return Err(format!("{variant:?} t={t} r={r} x={x} gave {v}"));
                }
            }
            checked += n;
        }
    }
    Ok(format!("{checked} points across 3 forms x 3 (t, r) tuples"))
}

/// Chord values at each piece midpoint, worked out by hand from the printed
/// component functions term by term.
const CURVE_MIDPOINTS: [(f64, f64); 8] = [
    (1.5, 0.5),
    (2.5, 2.0),
    (3.5, 4.5),
    (4.5, 4.0),
    (6.0, 7.5),
    (8.0, 1.0),
    (9.5, 0.5),
    (10.25, 5.0),
];

fn example_curve_midpoints() -> Outcome {
    let scene = preset("fig1-curve").map_err(|e| e.to_string())?;
    let SceneKind::Curve { profile } = scene.kind else {
        return Err("fig1-curve is not a curve scene".into());
    };
    let mut worst: f64 = 0.0;
    for (x, want) in CURVE_MIDPOINTS {
        let got = eval1(&profile, x);
        let err = (got - want).abs();
        if err.is_nan() || err > 1e-12 {
            return Err(format!("f_cc({x}) = {got}, expected {want}"));
        }
        worst = worst.max(err);
    }
    Ok(format!("8 midpoints, max |diff| {worst:.1e}"))
}

const RANDOM_PARAMS: [&str; 2] = ["a", "b"];

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    const UNARY: [UnaryOp; 12] = [
        UnaryOp::Neg,
        UnaryOp::Abs,
        UnaryOp::Sqrt,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Cot,
        UnaryOp::Asin,
        UnaryOp::Acos,
        UnaryOp::Atan,
        UnaryOp::Arccot,
        UnaryOp::Sign,
    ];
    const BINARY: [BinaryOp; 5] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Pow,
    ];
    if depth <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..6) {
            0 => Expr::Const(rng.gen_range(-4.0..4.0)),
            1 => Expr::Const(rng.gen_range(-3..4) as f64),
            2 => Expr::param(RANDOM_PARAMS[rng.gen_range(0..2)]).unwrap(),
            _ => Expr::Var([Var::X, Var::Y, Var::Z][rng.gen_range(0..3)]),
        };
    }
    if rng.gen_bool(0.4) {
        let op = UNARY[rng.gen_range(0..UNARY.len())];
        Expr::Unary(op, Box::new(random_expr(rng, depth - 1)))
    } else {
        let op = BINARY[rng.gen_range(0..BINARY.len())];
        Expr::Binary(
            op,
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        )
    }
}

/// Tree-walking interpreter written straight from the documented semantics.
fn naive(e: &Expr, p: [f64; 3], params: &BTreeMap<&str, f64>) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var(Var::X) => p[0],
        Expr::Var(Var::Y) => p[1],
        Expr::Var(Var::Z) => p[2],
        Expr::Var(_) => 0.0,
        Expr::Param(name) => params[name.as_str()],
        Expr::Unary(op, a) => {
            let v = naive(a, p, params);
            match op {
                UnaryOp::Neg => -v,
                UnaryOp::Abs => v.abs(),
                UnaryOp::Sqrt => v.sqrt(),
                UnaryOp::Sin => v.sin(),
                UnaryOp::Cos => v.cos(),
                UnaryOp::Tan => v.tan(),
                UnaryOp::Cot if v.sin() == 0.0 => f64::NAN,
                UnaryOp::Cot => v.cos() / v.sin(),
                UnaryOp::Asin => v.asin(),
                UnaryOp::Acos => v.acos(),
                UnaryOp::Atan => v.atan(),
                UnaryOp::Arccot => PI / 2.0 - v.atan(),
                UnaryOp::Sign => v / v.abs(),
            }
        }
        Expr::Binary(op, a, b) => {
            let (l, r) = (naive(a, p, params), naive(b, p, params));
            if l.is_nan() || r.is_nan() {
                return f64::NAN;
            }
            match op {
                BinaryOp::Add => l + r,
                BinaryOp::Sub => l - r,
                BinaryOp::Mul => l * r,
                BinaryOp::Div if r == 0.0 => f64::NAN,
                BinaryOp::Div => l / r,
                BinaryOp::Pow if l == 0.0 && r < 0.0 => f64::NAN,
                BinaryOp::Pow => l.powf(r),
            }
        }
    }
}

fn evaluator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut defined, mut undefined) = (0usize, 0usize);
    for tree in 0..1000 {
        let e = random_expr(&mut rng, 8);
        if e.depth() > 8 {
            return Err(format!("generator produced depth {}", e.depth()));
        }
        let values = BTreeMap::from([("a", rng.gen_range(-2.0..2.0)), ("b", rng.gen_range(-2.0..2.0))]);
        let mut ps = ParamSet::new();
        for (k, v) in &values {
            ps.bind(k, *v).unwrap();
        }
        let prog = Program::compile(&e, &ps).map_err(|err| err.to_string())?;
        for _ in 0..100 {
            let p = [0; 3].map(|_| rng.gen_range(-3.0..3.0));
            let got = prog.eval_xyz(p[0], p[1], p[2]);
            let want = naive(&e, p, &values);
            let same = if want.is_nan() || got.is_nan() {
                want.is_nan() && got.is_nan()
            } else {
                got == want || (got - want).abs() <= 1e-12 * got.abs().max(want.abs())
            };
            if !same {
                return Err(format!("tree {tree} `{e}` at {p:?}: {got} vs oracle {want}"));
            }
            if want.is_nan() {
                undefined += 1;
            } else {
                defined += 1;
            }
        }
    }
    Ok(format!(
        "100000 evaluations agree ({defined} defined, {undefined} undefined)"
    ))
}

fn sphere_field(n: usize) -> ScalarField {
    let spec = GridSpec::cube(1.5, n).unwrap();
    ScalarField::from_fn(spec, |[x, y, z]| x * x + y * y + z * z - 1.0).unwrap()
}

fn sphere_oracle() -> Outcome {
    let start = Instant::now();
    let mut errors = Vec::new();
    for n in [16, 32, 64] {
        let f = sphere_field(n);
        let m = marching_cubes(&f, 0.0);
        m.validate().map_err(|e| e.to_string())?;
        if !m.is_watertight() {
            return Err(format!("{n}^3 mesh is not watertight"));
        }
        let chi = m.euler_characteristic();
        if chi != 2 {
            return Err(format!("{n}^3 mesh has Euler characteristic {chi}"));
        }
        let err = m
            .vertices
            .iter()
            .map(|p| ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        let diag = f.spec().cell_diagonal();
        if err > diag {
            return Err(format!("{n}^3 radial error {err} exceeds cell diagonal {diag}"));
        }
        errors.push(err);
    }
    if !(errors[0] > errors[1] && errors[1] > errors[2]) {
        return Err(format!("radial error not decreasing: {errors:?}"));
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(10),
        format!(
            "16/32/64: radial error {:.2e} > {:.2e} > {:.2e}, {:.2?} (limit 10 s)",
            errors[0], errors[1], errors[2], elapsed
        ),
    )
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn obj_bytes(m: &TriangleMesh) -> Vec<u8> {
    let mut buf = Vec::new();
    export_obj(m, &mut buf).unwrap();
    buf
}

fn presets_end_to_end() -> Outcome {
    let limit = Duration::from_secs(60);
    let mut notes = Vec::new();
    let mut fields = BTreeMap::new();
    let mut meshes = BTreeMap::new();
    let runs: [(&str, &str, Option<f64>); 5] = [
        ("eqA m=0.851", "eqA", Some(0.851)),
        ("eqA m=0.861", "eqA", Some(0.861)),
        ("eqB-I3", "eqB-I3", None),
        ("eqB-I4", "eqB-I4", None),
        ("eqB-I5", "eqB-I5", None),
    ];
    for (label, name, m) in runs {
        let start = Instant::now();
        let mut scene = preset(name).map_err(|e| e.to_string())?;
        if let Some(m) = m {
            scene.params.set("m", m).unwrap();
        }
        let (field, mesh) = single_threaded(|| {
            let field = scene.sample().unwrap();
            let mesh = marching_cubes(&field, scene.iso);
            (field, mesh)
        });
        let cells = surface_cells(&field, scene.iso);
        let exported = obj_bytes(&mesh);
        let elapsed = start.elapsed();
        if cells == 0 || mesh.is_empty() || exported.is_empty() {
            return Err(format!(
                "{label}: {cells} surface cells, {} triangles",
                mesh.triangles.len()
            ));
        }
        if elapsed > limit {
            return Err(format!("{label} took {elapsed:.2?}"));
        }
        notes.push(format!("{label} {cells} cells/{:.1?}", elapsed));
        fields.insert(label, field);
        meshes.insert(label, mesh);
    }

    let start = Instant::now();
    let eq_c = preset("eqC").map_err(|e| e.to_string())?;
    let report = single_threaded(|| sweep(&eq_c, "m", &[0.25, 0.5, 0.75, 1.0])).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if report.rows.len() != 4 || report.rows.iter().any(|r| r.surface_cells == 0) {
        return Err(format!("eqC sweep rows: {:?}", report.rows));
    }
    if elapsed > limit {
        return Err(format!("eqC sweep took {elapsed:.2?}"));
    }
    let steps: Vec<String> = report.rows[1..]
        .iter()
        .map(|r| format!("{:.4}", r.sign_distance_prev.unwrap()))
        .collect();
    notes.push(format!("eqC sweep 4 rows/{elapsed:.1?}"));

    // Recorded for comparison, not asserted.
    let d_a = sign_distance(&fields["eqA m=0.851"], &fields["eqA m=0.861"], 0.0).unwrap();
    let h_a = hausdorff(&meshes["eqA m=0.851"], &meshes["eqA m=0.861"]).unwrap();
    let d_b = sign_distance(&fields["eqB-I3"], &fields["eqB-I4"], 0.0).unwrap();
    let h_b = hausdorff(&meshes["eqB-I4"], &meshes["eqB-I5"]).unwrap();
    notes.push(format!(
        "sign_distance eqA(0.851,0.861)={d_a:.4} [hausdorff {h_a:.3}], eqB(I3,I4)={d_b:.4}, \
         hausdorff eqB(I4,I5)={h_b:.3}, eqC steps={}",
        steps.join("/")
    ));
    Ok(notes.join("; "))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_implicitforge")
}

fn cli_output(args: &[&str], out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(binary())
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("implicitforge {args:?} exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    // IFLD round trip, including undefined values.
    let field = preset("eqB-I5").unwrap().sample().unwrap();
    let mut bytes = Vec::new();
    write_field(&field, &mut bytes).unwrap();
    let back = read_field(bytes.as_slice()).map_err(|e| e.to_string())?;
    let exact = back.spec() == field.spec()
        && back.values().len() == field.values().len()
        && back
            .values()
            .iter()
            .zip(field.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
    if !exact {
        return Err("IFLD round trip changed the field".into());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let sphere = [
        "mesh",
        "--expr",
        "x^2+y^2+z^2-1",
        "--bounds",
        "-1.5,1.5,-1.5,1.5,-1.5,1.5",
        "--grid",
        "16,16,16",
    ];
    let mut compared = 0;
    for format in ["obj", "stl"] {
        let want = std::fs::read(golden.join(format!("sphere16.{format}"))).map_err(|e| e.to_string())?;
        for (run, threads) in [(0, "1"), (1, "8"), (2, "1"), (3, "8")] {
            let mut args = vec!["--threads", threads];
            args.extend(sphere);
            args.extend(["--format", format]);
            let got = cli_output(&args, &dir.path().join(format!("{run}.{format}")))?;
            if got != want {
                return Err(format!(
                    "{format} with --threads {threads} differs from the golden file"
                ));
            }
            compared += 1;
        }
    }
    let ifld: Vec<Vec<u8>> = ["1", "8"]
        .iter()
        .map(|t| {
            cli_output(
                &["--threads", t, "sample", "--preset", "eqB-I5"],
                &dir.path().join(format!("f{t}.ifld")),
            )
        })
        .collect::<Result<_, _>>()?;
    check(
        ifld[0] == ifld[1] && ifld[0] == bytes,
        format!("IFLD round trip bit-exact; {compared} OBJ/STL runs match golden files across --threads 1/8"),
    )
}

/// Cells with all corners finite and corners on both sides of `iso`, by a
/// direct corner scan.
fn brute_surface_cells(f: &ScalarField, iso: f64) -> usize {
    let [nx, ny, nz] = f.spec().counts();
    let mut n = 0;
    for iz in 0..nz - 1 {
        for iy in 0..ny - 1 {
            for ix in 0..nx - 1 {
                let mut corners = Vec::with_capacity(8);
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            corners.push(f.get(ix + dx, iy + dy, iz + dz));
                        }
                    }
                }
                if corners.iter().all(|v| v.is_finite())
                    && corners.iter().any(|v| *v <= iso)
                    && corners.iter().any(|v| *v > iso)
                {
                    n += 1;
                }
            }
        }
    }
    n
}

fn random_field(rng: &mut ChaCha8Rng, spec: GridSpec) -> ScalarField {
    let mode = rng.gen_range(0..5);
    let values = (0..spec.len())
        .map(|_| match mode {
            0 => rng.gen_range(-1.0..1.0),
            1 => rng.gen_range(0.1..1.0),
            2 => {
                if rng.gen_bool(0.01) {
                    -1.0
                } else {
                    1.0
                }
            }
            3 => {
                if rng.gen_bool(0.3) {
                    f64::NAN
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            }
            _ => {
                if rng.gen_bool(0.7) {
                    f64::NAN
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            }
        })
        .collect();
    ScalarField::new(spec, values).unwrap()
}

fn metric_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let spec = GridSpec::cube(1.0, 8).unwrap();
    for i in 0..100 {
        let [a, b, c] = [0; 3].map(|_| random_field(&mut rng, spec));
        let d = |p: &ScalarField, q: &ScalarField| sign_distance(p, q, 0.0).unwrap();
        if d(&a, &a) != 0.0 {
            return Err(format!("triple {i}: d(a, a) != 0"));
        }
        if d(&a, &b) != d(&b, &a) {
            return Err(format!("triple {i}: asymmetric"));
        }
        if d(&a, &c) > d(&a, &b) + d(&b, &c) + 1e-15 {
            return Err(format!("triple {i}: triangle inequality fails"));
        }
        if !(0.0..=1.0).contains(&d(&a, &b)) {
            return Err(format!("triple {i}: out of range"));
        }
    }
    let (mut empty, mut nonempty) = (0, 0);
    for i in 0..200 {
        let f = random_field(&mut rng, spec);
        let brute = brute_surface_cells(&f, 0.0);
        let cells = surface_cells(&f, 0.0);
        let mesh = marching_cubes(&f, 0.0);
        if cells != brute || (cells == 0) != mesh.is_empty() {
            return Err(format!(
                "field {i}: surface_cells {cells}, brute force {brute}, {} triangles",
                mesh.triangles.len()
            ));
        }
        if mesh.is_empty() {
            empty += 1;
        } else {
            nonempty += 1;
        }
    }
    check(
        empty > 0 && nonempty > 0,
        format!("pseudometric on 100 triples; surface_cells = 0 <=> empty mesh on 200 fields ({empty} empty)"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("constituent identity suite", identities),
        ("rectangular range suite", rectangular_ranges),
        ("example curve midpoints", example_curve_midpoints),
        ("evaluator vs naive oracle", evaluator_oracle),
        ("marching-cubes sphere oracle", sphere_oracle),
        ("presets end to end", presets_end_to_end),
        ("determinism and formats", determinism),
        ("sensitivity metric properties", metric_properties),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
