use quotforge::geom::{dual_norm, extend_isomorphism, hahn_banach_extend, lower_bound, map_norm, Extension, LinMap, Subspace};
use quotforge::linalg::{op_norm_inf, op_norm_witness};
use quotforge::{RMatrix, Rational, WindowVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{to_value, CliError, Report, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ComputeOp {
    OpNorm,
    LowerBound,
    HahnBanach,
    ExtendIso,
}

#[derive(Deserialize)]
struct MatrixInput {
    matrix: RMatrix,
}

#[derive(Deserialize)]
struct MapInput {
    map: LinMap,
}

#[derive(Deserialize)]
struct FunctionalInput {
    subspace: Subspace,
    functional: Vec<Rational>,
}

fn parse<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("input: {e}")))
}

fn wv(v: &[i64]) -> WindowVector {
    WindowVector::from_ints(0, v)
}

/// The fixed instance used by `compute --demo`.
pub fn demo_input(op: ComputeOp) -> Value {
    match op {
        ComputeOp::OpNorm => json!({ "matrix": to_value(&RMatrix::identity(3)) }),
        ComputeOp::LowerBound => {
            let t = LinMap::new(Subspace::ambient(0, 2), 0, 2, vec![wv(&[2, 0]), wv(&[0, 2])]).expect("demo map");
            json!({ "map": to_value(&t) })
        }
        ComputeOp::HahnBanach => {
            let y = Subspace::new(0, 2, vec![wv(&[1, 1])]).expect("demo subspace");
            json!({ "subspace": to_value(&y), "functional": ["1/1"] })
        }
        ComputeOp::ExtendIso => {
            let y1 = Subspace::new(0, 4, vec![wv(&[1, 1, 0, 0]), wv(&[0, 0, 1, 0])]).expect("demo subspace");
            let t = LinMap::new(y1, 0, 4, vec![wv(&[1, 0, 0, 0]), wv(&[0, 1, 1, 0])]).expect("demo map");
            json!({ "map": to_value(&t) })
        }
    }
}

/// Agreement on the basis, `W W⁻¹ = I` and both norms within `c₂`.
pub fn check_extension(t: &LinMap, e: &Extension, c2: &Rational) -> Vec<String> {
    let mut out = Vec::new();
    for (k, (v, w)) in t.domain.basis.iter().zip(&t.images).enumerate() {
        if e.w.mul_vec(&v.coords) != w.coords {
            out.push(format!("W misses the image of basis vector {k}"));
        }
    }
    match e.w.mul(&e.w_inv) {
        Ok(p) if p.is_identity() => {}
        _ => out.push("W_inv is not the inverse of W".into()),
    }
    let (n, ni) = (op_norm_inf(&e.w), op_norm_inf(&e.w_inv));
    if &n > c2 || &ni > c2 {
        out.push(format!("|W| = {n}, |W^-1| = {ni} exceed c2 = {c2}"));
    }
    out
}

pub fn compute(cfg: &RunConfig, op: ComputeOp, input: Value) -> Result<Report, CliError> {
    let cap = cfg.vertex_cap;
    let (result, problems) = match op {
        ComputeOp::OpNorm => {
            let m = parse::<MatrixInput>(input)?.matrix;
            let value = op_norm_inf(&m);
            let witness = op_norm_witness(&m);
            let attained = m.mul_vec(&witness).iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero);
            let problems = if m.cols() > 0 && attained != value { vec![format!("witness attains {attained}")] } else { vec![] };
            (json!({ "value": to_value(&value), "witness": to_value(&witness) }), problems)
        }
        ComputeOp::LowerBound => {
            let t = parse::<MapInput>(input)?.map;
            let lb = lower_bound(&t, cap)?;
            let norm = map_norm(&t, cap)?;
            (json!({ "lower_bound": to_value(&lb), "norm": to_value(&norm.value) }), vec![])
        }
        ComputeOp::HahnBanach => {
            let FunctionalInput { subspace, functional } = parse(input)?;
            let ext = hahn_banach_extend(&subspace, &functional)?;
            let dual = dual_norm(&subspace, &functional, cap)?;
            let mut problems = Vec::new();
            for (k, (b, phi)) in subspace.basis.iter().zip(&functional).enumerate() {
                if &ext.representer.dot(b) != phi {
                    problems.push(format!("representer differs from phi on basis vector {k}"));
                }
            }
            if ext.norm != dual || ext.representer.l1_norm() != dual {
                problems.push(format!("|u|_1 = {} but the dual norm is {dual}", ext.representer.l1_norm()));
            }
            (json!({ "extension": to_value(&ext), "dual_norm": to_value(&dual) }), problems)
        }
        ComputeOp::ExtendIso => {
            let t = parse::<MapInput>(input)?.map;
            let e = extend_isomorphism(&t, None, None, &cfg.extension())?;
            let problems = check_extension(&t, &e, &cfg.c2);
            (json!({ "extension": to_value(&e) }), problems)
        }
    };
    let failures = problems.len();
    let mut result = result;
    result["problems"] = json!(problems);
    Ok(Report::new("compute", cfg, result, failures))
}

/// `h` disjoint blocks of ones of width at most 3 in `ℓ∞ⁿ`, each perturbed on
/// at most one leftover coordinate by `±1/4` or `±1/8`.
pub fn near_indicators(rng: &mut ChaCha8Rng, n: usize, h: usize) -> Vec<WindowVector> {
    let mut coords: Vec<usize> = (0..n).collect();
    coords.shuffle(rng);
    let mut vs = Vec::new();
    let mut next = 0;
    for k in 0..h {
        let remaining = n - next - (h - k - 1);
        let size = rng.gen_range(1..=remaining.min(3));
        let mut v = vec![Rational::zero(); n];
        for &c in &coords[next..next + size] {
            v[c] = Rational::one();
        }
        next += size;
        vs.push(v);
    }
    let free = coords[next..].to_vec();
    for v in vs.iter_mut() {
        if !free.is_empty() && rng.gen_bool(0.5) {
            let j = *free.choose(rng).expect("nonempty");
            let den = *[4, 8].choose(rng).expect("nonempty");
            v[j] = Rational::new(if rng.gen_bool(0.5) { 1 } else { -1 }, den);
        }
    }
    vs.into_iter().map(|v| WindowVector::new(0, v)).collect()
}

/// Instance `k` of the generated suite: `h ≤ 3`, `h² ≤ n ≤ 12`.
pub fn suite_instance(seed: u64, k: usize) -> LinMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
    let h = rng.gen_range(1..=3usize);
    let n = rng.gen_range((h * h).max(2)..=12);
    let y1 = Subspace::new(0, n, near_indicators(&mut rng, n, h)).expect("independent blocks");
    LinMap::new(y1, 0, n, near_indicators(&mut rng, n, h)).expect("matching dimensions")
}

/// `extend_isomorphism` on `count` generated instances, each rechecked.
pub fn extend_suite(cfg: &RunConfig, count: usize) -> Result<Report, CliError> {
    let mut cases = Vec::new();
    let mut failures = 0;
    for k in 0..count {
        let t = suite_instance(cfg.seed, k);
        let (ext, problems) = match extend_isomorphism(&t, None, None, &cfg.extension()) {
            Ok(e) => {
                let p = check_extension(&t, &e, &cfg.c2);
                (to_value(&e), p)
            }
            Err(e) => (Value::Null, vec![e.to_string()]),
        };
        failures += usize::from(!problems.is_empty());
        cases.push(json!({ "map": to_value(&t), "extension": ext, "problems": problems }));
    }
    let verified = cases.len() - failures;
    Ok(Report::new("compute", cfg, json!({ "suite": cases, "verified": verified }), failures))
}
