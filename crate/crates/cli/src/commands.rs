use std::path::PathBuf;

use serde_json::{json, Value};

use ossfield::covariance::{
    cov_oss_check, dom_symmetry_check, hurst, ran_symmetry_check, CovarianceModel, QuadConfig,
};
use ossfield::exponents::{
    admissibility_check, decompose_field_exponent, exponent_family, family_invariants_check,
    haar_commuting_exponent, invariant_gaussian, GroupSpec, HaarConfig, Side,
};
use ossfield::fieldsim::{
    assemble_cov_matrix, empirical_oss_test, GaussianSampler, Grid, DEFAULT_ALPHA,
};
use ossfield::io::{format_rows, matrix_to_csv};
use ossfield::matlin::commutator;
use ossfield::polar::{BaseNorm, Polar, PolarConfig};
use ossfield::semistable::{
    lattice_scaling_check, linspace, oss_failure_witness, residual_tsv, SemistableSpec,
};
use ossfield::SquareMatrix;

use crate::config::{parse_matrix, write_file, CliError, CliResult, Ctx};
use crate::{
    CheckOssArgs, CovEvalArgs, FamilyArgs, GridArgs, HaarArgs, MatrixTolArgs, ModelArgs, Outcome,
    PolarArgs, SemistableArgs, SimSampleArgs, SimVerifyArgs, SymCheckArgs,
};

/// Model selection shared by the covariance and simulation verbs.
pub fn model(ctx: &Ctx, a: &ModelArgs) -> CliResult<CovarianceModel> {
    let gamma = ctx.f64(a.gamma, "gamma", 3.0)?;
    let kind = ctx.string(a.model.clone(), "model", "ofbf")?;
    let mut quad = QuadConfig::default();
    quad.radial_rel_tol = ctx.tol(a.radial_rtol, "radial-rtol", quad.radial_rel_tol)?;
    quad.angular_rel_tol = ctx.tol(a.angular_rtol, "angular-rtol", quad.angular_rel_tol)?;
    let m = match kind.as_str() {
        "ofbf" => CovarianceModel::ofbf(gamma)?,
        "closed-form" | "fbf" => CovarianceModel::closed_form_fbf(gamma)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown model {other:?}; expected ofbf or closed-form"
            )))
        }
    };
    Ok(m.with_quad(quad))
}

fn model_json(m: &CovarianceModel) -> Value {
    json!({ "name": m.name(), "gamma": m.gamma(), "hurst": m.gamma().map(hurst) })
}

fn grid(ctx: &Ctx, g: &GridArgs, default_size: usize) -> CliResult<Vec<Vec<f64>>> {
    ctx.grid(
        g.grid.clone(),
        g.grid_size,
        g.grid_lo,
        g.grid_hi,
        default_size,
    )
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn csv_line(values: &[f64]) -> String {
    format_rows(&[values.to_vec()])
}

pub fn cov_eval(ctx: &Ctx, a: &CovEvalArgs) -> CliResult<Outcome> {
    let m = model(ctx, &a.model)?;
    let s = ctx.vector(a.s.clone(), "s")?;
    let t = ctx.vector(a.t.clone(), "t")?;
    let g = m.eval(&s, &t)?;
    Ok(Outcome {
        command: "cov eval",
        inputs: json!({ "model": model_json(&m), "s": s, "t": t }),
        tolerances: json!({ "radial_rel_tol": m.quad.radial_rel_tol, "angular_rel_tol": m.quad.angular_rel_tol }),
        result: json!({ "gamma_st": g }),
        passed: None,
        csv: Some(matrix_to_csv(&g)),
    })
}

pub fn cov_check_oss(ctx: &Ctx, a: &CheckOssArgs) -> CliResult<Outcome> {
    let m = model(ctx, &a.model)?;
    let h_default = m.gamma().map(hurst).unwrap_or(0.5);
    let e = ctx
        .matrix_opt(a.e.clone(), "E")?
        .unwrap_or_else(|| SquareMatrix::identity(m.domain_dim));
    let h = ctx
        .matrix_opt(a.h.clone(), "H")?
        .unwrap_or_else(|| SquareMatrix::scalar(m.range_dim, h_default));
    let c = ctx.f64(a.c, "c", 2.0)?;
    let tol = ctx.tol(a.tol, "tol", 1e-5)?;
    let pts = grid(ctx, &a.grid, 4)?;
    let report = cov_oss_check(&m, &e, &h, c, &pts, tol)?;
    Ok(Outcome {
        command: "cov check-oss",
        inputs: json!({ "model": model_json(&m), "E": e, "H": h, "c": c, "grid": pts }),
        tolerances: json!({ "tol": tol }),
        passed: Some(report.passed),
        result: to_json(&report),
        csv: None,
    })
}

pub fn sym_check(ctx: &Ctx, a: &SymCheckArgs) -> CliResult<Outcome> {
    let m = model(ctx, &a.model)?;
    let mat = ctx.matrix(a.matrix.clone(), "matrix")?;
    let side = ctx.string(a.side.clone(), "side", "both")?;
    let tol = ctx.tol(a.tol, "tol", 1e-6)?;
    let pts = grid(ctx, &a.grid, 4)?;
    let (dom, ran) = match side.to_ascii_lowercase().as_str() {
        "both" => (true, true),
        s => match s.parse::<Side>()? {
            Side::Domain => (true, false),
            Side::Range => (false, true),
        },
    };
    let mut result = serde_json::Map::new();
    let mut passed = true;
    if dom {
        let r = dom_symmetry_check(&m, &mat, &pts, tol)?;
        passed &= r.passed;
        result.insert("domain".into(), to_json(&r));
    }
    if ran {
        let r = ran_symmetry_check(&m, &mat, &pts, tol)?;
        passed &= r.passed;
        result.insert("range".into(), to_json(&r));
    }
    Ok(Outcome {
        command: "sym check",
        inputs: json!({ "model": model_json(&m), "matrix": mat, "side": side, "grid": pts }),
        tolerances: json!({ "tol": tol }),
        result: Value::Object(result),
        passed: Some(passed),
        csv: None,
    })
}

pub fn exp_family(ctx: &Ctx, a: &FamilyArgs) -> CliResult<Outcome> {
    let base = ctx.matrix(a.base.clone(), "base")?;
    let default_group = format!("O({})", base.dim());
    let group: GroupSpec = ctx
        .string(a.group.clone(), "group", &default_group)?
        .parse()?;
    let side: Side = ctx.string(a.side.clone(), "side", "range")?.parse()?;
    let samples = ctx.usize(a.samples, "samples", 50)?;
    let tol = ctx.tol(a.tol, "tol", 1e-8)?;
    let seed = ctx.u64(a.seed, "seed", 0)?;
    let fam = exponent_family(&base, &group, side)?;
    let report = family_invariants_check(&fam, samples, tol, seed)?;
    Ok(Outcome {
        command: "exp family",
        inputs: json!({ "base": base, "group": group.to_string(), "side": side, "samples": samples, "seed": seed }),
        tolerances: json!({ "tol": tol }),
        passed: Some(report.passed),
        result: json!({ "tangent_basis": fam.tangent_basis, "report": report }),
        csv: None,
    })
}

/// `"a,b;c,d|e,f;g,h"` as a list of matrices.
fn parse_elements(text: &str) -> CliResult<Vec<SquareMatrix>> {
    text.split('|').map(|m| parse_matrix(m.trim())).collect()
}

pub fn exp_haar(ctx: &Ctx, a: &HaarArgs) -> CliResult<Outcome> {
    let h = ctx.matrix(a.matrix.clone(), "matrix")?;
    let group = match ctx.string_opt(a.elements.clone(), "elements")? {
        Some(text) => GroupSpec::finite(parse_elements(&text)?)?,
        None => ctx
            .string(a.group.clone(), "group", &format!("O({})", h.dim()))?
            .parse()?,
    };
    let defaults = HaarConfig::default();
    let cfg = HaarConfig {
        circle_nodes: ctx.usize(a.circle_nodes, "circle-nodes", defaults.circle_nodes)?,
        samples: ctx.usize(a.samples, "samples", defaults.samples)?,
        seed: ctx.u64(a.seed, "seed", defaults.seed)?,
    };
    let avg = haar_commuting_exponent(&h, &group, &cfg)?;
    let mut max_commutator: f64 = 0.0;
    for g in group.samples(64, cfg.seed.wrapping_add(1)) {
        max_commutator = max_commutator.max(commutator(&avg.exponent, &g)?.norm());
    }
    Ok(Outcome {
        command: "exp haar",
        inputs: json!({ "matrix": h, "group": group.to_string(), "seed": cfg.seed }),
        tolerances: json!({ "circle_nodes": cfg.circle_nodes, "samples": cfg.samples }),
        csv: Some(matrix_to_csv(&avg.exponent)),
        result: json!({ "average": avg, "max_commutator_64": max_commutator }),
        passed: None,
    })
}

pub fn exp_admissible(ctx: &Ctx, a: &MatrixTolArgs) -> CliResult<Outcome> {
    let h = ctx.matrix(a.matrix.clone(), "matrix")?;
    let tol = ctx.tol(a.tol, "tol", 1e-7)?;
    let report = admissibility_check(&h, tol)?;
    Ok(Outcome {
        command: "exp admissible",
        inputs: json!({ "matrix": h }),
        tolerances: json!({ "tol": tol }),
        passed: Some(report.admissible),
        result: to_json(&report),
        csv: None,
    })
}

pub fn exp_split(ctx: &Ctx, a: &MatrixTolArgs) -> CliResult<Outcome> {
    let h = ctx.matrix(a.matrix.clone(), "matrix")?;
    let tol = ctx.tol(a.tol, "tol", 1e-7)?;
    let split = decompose_field_exponent(&h, tol)?;
    let recon = split.reconstruct()?.dist(&h);
    let recon_tol = 1e-8 * h.norm().max(1.0);
    let sigma = match &split.block_zero {
        Some(b) => Some(invariant_gaussian(b)?),
        None => None,
    };
    Ok(Outcome {
        command: "exp split",
        inputs: json!({ "matrix": h }),
        tolerances: json!({ "zero_band": tol, "reconstruction": recon_tol }),
        result: json!({
            "dims": split.dims,
            "conjugacy": split.conjugacy,
            "block_zero": split.block_zero,
            "block_positive": split.block_positive,
            "reconstruction_error": recon,
            "invariant_covariance": sigma,
        }),
        passed: Some(recon <= recon_tol),
        csv: None,
    })
}

pub fn polar(ctx: &Ctx, a: &PolarArgs) -> CliResult<Outcome> {
    let e = ctx.matrix(a.e.clone(), "E")?;
    let x = ctx.vector(a.x.clone(), "x")?;
    let mut cfg = PolarConfig::new(e.clone())?;
    if let Some(n) = ctx.string_opt(a.base_norm.clone(), "base-norm")? {
        cfg = cfg.with_base_norm(n.parse::<BaseNorm>()?);
    }
    let quad_points = ctx.usize(a.quad_points, "quad-points", cfg.quad_points)?;
    let root_tol = ctx.tol(a.root_tol, "root-tol", cfg.root_tol)?;
    cfg = cfg.with_quad_points(quad_points).with_root_tol(root_tol);
    let tolerances = json!({ "quad_points": cfg.quad_points, "root_tol": cfg.root_tol });
    let p = Polar::new(cfg)?;
    let coords = p.decompose(&x)?;
    let back = p.compose(coords.radial, &coords.directional)?;
    let roundtrip = back
        .iter()
        .zip(&x)
        .map(|(u, v)| (u - v).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut row = vec![coords.radial];
    row.extend_from_slice(&coords.directional);
    let mut header = vec!["tau".to_string()];
    header.extend((1..=coords.directional.len()).map(|i| format!("l{i}")));
    Ok(Outcome {
        command: "polar",
        inputs: json!({ "E": e, "x": x }),
        tolerances,
        result: json!({ "tau": coords.radial, "l": coords.directional, "roundtrip_error": roundtrip }),
        passed: None,
        csv: Some(format!("{}\n{}", header.join(","), csv_line(&row))),
    })
}

fn sidecar_path(out: &std::path::Path) -> PathBuf {
    out.with_extension("json")
}

pub fn sim_sample(ctx: &Ctx, a: &SimSampleArgs) -> CliResult<Outcome> {
    let m = model(ctx, &a.model)?;
    let pts = grid(ctx, &a.grid, 2)?;
    let n = ctx.usize(a.n, "n", 1000)?;
    let seed = ctx.u64(a.seed, "seed", 0)?;
    let out: PathBuf = match &a.out {
        Some(p) => p.clone(),
        None => ctx.required(None, "out")?.into(),
    };
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let g = Grid::new(pts.clone())?;
    let cov = assemble_cov_matrix(&m, &g)?;
    let sampler = GaussianSampler::new(&cov)?;
    let values = sampler.batch(seed, 0, n);
    let rows: Vec<Vec<f64>> = values
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let mut header: Vec<String> = Vec::new();
    for i in 0..g.len() {
        for k in 0..m.range_dim {
            header.push(format!("p{i}_x{}", k + 1));
        }
    }
    write_file(
        &out,
        &format!("{}\n{}", header.join(","), format_rows(&rows)),
    )?;
    let sidecar = sidecar_path(&out);
    let meta = json!({
        "seed": seed,
        "n_samples": n,
        "model": model_json(&m),
        "grid": pts,
        "range_dim": m.range_dim,
        "layout": "one row per sample; columns point-major",
        "jitter": sampler.jitter,
        "residual": sampler.residual,
        "rank": sampler.rank(),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&sidecar, &(text + "\n"))?;
    Ok(Outcome {
        command: "sim sample",
        inputs: json!({ "model": model_json(&m), "grid": pts, "n": n, "seed": seed }),
        tolerances: json!({}),
        result: json!({
            "samples": out.display().to_string(),
            "sidecar": sidecar.display().to_string(),
            "jitter": sampler.jitter,
            "residual": sampler.residual,
        }),
        passed: None,
        csv: None,
    })
}

pub fn sim_verify(ctx: &Ctx, a: &SimVerifyArgs) -> CliResult<Outcome> {
    let m = model(ctx, &a.model)?;
    let h_default = m.gamma().map(hurst).unwrap_or(0.5);
    let e = ctx
        .matrix_opt(a.e.clone(), "E")?
        .unwrap_or_else(|| SquareMatrix::identity(m.domain_dim));
    let h = ctx
        .matrix_opt(a.h.clone(), "H")?
        .unwrap_or_else(|| SquareMatrix::scalar(m.range_dim, h_default));
    let c = ctx.f64(a.c, "c", 2.0)?;
    let n = ctx.usize(a.n, "n", 100_000)?;
    let seed = ctx.u64(a.seed, "seed", 0)?;
    let alpha = ctx.f64(a.alpha, "alpha", DEFAULT_ALPHA)?;
    let pts = grid(ctx, &a.grid, 2)?;
    let g = Grid::new(pts.clone())?;
    let report = empirical_oss_test(&m, &e, &h, c, &g, n, seed, alpha)?;
    Ok(Outcome {
        command: "sim verify",
        inputs: json!({ "model": model_json(&m), "E": e, "H": h, "c": c, "grid": pts, "n": n, "seed": seed }),
        tolerances: json!({ "alpha": alpha, "band_multiplier": report.band_multiplier }),
        passed: Some(report.passed),
        result: to_json(&report),
        csv: None,
    })
}

pub fn semistable_check(ctx: &Ctx, a: &SemistableArgs) -> CliResult<Outcome> {
    let b = ctx.f64(a.b, "b", 4.0)?;
    let c0 = ctx.f64(a.c0, "c0", 2.0)?;
    let k = ctx.u64(a.truncation.map(u64::from), "truncation", 50)?;
    let k = u32::try_from(k).map_err(|_| CliError::Usage("truncation too large".into()))?;
    let spec = SemistableSpec::new(b, c0, k)?;
    let lo = ctx.f64(a.theta_min, "theta-min", -10.0)?;
    let hi = ctx.f64(a.theta_max, "theta-max", 10.0)?;
    let points = ctx.usize(a.points, "points", 101)?;
    let tol = ctx.tol(a.tol, "tol", 1e-12)?;
    let wc = ctx.f64(a.witness_c, "witness-c", 1.5)?;
    let wlo = ctx.f64(a.witness_min, "witness-min", 0.1)?;
    let whi = ctx.f64(a.witness_max, "witness-max", 10.0)?;
    if points == 0 || [lo, hi, wlo, whi].iter().any(|v| !v.is_finite()) || hi < lo || whi < wlo {
        return Err(CliError::Usage(
            "theta ranges need points >= 1 and finite min <= max".into(),
        ));
    }
    let lattice = lattice_scaling_check(&spec, &linspace(lo, hi, points), tol);
    let witness = oss_failure_witness(&spec, wc, &linspace(wlo, whi, points))?;
    let certified = witness.certified_ratio > 10.0;
    let tsv = residual_tsv(&lattice.rows);
    if let Some(path) = &a.tsv {
        write_file(path, &tsv)?;
    }
    let summary = json!({
        "max_deviation": witness.max_deviation,
        "theta_at_max": witness.theta_at_max,
        "bound_at_max": witness.bound_at_max,
        "certified_ratio": witness.certified_ratio,
        "certified": certified,
        "c": wc,
    });
    Ok(Outcome {
        command: "semistable check",
        inputs: json!({ "spec": spec, "theta": [lo, hi, points], "witness_theta": [wlo, whi] }),
        tolerances: json!({ "tol": tol, "witness_min_ratio": 10.0 }),
        passed: Some(lattice.passed && certified),
        result: json!({
            "lattice": {
                "max_residual": lattice.max_residual,
                "max_excess": lattice.max_excess,
                "worst_theta": lattice.worst_theta,
                "passed": lattice.passed,
                "rows": lattice.rows,
            },
            "witness": summary,
        }),
        csv: Some(tsv),
    })
}
