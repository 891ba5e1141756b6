//! Self-contained reproduction runs. Each case is a list of named steps; the
//! case passes when every step does.

use serde_json::{json, Value};

use ossfield::covariance::{
    cov_oss_check, dom_symmetry_check, hurst, ran_symmetry_check, square_grid, CovarianceModel,
};
use ossfield::exponents::{
    decompose_field_exponent, exponent_family, family_invariants_check, haar_commuting_exponent,
    invariant_gaussian, GroupSpec, HaarConfig, Side,
};
use ossfield::matlin::{commutator, mat_power, spectrum};
use ossfield::polar::{Polar, PolarConfig};
use ossfield::semistable::{lattice_scaling_check, linspace, oss_failure_witness, SemistableSpec};
use ossfield::SquareMatrix;

use crate::config::{CliError, CliResult};
use crate::Outcome;

pub const CASES: [&str; 5] = [
    "ofbf-example",
    "haar-example",
    "polar-example",
    "decomposition",
    "semistable",
];

struct Steps(Vec<Value>);

impl Steps {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: Value) {
        self.0
            .push(json!({ "step": name.into(), "passed": passed, "detail": detail }));
    }

    fn all_passed(&self) -> bool {
        self.0.iter().all(|s| s["passed"] == json!(true))
    }
}

pub fn run(case: &str) -> CliResult<Outcome> {
    let mut steps = Steps(Vec::new());
    let (inputs, tolerances) = match case {
        "ofbf-example" => ofbf_example(&mut steps)?,
        "haar-example" => haar_example(&mut steps)?,
        "polar-example" => polar_example(&mut steps)?,
        "decomposition" => decomposition(&mut steps)?,
        "semistable" => semistable(&mut steps)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown case {other:?}; expected one of {}",
                CASES.join(", ")
            )))
        }
    };
    let passed = steps.all_passed();
    Ok(Outcome {
        command: "repro",
        inputs: json!({ "case": case, "parameters": inputs }),
        tolerances,
        result: json!({ "steps": steps.0 }),
        passed: Some(passed),
        csv: None,
    })
}

fn j2() -> SquareMatrix {
    SquareMatrix::rotation_generator()
}

/// gamma = 3: scaling law for hI and hI + theta J, O(2) as both symmetry
/// groups, and the invariants of hI + so(2).
fn ofbf_example(steps: &mut Steps) -> CliResult<(Value, Value)> {
    let gamma = 3.0;
    let h = hurst(gamma);
    let model = CovarianceModel::ofbf(gamma)?;
    let grid = square_grid(3, -1.0, 1.0);
    let (oss_tol, sym_tol, fam_tol) = (1e-5, 1e-6, 1e-8);
    let e = SquareMatrix::identity(2);

    for theta in [0.0, -1.0, 0.3] {
        let hm = &SquareMatrix::scalar(2, h) + &(&j2() * theta);
        for c in [0.5, 2.0, 10.0] {
            let r = cov_oss_check(&model, &e, &hm, c, &grid, oss_tol)?;
            steps.push(
                format!("scaling H = hI + {theta} J, c = {c}"),
                r.passed,
                json!({ "max_rel_deviation": r.max_rel_deviation }),
            );
        }
    }

    let wrong = cov_oss_check(
        &model,
        &e,
        &SquareMatrix::scalar(2, h + 0.1),
        2.0,
        &grid,
        oss_tol,
    )?;
    let expected = 2f64.powf(0.2) - 1.0;
    steps.push(
        "negative control H = (h + 0.1) I",
        !wrong.passed && (wrong.max_rel_deviation - expected).abs() <= 0.1 * expected,
        json!({ "max_rel_deviation": wrong.max_rel_deviation, "expected": expected }),
    );

    let o2 = GroupSpec::orthogonal(2)?;
    let mut worst: f64 = 0.0;
    let mut all = true;
    for a in o2.samples(16, 0) {
        let d = dom_symmetry_check(&model, &a, &grid, sym_tol)?;
        let r = ran_symmetry_check(&model, &a, &grid, sym_tol)?;
        all &= d.passed && r.passed;
        worst = worst.max(d.max_rel_deviation).max(r.max_rel_deviation);
    }
    steps.push(
        "16 sampled O(2) elements are domain and range symmetries",
        all,
        json!({ "max_rel_deviation": worst }),
    );

    for d in [
        SquareMatrix::diag(&[2.0, 1.0]),
        SquareMatrix::diag(&[1.0, 2.0]),
    ] {
        let dom = dom_symmetry_check(&model, &d, &grid, sym_tol)?;
        let ran = ran_symmetry_check(&model, &d, &grid, sym_tol)?;
        steps.push(
            format!(
                "{} is not a symmetry",
                d.rows()
                    .iter()
                    .map(|r| format!("{r:?}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
            !dom.passed && !ran.passed,
            json!({ "domain": dom.max_rel_deviation, "range": ran.max_rel_deviation }),
        );
    }

    let fam = exponent_family(&SquareMatrix::scalar(2, h), &o2, Side::Range)?;
    let rep = family_invariants_check(&fam, 50, fam_tol, 0)?;
    steps.push(
        "family hI + so(2) shares spectrum and nilpotent part",
        rep.passed,
        json!({ "spectrum": rep.max_spectrum_deviation, "nilpotent": rep.max_nilpotent_deviation }),
    );

    Ok((
        json!({ "gamma": gamma, "h": h, "grid": grid }),
        json!({ "scaling": oss_tol, "symmetry": sym_tol, "family": fam_tol }),
    ))
}

fn haar_example(steps: &mut Steps) -> CliResult<(Value, Value)> {
    let h = SquareMatrix::from_rows(&[vec![1.0, 5.0], vec![0.0, 2.0]])?;
    let g = GroupSpec::orthogonal(2)?;
    let avg = haar_commuting_exponent(&h, &g, &HaarConfig::default())?;
    let target = SquareMatrix::scalar(2, h.trace() / 2.0);
    let err = avg.exponent.dist(&target);
    steps.push(
        "Haar average over O(2) equals (tr H / 2) I",
        err <= 1e-9,
        json!({ "error": err, "exponent": avg.exponent }),
    );
    let mut worst: f64 = 0.0;
    for a in g.samples(64, 1) {
        worst = worst.max(commutator(&avg.exponent, &a)?.norm());
    }
    steps.push(
        "average commutes with 64 group samples",
        worst <= 1e-9,
        json!({ "max_commutator": worst }),
    );
    Ok((json!({ "H": h, "group": "O(2)" }), json!({ "tol": 1e-9 })))
}

fn polar_example(steps: &mut Steps) -> CliResult<(Value, Value)> {
    let tol = 1e-8;
    let p = Polar::new(PolarConfig::new(SquareMatrix::identity(2))?)?;
    let c = p.decompose(&[3.0, 4.0])?;
    let err =
        (c.radial - 5.0).abs() + (c.directional[0] - 0.6).abs() + (c.directional[1] - 0.8).abs();
    steps.push(
        "E = I, x = (3, 4): tau = 5, l = (0.6, 0.8)",
        err <= tol,
        json!({ "tau": c.radial, "l": c.directional }),
    );

    let e = SquareMatrix::diag(&[1.0, 2.0]);
    let p = Polar::new(PolarConfig::new(e.clone())?)?;
    let c = p.decompose(&[0.0, 4.0])?;
    let err = (c.radial - 2f64.sqrt()).abs();
    steps.push(
        "E = diag(1, 2), x = (0, 4): tau = sqrt 2",
        err <= tol,
        json!({ "tau": c.radial }),
    );

    let x = [0.7, -1.3];
    let base = p.decompose(&x)?;
    let mut worst: f64 = 0.0;
    for s in [0.01, 0.5, 3.0, 100.0] {
        let y = mat_power(&e, s)?.apply(&x)?;
        let scaled = p.decompose(&y)?;
        worst = worst.max((scaled.radial - s * base.radial).abs() / (s * base.radial));
    }
    steps.push(
        "tau(c^E x) = c tau(x)",
        worst <= tol,
        json!({ "max_rel_error": worst }),
    );
    Ok((json!({ "x": x }), json!({ "tol": tol })))
}

/// `Q blockdiag(theta J, D) Q^{-1}` split back into its blocks.
fn decomposition(steps: &mut Steps) -> CliResult<(Value, Value)> {
    let tol = 1e-8;
    let d = SquareMatrix::from_rows(&[vec![0.8, 0.3], vec![-0.2, 1.4]])?;
    let block = SquareMatrix::block_diag(&[&(&j2() * 0.7), &d]);
    let q = SquareMatrix::from_rows(&[
        vec![1.0, 0.2, -0.3, 0.1],
        vec![0.0, 1.1, 0.4, -0.2],
        vec![0.3, 0.0, 0.9, 0.5],
        vec![-0.1, 0.2, 0.0, 1.2],
    ])?;
    let h = q.conjugate(&block)?;
    let split = decompose_field_exponent(&h, 1e-7)?;
    let recon = split.reconstruct()?.dist(&h);
    steps.push(
        "reconstruction",
        recon <= tol * h.norm().max(1.0),
        json!({ "error": recon, "dims": split.dims }),
    );

    let (Some(z), Some(pos)) = (&split.block_zero, &split.block_positive) else {
        steps.push("both blocks present", false, json!({ "dims": split.dims }));
        return Ok((json!({ "H": h }), json!({ "tol": tol })));
    };
    let zs = spectrum(z)?;
    let ps = spectrum(pos)?;
    let mut want: Vec<f64> = spectrum(&d)?.eigen_real_parts;
    let mut got = ps.eigen_real_parts.clone();
    want.sort_by(f64::total_cmp);
    got.sort_by(f64::total_cmp);
    let pos_err = want
        .iter()
        .zip(&got)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let zero_err = zs
        .eigen_real_parts
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    steps.push(
        "block spectra",
        pos_err <= tol && zero_err <= tol,
        json!({ "positive_error": pos_err, "zero_block_max_real": zero_err }),
    );

    let sigma = invariant_gaussian(z)?;
    let mut worst: f64 = 0.0;
    for r in [1e-2, 0.3, 1.0, 7.0, 1e2] {
        let rh = mat_power(z, r)?;
        let moved = &(&rh * &sigma) * &rh.transpose();
        worst = worst.max(moved.dist(&sigma) / sigma.norm().max(1.0));
    }
    steps.push(
        "zero-block Gaussian is invariant under r^H1",
        worst <= tol,
        json!({ "max_rel_error": worst }),
    );
    Ok((json!({ "H": h }), json!({ "tol": tol })))
}

fn semistable(steps: &mut Steps) -> CliResult<(Value, Value)> {
    let spec = SemistableSpec::default();
    let lattice = lattice_scaling_check(&spec, &linspace(-10.0, 10.0, 101), 0.0);
    steps.push(
        "lattice residual within truncation and rounding bounds",
        lattice.passed,
        json!({ "max_residual": lattice.max_residual, "max_excess": lattice.max_excess }),
    );
    let w = oss_failure_witness(&spec, 1.5, &linspace(0.1, 10.0, 101))?;
    steps.push(
        "off-lattice c = 1.5 deviation exceeds 10x the bound",
        w.certified_ratio > 10.0,
        json!({ "max_deviation": w.max_deviation, "bound": w.bound_at_max, "ratio": w.certified_ratio }),
    );
    Ok((
        json!({ "spec": spec, "witness_c": 1.5 }),
        json!({ "lattice_tol": 0.0, "witness_ratio": 10.0 }),
    ))
}
