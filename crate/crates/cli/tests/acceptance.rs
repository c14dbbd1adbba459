//! Acceptance criteria 1-10, one PASS/FAIL line each. Exits nonzero when any
//! criterion fails.

use distwave_cli::config::RunConfig;
use distwave_cli::{execute, Command};
use distwave_core::data::{schwartz_suite, DataFunction};
use distwave_core::evolution::{energy, fdtd_solve, FdtdOptions, Propagator};
use distwave_core::numerics::fit_line;
use distwave_core::odesolve::{solve_jost, JostOptions};
use distwave_core::potential::Potential;
use distwave_core::spectral::{build_spectral_table, SpectralTable, TableConfig};
use distwave_core::transform::{apply_a_diag, forward_values, inverse_values, norm_rho, norm_x, GridFunction};
use distwave_core::vectorfield::{
    apply_b_values, commutator_s_cos_residual, commutator_s_sin_residual, kernel_f, offdiag_identity_residual,
};
use distwave_core::verify::{
    verify_dispersive, verify_divergence_form, verify_energy, verify_local_energy_decay, verify_vector_field,
    DecayOptions, DecayVariant,
};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

type Outcome = Result<(bool, String), String>;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_path(name)).expect("shipped config parses")
}

fn free_table() -> &'static SpectralTable {
    static T: OnceLock<SpectralTable> = OnceLock::new();
    T.get_or_init(|| build_spectral_table(&Potential::zero(), &load("free_case.json").grid).unwrap())
}

fn model_table() -> &'static SpectralTable {
    static T: OnceLock<SpectralTable> = OnceLock::new();
    T.get_or_init(|| build_spectral_table(&Potential::model(4.0), &load("model_potential.json").grid).unwrap())
}

fn gauss() -> DataFunction {
    DataFunction::Gaussian {
        amplitude: 1.0,
        width: std::f64::consts::FRAC_1_SQRT_2,
    }
}

fn zero_like(f: &GridFunction) -> GridFunction {
    f.zeros_like()
}

fn le(value: f64, limit: f64) -> bool {
    value <= limit
}

fn c1() -> Outcome {
    let t = free_table();
    let mut err = 0.0f64;
    let mut n = 0;
    for p in t.points.iter().filter(|p| (0.01..=10.0).contains(&p.xi)) {
        let exact = 1.0 / (std::f64::consts::PI * p.xi);
        err = err.max((p.rho - exact).abs() / exact);
        n += 1;
    }
    Ok((le(err, 1e-6) && n > 0, format!("max |rho/(1/(pi xi)) - 1| = {err:.2e} over {n} samples (limit 1e-6)")))
}

/// Worst Plancherel defect, round-trip error and diagonalization error over the suite.
fn suite_errors(t: &SpectralTable) -> Result<[f64; 3], String> {
    let mut worst = [0.0f64; 3];
    for d in schwartz_suite() {
        let f = d.sample(&t.x);
        let n = norm_x(&f.values, t);
        let g = forward_values(&f.values, t);
        let back = inverse_values(&g, t);
        let diff: Vec<f64> = back.iter().zip(&f.values).map(|(a, b)| a - b).collect();
        let rt = norm_x(&diff, t);
        let diag = apply_a_diag(&f, t).map_err(|e| e.to_string())?;
        let e = [
            (norm_rho(&g, t).powi(2) - n * n).abs() / (n * n),
            rt.max(rt / n),
            diag.l2_discrepancy / diag.reference,
        ];
        for (w, v) in worst.iter_mut().zip(e) {
            *w = w.max(v);
        }
    }
    Ok(worst)
}

type SuitePair = Result<([f64; 3], [f64; 3]), String>;

fn suite_pair() -> SuitePair {
    static S: OnceLock<SuitePair> = OnceLock::new();
    S.get_or_init(|| Ok((suite_errors(free_table())?, suite_errors(model_table())?)))
        .clone()
}

fn c2() -> Outcome {
    let (free, model) = suite_pair()?;
    let pass = [free[0], free[1], model[0], model[1]].iter().all(|&v| le(v, 1e-3));
    Ok((
        pass,
        format!(
            "plancherel {:.2e}/{:.2e}, round trip {:.2e}/{:.2e} (free/model, limit 1e-3)",
            free[0], model[0], free[1], model[1]
        ),
    ))
}

fn c3() -> Outcome {
    let (free, model) = suite_pair()?;
    Ok((
        le(free[2], 1e-3) && le(model[2], 1e-3),
        format!("||F(Af) - xi^2 Ff|| / ||<xi>^2 Ff|| = {:.2e}/{:.2e} (free/model, limit 1e-3)", free[2], model[2]),
    ))
}

fn c4() -> Outcome {
    let t = model_table();
    let variation = t.points.iter().fold(0.0f64, |m, p| m.max(p.wronskian_variation));
    let x: Vec<f64> = (0..=800).map(|i| i as f64 * 0.05).collect();
    let pot = Potential::model(4.0);
    let mut jost = 0.0f64;
    for xi in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
        let s = solve_jost(&pot, xi, &x, &JostOptions::default()).map_err(|e| e.to_string())?;
        jost = jost.max(s.wronskian_defect() / xi);
    }
    let det = t.coeffs.as_ref().map(|c| c.defect).ok_or("zero-energy fit missing")?;
    let pass = le(variation, 1e-6) && le(t.residual, 1e-6) && le(jost, 1e-6) && le(det, 1e-3);
    Ok((
        pass,
        format!(
            "W(theta,phi) {:.2e}, W variation {variation:.2e}, |W(f,conj f)+2i xi|/xi {jost:.2e} (limit 1e-6), det {det:.2e} (limit 1e-3)",
            t.residual
        ),
    ))
}

fn c5() -> Outcome {
    let t = model_table();
    let pot = Potential::model(4.0);
    let g0 = gauss();
    let f = g0.sample(&t.x);
    let prop = Propagator::new(&f, &zero_like(&f), t).map_err(|e| e.to_string())?;
    let gap = |spectral: &[f64], st: &distwave_core::evolution::WaveState| {
        let r = st.resample(&t.x);
        let d: Vec<f64> = spectral.iter().zip(&r.u).map(|(a, b)| a - b).collect();
        norm_x(&d, t) / norm_x(spectral, t)
    };
    let run = |dx: f64, times: &[f64]| {
        let opts = FdtdOptions {
            dx,
            dt: 0.5 * dx,
            length: None,
        };
        fdtd_solve(&pot, |x| g0.eval(x), |_| 0.0, 20.0, &opts, times).map_err(|e| e.to_string())
    };
    let times = [5.0, 10.0, 20.0];
    let fine = run(0.01, &times)?;
    let mut gaps = Vec::new();
    for (s, st) in times.iter().zip(&fine.states) {
        gaps.push(gap(&prop.state(*s, t).map_err(|e| e.to_string())?.u, st));
    }
    let reference = prop.state(20.0, t).map_err(|e| e.to_string())?.u;
    let dxs = [0.08, 0.04, 0.02];
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for dx in dxs {
        let r = run(dx, &[20.0])?;
        lx.push(dx.ln());
        ly.push(gap(&reference, &r.states[0]).ln());
    }
    let order = fit_line(&lx, &ly).ok_or("order fit failed")?.slope;
    let pass = gaps.iter().all(|&g| le(g, 1e-2)) && (order - 2.0).abs() <= 0.2;
    Ok((
        pass,
        format!(
            "relative L2 gap {:.2e}/{:.2e}/{:.2e} at t=5/10/20 (limit 1e-2), FDTD order {order:.3} (2 +- 0.2)",
            gaps[0], gaps[1], gaps[2]
        ),
    ))
}

fn time_range(start: f64, end: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect()
}

fn c6() -> Outcome {
    let t = model_table();
    let f = gauss().sample(&t.x);
    let g = zero_like(&f);
    let times = time_range(10.0, 100.0, 31);
    let mut pass = true;
    let mut msg = Vec::new();
    for (sigma, lo, hi) in [(0.5, -0.65, -0.40), (1.0, -1.15, -0.85)] {
        let r = verify_dispersive(&f, &g, sigma, &times, t).map_err(|e| e.to_string())?;
        pass &= r.exponent_within(lo, hi);
        msg.push(format!(
            "sigma={sigma}: {:.3} +- {:.3} in [{lo}, {hi}]",
            r.fitted_exponent.unwrap_or(f64::NAN),
            r.exponent_halfwidth.unwrap_or(f64::NAN)
        ));
    }
    Ok((pass, msg.join(", ")))
}

fn c7() -> Outcome {
    let t = model_table();
    let pot = Potential::model(4.0);
    let f = gauss().sample(&t.x);
    let g = gauss().sample(&t.x);
    let prop = Propagator::new(&f, &g, t).map_err(|e| e.to_string())?;
    let times = time_range(0.0, 50.0, 26);
    let e0 = energy(&prop.state(0.0, t).map_err(|e| e.to_string())?, &pot).total;
    let mut drift = 0.0f64;
    for &s in &times {
        let e = energy(&prop.state(s, t).map_err(|e| e.to_string())?, &pot).total;
        drift = drift.max((e - e0).abs() / e0);
    }
    // lhs is ||sqrt(A) u(t)||, which reaches ||sqrt(A) f|| + ||g|| only for g = 0 (at t = 0)
    let r = verify_energy(&f, &zero_like(&f), 0, 0, &times, t).map_err(|e| e.to_string())?;
    let dev = (r.sup_ratio - 1.0).abs();
    Ok((
        le(drift, 1e-3) && le(dev, 1e-3),
        format!("energy drift {drift:.2e} on [0,50] (limit 1e-3), |sup ratio - 1| = {dev:.2e} (limit 1e-3)"),
    ))
}

fn c8() -> Outcome {
    let mut msg = Vec::new();
    let mut pass = true;

    // free nullity of B on even bumps
    let ft = free_table();
    let bump = |t: &SpectralTable, c: f64, w: f64| -> Vec<f64> {
        let g = |d: f64| (-d * d / (2.0 * w * w)).exp();
        t.xi.iter().map(|&x| g(x - c) + g(x + c)).collect()
    };
    let mut nullity = 0.0f64;
    for j in 0..10 {
        let g = bump(ft, 1.0 + 0.4 * j as f64, 0.3 + 0.02 * j as f64);
        nullity = nullity.max(norm_rho(&apply_b_values(&g, ft), ft) / norm_rho(&g, ft));
    }
    pass &= le(nullity, 1e-3);
    msg.push(format!("free ||Bg||/||g|| {nullity:.2e} (1e-3)"));

    // identity residual under refinement
    let table = |dx: f64, t_max: f64, per_decade: usize| {
        let cfg = TableConfig {
            x_max: 40.0,
            dx,
            xi_min: 1e-3,
            xi_max: 8.0,
            t_max,
            log_points_per_decade: per_decade,
            ..Default::default()
        };
        build_spectral_table(&Potential::model(4.0), &cfg).map_err(|e| e.to_string())
    };
    let coarse = table(0.08, 20.0, 24)?;
    let rc = offdiag_identity_residual(&bump(&coarse, 2.5, 0.4), &coarse, &kernel_f(&coarse)).relative();
    drop(coarse);
    let fine = table(0.04, 60.0, 48)?;
    let rf = offdiag_identity_residual(&bump(&fine, 2.5, 0.4), &fine, &kernel_f(&fine)).relative();
    drop(fine);
    let ratio = rc / rf;
    pass &= le(rc, 5e-2) && le(rf, 5e-2) && ratio >= 1.5;
    msg.push(format!("identity {rc:.2e} -> {rf:.2e}, ratio {ratio:.1} (5e-2, >= 1.5)"));

    // commutators at t = 5 and the vector-field estimate
    let t = model_table();
    let f = gauss().sample(&t.x);
    let cos = commutator_s_cos_residual(&f, 5.0, t).map_err(|e| e.to_string())?.relative();
    let sin = commutator_s_sin_residual(&f, 5.0, t).map_err(|e| e.to_string())?.relative();
    pass &= le(cos, 5e-2) && le(sin, 5e-2);
    msg.push(format!("[S,cos] {cos:.2e}, [S,sin] {sin:.2e} (5e-2)"));
    let times = time_range(1.0, 50.0, 26);
    let r = verify_vector_field(&f, &zero_like(&f), 1, 0, &times, t).map_err(|e| e.to_string())?;
    let slope = r.trend_slope.unwrap_or(f64::NAN);
    pass &= r.no_growth();
    msg.push(format!("m=1 trend slope {slope:.2e} (|.| < 0.02)"));
    Ok((pass, msg.join(", ")))
}

fn c9() -> Outcome {
    let t = model_table();
    let f = gauss().sample(&t.x);
    let times = [10.0, 20.0, 40.0, 80.0];
    let mut msg = Vec::new();
    let mut pass = true;
    for variant in [DecayVariant::Cos, DecayVariant::Sin] {
        let opts = DecayOptions {
            variant,
            ..Default::default()
        };
        let r = verify_local_energy_decay(&f, 0, 0, 0, &times, t, &opts).map_err(|e| e.to_string())?;
        let ratio = r.diagnostics.get("saturation_ratio").copied().unwrap_or(f64::NAN);
        pass &= le(ratio, 0.5);
        msg.push(format!("{variant:?} increment ratio {ratio:.3} (limit 0.5)"));
    }
    let odd = DataFunction::OddGaussian { width: 1.0 }.sample(&t.x);
    let r = verify_divergence_form(&odd, 0, 0, &time_range(1.0, 50.0, 26), t).map_err(|e| e.to_string())?;
    pass &= r.no_growth();
    msg.push(format!("divergence form trend {:.2e} (|.| < 0.02)", r.trend_slope.unwrap_or(f64::NAN)));
    Ok((pass, msg.join(", ")))
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c10() -> Outcome {
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let cfg = config_path("model_potential.json");
    for d in &dirs {
        // acceptance failures inside the run do not matter here, only errors do
        execute(Command::Run, &cfg, Some(d.path().to_path_buf())).map_err(|e| e.to_string())?;
    }
    let (a, b) = (read_tree(dirs[0].path()), read_tree(dirs[1].path()));
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    let bytes: usize = a.values().map(Vec::len).sum();
    Ok((
        differing.is_empty() && !a.is_empty(),
        if differing.is_empty() {
            format!("{} files, {bytes} bytes identical across two runs", a.len())
        } else {
            format!("differing files: {}", differing.join(" "))
        },
    ))
}

fn main() {
    // `cargo test -- --list` and filters from the default harness are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("free spectral density", c1),
        ("transform unitarity", c2),
        ("diagonalization", c3),
        ("wronskian constancy", c4),
        ("spectral vs finite difference", c5),
        ("dispersive decay rates", c6),
        ("energy conservation", c7),
        ("vector field commutation", c8),
        ("local energy decay", c9),
        ("determinism", c10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<30} {}  {detail}  [{:.1}s]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
