//! One function per subcommand. Each fills a report and plot tables.

use std::f64::consts::PI;

use holo_lab::factorization::{pair_from_params, point_residuals, recover_params, verify_factorization, verify_master};
use holo_lab::herglotz::{analyze, default_tol_atom, dirac_concentration_test, estimate_moments, fejer_density, herglotz_function, sample_boundary};
use holo_lab::operator::OperatorMatrix;
use holo_lab::random::{random_hermitian, random_positive_contraction, rng};
use holo_lab::rigidity::{g_transform, operator_wirtinger_dbar, rigidity_verdict, test_family, OperatorFunction, RigidityTolerances, Verdict};
use holo_lab::shift::{cauchy_product, conjugation_check, shift_matrix_elements, taylor_varphi_t, truncated_factorization_check, LaguerreQuadrature};
use holo_lab::ComplexValue;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{RunConfig, ShiftInput};
use crate::plots::{num, PlotData};
use crate::report::{format_point, CheckOutcome, RunReport, VerdictOutcome};
use crate::CliError;

pub type SuiteOutput = (RunReport, Vec<PlotData>);

fn check_times(t_list: &[f64]) -> Result<(), CliError> {
    if t_list.is_empty() {
        return Err(CliError::Invalid("t_list must not be empty".into()));
    }
    if let Some(t) = t_list.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CliError::Invalid(format!("t_list entry {t} must be finite and >= 0")));
    }
    Ok(())
}

fn fmt_t(t: f64) -> String {
    format!("t={t}")
}

pub fn rigidity(cfg: &RunConfig) -> Result<SuiteOutput, CliError> {
    let input = cfg.rigidity.clone().unwrap_or_default();
    if input.functions.is_empty() && input.random_constants.is_none() {
        return Err(CliError::Invalid("rigidity-check needs 'rigidity.functions' or 'rigidity.random_constants'".into()));
    }
    let grid = cfg.grid_or_default();
    let tol = RigidityTolerances {
        eps_holo: cfg.tolerance("eps_holo"),
        eps_const: cfg.tolerance("eps_const"),
        strip_tol: cfg.tolerance("strip"),
    };
    let mut report = RunReport::new(cfg);
    let mut profile = PlotData::new("residual_vs_radius.csv", &["function", "radius", "holo_residual"]);

    let mut subjects: Vec<(String, OperatorFunction, Verdict)> = Vec::new();
    for spec in &input.functions {
        let family = test_family(&spec.id)?;
        let f = OperatorFunction::from_scalar(&family.function);
        subjects.push((spec.id.clone(), f, spec.expected.unwrap_or(family.expected)));
    }
    if let Some(rc) = input.random_constants {
        if rc.max_dim == 0 {
            return Err(CliError::Invalid("random_constants.max_dim must be >= 1".into()));
        }
        let mut r = rng(cfg.require_seed("random_constants")?);
        for i in 0..rc.count {
            let d = r.random_range(1..=rc.max_dim);
            let re = random_positive_contraction(d, &mut r);
            let im = random_hermitian(d, 1.0, &mut r);
            let c = &re + &im.scale(ComplexValue::new(0.0, 1.0));
            subjects.push((format!("random-const#{i} (d={d})"), OperatorFunction::constant(c, "random"), Verdict::ConstantConfirmed));
        }
    }

    for (name, f, expected) in &subjects {
        let r = rigidity_verdict(f, &grid, &tol)?;
        report.verdicts.push(VerdictOutcome {
            subject: name.clone(),
            verdict: r.verdict,
            expected: *expected,
            pass: r.verdict == *expected,
            holo_residual: r.holo_residual,
            holo_worst_at: format_point(r.holo_worst_at),
            constancy_deviation: r.constancy_deviation,
            strip_ok: r.strip_ok,
        });
    }
    let inconclusive = report.verdicts.iter().filter(|v| v.verdict == Verdict::Inconclusive).count();
    report.detail("inconclusive_count", inconclusive);

    // Per-radius holomorphy profile for the named functions only.
    for (name, f, _) in subjects.iter().take(input.functions.len()) {
        let g = g_transform(f);
        let h = grid.stencil_h();
        let values: Vec<Result<(usize, f64), CliError>> = grid
            .polar_points()
            .into_par_iter()
            .map(|(i, _, z)| Ok((i, operator_wirtinger_dbar(&g, z, h)?.operator_norm())))
            .collect();
        let mut per_radius = vec![0.0_f64; grid.radii().len()];
        for v in values {
            let (i, res) = v?;
            per_radius[i] = per_radius[i].max(res);
        }
        for (r, res) in grid.radii().iter().zip(per_radius) {
            profile.push(vec![name.clone(), num(*r), num(res)]);
        }
    }
    Ok((report, vec![profile]))
}

pub fn factorize(cfg: &RunConfig) -> Result<SuiteOutput, CliError> {
    let input = cfg
        .factorization
        .as_ref()
        .ok_or_else(|| CliError::Invalid("factorize-verify needs a 'factorization' section".into()))?;
    check_times(&input.t_list)?;
    let params = input.source().resolve(cfg)?;
    let grid = cfg.grid_or_default();
    let mut report = RunReport::new(cfg);

    let pair = pair_from_params(&params);
    let master = verify_master(&pair, &grid, cfg.tolerance("master"))?;
    report.checks.push(CheckOutcome::at_most("master", master.residual, cfg.tolerance("master")).located(master.worst_at));
    report.detail("master_min_margin", master.min_margin);

    let fact = verify_factorization(&params, &input.t_list, &grid, cfg.tolerance("product"))?;
    for (name, r) in [
        ("product", fact.product),
        ("commutation", fact.commutation),
        ("contractivity", fact.contractivity),
        ("semigroup", fact.semigroup),
    ] {
        report.checks.push(CheckOutcome::at_most(name, r.worst, cfg.tolerance(name)));
    }
    report.detail("evaluated_points", fact.evaluated_points);
    report.detail("skipped", fact.skipped);
    if fact.skipped > 0 {
        report.warnings.push(format!("{} (t, z) combinations exceeded the exponent budget and were skipped", fact.skipped));
    }

    let mut heat = PlotData::new("residual_heatmap.csv", &["radius", "angle", "residual"]);
    let rows: Vec<Result<Vec<String>, CliError>> = grid
        .polar_points()
        .into_par_iter()
        .map(|(i, k, z)| {
            let res = point_residuals(&params, &input.t_list, z)?;
            Ok(vec![num(grid.radii()[i]), num(grid.angle(k)), num(res.worst())])
        })
        .collect();
    for row in rows {
        heat.push(row?);
    }
    Ok((report, vec![heat]))
}

pub fn recover(cfg: &RunConfig) -> Result<SuiteOutput, CliError> {
    let input = cfg
        .factorization
        .as_ref()
        .ok_or_else(|| CliError::Invalid("recover-params needs a 'factorization' section".into()))?;
    let params = input.source().resolve(cfg)?;
    let grid = cfg.grid_or_default();
    let tol = cfg.tolerance("recover");
    let mut report = RunReport::new(cfg);
    let (found, residual) = recover_params(&pair_from_params(&params), &grid)?;
    report.checks.push(CheckOutcome::at_most("recover_A", (found.a() - params.a()).operator_norm(), tol));
    report.checks.push(CheckOutcome::at_most("recover_B", (found.b() - params.b()).operator_norm(), tol));
    report.checks.push(CheckOutcome::at_most("recover_symbol", residual, tol));
    report.detail("recovered", &found);
    Ok((report, Vec::new()))
}

pub fn herglotz(cfg: &RunConfig) -> Result<SuiteOutput, CliError> {
    let input = cfg
        .herglotz
        .as_ref()
        .ok_or_else(|| CliError::Invalid("herglotz-analyze needs a 'herglotz' section".into()))?;
    let params = input.source().resolve(cfg)?;
    let sampling = input.sampling;
    let mut report = RunReport::new(cfg);

    let h = herglotz_function(params.a(), params.b());
    let approx = analyze(&h, &sampling)?;
    report.checks.push(CheckOutcome::at_most(
        "atom_recovery",
        (&approx.atom_mass_at_1 - params.b()).operator_norm(),
        cfg.tolerance("atom"),
    ));
    let conc = dirac_concentration_test(&approx.moments, default_tol_atom(&approx.moments));
    report.checks.push(CheckOutcome::at_most("concentration_leak", conc.leak, default_tol_atom(&approx.moments)));
    report.detail("aliasing_weight", sampling.aliasing_weight());
    report.detail("atom_mass_at_1", &approx.atom_mass_at_1);

    if input.diffuse_control {
        let d = params.dim();
        let flat = OperatorFunction::constant(OperatorMatrix::identity(d), "identity");
        let est = estimate_moments(&sample_boundary(&flat, sampling.r, sampling.n_samples)?, sampling.max_order)?;
        let tol = default_tol_atom(&est);
        let c = dirac_concentration_test(&est, tol);
        report.checks.push(CheckOutcome::above("diffuse_control_leak", c.leak, tol));
    }

    let est = &approx.moments;
    let mut moments = PlotData::new("moment_profile.csv", &["n", "moment_norm", "distance_to_atom"]);
    for n in est.orders() {
        let m = est.moment(n);
        moments.push(vec![n.to_string(), num(m.operator_norm()), num((m - &approx.atom_mass_at_1).operator_norm())]);
    }
    // Fejér-smoothed mass of 64 equal arcs, midpoint rule with 8 points per arc.
    let arcs = 64;
    let sub = 8;
    let mut arc_mass = PlotData::new("arc_mass.csv", &["arc_start", "arc_end", "mass_norm"]);
    let masses: Vec<(f64, f64, f64)> = (0..arcs)
        .into_par_iter()
        .map(|a| {
            let width = 2.0 * PI / arcs as f64;
            let start = -PI + a as f64 * width;
            let mut acc = OperatorMatrix::zeros(est.dim());
            for s in 0..sub {
                let theta = start + (s as f64 + 0.5) * width / sub as f64;
                acc = acc + fejer_density(est, theta);
            }
            (start, start + width, acc.scale_real(width / (sub as f64 * 2.0 * PI)).operator_norm())
        })
        .collect();
    for (a, b, m) in masses {
        arc_mass.push(vec![num(a), num(b), num(m)]);
    }
    Ok((report, vec![moments, arc_mass]))
}

fn shift_quadrature(input: &ShiftInput) -> Result<LaguerreQuadrature, CliError> {
    let mut spec = input.quadrature.clone();
    for &t in &input.t_list {
        if t > 0.0 && t < spec.x_max && !spec.breakpoints.contains(&t) {
            spec.breakpoints.push(t);
        }
    }
    Ok(LaguerreQuadrature::new(&spec)?)
}

pub fn shift(cfg: &RunConfig) -> Result<SuiteOutput, CliError> {
    let input = cfg.shift.as_ref().ok_or_else(|| CliError::Invalid("shift-sim needs a 'shift' section".into()))?;
    check_times(&input.t_list)?;
    if input.order == 0 {
        return Err(CliError::Invalid("shift.order must be >= 1".into()));
    }
    let quad = shift_quadrature(input)?;
    let mut report = RunReport::new(cfg);
    report.detail("gram_residual", quad.gram_residual);
    report.detail("quadrature_nodes", quad.len());

    let mut coeff_csv = PlotData::new("coefficients.csv", &["t", "n", "c_n"]);
    let mut conj_csv = PlotData::new("conjugation.csv", &["t", "n", "m", "quadrature", "series", "abs_diff"]);
    let mut conventions = serde_json::Map::new();
    for &t in &input.t_list {
        let c = taylor_varphi_t(t, input.order)?;
        for (n, v) in c.coeffs.iter().enumerate() {
            coeff_csv.push(vec![num(t), n.to_string(), num(*v)]);
        }
        let r = conjugation_check(t, input.n_check, &quad, cfg.tolerance("conjugation"))?;
        report.checks.push(CheckOutcome::at_most(format!("conjugation[{}]", fmt_t(t)), r.max_deviation, cfg.tolerance("conjugation")));
        report.checks.push(CheckOutcome::at_most(format!("upper[{}]", fmt_t(t)), r.above_diagonal, cfg.tolerance("upper")));
        report.checks.push(CheckOutcome::at_most(format!("isometry[{}]", fmt_t(t)), r.isometry_defect, cfg.tolerance("isometry")));
        conventions.insert(
            fmt_t(t),
            json!({ "convention": r.convention, "standard_deviation": r.max_deviation, "alternating_deviation": r.alternating_deviation }),
        );
        report.warnings.extend(r.warnings);

        let s = shift_matrix_elements(t, input.n_check, &quad)?;
        let series = taylor_varphi_t(t, input.n_check)?.coeffs;
        for n in 0..input.n_check {
            for m in 0..input.n_check {
                let q = s.elements[(n, m)];
                let expected = if n >= m { series[n - m] } else { 0.0 };
                conj_csv.push(vec![num(t), n.to_string(), m.to_string(), num(q), num(expected), num((q - expected).abs())]);
            }
        }
    }
    report.detail("conventions", conventions);

    let mut semigroup = 0.0_f64;
    for w in input.t_list.windows(2) {
        let (t, s) = (w[0], w[1]);
        let prod = cauchy_product(&taylor_varphi_t(t, input.order)?.coeffs, &taylor_varphi_t(s, input.order)?.coeffs, input.order);
        let direct = taylor_varphi_t(t + s, input.order)?.coeffs;
        for (a, b) in prod.iter().zip(&direct) {
            semigroup = semigroup.max((a - b).abs());
        }
    }
    if input.t_list.len() > 1 {
        report.checks.push(CheckOutcome::at_most("coefficient_semigroup", semigroup, cfg.tolerance("coefficient_semigroup")));
    }

    let source = input.source();
    if !source.is_empty() {
        let params = source.resolve(cfg)?;
        for &t in &input.t_list {
            let r = truncated_factorization_check(&params, t, input.order, &input.sampling)?;
            report.checks.push(CheckOutcome::at_most(format!("truncated[{}]", fmt_t(t)), r.residual(), cfg.tolerance("truncated")));
        }
    }
    Ok((report, vec![coeff_csv, conj_csv]))
}
