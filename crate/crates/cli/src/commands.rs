use std::collections::BTreeSet;
use std::path::PathBuf;

use phasecov::conditions::{
    classify_samples, detection_report_from_samples, region_sweep, Condition, CurvePoint, Interval,
    RegionCell,
};
use phasecov::crosscheck::{self, CheckKind, CheckStatus};
use phasecov::evolution::{cp_series, evolve_unchecked, integrate_kernels, CpReport, KernelTable};
use phasecov::indicators::{applicable_series, rec_series, IndicatorId, IndicatorSeries, Probes};
use phasecov::par::{self, Execution};
use phasecov::rates::{RateError, RateModel};

use crate::config::Layout;
use crate::output;
use crate::{CliError, Context};

fn ensure_out_dir(ctx: &Context) -> Result<(), CliError> {
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::io(&ctx.out_dir, e))
}

/// Fails early when the model has a rate singularity inside the window.
fn reject_poles(model: &RateModel, t_max: f64) -> Result<(), CliError> {
    match model.poles_in(0.0, t_max).first() {
        Some(&t) => Err(RateError::Pole { t, nearest_pole: t }.into()),
        None => Ok(()),
    }
}

fn kernel_table(ctx: &Context) -> Result<(RateModel, KernelTable), CliError> {
    let model = ctx.config.rate_model()?;
    let grid = ctx.config.grid();
    reject_poles(&model, grid.t_max())?;
    let table = integrate_kernels(&model, &grid, ctx.exec)?;
    Ok((model, table))
}

fn cp_failures(reports: &[CpReport]) -> Option<String> {
    let bad: Vec<&CpReport> = reports.iter().filter(|r| !r.passed).collect();
    let first = bad.first()?;
    let worst = bad
        .iter()
        .map(|r| r.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    Some(format!(
        "map is not completely positive at {} of {} grid points (first at t = {}, min Choi eigenvalue {worst:e})",
        bad.len(),
        reports.len(),
        first.t
    ))
}

fn fmt_intervals(iv: &[Interval]) -> String {
    if iv.is_empty() {
        return "none".into();
    }
    iv.iter()
        .map(|i| format!("[{:.6}, {:.6}]", i.start, i.end))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Maximal runs of detected grid points as closed time intervals.
fn detected_runs(s: &IndicatorSeries) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, &d) in s.detection.iter().enumerate() {
        match (d, start) {
            (true, None) => start = Some(k),
            (false, Some(a)) => {
                out.push(Interval {
                    start: s.times[a],
                    end: s.times[k - 1],
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        out.push(Interval {
            start: s.times[a],
            end: *s.times.last().unwrap(),
        });
    }
    out
}

pub fn trajectory(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let (model, table) = kernel_table(ctx)?;
    let samples = table.samples();
    let class = cfg
        .class_override()
        .unwrap_or_else(|| classify_samples(&samples).class);
    let probes = Probes::for_class(
        &class,
        cfg.probes.coherence_alpha0.value(),
        cfg.probes.diagonal_p1,
    )?;
    let coherence = evolve_unchecked(&table, &probes.coherence);
    let diagonal = evolve_unchecked(&table, &probes.diagonal);
    let cp = cp_series(&table, cfg.tolerances.cp_tol, ctx.exec);
    let non_cp = cp_failures(&cp);
    if let (Some(msg), true) = (&non_cp, ctx.strict) {
        return Err(CliError::Physical(msg.clone()));
    }

    let eps = cfg.tolerances.eps_sign;
    let mut series: Vec<IndicatorSeries> = applicable_series(&coherence, &diagonal, &class, eps)?
        .into_iter()
        .map(|p| p.series)
        .collect();
    if !class.is_commutative() {
        series.push(rec_series(&coherence, eps)?);
    }
    let mut seen = BTreeSet::new();
    series.retain(|s| seen.insert(s.column()));

    ensure_out_dir(ctx)?;
    let mut written: Vec<PathBuf> = vec![
        output::write_trajectory(ctx.out_dir.join("trajectory.csv"), &coherence, &cp)?,
        output::write_trajectory(ctx.out_dir.join("trajectory_diagonal.csv"), &diagonal, &cp)?,
    ];
    match cfg.outputs.layout {
        Layout::Long => {
            for s in &series {
                written.push(output::write_indicator(&ctx.out_dir, s)?);
            }
        }
        Layout::Wide => written.push(output::write_indicators_wide(
            ctx.out_dir.join("indicators.csv"),
            &series,
        )?),
    }

    let report = detection_report_from_samples(&model, &samples, class, cfg.tolerances.eps_pred)?;
    println!("class: {class}");
    println!("model: {model}");
    println!();
    println!("{:<12} detection intervals (analytic)", "condition");
    for (c, iv) in &report.intervals {
        if let Some(iv) = iv {
            println!("{:<12} {}", c.name(), fmt_intervals(iv));
        }
    }
    println!();
    println!("{:<34} detected (numeric)", "indicator");
    for s in &series {
        println!("{:<34} {}", s.column(), fmt_intervals(&detected_runs(s)));
        if let Some(w) = &s.warning {
            println!("{:<34} warning: {w}", "");
        }
    }
    println!();
    for p in &written {
        println!("wrote {}", p.display());
    }
    if let Some(msg) = non_cp {
        eprintln!("warning: {msg}");
    }
    Ok(())
}

pub fn classify(ctx: &Context) -> Result<(), CliError> {
    let model = ctx.config.rate_model()?;
    let grid = ctx.config.grid();
    reject_poles(&model, grid.t_max())?;
    let samples = model.eval_many(&grid.times(), ctx.exec)?;
    let fit = classify_samples(&samples);
    let class = ctx.config.class_override().unwrap_or(fit.class);
    println!("{class}");
    if ctx.config.class_override().is_some() {
        println!(
            "(class set by class_override; fitted class is {})",
            fit.class
        );
    }
    match fit.kappa_fit {
        Some(k) => println!("kappa fit: {k:.6}, residual {:.3e}", fit.residual),
        None => println!("kappa fit: none"),
    }
    let ids: Vec<&str> = IndicatorId::ALL
        .into_iter()
        .filter(|i| i.is_applicable(&class))
        .map(IndicatorId::name)
        .collect();
    println!("applicable indicators: {}", ids.join(", "));
    let conds: Vec<&str> = Condition::ALL
        .into_iter()
        .filter(|c| c.is_applicable(&class))
        .map(Condition::name)
        .collect();
    println!("applicable conditions: {}", conds.join(", "));
    Ok(())
}

pub fn regions(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let sweep = cfg.sweep.unwrap_or_default();
    let [g0, g1] = sweep.gamma_prime_range;
    let [h0, h1] = sweep.gamma3_range;
    let cells = region_sweep(
        (g0, g1),
        (h0, h1),
        sweep.resolution,
        cfg.tolerances.eps_pred,
        ctx.exec,
    );
    ensure_out_dir(ctx)?;
    let path = output::write_regions(ctx.out_dir.join("regions.csv"), &cells)?;
    println!("{:<12} cells", "condition");
    for c in Condition::ALL {
        let n = cells.iter().filter(|x| x.get(c)).count();
        println!("{:<12} {n}/{}", c.name(), cells.len());
    }
    println!("wrote {}", path.display());
    if sweep.overlay {
        let model = cfg.rate_model()?;
        let curve = overlay_points(
            &model,
            &cfg.grid().times(),
            cfg.tolerances.eps_pred,
            ctx.exec,
        )?;
        let min_gp = curve
            .iter()
            .map(|p| p.cell.gamma_prime)
            .fold(f64::INFINITY, f64::min);
        println!("curve: min γ′ = {min_gp:.6e}");
        let path = output::write_curve(ctx.out_dir.join("regions_curve.csv"), &curve)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// The curve t ↦ (γ′(t), γ₃(t)). Points where a rate is singular are
/// dropped, since the curve is only sampled and nothing is integrated.
fn overlay_points(
    model: &RateModel,
    times: &[f64],
    eps_pred: f64,
    exec: Execution,
) -> Result<Vec<CurvePoint>, CliError> {
    let evaluated = par::map(exec, times, |&t| model.eval(t));
    let mut out = Vec::with_capacity(times.len());
    let mut skipped = 0;
    for r in evaluated {
        match r {
            Ok(s) => out.push(CurvePoint {
                t: s.t,
                cell: RegionCell::new(s.gamma_prime(), s.gamma3, eps_pred),
            }),
            Err(RateError::Pole { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if skipped > 0 {
        println!("curve: {skipped} points at rate poles skipped");
    }
    let poles = model.poles_in(0.0, times.last().copied().unwrap_or(0.0));
    if !poles.is_empty() {
        println!("curve: rates diverge at t = {poles:?}");
    }
    Ok(out)
}

pub fn verify(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let model = cfg.rate_model()?;
    let grid = cfg.grid();
    reject_poles(&model, grid.t_max())?;
    let report = crosscheck::verify(
        &model,
        &grid,
        cfg.class_override(),
        &cfg.verify_options(),
        ctx.exec,
    )?;
    println!("class: {}", report.class);
    println!(
        "{:<26} {:<6} {:>14} {:>12}  detail",
        "check", "status", "max_dev", "tolerance"
    );
    for c in &report.checks {
        println!(
            "{:<26} {:<6} {:>14.6e} {:>12.3e}  {}",
            c.kind.name(),
            c.status.to_string(),
            c.max_deviation,
            c.tolerance,
            c.detail
        );
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .map(|c| c.kind.name())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else if report.failed(CheckKind::CompletePositivity) {
        Err(CliError::Physical(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    } else {
        Err(CliError::Mismatch(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

pub fn cp_check(ctx: &Context) -> Result<(), CliError> {
    let (_, table) = kernel_table(ctx)?;
    let reports = cp_series(&table, ctx.config.tolerances.cp_tol, ctx.exec);
    ensure_out_dir(ctx)?;
    let path = output::write_cp(ctx.out_dir.join("cp_check.csv"), &reports)?;
    let min = reports
        .iter()
        .map(|r| r.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let failures = reports.iter().filter(|r| !r.passed).count();
    println!("min Choi eigenvalue: {min:.6e}");
    println!("failing grid points: {failures}/{}", reports.len());
    println!("wrote {}", path.display());
    match cp_failures(&reports) {
        Some(msg) if ctx.strict => Err(CliError::Physical(msg)),
        Some(msg) => {
            eprintln!("warning: {msg}");
            Ok(())
        }
        None => Ok(()),
    }
}
