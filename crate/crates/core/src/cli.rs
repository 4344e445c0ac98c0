//! Subcommand implementations behind the `hyperflow` binary.
//!
//! Exit statuses: 0 success, 1 a check failed, 2 configuration error,
//! 3 flow aborted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, OUTPUT_ROOT_ENV};
use crate::convergence::{convergence_study, temporal_order, ConvergenceTable};
use crate::error::{Error, Result};
use crate::flows::{gradient_decay_check, run, variational_consistency, FlowResult, FlowSpec, MonitorSample};
use crate::plot::{line_chart, Series};
use crate::verify::{
    exploratory_probe, monotonicity_audit, run_checks, CheckName, InequalityReport, Snapshot, Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FLOW_ABORT: i32 = 3;

fn config_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_path();
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn write_monitors(path: &Path, n: usize, monitors: &[MonitorSample]) -> Result<()> {
    write_csv(path, &MonitorSample::csv_header(n), monitors.iter().map(|m| m.csv_row()))
}

pub fn write_reports(path: &Path, reports: &[InequalityReport]) -> Result<()> {
    let header: Vec<String> = InequalityReport::csv_header().iter().map(|s| s.to_string()).collect();
    write_csv(path, &header, reports.iter().map(|r| r.csv_row()))
}

fn write_plots(dir: &Path, n: usize, monitors: &[MonitorSample]) -> Result<()> {
    let series = |label: String, f: &dyn Fn(&MonitorSample) -> f64| Series {
        label,
        points: monitors.iter().map(|m| (m.t, f(m))).collect(),
    };
    fs::write(
        dir.join("grad_sq.svg"),
        line_chart(
            "max |Dphi|^2",
            "t",
            &[series("max|Dphi|^2".into(), &|m| m.max_grad_sq)],
            true,
        ),
    )?;
    for k in 0..=n {
        fs::write(
            dir.join(format!("W_{k}.svg")),
            line_chart(&format!("W_{k}"), "t", &[series(format!("W_{k}"), &|m| m.functionals.w[k])], false),
        )?;
    }
    for k in 0..=n + 1 {
        fs::write(
            dir.join(format!("Wl_{k}.svg")),
            line_chart(&format!("Wl_{k}"), "t", &[series(format!("Wl_{k}"), &|m| m.functionals.wl[k])], false),
        )?;
    }
    fs::write(
        dir.join("static_margin.svg"),
        line_chart(
            "min static margin",
            "t",
            &[series("min margin".into(), &|m| m.min_static_margin)],
            false,
        ),
    )?;
    Ok(())
}

/// Human-readable summary of a finished run.
pub fn flow_report(spec: &FlowSpec, res: &FlowResult, h: f64) -> String {
    let mut s = String::new();
    let st = &res.state;
    let m = &st.monitors;
    let n = spec.speed.dim();
    let _ = writeln!(s, "flow family        {}", spec.family.name());
    let _ = writeln!(s, "speed              {:?} with {:?}", spec.speed.kind(), spec.speed.phi());
    let _ = writeln!(s, "steps              {}", st.steps);
    let _ = writeln!(s, "final time         {:.6e}", st.t);
    let _ = writeln!(s, "converged          {}", res.converged);
    let _ = writeln!(s, "step retries       {}", st.retries);
    if let (Some(first), Some(last)) = (m.first(), m.last()) {
        let wl0 = first.functionals.wl[0];
        let drift = m
            .iter()
            .map(|x| (x.functionals.wl[0] - wl0).abs() / wl0.abs())
            .fold(0.0, f64::max);
        let _ = writeln!(s, "max |Dphi|^2       {:.3e} -> {:.3e}", first.max_grad_sq, last.max_grad_sq);
        let _ = writeln!(s, "Wl_0 rel. drift    {drift:.3e}");
        let _ = writeln!(
            s,
            "phi bounds         [{:.12}, {:.12}] -> [{:.12}, {:.12}]",
            first.min_phi, first.max_phi, last.min_phi, last.max_phi
        );
    }
    let _ = writeln!(s, "worst barrier step {:.3e}", st.worst_barrier_step);
    let _ = writeln!(s, "min static margin  {:.6e}", st.min_static_margin_seen);
    match res.decay_rate {
        Some(a) => {
            let _ = writeln!(s, "fitted decay rate  {a:.6}");
        }
        None => {
            let _ = writeln!(s, "fitted decay rate  n/a");
        }
    }
    let _ = writeln!(s, "alpha_hat          {:.6}", res.alpha_hat);
    if let Some(d) = gradient_decay_check(m, 1e-6) {
        let _ = writeln!(s, "decay bound        worst ratio {:.6} ({})", d.worst_ratio, if d.holds { "holds" } else { "violated" });
    }
    let _ = writeln!(s, "final radius       mean {:.10} spread {:.3e}", res.r_final_mean, res.r_final_spread);
    if let Some(r) = res.r_predicted {
        let _ = writeln!(s, "predicted radius   {r:.10} (diff {:.3e})", (r - res.r_final_mean).abs());
    }
    let audit = monotonicity_audit(m, spec, h, 1.0);
    let _ = writeln!(s, "\nmonotonicity audit");
    for c in &audit.claims {
        let _ = writeln!(
            s,
            "  {:<6} {:<15} worst {:.3e} tol {:.3e} {}",
            c.functional.to_string(),
            c.direction.to_string(),
            c.worst_violation,
            c.tolerance,
            if c.holds { "ok" } else { "VIOLATED" }
        );
    }
    let _ = writeln!(s, "  min lambda' kappa - u over samples: {:.6e}", audit.min_static_factor);
    if let Ok(v) = variational_consistency(m, h, 0.02, 10.0) {
        let _ = writeln!(s, "\nfirst-variation consistency (2% + 10 h^2 floor)");
        for e in &v.entries {
            let _ = writeln!(
                s,
                "  {:<6} max residual {:.3e} max |rhs| {:.3e} ratio {:.3} {}",
                e.name,
                e.max_abs_residual,
                e.max_abs_rhs,
                e.worst_ratio,
                if e.consistent { "ok" } else { "INCONSISTENT" }
            );
        }
    }
    let _ = n;
    s
}

pub fn cmd_run_flow(config: &Path) -> i32 {
    let cfg = match RunConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let spec = match cfg.flow_spec() {
        Ok(Some(s)) => s,
        Ok(None) => return config_error("run-flow needs a 'flow'"),
        Err(e) => return config_error(e),
    };
    let graph = match cfg.build_grid().and_then(|g| cfg.build_shape(g)) {
        Ok(g) => g,
        Err(e) => return config_error(e),
    };
    let dir = match prepare_output(&cfg) {
        Ok(d) => d,
        Err(e) => return config_error(e),
    };
    let n = cfg.n;
    let h = graph.grid().h();
    match run(graph, &spec) {
        Ok(res) => {
            let out = (|| -> Result<()> {
                write_monitors(&dir.join("monitors.csv"), n, &res.state.monitors)?;
                fs::write(dir.join("final_profile.txt"), res.state.graph.profile_table())?;
                fs::write(dir.join("report.txt"), flow_report(&spec, &res, h))?;
                if cfg.plots {
                    write_plots(&dir, n, &res.state.monitors)?;
                }
                Ok(())
            })();
            match out {
                Ok(()) => EXIT_OK,
                Err(e) => config_error(e),
            }
        }
        Err(abort) => {
            eprintln!("flow aborted: {abort}");
            let _ = write_monitors(&dir.join("monitors.csv"), n, &abort.state.monitors);
            let _ = fs::write(dir.join("final_profile.txt"), abort.state.graph.profile_table());
            let _ = fs::write(
                dir.join("report.txt"),
                format!(
                    "flow aborted\nerror: {}\ntime: {:.6e}\nsteps: {}\nsamples: {}\n",
                    abort.error,
                    abort.state.t,
                    abort.state.steps,
                    abort.state.monitors.len()
                ),
            );
            EXIT_FLOW_ABORT
        }
    }
}

fn checks_for(cfg: &RunConfig) -> Vec<CheckName> {
    let names = cfg.check_names();
    if names.is_empty() {
        CheckName::ALL.to_vec()
    } else {
        names
    }
}

fn evaluate_checks(cfg: &RunConfig, id: &str) -> Result<(Vec<InequalityReport>, Snapshot)> {
    let graph = cfg.build_grid().and_then(|g| cfg.build_shape(g))?;
    let snap = Snapshot::new(id, graph)?;
    let reps = run_checks(&snap, &checks_for(cfg), &cfg.tolerances())?;
    Ok((reps, snap))
}

fn check_text(reps: &[InequalityReport]) -> String {
    let mut s = String::new();
    for r in reps {
        s.push_str(&r.summary_line());
        s.push('\n');
    }
    let fails = reps.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let _ = writeln!(s, "\n{} checks, {} failed", reps.len(), fails);
    s
}

pub fn cmd_check(config: &Path) -> i32 {
    let cfg = match RunConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let id = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (reps, snap) = match evaluate_checks(&cfg, &id) {
        Ok(v) => v,
        Err(e) => return config_error(e),
    };
    let dir = match prepare_output(&cfg) {
        Ok(d) => d,
        Err(e) => return config_error(e),
    };
    let mut text = check_text(&reps);
    let res = (|| -> Result<()> {
        write_reports(&dir.join("checks.csv"), &reps)?;
        if cfg.probe {
            let probes = exploratory_probe(&snap, &cfg.tolerances());
            let _ = writeln!(text, "\nexploratory probe (not asserted)");
            for p in &probes {
                let _ = writeln!(
                    text,
                    "  {:<15} {:<9} slack {:+.6e}{}",
                    p.family,
                    p.params,
                    p.slack,
                    if p.violated { "  below bound" } else { "" }
                );
            }
            write_csv(
                &dir.join("probe.csv"),
                &["family", "params", "lhs", "rhs", "slack", "static_convex", "cone_index", "violated"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>(),
                probes.iter().map(|p| {
                    vec![
                        p.family.to_string(),
                        p.params.clone(),
                        format!("{:.17e}", p.lhs),
                        format!("{:.17e}", p.rhs),
                        format!("{:.17e}", p.slack),
                        p.static_convex.to_string(),
                        p.cone_index.to_string(),
                        p.violated.to_string(),
                    ]
                }),
            )?;
        }
        fs::write(dir.join("report.txt"), &text)?;
        Ok(())
    })();
    if let Err(e) = res {
        return config_error(e);
    }
    print!("{text}");
    if reps.iter().any(|r| r.verdict == Verdict::Fail) {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    }
}

pub fn cmd_convergence(config: &Path, levels: &[usize]) -> i32 {
    let cfg = match RunConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let shape = match cfg.shape_spec() {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let table: ConvergenceTable = match convergence_study(|nt| cfg.build_grid_at(nt), &shape, levels) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    let mut text = table.to_text();
    let flow = match cfg.flow_spec() {
        Ok(f) => f,
        Err(e) => return config_error(e),
    };
    if let Some(spec) = flow {
        let coarse = levels.iter().copied().min().unwrap_or(cfg.n_theta);
        match cfg.build_grid_at(coarse).and_then(|g| cfg.build_shape(g)) {
            Ok(g) => match temporal_order(&g, &spec, None, 20) {
                Ok(t) => {
                    let _ = writeln!(
                        text,
                        "\nRK4 temporal order (N={coarse}, dt={:.3e}, horizon {:.3e}): differences {:.3e} {:.3e} order {}",
                        t.dt,
                        t.horizon,
                        t.differences[0],
                        t.differences[1],
                        t.order.map_or("n/a".into(), |p| format!("{p:.3}"))
                    );
                }
                Err(e) => {
                    let _ = writeln!(text, "\nRK4 temporal order: {e}");
                }
            },
            Err(e) => return config_error(e),
        }
    }
    let dir = match prepare_output(&cfg) {
        Ok(d) => d,
        Err(e) => return config_error(e),
    };
    let header: Vec<String> = std::iter::once("n_theta".to_string())
        .chain(std::iter::once("h".to_string()))
        .chain(ConvergenceTable::QUANTITIES.iter().map(|s| s.to_string()))
        .collect();
    let rows = table.levels.iter().map(|l| {
        let mut r = vec![l.n_theta.to_string(), format!("{:.17e}", l.h)];
        r.extend(ConvergenceTable::errors(l).iter().map(|e| e.map_or(String::new(), |x| format!("{x:.17e}"))));
        r
    });
    let res = write_csv(&dir.join("convergence.csv"), &header, rows)
        .and_then(|_| fs::write(dir.join("report.txt"), &text).map_err(Error::from));
    if let Err(e) = res {
        return config_error(e);
    }
    print!("{text}");
    EXIT_OK
}

/// Runs the checks of every `*.toml` config in `dir` and writes an aggregate
/// `corpus.csv` and `corpus_report.txt` under the output root.
pub fn cmd_corpus(dir: &Path) -> i32 {
    let mut paths: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect(),
        Err(e) => return config_error(format!("{}: {e}", dir.display())),
    };
    paths.sort();
    if paths.is_empty() {
        return config_error(format!("no .toml configs in {}", dir.display()));
    }
    let mut all = Vec::new();
    let mut bad_config = false;
    let mut text = String::new();
    for p in &paths {
        let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match RunConfig::from_file(p).and_then(|cfg| evaluate_checks(&cfg, &id)) {
            Ok((reps, _)) => all.extend(reps),
            Err(e) => {
                bad_config = true;
                let _ = writeln!(text, "{}: {e}", p.display());
            }
        }
    }
    text.push_str(&check_text(&all));
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let res = fs::create_dir_all(&root)
        .map_err(Error::from)
        .and_then(|_| write_reports(&root.join("corpus.csv"), &all))
        .and_then(|_| fs::write(root.join("corpus_report.txt"), &text).map_err(Error::from));
    if let Err(e) = res {
        return config_error(e);
    }
    print!("{text}");
    if all.iter().any(|r| r.verdict == Verdict::Fail) {
        EXIT_CHECK_FAILED
    } else if bad_config {
        EXIT_CONFIG
    } else {
        EXIT_OK
    }
}
