//! Scenario execution: solve, run the selected checks, write artifacts
//! (CSV ledger, density dump, per-step diagnostics, summary).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fb_core::checks::{CheckContext, CheckOutput, CheckRegistry};
use fb_core::error::{Error, Result};
use fb_core::field::fmt17;
use fb_core::report::{LedgerRow, Verdict, LEDGER_HEADER};
use fb_core::solver::{self, SolveOutput};

use crate::config::Scenario;

#[derive(Debug)]
pub struct RunSummary {
    pub holds: usize,
    pub violated: usize,
    pub inconclusive: usize,
    pub out_dir: PathBuf,
    pub exit_code: i32,
}

pub fn run_scenario(
    scenario: &Scenario,
    registry: &CheckRegistry,
    out_override: Option<&Path>,
    seed: u64,
    threads: usize,
) -> Result<RunSummary> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| scenario.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
    fs::create_dir_all(&out_dir)?;

    let grid = scenario.build_grid()?;
    let coeffs = scenario.build_coefficients()?;
    let rho0 = scenario.build_initial(&grid);
    log::info!(
        "scenario '{}': solving {} steps on {} nodes",
        scenario.name,
        grid.steps(),
        grid.node_count()
    );
    let SolveOutput { field, steps } =
        solver::solve_fp(&coeffs, &rho0, grid.clone(), &scenario.solver.config)?;

    if scenario.solver.diagnostics {
        let mut f = fs::File::create(out_dir.join("steps.csv"))?;
        writeln!(f, "step,t,mass,min_density,clipped_mass")?;
        for d in &steps {
            writeln!(
                f,
                "{},{},{},{},{}",
                d.step,
                fmt17(d.t),
                fmt17(d.mass),
                fmt17(d.min_density),
                fmt17(d.clipped_mass)
            )?;
        }
    }

    // density dump (binary always, CSV on request)
    {
        let mut f = std::io::BufWriter::new(fs::File::create(out_dir.join("density.bin"))?);
        field.write_binary(&mut f)?;
    }
    if scenario.dump_csv {
        let mut f = std::io::BufWriter::new(fs::File::create(out_dir.join("density.csv"))?);
        field.write_csv(&mut f)?;
    }

    // run checks (parallel across checks, deterministic output order)
    let ctx = CheckContext {
        field: &field,
        coeffs: &coeffs,
        seed,
    };
    let n = scenario.checks.len();
    let outputs: Vec<Option<(String, CheckOutput)>> = {
        let slots: Vec<Mutex<Option<(String, CheckOutput)>>> =
            (0..n).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = threads.max(1).min(n.max(1));
        std::thread::scope(|scope| -> Result<()> {
            let mut handles = Vec::new();
            for _ in 0..workers {
                handles.push(scope.spawn(|| -> Result<()> {
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            return Ok(());
                        }
                        let (check_name, label, params) = &scenario.checks[i];
                        let check = registry.get(check_name).expect("validated at parse");
                        let output = match check.run(&ctx, params) {
                            Ok(out) => out,
                            Err(e) => {
                                log::warn!("check {label} did not produce a verdict: {e}");
                                let mut out = CheckOutput::default();
                                out.rows.push(LedgerRow {
                                    check: check_name.clone(),
                                    name: "error".into(),
                                    lhs: f64::NAN,
                                    rhs: f64::NAN,
                                    margin: f64::NAN,
                                    error: f64::NAN,
                                    verdict: Verdict::Inconclusive,
                                });
                                out.notes.push(format!("{label}: {e}"));
                                out
                            }
                        };
                        *slots[i].lock().unwrap() = Some((label.clone(), output));
                    }
                }));
            }
            for h in handles {
                h.join()
                    .map_err(|_| Error::Solver("check worker panicked".into()))??;
            }
            Ok(())
        })?;
        slots.into_iter().map(|m| m.into_inner().unwrap()).collect()
    };

    // ledger + summary, single writer, config order
    let mut ledger = std::io::BufWriter::new(fs::File::create(out_dir.join("ledger.csv"))?);
    writeln!(ledger, "{LEDGER_HEADER}")?;
    let mut holds = 0usize;
    let mut violated = 0usize;
    let mut inconclusive = 0usize;
    let mut notes = Vec::new();
    for slot in outputs.into_iter() {
        let (label, output) = slot.expect("all slots filled");
        for row in &output.rows {
            writeln!(ledger, "{}", row.csv_line())?;
            match row.verdict {
                Verdict::Holds => holds += 1,
                Verdict::Violated => violated += 1,
                Verdict::Inconclusive => inconclusive += 1,
            }
        }
        for note in &output.notes {
            notes.push(format!("[{label}] {note}"));
        }
    }
    ledger.flush()?;

    let mut summary = fs::File::create(out_dir.join("summary.txt"))?;
    writeln!(summary, "scenario: {}", scenario.name)?;
    writeln!(
        summary,
        "grid: dim={} cells={} dt={} t_end={}",
        grid.dim(),
        scenario.grid.cells,
        grid.dt(),
        grid.t_end()
    )?;
    writeln!(summary, "coefficients: {}", coeffs.name())?;
    writeln!(
        summary,
        "mass: final={} deficit={} boundary={}",
        fmt17(field.mass(field.slices() - 1)),
        fmt17(field.mass_deficit()),
        fmt17(field.max_boundary_mass())
    )?;
    writeln!(
        summary,
        "verdicts: holds={holds} violated={violated} inconclusive={inconclusive}"
    )?;
    for note in &notes {
        writeln!(summary, "{note}")?;
    }

    let exit_code = if violated > 0 { 1 } else { 0 };
    Ok(RunSummary {
        holds,
        violated,
        inconclusive,
        out_dir,
        exit_code,
    })
}
