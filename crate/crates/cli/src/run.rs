//! Command execution.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use homog_core::elastic_cell::{assemble_cell_system, membrane_cell_density, solve_cell, MembraneMode};
use homog_core::energies::{elastic_energy, spin_energy, weak_membrane_energy};
use homog_core::lattice::{fmt_float, physical, LatticeFunction, SpinConfiguration};
use homog_core::linalg::DEFAULT_TOL;
use homog_core::membrane::{alternating_minimize, GncSchedule, HalfStep};
use homog_core::spin_cell::{convexity_defect, surface_cell, wulff_sample};
use homog_core::{par, verify, Result};
use serde_json::json;

use crate::config::{EnergyKind, RunConfig};

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(path)?))
}

fn axis_header(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|k| format!("{prefix}_{k}")).collect()
}

fn floats(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(|&x| fmt_float(x))
}

/// Runs a validated configuration; the return value is the process exit code.
pub fn run(config: RunConfig) -> Result<i32> {
    match config {
        RunConfig::Surface { field, directions, sizes, out, timing } => {
            let jobs: Vec<(Vec<f64>, usize)> = directions
                .iter()
                .flat_map(|nu| sizes.iter().map(move |&t| (nu.clone(), t)))
                .collect();
            let results = par::map(&jobs, |(nu, t)| surface_cell(&field, nu, *t));
            let mut w = csv_writer(out.as_deref())?;
            let mut header = vec!["T".to_string()];
            header.extend(axis_header("nu", field.dim()));
            header.extend(["phi_T", "cut_edges", "solve_ms"].map(String::from));
            w.write_record(&header)?;
            for ((nu, t), res) in jobs.iter().zip(results) {
                let res = res?;
                let ms = if timing { res.diagnostics.elapsed.as_secs_f64() * 1e3 } else { 0.0 };
                let mut row = vec![t.to_string()];
                row.extend(floats(nu));
                row.push(fmt_float(res.value));
                row.push(res.diagnostics.cut_edges.unwrap_or(0).to_string());
                row.push(fmt_float(ms));
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(0)
        }
        RunConfig::Bulk { field, zeta, sizes, exact_membrane, out } => {
            let mode = if exact_membrane { MembraneMode::Exact } else { MembraneMode::Heuristic };
            let results = par::map(&sizes, |&t| -> Result<_> {
                let f = solve_cell(&assemble_cell_system(&field, t, &zeta)?, DEFAULT_TOL)?;
                let h = membrane_cell_density(&field, &zeta, t, mode)?;
                Ok((f, h))
            });
            let mut w = csv_writer(out.as_deref())?;
            let mut header = vec!["T".to_string()];
            header.extend(axis_header("zeta", field.dim()));
            header.extend(["f_T", "h_T", "residual", "iters"].map(String::from));
            w.write_record(&header)?;
            for (t, res) in sizes.iter().zip(results) {
                let (f, h) = res?;
                let mut row = vec![t.to_string()];
                row.extend(floats(&zeta));
                row.extend([fmt_float(f.value), fmt_float(h.value), fmt_float(f.diagnostics.residual)]);
                row.push(f.diagnostics.iterations.to_string());
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(0)
        }
        RunConfig::Segment { input, field, eps, weight, gnc, max_outer, out, lines, trace } => {
            let g = LatticeFunction::read_csv(File::open(&input)?, eps)?;
            let schedule = if gnc { GncSchedule::default() } else { GncSchedule::direct() };
            let run = alternating_minimize(&g, &field, weight, &schedule, max_outer)?;
            run.u.write_csv(sink(out.as_deref())?)?;
            if let Some(path) = lines {
                let mut w = csv_writer(Some(&path))?;
                let mut header = (1..=g.dim()).map(|k| format!("x{k}")).collect::<Vec<_>>();
                header.extend(["neighbor", "broken"].map(String::from));
                w.write_record(&header)?;
                for b in &run.lines.bonds {
                    let mut row: Vec<String> = floats(&physical(&b.site, eps)).collect();
                    row.push(b.neighbor.to_string());
                    row.push(u8::from(b.broken).to_string());
                    w.write_record(&row)?;
                }
                w.flush()?;
            }
            if let Some(path) = trace {
                let entries: Vec<_> = run
                    .trace
                    .iter()
                    .map(|e| {
                        json!({
                            "stage": e.stage,
                            "s": e.s,
                            "step": match e.step { HalfStep::Lines => "lines", HalfStep::Values => "values" },
                            "energy": e.energy,
                        })
                    })
                    .collect();
                let doc = json!({
                    "schema": 1,
                    "energy": run.energy,
                    "converged": run.converged,
                    "broken_bond_count": run.lines.broken_count(),
                    "trace": entries,
                });
                let mut w = sink(Some(&path))?;
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
            }
            Ok(0)
        }
        RunConfig::Energy { input, field, eps, kind, out } => {
            let u = LatticeFunction::read_csv(File::open(&input)?, eps)?;
            let region = u.region().clone();
            let (name, total, broken) = match kind {
                EnergyKind::Membrane => {
                    let r = weak_membrane_energy(&u, &field, &region)?.report();
                    ("membrane", r.total, Some(r.broken_bond_count))
                }
                EnergyKind::Spin => ("spin", spin_energy(&SpinConfiguration::new(u)?, &field, &region)?, None),
                EnergyKind::Elastic => ("elastic", elastic_energy(&u, &field, &region)?, None),
            };
            let doc = json!({ "schema": 1, "kind": name, "total": total, "broken_bond_count": broken });
            let mut w = sink(out.as_deref())?;
            serde_json::to_writer(&mut w, &doc)?;
            writeln!(w)?;
            Ok(0)
        }
        RunConfig::Wulff { field, dirs, size, out } => {
            let points = wulff_sample(&field, dirs, size)?;
            let mut w = csv_writer(out.as_deref())?;
            let mut header = axis_header("nu", field.dim());
            header.push("phi_T".into());
            header.extend(axis_header("x", field.dim()));
            w.write_record(&header)?;
            for p in &points {
                let mut row: Vec<String> = floats(&p.nu).collect();
                row.push(fmt_float(p.phi));
                row.extend(floats(&p.boundary));
                w.write_record(&row)?;
            }
            w.flush()?;
            if out.is_some() && field.dim() == 2 {
                let defect = convexity_defect(&points)?;
                println!("{}", json!({ "schema": 1, "size": size, "directions": dirs, "convexity_defect": defect }));
            }
            Ok(0)
        }
        RunConfig::Verify { seed } => {
            let checks = verify::run_suite(seed)?;
            let mut all = true;
            for c in &checks {
                all &= c.passed();
                println!(
                    "{} {} ({} cases, {} failures, worst {:.3e})",
                    if c.passed() { "PASS" } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.failures,
                    c.worst
                );
            }
            Ok(if all { 0 } else { 1 })
        }
    }
}
