//! The `solve`, `bubble` and `conserve` commands: config in, CSV/JSON
//! artifacts out. All outputs are deterministic for a fixed config and
//! seed.

use crate::config::{
    check_version, load_config, BubbleConfig, ExperimentConfig, SolveConfig,
    StartConfig, TaskConfig,
};
use crate::{CmdError, CmdResult, EXIT_TOPOLOGY};
use dhlab_core::bubble::{
    bubble_on_grid, concentration_family, detect_blowup_set, energy_identity_experiment,
    epsilon_regularity_probe, superpose_bubbles, BubbleSpec, ConcentrationFamily, FamilyMember,
};
use dhlab_core::conservation::{coefficient_matrices, wente_residual};
use dhlab_core::report::{
    identity_table_to_csv, refinement_rows, refinement_to_csv, trace_to_csv,
    vanishing_report_to_csv, write_json, write_text,
};
use dhlab_core::solver::{relax_coupled, relax_harmonic, vanishing_probe};
use dhlab_core::sphere::{energies, EnergyReport, MapField, SpinorAlongMap};
use dhlab_core::{load_state, save_state, DiffScheme, Grid, SolveTrace, Topology};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Resolve the output directory (default `out`), creating it if needed.
fn ensure_out_dir(out: Option<&Path>) -> CmdResult<PathBuf> {
    let dir = out.unwrap_or(Path::new("out")).to_path_buf();
    if !dir.is_dir() {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CmdError::failure(format!("cannot create {}: {e}", dir.display())))?;
        eprintln!("dhlab: created output directory {}", dir.display());
    }
    Ok(dir)
}

fn start_state(
    start: &StartConfig,
    grid: &Grid,
    with_spinor: bool,
) -> CmdResult<(MapField, SpinorAlongMap)> {
    match start {
        StartConfig::Bubble { center, lambda } => {
            let spec = BubbleSpec::new(*center, *lambda)?;
            let phi = bubble_on_grid(&spec, grid)?;
            let n = phi.n();
            Ok((phi, SpinorAlongMap::zeros(grid, n)))
        }
        StartConfig::Snapshot { path } => {
            let (phi, psi) = load_state(path)?;
            if *phi.grid() != *grid {
                return Err(CmdError::config(format!(
                    "snapshot {path} does not match the configured grid"
                )));
            }
            let psi = if with_spinor {
                psi
            } else {
                SpinorAlongMap::zeros(grid, phi.n())
            };
            Ok((phi, psi))
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    converged: bool,
    iterations: usize,
    stability_factor: f64,
    monotonicity_warning: bool,
    energy: EnergyReport,
}

fn emit_solve_outputs(
    dir: &Path,
    trace: &SolveTrace,
    phi: &MapField,
    psi: Option<&SpinorAlongMap>,
    json: bool,
) -> CmdResult<()> {
    write_text(dir.join("trace.csv"), &trace_to_csv(trace))?;
    save_state(dir.join("final.snap"), phi, psi)?;
    let zero;
    let psi_ref = match psi {
        Some(p) => p,
        None => {
            zero = SpinorAlongMap::zeros(phi.grid(), phi.n());
            &zero
        }
    };
    let summary = SolveSummary {
        converged: trace.converged,
        iterations: trace.rows.len(),
        stability_factor: trace.stability_factor,
        monotonicity_warning: trace.monotonicity_warning,
        energy: energies(phi, psi_ref)?,
    };
    write_json(dir.join("summary.json"), &summary)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&summary)
                .map_err(|e| CmdError::failure(e.to_string()))?
        );
    } else {
        println!(
            "{} after {} iterations: e_map = {:.6e}, e_spinor = {:.6e}, residuals ({:.3e}, {:.3e})",
            if summary.converged {
                "converged"
            } else {
                "stopped"
            },
            summary.iterations,
            summary.energy.e_map,
            summary.energy.e_spinor,
            summary.energy.residual_map,
            summary.energy.residual_spinor,
        );
    }
    Ok(())
}

pub fn cmd_solve(
    config_path: &Path,
    out: Option<&Path>,
    json: bool,
    seed: Option<u64>,
) -> CmdResult<()> {
    let config: SolveConfig = load_config(config_path)?;
    check_version(config.version, config_path)?;
    let grid = config.grid.build()?;
    let params = config.solver.apply(&grid, seed);
    let dir = ensure_out_dir(out)?;
    match &config.task {
        TaskConfig::Harmonic { start } => {
            let (phi0, _) = start_state(start, &grid, false)?;
            let (phi, trace) = relax_harmonic(&phi0, &params)?;
            emit_solve_outputs(&dir, &trace, &phi, None, json)
        }
        TaskConfig::Coupled { start } => {
            let (phi0, psi0) = start_state(start, &grid, true)?;
            let (phi, psi, trace) = relax_coupled(&phi0, &psi0, &params)?;
            emit_solve_outputs(&dir, &trace, &phi, Some(&psi), json)
        }
        TaskConfig::VanishingProbe {
            energy_budget,
            trials,
            init,
        } => {
            let report = vanishing_probe(&grid, *energy_budget, *trials, *init, &params)?;
            write_text(dir.join("probe.csv"), &vanishing_report_to_csv(&report))?;
            write_json(dir.join("probe.json"), &report)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| CmdError::failure(e.to_string()))?
                );
            } else {
                println!(
                    "{}/{} constant (budget {})",
                    report.vanished_count,
                    report.trials.len(),
                    report.energy_budget
                );
            }
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct BlowupSummary {
    eps0: f64,
    radius: f64,
    clusters: Vec<[f64; 2]>,
}

fn single_member_family(
    specs: &[BubbleSpec],
    grid: &Grid,
) -> CmdResult<ConcentrationFamily> {
    let phi = superpose_bubbles(specs, grid)?;
    let n = phi.n();
    let lambda = specs.iter().map(|s| s.lambda).fold(f64::INFINITY, f64::min);
    Ok(ConcentrationFamily {
        center: specs[0].center,
        members: vec![FamilyMember {
            lambda,
            phi,
            psi: SpinorAlongMap::zeros(grid, n),
        }],
    })
}

pub fn cmd_bubble(config_path: &Path, out: Option<&Path>, json: bool) -> CmdResult<()> {
    let config: BubbleConfig = load_config(config_path)?;
    check_version(config.version, config_path)?;
    let grid = config.grid.build()?;
    let dir = ensure_out_dir(out)?;
    match &config.experiment {
        ExperimentConfig::EnergyIdentity {
            center,
            lambdas,
            delta,
            r_big,
            with_spinor,
        } => {
            let family = concentration_family(*center, lambdas, &grid, *with_spinor)?;
            let table = energy_identity_experiment(&family, *delta, *r_big)?;
            write_text(dir.join("identity.csv"), &identity_table_to_csv(&table))?;
            write_json(dir.join("identity.json"), &table)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&table)
                        .map_err(|e| CmdError::failure(e.to_string()))?
                );
            } else {
                let eight_pi = 8.0 * std::f64::consts::PI;
                for row in &table.rows {
                    println!(
                        "lambda {:>7}: E_disk/8pi = {:.4}, E_annulus/8pi = {:.4}",
                        row.lambda,
                        row.e_disk / eight_pi,
                        row.e_annulus / eight_pi
                    );
                }
            }
            Ok(())
        }
        ExperimentConfig::BlowupSet {
            bubbles,
            eps0,
            radius,
        } => {
            let specs: CmdResult<Vec<BubbleSpec>> = bubbles
                .iter()
                .map(|b| BubbleSpec::new(b.center, b.lambda).map_err(CmdError::from))
                .collect();
            let family = single_member_family(&specs?, &grid)?;
            let clusters = detect_blowup_set(&family, *eps0, *radius)?;
            let summary = BlowupSummary {
                eps0: *eps0,
                radius: *radius,
                clusters,
            };
            write_json(dir.join("blowup.json"), &summary)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary)
                        .map_err(|e| CmdError::failure(e.to_string()))?
                );
            } else {
                println!("{} blow-up clusters", summary.clusters.len());
            }
            Ok(())
        }
        ExperimentConfig::RegularityProbe {
            bubble,
            margin,
            eps0,
        } => {
            let spec = BubbleSpec::new(bubble.center, bubble.lambda)?;
            let phi = bubble_on_grid(&spec, &grid)?;
            let psi = SpinorAlongMap::zeros(&grid, phi.n());
            let report = epsilon_regularity_probe(&phi, &psi, *margin, *eps0);
            write_json(dir.join("probe.json"), &report)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| CmdError::failure(e.to_string()))?
                );
            } else {
                println!(
                    "r1 = {:.4}, r2 = {:.4}, small-energy hypothesis {}",
                    report.r1,
                    report.r2,
                    if report.hypothesis_ok { "holds" } else { "fails" }
                );
            }
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct ConserveRow {
    snapshot: String,
    h: f64,
    divergence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wente: Option<f64>,
}

pub fn cmd_conserve(
    snapshots: &[PathBuf],
    out: Option<&Path>,
    json: bool,
    wente: bool,
) -> CmdResult<()> {
    let dir = ensure_out_dir(out)?;
    let mut rows = Vec::with_capacity(snapshots.len());
    for path in snapshots {
        let (phi, psi) = load_state(path)?;
        let grid = *phi.grid();
        let coeffs = coefficient_matrices(&phi, &psi, DiffScheme::Centered)?;
        let divergence = coeffs.divergence_residual(DiffScheme::Centered, 2)?;
        let wente_norm = if wente {
            if grid.topology() != Topology::Torus {
                return Err(CmdError {
                    code: EXIT_TOPOLOGY,
                    message: format!(
                        "{}: potential solve requires a torus snapshot",
                        path.display()
                    ),
                });
            }
            let potentials = coeffs.frobenius_potential(DiffScheme::Centered)?;
            Some(wente_residual(
                &phi,
                &coeffs,
                &potentials,
                DiffScheme::Centered,
                2,
            )?)
        } else {
            None
        };
        rows.push(ConserveRow {
            snapshot: path.display().to_string(),
            h: grid.h(),
            divergence,
            wente: wente_norm,
        });
    }
    if rows.len() >= 2 {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.divergence)).collect();
        write_text(
            dir.join("divergence_refinement.csv"),
            &refinement_to_csv(&refinement_rows(&pairs)),
        )?;
        if wente {
            let pairs: Vec<(f64, f64)> =
                rows.iter().map(|r| (r.h, r.wente.unwrap())).collect();
            write_text(
                dir.join("wente_refinement.csv"),
                &refinement_to_csv(&refinement_rows(&pairs)),
            )?;
        }
    }
    write_json(dir.join("conserve.json"), &rows)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rows)
                .map_err(|e| CmdError::failure(e.to_string()))?
        );
    } else {
        for r in &rows {
            match r.wente {
                Some(w) => println!(
                    "{}: h = {:.4e}, divergence residual {:.4e}, wente residual {:.4e}",
                    r.snapshot, r.h, r.divergence, w
                ),
                None => println!(
                    "{}: h = {:.4e}, divergence residual {:.4e}",
                    r.snapshot, r.h, r.divergence
                ),
            }
        }
    }
    Ok(())
}
