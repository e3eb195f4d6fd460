//! Command-line driver: single runs, scripted experiments, the symbol
//! audit shortcut and snapshot inspection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radm::diagnostics::{energy_budget, sample};
use radm::harness::{
    run_conservation_audit, run_n_sweep, run_stability_audit, run_symbol_audit,
    run_taylor_green_verify, run_theta_sweep,
};
use radm::io::{
    describe_snapshot, lock_out_dir, parse_config, write_diag_csv, write_manifest,
    write_snapshot, RunSetup, SnapshotHeader,
};
use radm::timestepper::Solver;
use radm::Error;

#[derive(Parser)]
#[command(name = "radm", about = "Pseudo-spectral solver for a rotational deconvolution model on the periodic box", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single solve from a key=value config file.
    Run {
        /// Config file path; omit for the default configuration.
        config: Option<PathBuf>,
    },
    /// Run a scripted experiment.
    Experiment {
        /// One of: symbol_audit, n_sweep, theta_sweep, taylor_green_verify,
        /// conservation_audit, stability_audit.
        kind: String,
        /// Base config file (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Symbol audit shortcut (equivalent to `experiment symbol_audit`).
    Audit {
        #[arg(long, default_value_t = 32)]
        grid_n: usize,
    },
    /// Print a human-readable listing of a snapshot's largest modes.
    SnapshotDump {
        path: PathBuf,
        #[arg(long, default_value_t = 16)]
        top: usize,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::InvalidConfig(_) | Error::InvalidFilter(_)
        | Error::InvalidGrid(_) | Error::PresetGridMismatch { .. } => 2,
        Error::BlowUp { .. } => 3,
        Error::AuditFailure(_) | Error::VerificationFailure(_) => 4,
        _ => 1,
    }
}

fn load_setup(path: &Option<PathBuf>) -> radm::Result<RunSetup> {
    match path {
        None => Ok(RunSetup::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(p.clone(), e))?;
            parse_config(&text)
        }
    }
}

fn cmd_run(config: &Option<PathBuf>) -> radm::Result<()> {
    let setup = load_setup(config)?;
    let _lock = match &setup.out_dir {
        Some(dir) => Some(lock_out_dir(dir)?),
        None => None,
    };
    let mut solver = Solver::new(setup.config.clone())?;
    let mut records = vec![sample(&solver)?];
    let mut hm1 = vec![solver.forcing_hm1_sq(0.0)];
    let every = setup.sample_every;
    let mut sample_err = None;
    solver.run(|s| {
        if sample_err.is_none() && s.state.step_count % every == 0 {
            match sample(s) {
                Ok(r) => {
                    records.push(r);
                    hm1.push(s.forcing_hm1_sq(s.state.t));
                }
                Err(e) => sample_err = Some(e),
            }
        }
    })?;
    if let Some(e) = sample_err {
        return Err(e);
    }

    if let Some(dir) = &setup.out_dir {
        write_diag_csv(&records, &dir.join("diag.csv"))?;
        write_manifest(&setup, env!("CARGO_PKG_VERSION"), &dir.join("manifest.txt"))?;
        let mut w = solver.state.w.clone();
        w.dealias();
        let p = solver.table.params;
        write_snapshot(
            &w,
            &SnapshotHeader {
                n_per_axis: solver.grid.n() as u32,
                t: solver.state.t,
                alpha: p.alpha,
                theta: p.theta,
                deconv_order: p.deconv_order,
                payload_kind: 0,
            },
            &dir.join("final.snp"),
        )?;
    }

    let last = records.last().expect("at least the initial record exists");
    println!(
        "t={} steps={} model_energy={} kinetic_energy={} div_residual={:.3e}",
        last.t, solver.state.step_count, last.model_energy, last.kinetic_energy,
        last.div_residual
    );
    if records.len() >= 2 {
        let report = energy_budget(&records, solver.v0_l2, solver.cfg.nu, &hm1)?;
        println!(
            "budget_residual={:.6e} a_priori={} (lhs={:.6e} rhs={:.6e})",
            report.residual,
            if report.a_priori_holds { "ok" } else { "VIOLATED" },
            report.a_priori_lhs,
            report.a_priori_rhs
        );
    }
    Ok(())
}

fn cmd_experiment(kind: &str, config: &Option<PathBuf>) -> radm::Result<()> {
    let setup = load_setup(config)?;
    let base = setup.config;
    match kind {
        "symbol_audit" => {
            let report = run_symbol_audit(base.grid_n)?;
            println!(
                "symbol audit passed: {} (alpha,theta,N) tables, worst lower slack {:.3e}, \
                 worst upper slack {:.3e}",
                report.triples_checked, report.worst_lower, report.worst_upper
            );
        }
        "n_sweep" => {
            let orders = [0u32, 1, 2, 4, 8, 16, 32, 64];
            let report = run_n_sweep(&base, &orders)?;
            println!("N,l2l2_gap,linf_h_theta_gap,symbol_gap,blew_up");
            for row in &report.rows {
                println!(
                    "{},{},{},{},{}",
                    row.n, row.l2l2_gap, row.linf_h_theta_gap, row.symbol_gap, row.blew_up
                );
            }
        }
        "theta_sweep" => {
            let thetas = [1.0 / 6.0, 0.5, 0.75, 1.0];
            let out = run_theta_sweep(&base, &thetas)?;
            println!("theta,final_model_energy,final_norm_theta,max_orth_defect");
            for (theta, records) in &out {
                let last = records.last().expect("runs produce records");
                let worst = records
                    .iter()
                    .map(|r| r.orth_defect)
                    .fold(0.0f64, f64::max);
                println!("{theta},{},{},{worst:.3e}", last.model_energy, last.sobolev_theta);
            }
        }
        "taylor_green_verify" => {
            let report =
                run_taylor_green_verify(0.01, 1.0, base.grid_n, &[2e-3, 1e-3, 5e-4], 2.7)?;
            println!("dt,l2_error");
            for (dt, err) in &report.rows {
                println!("{dt},{err:.6e}");
            }
            if report.at_roundoff_floor {
                println!("all errors at round-off floor; temporal order not measurable");
            } else {
                println!("observed orders: {:?}", report.orders);
            }
        }
        "conservation_audit" => {
            let report = run_conservation_audit(&base, &[2e-3, 1e-3, 5e-4])?;
            println!("dt,relative_drift");
            for (dt, drift) in &report.rows {
                println!("{dt},{drift:.6e}");
            }
            println!("observed orders: {:?}", report.orders);
        }
        "stability_audit" => {
            let report = run_stability_audit(&base, &[1e-4, 1e-5])?;
            for (eps, resp) in &report.responses {
                println!("eps={eps} normalized_response={resp:.6e}");
            }
            println!(
                "response_ratio={:.4} gronwall_integral={:.6e}",
                report.response_ratio, report.gronwall_integral
            );
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown experiment kind '{other}'"
            )))
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Experiment { kind, config } => cmd_experiment(kind, config),
        Command::Audit { grid_n } => run_symbol_audit(*grid_n).map(|report| {
            println!(
                "symbol audit passed: {} tables, worst lower slack {:.3e}, \
                 worst upper slack {:.3e}, worst gap identity deviation {:.3e}",
                report.triples_checked,
                report.worst_lower,
                report.worst_upper,
                report.worst_gap_identity
            );
        }),
        Command::SnapshotDump { path, top } => {
            describe_snapshot(path, *top).map(|text| print!("{text}"))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
