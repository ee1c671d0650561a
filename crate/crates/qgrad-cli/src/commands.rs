//! Subcommand implementations.

use crate::config::ExperimentConfig;
use crate::{BoundsArgs, BoundsCommand, CliError, ConfigArgs, CoverArgs, RunArgs, SweepArgs};
use qgrad::bounds::{self, ProblemConstants, Type1Variant};
use qgrad::optimizer::{run, sweep_constant, RunSpec, StopReason};
use qgrad::problems::ProblemInstance;
use qgrad::quantization::{
    covering_cosine, is_proper_quantization, QuantizationSet, SIGN_ENUMERATION_CAP,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Canonical replay artifact written next to every trace.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunSidecar {
    pub config: ExperimentConfig,
    /// The resolved instance, so replays reuse it byte-for-byte.
    pub instance: ProblemInstance,
    pub bits_per_iteration: u32,
    /// Unit-direction step = γ × this (per-coordinate convention).
    pub gamma_scale: f64,
    pub hit_iteration: Option<usize>,
    pub stop_reason: StopReason,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub floor: f64,
    pub trace_path: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub config: ExperimentConfig,
    pub instance: ProblemInstance,
    pub gammas: Vec<f64>,
    pub independent: bool,
    pub gamma_scale: f64,
    pub members: Vec<SweepRow>,
    pub trace_paths: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub floor: f64,
    pub final_f: f64,
    pub bits: u64,
}

/// Config resolution order: file < QGRAD_SEED < --set overrides < flags.
fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, CliError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    if let Ok(seed) = std::env::var("QGRAD_SEED") {
        let parsed: u64 = seed
            .parse()
            .map_err(|e| CliError::Config(format!("QGRAD_SEED: {e} (got {seed:?})")))?;
        overrides.push(format!("run.seed={parsed}"));
    }
    overrides.extend(args.overrides.iter().cloned());
    if let Some(gamma) = args.gamma {
        overrides.push("schedule.kind=constant".to_string());
        overrides.push(format!("schedule.gamma={gamma}"));
    }
    if let Some(max_iter) = args.max_iter {
        overrides.push(format!("run.max_iter={max_iter}"));
    }
    if let Some(seed) = args.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    if let Some(output) = &args.output {
        overrides.push(format!("run.output={}", output.display()));
    }
    if args.record_x {
        overrides.push("run.record_x=true".to_string());
    }
    Ok(ExperimentConfig::from_str_with_overrides(&text, &overrides)?)
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn precondition(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let (config, instance) = match &args.replay {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let sidecar: RunSidecar = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("sidecar {}: {e}", path.display())))?;
            let mut config = sidecar.config;
            if let Some(output) = &args.common.output {
                config.output = output.clone();
            }
            (config, sidecar.instance)
        }
        None => {
            let config = load_config(&args.common)?;
            let instance = config.build_instance()?;
            (config, instance)
        }
    };
    execute_run(&config, &instance).map(|_| ())
}

fn execute_run(config: &ExperimentConfig, instance: &ProblemInstance) -> Result<RunSidecar, CliError> {
    let oracle = instance.build_oracle().map_err(precondition)?;
    let dims = oracle.dims();
    let quantizer = config.build_quantizer(dims)?;
    let x0 = config.build_x0(oracle.as_ref())?;
    let gamma_scale = config.gamma_scale(dims);
    let spec = RunSpec {
        oracle: oracle.as_ref(),
        quantizer: &quantizer,
        schedule: config.effective_schedule(dims),
        stopping: config.stopping,
        max_iter: config.max_iter,
        x0,
        record_x: config.record_x,
        l_alpha_param: config.l_alpha,
    };
    let trace = run(&spec).map_err(precondition)?;

    let trace_path = config.output.with_extension("csv");
    let sidecar_path = config.output.with_extension("json");
    write_file(&trace_path, &trace.to_csv_string())?;

    let last = trace.last();
    let sidecar = RunSidecar {
        config: config.clone(),
        instance: instance.clone(),
        bits_per_iteration: trace.bits_per_iteration,
        gamma_scale,
        hit_iteration: trace.hit_iteration,
        stop_reason: trace.stop_reason,
        final_f: last.f,
        final_grad_norm: last.grad_norm,
        floor: trace.floor_metric(),
        trace_path: trace_path.display().to_string(),
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(runtime)?;
    write_file(&sidecar_path, &json)?;

    match trace.hit_iteration {
        Some(t) => println!("stopping rule satisfied at t = {t}"),
        None => println!("iteration budget exhausted at t = {}", config.max_iter),
    }
    if gamma_scale != 1.0 {
        println!("per-coordinate step convention: unit-direction γ = nominal × {gamma_scale}");
    }
    println!(
        "final f = {:.6}, ‖∇f‖ = {:.6e}, floor = {:.6e}, bits = {}",
        sidecar.final_f,
        sidecar.final_grad_norm,
        sidecar.floor,
        trace.bits_total()
    );
    println!("trace: {} ({} rows)", trace_path.display(), trace.rows.len());
    println!("sidecar: {}", sidecar_path.display());
    Ok(sidecar)
}

pub fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let config = load_config(&args.common)?;
    let instance = config.build_instance()?;
    let oracle = instance.build_oracle().map_err(precondition)?;
    let dims = oracle.dims();
    let quantizer = config.build_quantizer(dims)?;
    let x0 = config.build_x0(oracle.as_ref())?;
    let gamma_scale = config.gamma_scale(dims);

    let nominal: Vec<f64> = if args.gammas.is_empty() {
        vec![0.005, 0.01, 0.05, 0.1, 0.5, 1.0]
    } else {
        args.gammas.clone()
    };
    if nominal.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(CliError::Config(format!("step sizes must be positive: {nominal:?}")));
    }
    let effective: Vec<f64> = nominal.iter().map(|g| g * gamma_scale).collect();
    let members = sweep_constant(
        oracle.as_ref(),
        &quantizer,
        &effective,
        x0,
        config.max_iter,
        config.record_x,
        !args.independent,
    )
    .map_err(precondition)?;

    let stem = config.output.clone();
    let mut rows = Vec::new();
    let mut trace_paths = Vec::new();
    let mut summary = String::from("gamma,floor,final_f,bits\n");
    for (i, (nom, member)) in nominal.iter().zip(&members).enumerate() {
        let path = PathBuf::from(format!("{}_gamma{}.csv", stem.display(), i));
        write_file(&path, &member.trace.to_csv_string())?;
        summary.push_str(&format!(
            "{},{},{},{}\n",
            nom,
            fmt17(member.floor),
            fmt17(member.final_f),
            member.bits_total
        ));
        println!(
            "γ = {:<8} floor = {:.6e}  final f = {:.6}  bits = {}",
            nom, member.floor, member.final_f, member.bits_total
        );
        rows.push(SweepRow {
            gamma: *nom,
            floor: member.floor,
            final_f: member.final_f,
            bits: member.bits_total,
        });
        trace_paths.push(path.display().to_string());
    }
    let summary_path = PathBuf::from(format!("{}_summary.csv", stem.display()));
    write_file(&summary_path, &summary)?;
    let sidecar = SweepSidecar {
        config: config.clone(),
        instance,
        gammas: nominal,
        independent: args.independent,
        gamma_scale,
        members: rows,
        trace_paths,
    };
    let sidecar_path = stem.with_extension("json");
    write_file(&sidecar_path, &serde_json::to_string_pretty(&sidecar).map_err(runtime)?)?;
    println!("summary: {}", summary_path.display());
    println!("sidecar: {}", sidecar_path.display());
    Ok(())
}

pub fn cmd_cover(args: CoverArgs) -> Result<(), CliError> {
    let set = build_cover_set(&args)?;
    let analysis = covering_cosine(&set).map_err(precondition)?;
    let certificate = args
        .certify
        .then(|| is_proper_quantization(&set).map_err(precondition))
        .transpose()?;
    if args.json {
        let mut blob = serde_json::to_value(&analysis).map_err(runtime)?;
        blob["dims"] = set.dims().into();
        blob["cardinality"] = format!("{}", set.cardinality()).into();
        if let Some(cert) = &certificate {
            blob["certificate"] = serde_json::to_value(cert).map_err(runtime)?;
        }
        println!("{}", serde_json::to_string_pretty(&blob).map_err(runtime)?);
        return Ok(());
    }
    println!("kind      = {:?} (N = {}, |D| = {})", set.kind(), set.dims(), set.cardinality());
    println!("cos_star  = {:.12}", analysis.cos_star);
    match analysis.theta_star {
        Some(t) => println!("theta     = {:.6} deg", t.to_degrees()),
        None => println!("theta     = undefined (cos_star <= 0: not a theta-cover)"),
    }
    println!("proper    = {}", analysis.proper);
    println!("method    = {:?}", analysis.method);
    println!("witness   = {:?}", analysis.witness.coords());
    if let Some(cert) = certificate {
        println!("lp_proper = {}", cert.proper);
        if let Some(w) = cert.witness {
            println!("separator = {:?}", w.coords());
            println!("max_inner = {:.3e}", cert.max_inner.unwrap_or(f64::NAN));
        }
        if let Some(mw) = cert.min_weight {
            println!("min_weight = {mw:.6}");
        }
    }
    Ok(())
}

fn build_cover_set(args: &CoverArgs) -> Result<QuantizationSet, CliError> {
    if let Some(path) = &args.file {
        return QuantizationSet::from_file(path).map_err(precondition);
    }
    let kind = args
        .kind
        .as_deref()
        .ok_or_else(|| CliError::Config("pass --kind or --file".into()))?;
    let dims = || {
        args.dims
            .ok_or_else(|| CliError::Config(format!("--kind {kind} needs --dims")))
    };
    let set = match kind {
        "sign" => {
            let d = dims()?;
            if d > SIGN_ENUMERATION_CAP {
                QuantizationSet::sign_compact(d)
            } else {
                QuantizationSet::sign(d)
            }
        }
        "minimal" => QuantizationSet::minimal(dims()?),
        "normal_basis" | "normal-basis" => QuantizationSet::normal_basis(dims()?),
        "circular" => {
            let n = args
                .n
                .ok_or_else(|| CliError::Config("--kind circular needs --n".into()))?;
            QuantizationSet::circular(n)
        }
        other => return Err(CliError::Config(format!("unknown kind {other:?}"))),
    };
    set.map_err(precondition)
}

pub fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let (report, json) = match args.which {
        BoundsCommand::Type1(a) => {
            let mut c = ProblemConstants::new(a.consts.lipschitz, a.consts.dims, a.consts.cos_theta, a.eps)
                .with_alpha(a.alpha);
            c.gap = a.consts.gap;
            c.gap_upper = a.consts.gap_upper;
            c.grad0_norm = a.grad0_norm;
            c.grad_bound = a.grad_bound;
            let variant = if a.constrained {
                Type1Variant::Orthant
            } else {
                Type1Variant::Unconstrained
            };
            (bounds::type1_plan(&c, a.gamma, variant).map_err(precondition)?, a.consts.json)
        }
        BoundsCommand::Rate(a) => {
            let mut c = ProblemConstants::new(a.consts.lipschitz, a.consts.dims, a.consts.cos_theta, 1.0);
            c.gap = a.consts.gap;
            c.gap_upper = a.consts.gap_upper;
            (bounds::optimal_rate_plan(a.iters, &c).map_err(precondition)?, a.consts.json)
        }
        BoundsCommand::Strong(a) => {
            let mut c = ProblemConstants::new(a.consts.lipschitz, a.consts.dims, a.consts.cos_theta, a.eps)
                .with_strong_convexity(a.mu);
            c.gap = a.consts.gap;
            c.gap_upper = a.consts.gap_upper;
            (bounds::strongly_convex_plan(&c, a.gamma).map_err(precondition)?, a.consts.json)
        }
        BoundsCommand::Margins(a) => {
            let mut c = ProblemConstants::new(a.consts.lipschitz, a.consts.dims, a.consts.cos_theta, a.eps)
                .with_alpha(a.alpha);
            c.grad_bound = a.grad_bound;
            let margins = bounds::descent_margins(&c, a.gamma).map_err(precondition)?;
            if a.consts.json {
                println!("{}", serde_json::to_string_pretty(&margins).map_err(runtime)?);
            } else {
                println!("{:<12} = {}", "delta", margins.delta);
                match margins.delta_bar {
                    Some(d) => println!("{:<12} = {d}", "delta_bar"),
                    None => println!("{:<12} = unavailable (pass --grad-bound)", "delta_bar"),
                }
            }
            return Ok(());
        }
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    } else {
        print!("{report}");
    }
    Ok(())
}

