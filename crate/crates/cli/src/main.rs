use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use skatesim::{
    construct_truck_rotation, detect_peaks, eval_transition, identify_from_peaks,
    identify_multi_peak, parse_poses, plan_transition, reachable_heading_range, run_scenario,
    simulate_free_decay, steering_from_tilt, tilt_reference, yaw_rate, ControlPointPolicy,
    DomainRandomizer, DrDraw, DrRanges, FreeDecayTrace, KeyBodyPose, PeakDetection, ScenarioConfig,
    SteeringCommand, TiltModel, TruckGeometry,
};

/// Relative output paths are placed under this directory when it is set.
const OUTPUT_DIR_ENV: &str = "SKATESIM_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "skatesim",
    version,
    about = "Skateboard lean-to-steer simulation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct GeometryArgs {
    /// Kingpin rake angle (rad).
    #[arg(long = "lambda", default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
    rake: f64,
    /// Truck pivot height (m).
    #[arg(long, default_value_t = 0.09)]
    truck_height: f64,
    /// Lateral wheel offset (m).
    #[arg(long, default_value_t = 0.07)]
    half_width: f64,
    /// Distance between the truck axles (m).
    #[arg(long, default_value_t = 0.5)]
    wheelbase: f64,
}

impl GeometryArgs {
    fn geometry(&self) -> Result<TruckGeometry<f64>> {
        Ok(TruckGeometry::new(
            self.rake,
            self.truck_height,
            self.half_width,
            self.wheelbase,
        )?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Axle steering for a deck tilt, closed form against the construction.
    Kinematics {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Deck tilt (rad).
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
    },
    /// Identify tilt stiffness and damping from a free-decay trace.
    Sysid {
        /// Deck roll inertia (kg m^2).
        #[arg(long)]
        inertia: f64,
        /// CSV with header `t,roll`.
        trace: PathBuf,
        /// Peaks below this amplitude are ignored (rad).
        #[arg(long, default_value_t = 1e-4)]
        noise_floor: f64,
        /// Centred moving-average window applied before peak search.
        #[arg(long)]
        smooth: Option<usize>,
        /// Fit the decrement over all peaks instead of the first pair.
        #[arg(long)]
        multi_peak: bool,
    },
    /// Tilt reference for a heading change and the reachable heading range.
    PlanSteer {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Target heading (rad).
        #[arg(long, allow_negative_numbers = true)]
        target: f64,
        /// Current board heading (rad).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        heading: f64,
        /// Board speed (m/s).
        #[arg(long)]
        speed: f64,
        /// Time allotted to the turn (s).
        #[arg(long, default_value_t = 2.7)]
        horizon: f64,
        #[arg(long, default_value_t = 0.3)]
        min_speed: f64,
        #[arg(long, default_value_t = 0.2)]
        lean_limit: f64,
    },
    /// Sample a planned transition between two pose files as CSV.
    PlanTransition {
        end_poses: PathBuf,
        ref_poses: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 0.6)]
        tf: f64,
        /// Number of evenly spaced samples including both ends.
        #[arg(long, default_value_t = 31)]
        samples: usize,
        #[arg(long, default_value_t = 0.05)]
        foot_lift: f64,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit domain-randomization draws as CSV.
    SampleDr {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate a free-decay roll response and write it as a trace CSV.
    FreeDecay {
        #[arg(long, default_value_t = 7.15e-3)]
        inertia: f64,
        #[arg(long, default_value_t = 34.835)]
        stiffness: f64,
        #[arg(long, default_value_t = 0.540)]
        damping: f64,
        #[arg(long, default_value_t = 0.614, allow_negative_numbers = true)]
        gamma0: f64,
        #[arg(long, default_value_t = 0.5)]
        duration: f64,
        #[arg(long, default_value_t = 0.002)]
        dt: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one or more scenario files.
    Simulate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Run the scenarios concurrently, one thread each.
        #[arg(long)]
        parallel: bool,
        /// Directory for relative output paths; overrides the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn output_root(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
}

fn resolve(path: &Path, root: Option<&Path>) -> PathBuf {
    match root {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes through `body` to the file at `path`, or to stdout.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let p = resolve(p, output_root(None).as_deref());
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create {}", dir.display()))?;
            }
            let file =
                fs::File::create(&p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn kinematics(geometry: GeometryArgs, gamma: f64) -> Result<()> {
    let g = geometry.geometry()?;
    let closed = steering_from_tilt(gamma, &g)?;
    let c = construct_truck_rotation(gamma, &g)?;
    let built = c.steering_angle();
    println!("sigma_closed_form     {closed:.12}");
    println!("sigma_construction    {built:.12}");
    println!("difference            {:.3e}", (closed - built).abs());
    println!("kingpin_eta           {:.12}", c.kingpin_eta);
    println!("contact_residual      {:.3e}", c.contact_residual.abs());
    println!("yaw_rate_per_speed    {:.12}", yaw_rate(1.0, gamma, &g));
    if closed != 0.0 {
        println!(
            "turn_radius           {:.12}",
            g.wheelbase / closed.tan().abs()
        );
    }
    Ok(())
}

fn sysid(
    inertia: f64,
    trace_path: &Path,
    noise_floor: f64,
    smooth: Option<usize>,
    multi: bool,
) -> Result<()> {
    let file = fs::File::open(trace_path)
        .with_context(|| format!("cannot open {}", trace_path.display()))?;
    let trace = FreeDecayTrace::read_csv(file, &trace_path.display().to_string())?;
    let cfg = PeakDetection {
        noise_floor,
        smoothing_window: smooth,
        ..PeakDetection::default()
    };
    let peaks = detect_peaks(&trace, &cfg)?;
    let id = if multi {
        identify_multi_peak(&trace, inertia, &cfg)?
    } else {
        identify_from_peaks(peaks.phi1, peaks.phi2, peaks.period, inertia)?
    };
    println!("samples               {}", trace.len());
    println!("first peak  (rad)     {:.6}", peaks.phi1);
    println!("second peak (rad)     {:.6}", peaks.phi2);
    println!("damped period (s)     {:.6}", id.damped_period);
    println!("log decrement         {:.6}", id.log_decrement);
    println!("damping ratio         {:.6}", id.damping_ratio);
    println!("natural freq (rad/s)  {:.6}", id.natural_frequency);
    println!("stiffness k (N m/rad) {:.6}", id.stiffness);
    println!("damping d (N m s/rad) {:.6}", id.damping);
    println!(
        "record k={} d={} zeta={} wn={} delta={} period={}",
        id.stiffness,
        id.damping,
        id.damping_ratio,
        id.natural_frequency,
        id.log_decrement,
        id.damped_period
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plan_steer(
    geometry: GeometryArgs,
    target: f64,
    heading: f64,
    speed: f64,
    horizon: f64,
    min_speed: f64,
    lean_limit: f64,
) -> Result<()> {
    let g = geometry.geometry()?;
    if speed.is_nan() || speed < 0.0 {
        bail!("speed must be non-negative, got {speed}");
    }
    let cmd = SteeringCommand::new(target, horizon, min_speed, lean_limit)?;
    let delta = skatesim::heading_error(target, heading);
    let gamma = tilt_reference(delta, speed, &cmd, &g);
    let demand = g.wheelbase * delta / (speed.max(min_speed) * horizon * g.rake.tan());
    let (lo, hi) = reachable_heading_range(speed, horizon, &cmd, &g);
    println!("heading_error         {delta:.12}");
    println!("gamma_ref             {gamma:.12}");
    println!("saturated             {}", demand.abs() > lean_limit.sin());
    println!("reachable_min         {lo:.12}");
    println!("reachable_max         {hi:.12}");
    Ok(())
}

fn read_poses(path: &Path) -> Result<Vec<KeyBodyPose<f64>>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(parse_poses(&text, &path.display().to_string())?)
}

#[allow(clippy::too_many_arguments)]
fn plan_transition_cmd(
    end: &Path,
    reference: &Path,
    t0: f64,
    tf: f64,
    samples: usize,
    foot_lift: f64,
    output: Option<&Path>,
) -> Result<()> {
    if samples < 2 {
        bail!("--samples must be at least 2");
    }
    let plan = plan_transition(
        &read_poses(end)?,
        &read_poses(reference)?,
        (t0, tf),
        &ControlPointPolicy { foot_lift },
    )?;
    emit(output, |w| {
        writeln!(w, "t,body,x,y,z,qw,qx,qy,qz")?;
        for i in 0..samples {
            let t = if i + 1 == samples {
                tf
            } else {
                t0 + (tf - t0) * i as f64 / (samples - 1) as f64
            };
            for p in eval_transition(&plan, t)? {
                let (x, q) = (p.position, p.orientation);
                writeln!(
                    w,
                    "{t},{},{},{},{},{},{},{},{}",
                    p.body, x.x, x.y, x.z, q.w, q.x, q.y, q.z
                )?;
            }
        }
        Ok(())
    })
}

fn sample_dr(seed: u64, count: usize, output: Option<&Path>) -> Result<()> {
    let ranges = DrRanges::default();
    let mut dr = DomainRandomizer::new(seed);
    emit(output, |w| {
        writeln!(w, "{}", DrDraw::csv_header())?;
        for i in 0..count {
            dr.sample(&ranges)?.write_csv_row(i, w)?;
        }
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn free_decay(
    inertia: f64,
    stiffness: f64,
    damping: f64,
    gamma0: f64,
    duration: f64,
    dt: f64,
    output: Option<&Path>,
) -> Result<()> {
    let model = TiltModel::new(inertia, stiffness, damping)?;
    let trace = simulate_free_decay(&model, gamma0, duration, dt)?;
    emit(output, |w| Ok(trace.write_csv(w)?))
}

struct Outcome {
    path: PathBuf,
    result: Result<String>,
}

fn run_one(path: &Path, root: Option<&Path>) -> Result<String> {
    let cfg = ScenarioConfig::load(path)?;
    let outputs = match root {
        Some(dir) => cfg.outputs.rebased(dir),
        None => cfg.outputs.clone(),
    };
    let report = run_scenario(&cfg)?;
    report.write_outputs(&outputs)?;
    Ok(report.summary())
}

fn simulate(configs: &[PathBuf], parallel: bool, output_dir: Option<&Path>) -> Result<bool> {
    let root = output_root(output_dir);
    let root = root.as_deref();
    let outcomes: Vec<Outcome> = if parallel {
        check_distinct_outputs(configs, root)?;
        std::thread::scope(|s| {
            let handles: Vec<_> = configs
                .iter()
                .map(|p| {
                    s.spawn(move || Outcome {
                        path: p.clone(),
                        result: run_one(p, root),
                    })
                })
                .collect();
            handles
                .into_iter()
                .zip(configs)
                .map(|(h, p)| {
                    h.join().unwrap_or_else(|_| Outcome {
                        path: p.clone(),
                        result: Err(anyhow::anyhow!("scenario thread panicked")),
                    })
                })
                .collect()
        })
    } else {
        configs
            .iter()
            .map(|p| Outcome {
                path: p.clone(),
                result: run_one(p, root),
            })
            .collect()
    };

    let mut ok = true;
    for o in outcomes {
        match o.result {
            Ok(summary) => {
                println!("== {} ==", o.path.display());
                print!("{summary}");
            }
            Err(e) => {
                ok = false;
                report_error(&e);
            }
        }
    }
    Ok(ok)
}

/// Parallel runs must not write the same file.
fn check_distinct_outputs(configs: &[PathBuf], root: Option<&Path>) -> Result<()> {
    let mut seen = std::collections::BTreeMap::new();
    for path in configs {
        let Ok(cfg) = ScenarioConfig::load(path) else {
            continue;
        };
        let outputs = match root {
            Some(dir) => cfg.outputs.rebased(dir),
            None => cfg.outputs,
        };
        for out in [outputs.trajectory, outputs.rewards].into_iter().flatten() {
            if let Some(prev) = seen.insert(out.clone(), path.clone()) {
                bail!(
                    "{} and {} both write {}",
                    prev.display(),
                    path.display(),
                    out.display()
                );
            }
        }
    }
    Ok(())
}

fn report_error(e: &anyhow::Error) {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        msg.push_str(": ");
        msg.push_str(&cause.to_string());
    }
    eprintln!("error: {}", msg.replace('\n', " "));
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Kinematics { geometry, gamma } => kinematics(geometry, gamma)?,
        Command::Sysid {
            inertia,
            trace,
            noise_floor,
            smooth,
            multi_peak,
        } => sysid(inertia, &trace, noise_floor, smooth, multi_peak)?,
        Command::PlanSteer {
            geometry,
            target,
            heading,
            speed,
            horizon,
            min_speed,
            lean_limit,
        } => plan_steer(
            geometry, target, heading, speed, horizon, min_speed, lean_limit,
        )?,
        Command::PlanTransition {
            end_poses,
            ref_poses,
            t0,
            tf,
            samples,
            foot_lift,
            output,
        } => plan_transition_cmd(
            &end_poses,
            &ref_poses,
            t0,
            tf,
            samples,
            foot_lift,
            output.as_deref(),
        )?,
        Command::SampleDr {
            seed,
            count,
            output,
        } => sample_dr(seed, count, output.as_deref())?,
        Command::FreeDecay {
            inertia,
            stiffness,
            damping,
            gamma0,
            duration,
            dt,
            output,
        } => free_decay(
            inertia,
            stiffness,
            damping,
            gamma0,
            duration,
            dt,
            output.as_deref(),
        )?,
        Command::Simulate {
            configs,
            parallel,
            output_dir,
        } => return simulate(&configs, parallel, output_dir.as_deref()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            report_error(&e);
            ExitCode::FAILURE
        }
    }
}
