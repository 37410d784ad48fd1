use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rectilab::dyadic::Square;
use rectilab::measure::{
    blowup, gen_cantor, gen_circle, gen_lipschitz_graph, gen_segment, regularity,
    PointCloudMeasure, ProbePlan,
};
use rectilab::{cauchy, curve, io, riesz, badsquares, Error, Point, Result};

#[derive(Parser)]
#[command(name = "rectilab", about = "Point-cloud measure geometry toolbox")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized probe placement.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory; falls back to $RECTILAB_OUT, then the cwd.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct FixtureArgs {
    /// One of: segment, circle, cantor, gap, sawtooth.
    #[arg(long, default_value = "segment")]
    fixture: String,

    #[arg(long, default_value_t = 1.0)]
    density: f64,

    /// Segment length (segment/gap) or circle circumference resolution driver.
    #[arg(long, default_value_t = 100.0)]
    len: f64,

    #[arg(long, default_value_t = 0.01)]
    mesh: f64,

    /// Cantor generation, or point count for the circle.
    #[arg(long, default_value_t = 4)]
    n: u32,

    #[arg(long, default_value_t = 1.0)]
    radius: f64,

    /// Width of the missing middle piece of the gap fixture.
    #[arg(long, default_value_t = 0.6)]
    gap: f64,

    /// Load the measure from a csv written by `generate` instead.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Blow-up anchor "x,y" applied after generation.
    #[arg(long)]
    blowup_at: Option<String>,

    #[arg(long)]
    blowup_lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the fixture as csv rows x,y,w plus a json sidecar.
    Generate(FixtureArgs),
    /// Regularity constants and the linear-growth tail estimate.
    Analyze {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long, default_value_t = 64)]
        probes: usize,
    },
    /// Potential fields, the constant kappa, defect, resolvent residuals.
    Cauchy {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Dictionary size for the reflectionless defect.
        #[arg(long, default_value_t = 8)]
        dict: usize,
        /// Emit the sampled field on a grid as csv.
        #[arg(long)]
        emit_plot_data: bool,
    },
    /// Gram matrix norm, theta coefficients, and their Carleson sum.
    Riesz {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 4.0)]
        a_prime: f64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 3)]
        depth: u32,
    },
    /// Net, multiscale graph, Euler walk, and the length ledger.
    Curve {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long, default_value_t = 0.03125)]
        tau: f64,
        /// Net scale as a fraction of the window side (rounded to a power of two).
        #[arg(long, default_value_t = 0.0078125)]
        l0_frac: f64,
        /// Samples of the constant-speed parametrization written as csv.
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
    /// Bad-square family, Carleson norm, and the inductive-edge re-check.
    Badsquares {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long, default_value_t = 0.03125)]
        tau: f64,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        /// Also rebuild the curve graph and re-check its inductive squares.
        #[arg(long)]
        check_inductive: bool,
    },
}

fn parse_point(s: &str) -> Result<Point> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| Error::InvalidParameter(format!("expected x,y got {s}")))?;
    let x: f64 = x
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad coordinate in {s}")))?;
    let y: f64 = y
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad coordinate in {s}")))?;
    Ok(Point::new(x, y))
}

fn load_measure(f: &FixtureArgs) -> Result<PointCloudMeasure> {
    let mut mu = if let Some(path) = &f.input {
        io::read_measure_csv(path)?
    } else {
        match f.fixture.as_str() {
            // Fixtures sit in the positive quadrant so a single dyadic square
            // can contain them (the lattice splits at the origin forever).
            "segment" => gen_segment(
                f.density,
                Point::new(0.0, 0.0),
                Point::new(f.len, 0.0),
                f.mesh,
            )?,
            "circle" => gen_circle(
                f.density,
                Point::new(f.radius, f.radius),
                f.radius,
                f.n as usize,
            )?,
            "cantor" => gen_cantor(f.n)?,
            "gap" => {
                let half = f.len / 2.0;
                let left = gen_segment(f.density, Point::new(0.0, 0.0), Point::new(half, 0.0), f.mesh)?;
                let right = gen_segment(
                    f.density,
                    Point::new(half + f.gap, 0.0),
                    Point::new(f.len + f.gap, 0.0),
                    f.mesh,
                )?;
                let mut points = left.points().to_vec();
                points.extend_from_slice(right.points());
                let mut weights = left.weights().to_vec();
                weights.extend_from_slice(right.weights());
                PointCloudMeasure::new(points, weights, f.mesh, "gap".into())?
            }
            "sawtooth" => {
                let steps = (f.len / f.mesh).ceil() as usize;
                let samples: Vec<(f64, f64)> = (0..=steps)
                    .map(|k| {
                        let x = f.len * k as f64 / steps as f64;
                        let t = (x / 0.2).fract();
                        let y = 0.1 * (1.0 - (2.0 * t - 1.0).abs());
                        (x, y)
                    })
                    .collect();
                gen_lipschitz_graph(&samples, f.density)?
            }
            other => {
                return Err(Error::InvalidParameter(format!("unknown fixture {other}")));
            }
        }
    };
    if let (Some(at), Some(lambda)) = (&f.blowup_at, f.blowup_lambda) {
        mu = blowup(&mu, parse_point(at)?, lambda)?;
    }
    Ok(mu)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("RECTILAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Smallest dyadic square containing the support (fails if the cloud
/// straddles a persistent lattice boundary such as a coordinate axis).
fn root_square(mu: &PointCloudMeasure) -> Result<Square> {
    let (lo, hi) = mu.bbox();
    let extent = (hi.re - lo.re).max(hi.im - lo.im).max(mu.mesh());
    let j0 = extent.log2().ceil() as i32;
    for j in j0..j0 + 64 {
        let q = rectilab::dyadic::locate(lo, j);
        if q.contains(hi) {
            return Ok(q);
        }
    }
    Err(Error::InvalidParameter(
        "no dyadic window contains the support; shift the fixture into one quadrant".into(),
    ))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let dir = out_dir(cli);
    std::fs::create_dir_all(&dir)?;
    match &cli.cmd {
        Cmd::Generate(f) => {
            let mu = load_measure(f)?;
            let path = dir.join(format!("{}.csv", mu.label()));
            io::write_measure_csv(&mu, &path)?;
            println!("wrote {} ({} points)", path.display(), mu.len());
        }
        Cmd::Analyze { fixture, probes } => {
            let mu = load_measure(fixture)?;
            let plan = ProbePlan::default_for(&mu, *probes)?;
            let rep = regularity(&mu, &plan)?;
            let path = dir.join("regularity.json");
            io::write_json(&rep, &path)?;
            println!(
                "niceness {:.6} ad {:.6} -> {}",
                rep.niceness,
                rep.ad_constant,
                path.display()
            );
        }
        Cmd::Cauchy {
            fixture,
            delta,
            dict,
            emit_plot_data,
        } => {
            let mu = load_measure(fixture)?;
            let (lo, hi) = mu.bbox();
            let center = (lo + hi) / 2.0;
            let diam = mu.diameter().max(mu.mesh());
            let z0 = center + Point::new(0.0, diam);
            let kappa = cauchy::kappa_estimate(&mu, z0, center, diam / 4.0)?;

            let dictionary = riesz::make_phi_family(&mu, 2.0, *dict)?;
            let defect = cauchy::reflectionless_defect(&mu, &dictionary)?;

            // Probes straddle the support just above the off-support margin.
            let stride = (mu.len() / 20).max(1);
            let off = (0.05 * diam).max(4.0 * mu.mesh());
            let mut residuals = Vec::new();
            for (k, p) in mu.points().iter().step_by(stride).take(20).enumerate() {
                let side = if k % 2 == 0 { off } else { -off };
                residuals.push(cauchy::resolvent_residual(
                    &mu,
                    p + Point::new(0.0, side),
                    kappa.value,
                    z0,
                )?);
            }

            #[derive(serde::Serialize)]
            struct Report {
                kappa: cauchy::KappaEstimate,
                defect: f64,
                resolvent_residuals: Vec<f64>,
            }
            let path = dir.join("cauchy.json");
            io::write_json(
                &Report {
                    kappa: kappa.clone(),
                    defect,
                    resolvent_residuals: residuals,
                },
                &path,
            )?;
            println!(
                "kappa {:.4}{:+.4}i defect {:.3e} -> {}",
                kappa.value.re,
                kappa.value.im,
                defect,
                path.display()
            );

            if *emit_plot_data {
                let mut targets = Vec::new();
                let m = 41;
                for iy in 0..m {
                    for ix in 0..m {
                        let t = Point::new(
                            lo.re + (hi.re - lo.re) * ix as f64 / (m - 1) as f64,
                            lo.im - diam / 2.0 + (hi.im - lo.im + diam) * iy as f64 / (m - 1) as f64,
                        );
                        targets.push(t);
                    }
                }
                let ones = vec![Point::new(1.0, 0.0); mu.len()];
                let field = cauchy::transform_delta(&mu, &ones, *delta, &targets)?;
                io::write_field_csv(&field, &dir.join("field.csv"))?;
            }

            if kappa.unstable {
                return Ok(ExitCode::from(3));
            }
        }
        Cmd::Riesz {
            fixture,
            a,
            a_prime,
            gamma,
            depth,
        } => {
            let mu = load_measure(fixture)?;
            let p = root_square(&mu)?;
            let fns = riesz::make_phi_family(&mu, *a, 8)?;
            let g = riesz::gram(&mu, &fns);
            let gnorm = riesz::gram_norm(&g);
            let theta = riesz::theta(&mu, &p, *a, *a_prime, 4, 3)?;
            let carleson = riesz::theta_carleson(&mu, &p, *gamma, *depth)?;

            #[derive(serde::Serialize)]
            struct Report {
                gram_norm: f64,
                theta: riesz::ThetaReport,
                theta_carleson: f64,
            }
            let path = dir.join("riesz.json");
            io::write_json(
                &Report {
                    gram_norm: gnorm,
                    theta,
                    theta_carleson: carleson,
                },
                &path,
            )?;
            println!("gram {gnorm:.6} carleson {carleson:.6} -> {}", path.display());
        }
        Cmd::Curve {
            fixture,
            tau,
            l0_frac,
            samples,
        } => {
            let mu = load_measure(fixture)?;
            let p = root_square(&mu)?;
            let l0 = p.side * l0_frac;
            let (graph, ledger) = curve::build_graph(&mu, &p, *tau, l0)?;
            let walk = curve::euler_walk(&graph, &p)?;
            io::write_graph_json(&graph, &dir.join("graph.json"))?;
            io::write_json(&ledger, &dir.join("ledger.json"))?;
            io::write_curve_csv(&walk, *samples, &dir.join("curve.csv"))?;
            println!(
                "net {} edges {} length {:.4} lip {:.4}",
                graph.net.points.len(),
                graph.edges.len(),
                ledger.total(),
                walk.lip_constant
            );
        }
        Cmd::Badsquares {
            fixture,
            tau,
            depth,
            check_inductive,
        } => {
            let mu = load_measure(fixture)?;
            let p = root_square(&mu)?;
            // Deepest level still above the witness resolution floor.
            let floor = 8.0 * mu.mesh() / tau;
            let mut depth = *depth;
            while depth > 0 && p.side * 0.5f64.powi(depth as i32) < floor {
                depth -= 1;
            }
            let family = badsquares::bad_family(&mu, &p, *tau, depth)?;
            let squares: Vec<Square> = family.iter().map(|w| w.q).collect();
            let norm = badsquares::carleson_norm(&squares, &p);

            let inductive = if *check_inductive {
                let floor = 8.0 * mu.mesh() / tau;
                let mut l0 = p.side;
                while l0 / 2.0 >= floor && l0 / 2.0 >= 2.0 * mu.mesh() / tau {
                    l0 /= 2.0;
                }
                let (_, ledger) = curve::build_graph(&mu, &p, *tau, l0)?;
                Some(badsquares::inductive_implies_bad(
                    &mu,
                    &ledger.inductive_entries,
                    *tau,
                )?)
            } else {
                None
            };

            #[derive(serde::Serialize)]
            struct Report {
                depth: u32,
                carleson_norm: f64,
                family: Vec<badsquares::BadWitness>,
                inductive: Option<badsquares::InductiveBadReport>,
            }
            let path = dir.join("badsquares.json");
            io::write_json(
                &Report {
                    depth,
                    carleson_norm: norm,
                    family,
                    inductive,
                },
                &path,
            )?;
            println!("bad squares {} norm {:.6} -> {}", squares.len(), norm, path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            eprintln!("{{\"error\": \"thread pool already initialized\"}}");
            return ExitCode::from(2);
        }
    }
    let _ = Path::new(".");
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{{\"error\": \"{e}\"}}");
            ExitCode::from(2)
        }
    }
}
