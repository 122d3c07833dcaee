use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kvol::engine::{
    certify_pair, certify_sample, default_sweep_bound, kvol_estimate, random_sommes_suite,
    run_lemma_suite, sweep, CertOutcome, EngineError, Session,
};
use kvol::report;
use kvol::surface::{build_l_shape, marked_loci, validate, LShapeParams, Origami};

#[derive(Parser)]
#[command(
    name = "kvol",
    version,
    about = "Closed geodesics and KVol estimates on L-shaped square-tiled surfaces"
)]
struct Cli {
    /// Worker threads for the parallel scans.
    #[arg(long, global = true, env = "KVOL_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SurfaceArgs {
    /// L-shape parameters: a b (bottom row, left column).
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "origami")]
    lshape: Option<Vec<usize>>,
    /// Origami text file (squares/right/up lines).
    #[arg(long)]
    origami: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutArgs {
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Surface summary: volume, cone angles, marked loci.
    Info {
        #[command(flatten)]
        surface: SurfaceArgs,
    },
    /// Enumerate the curve pool up to a squared-length bound.
    Enumerate {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long)]
        max_sq_len: i64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact pool-restricted KVol estimate with lemma checks.
    Kvol {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long)]
        max_sq_len: i64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lemma suites over the pool; exit 1 on any counterexample.
    Lemmas {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long)]
        max_sq_len: i64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Certify the proof chain on a pair of pool curves (or a sample).
    Certify {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long)]
        max_sq_len: i64,
        /// Certify one specific pair of pool ids.
        #[arg(long, num_args = 2, value_names = ["ID1", "ID2"])]
        pair: Option<Vec<String>>,
        /// Number of sampled pairs when --pair is not given.
        #[arg(long, default_value_t = 20)]
        sample: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep L(n+1,n+1) for n in a range at the default bounds.
    Sweep {
        #[arg(long)]
        from: i64,
        #[arg(long)]
        to: i64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, default_value_t = 1_000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Randomized check of the sum inequality.
    Sommes {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn load_surface(args: &SurfaceArgs) -> Result<Origami, String> {
    match (&args.lshape, &args.origami) {
        (Some(ab), None) => {
            let params = LShapeParams::new(ab[0], ab[1]).map_err(|e| e.to_string())?;
            build_l_shape(params).map_err(|e| e.to_string())
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Origami::from_text(&text).map_err(|e| e.to_string())
        }
        _ => Err("exactly one of --lshape or --origami is required".into()),
    }
}

fn write_out(out: &OutArgs, content: &str) -> Result<(), String> {
    match &out.out {
        Some(path) => {
            fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn session_of(o: Origami) -> Result<Session, String> {
    Session::from_origami(o).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.cmd {
        Cmd::Info { surface } => {
            let o = load_surface(&surface)?;
            let (cone, _) = validate(&o).map_err(|e| e.to_string())?;
            println!("squares: {}", o.num_squares());
            println!("volume: {}", o.volume());
            let angles: Vec<String> = cone
                .vertices
                .iter()
                .map(|&(sq, k)| format!("{}pi at square {}", 2 * k, sq + 1))
                .collect();
            println!("cone angles: {}", angles.join(", "));
            println!("genus: {}", cone.genus);
            if cone.in_h2 {
                println!("stratum: H(2)");
            } else {
                println!("warning: not in H(2)");
            }
            if o.lshape().is_some() {
                let loci = marked_loci(&o).map_err(|e| e.to_string())?;
                println!("singular point: {}", loci.singular);
                for (m, locus) in &loci.loci {
                    println!(
                        "{}: squared length {}, {} segment(s)",
                        m.name(),
                        locus.sq_len,
                        locus.segments.len()
                    );
                }
            }
            Ok(0)
        }
        Cmd::Enumerate {
            surface,
            max_sq_len,
            format,
            out,
        } => {
            let session = session_of(load_surface(&surface)?)?;
            let pool = session.pool(max_sq_len).map_err(|e| e.to_string())?;
            let content = match format {
                Format::Csv => report::enumerate_csv(&pool),
                Format::Json => {
                    serde_json::to_string_pretty(&report::enumerate_json(&pool, 0)).unwrap()
                }
            };
            write_out(&out, &content)?;
            Ok(0)
        }
        Cmd::Kvol {
            surface,
            max_sq_len,
            format,
            trials,
            seed,
            out,
        } => {
            let started = std::time::Instant::now();
            let session = session_of(load_surface(&surface)?)?;
            let params = session
                .origami
                .lshape()
                .ok_or("kvol needs an l-shape surface (homology basis)")?;
            let pool = session.pool(max_sq_len).map_err(|e| e.to_string())?;
            let estimate =
                kvol_estimate(session.origami.volume() as i64, &pool).map_err(|e| e.to_string())?;
            let (lemmas, n) = match session.lemma_n() {
                Ok(n) => (
                    Some(
                        run_lemma_suite(&session, &pool, n, trials, seed)
                            .map_err(|e| e.to_string())?,
                    ),
                    Some(n),
                ),
                Err(_) => (None, None),
            };
            let value = report::kvol_report_json(
                params,
                max_sq_len,
                pool.len(),
                &estimate,
                lemmas.as_ref(),
                n,
                seed,
            );
            let content = match format {
                Format::Json => serde_json::to_string_pretty(&value).unwrap(),
                Format::Csv => format!(
                    "a,b,max_sq_len,pool,num_sq,den_sq,decimal\n{},{},{},{},{},{},{}\n",
                    params.a,
                    params.b,
                    max_sq_len,
                    pool.len(),
                    estimate.num_sq,
                    estimate.den_sq,
                    report::sig12(estimate.decimal)
                ),
            };
            write_out(&out, &content)?;
            eprintln!("timing: {} ms", started.elapsed().as_millis());
            Ok(0)
        }
        Cmd::Lemmas {
            surface,
            max_sq_len,
            trials,
            seed,
            out,
        } => {
            let session = session_of(load_surface(&surface)?)?;
            let n = session.lemma_n().map_err(|e| e.to_string())?;
            let pool = session.pool(max_sq_len).map_err(|e| e.to_string())?;
            let lemmas =
                run_lemma_suite(&session, &pool, n, trials, seed).map_err(|e| e.to_string())?;
            let pass = lemmas.all_pass();
            let params = session.origami.lshape().unwrap();
            let value = report::kvol_report_json(
                params,
                max_sq_len,
                pool.len(),
                &kvol_estimate(session.origami.volume() as i64, &pool)
                    .map_err(|e| e.to_string())?,
                Some(&lemmas),
                Some(n),
                seed,
            );
            write_out(&out, &serde_json::to_string_pretty(&value).unwrap())?;
            Ok(if pass { 0 } else { 1 })
        }
        Cmd::Certify {
            surface,
            max_sq_len,
            pair,
            sample,
            seed,
            out,
        } => {
            let session = session_of(load_surface(&surface)?)?;
            let n = session.lemma_n().map_err(|e| e.to_string())?;
            let pool = session.pool(max_sq_len).map_err(|e| e.to_string())?;
            let certs = match pair {
                Some(ids) => {
                    let find = |id: &str| {
                        pool.iter()
                            .find(|c| c.id == id)
                            .ok_or_else(|| EngineError::UnknownCurve(id.to_string()))
                    };
                    let ca = find(&ids[0]).map_err(|e| e.to_string())?;
                    let cb = find(&ids[1]).map_err(|e| e.to_string())?;
                    vec![certify_pair(&session, ca, cb, n).map_err(|e| e.to_string())?]
                }
                None => {
                    certify_sample(&session, &pool, n, sample, seed).map_err(|e| e.to_string())?
                }
            };
            let value = report::certify_json(&certs, seed);
            write_out(&out, &serde_json::to_string_pretty(&value).unwrap())?;
            let failed = certs.iter().any(|c| c.outcome == CertOutcome::Failed);
            let inconclusive = certs
                .iter()
                .filter(|c| c.outcome == CertOutcome::Inconclusive)
                .count();
            let ok = !failed && inconclusive * 5 < certs.len().max(1);
            Ok(if ok { 0 } else { 1 })
        }
        Cmd::Sweep {
            from,
            to,
            format,
            trials,
            seed,
            out,
        } => {
            if from < 2 || to < from {
                return Err("sweep needs 2 <= from <= to".into());
            }
            let rows = sweep(from, to, trials, seed).map_err(|e| e.to_string())?;
            let content = match format {
                Format::Csv => report::sweep_csv(&rows),
                Format::Json => {
                    serde_json::to_string_pretty(&report::sweep_json(&rows, seed)).unwrap()
                }
            };
            write_out(&out, &content)?;
            let _ = default_sweep_bound(from);
            Ok(0)
        }
        Cmd::Sommes { trials, seed, out } => {
            let suite = random_sommes_suite(trials, seed);
            let value = report::sommes_json(&suite);
            write_out(&out, &serde_json::to_string_pretty(&value).unwrap())?;
            Ok(if suite.failures == 0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    // die quietly when the consumer closes the pipe early
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let workers = cli.workers;
    let result = match workers {
        Some(w) if w > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .expect("worker pool");
            pool.install(|| run(cli))
        }
        _ => run(cli),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
