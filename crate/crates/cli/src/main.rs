use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnylab::dimension::{block_measure, box_dimension, energy, frostman_exponent};
use qnylab::discrepancy::{block_discrepancy, discrepancy, min_gap};
use qnylab::experiment::{self, ExperimentSpec, Preset, Schedule};
use qnylab::limsup::{chung_erdos, truncated_set};
use qnylab::littlewood::{bad_certificate, liminf_scan};
use qnylab::measures::{fourier_decay_exponent, FrequencyGrid};
use qnylab::sequences::{generate, nth_term, orbit_from_spec, required_bits};
use qnylab::{rng, DyadicNumber, Error, Fixed, IndexedPoints, MeasureModel, SequenceSpec};

#[derive(Parser)]
#[command(name = "qnylab", version, about = "Orbits {q_n y}, limsup sets and their dimensions")]
struct Cli {
    /// Root seed for random `y` (overrides the config seed in `experiment run`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiments.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for experiment outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the first terms of a sequence.
    GenSeq {
        #[arg(long)]
        sequence: String,
        #[arg(long)]
        count: usize,
    },
    /// Print x_n = {q_n y} for n = m..=n.
    Orbit {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Discrepancy of the first N points (and of the block N+1..2N when available).
    Discrepancy {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        n: usize,
    },
    /// Smallest circle gap among the first N points.
    Mingap {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        n: usize,
    },
    /// Lebesgue measure of the union of B(x_k, k^-alpha), k = m..=n.
    LimsupMeasure {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Exact Chung–Erdős moments of the balls B(x_k, k^-alpha), k = m..=n.
    ChungErdos {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Box-counting slope over a schedule of block sizes.
    Dimension {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        alpha: f64,
        /// `pow2:lo:hi` or a comma-separated list.
        #[arg(long)]
        schedule: String,
    },
    /// Riesz t-energy of the block measure for N.
    Energy {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
    },
    /// sup over intervals of mu_N(I)/|I|^s for the block measure for N.
    Frostman {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        /// Defaults to 1/alpha.
        #[arg(long)]
        s: Option<f64>,
    },
    /// Fourier transform magnitudes on a frequency grid and the fitted decay.
    FourierDecay {
        /// `lebesgue01`, `cantor3`, or a JSON measure descriptor.
        #[arg(long)]
        model: String,
        /// `powB:lo:hi[:factor]`.
        #[arg(long)]
        xi_grid: String,
        /// Print the full report as JSON instead of CSV rows.
        #[arg(long)]
        json: bool,
    },
    /// Running minima of q·‖qx‖·‖qy − gamma‖ for x = [0; a, a, …].
    Littlewood {
        #[arg(long, default_value_t = 1)]
        x_quotient: u64,
        /// Decimal in [0, 1) or `random`.
        #[arg(long, default_value = "random")]
        y: String,
        #[arg(long, default_value = "1/3")]
        gamma: String,
        #[arg(long, default_value_t = 1_000_000)]
        q_max: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 128)]
        bits: u64,
    },
    /// Config-driven experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// List the available presets.
    ListPresets,
    /// Print a preset's default config.
    ShowPreset { preset: String },
}

/// Where `y` and the sequence come from.
#[derive(Args)]
struct SourceArgs {
    /// `pow2`, `squares`, `smooth23`, or a JSON sequence descriptor.
    #[arg(long)]
    sequence: Option<String>,
    /// Decimal in [0, 1) or `random` (drawn from Lebesgue measure with --seed).
    #[arg(long, default_value = "random")]
    y: String,
    /// Precision of y in bits (default: enough for every orbit point).
    #[arg(long)]
    bits: Option<u64>,
}

/// Orbit points from a CSV file or computed from a sequence and `y`.
#[derive(Args)]
struct OrbitArgs {
    /// CSV with an `x` column (and optionally `n`), as written by `orbit`.
    #[arg(long, conflicts_with = "sequence")]
    points: Option<PathBuf>,
    #[command(flatten)]
    source: SourceArgs,
}

fn parse_sequence(s: &str) -> qnylab::Result<SequenceSpec> {
    match s {
        "pow2" => Ok(SequenceSpec::powers_of_two()),
        "squares" => Ok(SequenceSpec::squares()),
        "smooth23" => Ok(SequenceSpec::Smooth23 { count: None }),
        _ => serde_json::from_str(s)
            .map_err(|e| Error::param("sequence", format!("expected pow2, squares, smooth23 or JSON: {e}"))),
    }
}

fn parse_model(s: &str) -> qnylab::Result<MeasureModel> {
    if s.trim_start().starts_with('{') {
        let m: MeasureModel =
            serde_json::from_str(s).map_err(|e| Error::param("model", format!("bad measure descriptor: {e}")))?;
        m.validate()?;
        Ok(m)
    } else {
        MeasureModel::from_name(s)
    }
}

fn parse_schedule(s: &str) -> qnylab::Result<Vec<usize>> {
    let bad = || Error::param("schedule", format!("expected pow2:lo:hi or a list, got `{s}`"));
    if let Some(rest) = s.strip_prefix("pow2:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        let schedule = Schedule::Pow2 {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
        };
        return schedule.values();
    }
    let values = s
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| bad()))
        .collect::<qnylab::Result<Vec<usize>>>()?;
    Schedule::List { values }.values()
}

impl SourceArgs {
    fn y(&self, bits: u64, seed: u64) -> qnylab::Result<DyadicNumber> {
        if self.y == "random" {
            MeasureModel::lebesgue().sample(&mut rng::stream(seed, 0), bits)
        } else {
            DyadicNumber::parse(&self.y, bits)
        }
    }

    fn orbit(&self, m: usize, n: usize, seed: u64) -> qnylab::Result<IndexedPoints> {
        let spec = parse_sequence(
            self.sequence
                .as_deref()
                .ok_or_else(|| Error::param("sequence", "pass --points or --sequence"))?,
        )?;
        let bits = match self.bits {
            Some(b) => b,
            None => required_bits(&nth_term(&spec, n)?),
        };
        orbit_from_spec(&spec, &self.y(bits, seed)?, m, n)
    }
}

impl OrbitArgs {
    /// Points covering indices `1..=n`.
    fn load(&self, n: usize, seed: u64) -> qnylab::Result<IndexedPoints> {
        match &self.points {
            Some(path) => read_points(path),
            None => self.source.orbit(1, n, seed),
        }
    }
}

fn read_points(path: &Path) -> qnylab::Result<IndexedPoints> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let x_col = headers
        .iter()
        .position(|h| h == "x")
        .ok_or_else(|| Error::param("points", "CSV needs an `x` column"))?;
    let n_col = headers.iter().position(|h| h == "n");
    let mut start = None;
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let x = Fixed::parse_decimal(&rec[x_col])?;
        if !x.is_unit() {
            return Err(Error::param("points", format!("row {} is outside [0, 1)", i + 1)));
        }
        if let Some(c) = n_col {
            let n: usize = rec[c]
                .parse()
                .map_err(|_| Error::param("points", format!("row {} has a bad index", i + 1)))?;
            match start {
                None => start = Some(n),
                Some(s) if n != s + i => {
                    return Err(Error::param("points", "indices must be consecutive"));
                }
                _ => {}
            }
        }
        points.push(x);
    }
    if points.is_empty() {
        return Err(Error::param("points", "file has no rows"));
    }
    Ok(IndexedPoints {
        start: start.unwrap_or(1),
        points,
    })
}

/// Points `x_1..x_n` as a slice, for operations that index from 1.
fn prefix(points: &IndexedPoints, n: usize) -> qnylab::Result<&[Fixed]> {
    if points.start != 1 {
        return Err(Error::param("points", "this operation needs points indexed from 1"));
    }
    if n > points.len() {
        return Err(Error::param("n", format!("only {} points available", points.len())));
    }
    Ok(&points.points)
}

fn print_csv(header: &[&str], rows: &[Vec<String>]) -> qnylab::Result<()> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn run(cli: Cli) -> qnylab::Result<()> {
    let seed = cli.seed.unwrap_or(1);
    match cli.command {
        Command::GenSeq { sequence, count } => {
            let seq = generate(&parse_sequence(&sequence)?, count)?;
            let rows: Vec<Vec<String>> = seq
                .terms()
                .iter()
                .enumerate()
                .map(|(i, q)| vec![(i + 1).to_string(), q.to_string()])
                .collect();
            print_csv(&["n", "q"], &rows)
        }
        Command::Orbit { source, m, n } => {
            let pts = source.orbit(m, n, seed)?;
            let rows: Vec<Vec<String>> = (m..=n)
                .map(|k| vec![k.to_string(), pts.get(k).to_decimal_string()])
                .collect();
            print_csv(&["n", "x"], &rows)
        }
        Command::Discrepancy { orbit, n } => {
            let pts = orbit.load(2 * n, seed)?;
            let xs = prefix(&pts, n)?;
            let d = discrepancy(xs, n)?;
            let block = if xs.len() >= 2 * n {
                num(block_discrepancy(xs, n)?.value)
            } else {
                String::new()
            };
            print_csv(
                &["n", "discrepancy", "block_discrepancy", "witness_left", "witness_right"],
                &[vec![
                    n.to_string(),
                    num(d.value),
                    block,
                    d.witness.left.at.to_decimal_string(),
                    d.witness.right.at.to_decimal_string(),
                ]],
            )
        }
        Command::Mingap { orbit, n } => {
            let pts = orbit.load(n, seed)?;
            let g = min_gap(prefix(&pts, n)?, n)?;
            print_csv(&["n", "min_gap"], &[vec![n.to_string(), g.to_decimal_string()]])
        }
        Command::LimsupMeasure { orbit, alpha, m, n } => {
            let pts = orbit.load(n, seed)?;
            let t = truncated_set(&pts, alpha, m, n)?;
            print_csv(
                &["m", "n", "alpha", "measure", "arcs"],
                &[vec![
                    m.to_string(),
                    n.to_string(),
                    num(alpha),
                    t.measure().to_decimal_string(),
                    t.arcs.arcs().len().to_string(),
                ]],
            )
        }
        Command::ChungErdos { orbit, alpha, m, n } => {
            let pts = orbit.load(n, seed)?;
            let r = chung_erdos(&pts, alpha, m, n)?;
            print_csv(
                &["block_m", "block_n", "S", "C", "bound", "exact_union", "holds"],
                &[vec![
                    m.to_string(),
                    n.to_string(),
                    num(r.s),
                    num(r.c),
                    num(r.bound),
                    num(r.exact_union),
                    r.holds.to_string(),
                ]],
            )
        }
        Command::Dimension { orbit, alpha, schedule } => {
            let ns = parse_schedule(&schedule)?;
            let pts = orbit.load(2 * ns.last().copied().unwrap_or(1), seed)?;
            let est = box_dimension(&pts, alpha, &ns)?;
            let rows: Vec<Vec<String>> = est
                .scales
                .iter()
                .map(|r| vec![r.n.to_string(), r.k.to_string(), num(r.delta), r.count.to_string()])
                .collect();
            print_csv(&["n", "k", "delta", "box_count"], &rows)?;
            eprintln!("slope={} stderr={} residual={}", est.slope, est.slope_stderr, est.residual);
            Ok(())
        }
        Command::Energy { orbit, alpha, n, t } => {
            let pts = orbit.load(2 * n, seed)?;
            let e = energy(&block_measure(&pts, alpha, n)?, t)?;
            print_csv(
                &["n", "alpha", "t", "energy"],
                &[vec![n.to_string(), num(alpha), num(t), num(e)]],
            )
        }
        Command::Frostman { orbit, alpha, n, s } => {
            let pts = orbit.load(2 * n, seed)?;
            let s = s.unwrap_or(1.0 / alpha);
            let r = frostman_exponent(&block_measure(&pts, alpha, n)?, s)?;
            print_csv(
                &["n", "alpha", "s", "sup_ratio", "witness_left", "witness_right"],
                &[vec![
                    n.to_string(),
                    num(alpha),
                    num(s),
                    num(r.sup_ratio),
                    r.witness.0.to_decimal_string(),
                    r.witness.1.to_decimal_string(),
                ]],
            )
        }
        Command::FourierDecay { model, xi_grid, json } => {
            let report = fourier_decay_exponent(&parse_model(&model)?, &FrequencyGrid::parse(&xi_grid)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
                return Ok(());
            }
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| vec![num(r.xi), num(r.re), num(r.im), num(r.magnitude), num(r.band_max)])
                .collect();
            print_csv(&["xi", "re", "im", "magnitude", "band_max"], &rows)?;
            eprintln!("s_fit={} s={} residual={}", report.s_fit, report.s, report.residual);
            Ok(())
        }
        Command::Littlewood {
            x_quotient,
            y,
            gamma,
            q_max,
            eps,
            bits,
        } => {
            let (cf, x) = experiment::constant_quotient_number(x_quotient, bits)?;
            let gamma = experiment::rational_point(&gamma, bits)?;
            let source = SourceArgs {
                sequence: None,
                y,
                bits: Some(bits),
            };
            let records = liminf_scan(&x, &source.y(bits, seed)?, &gamma, q_max, eps)?;
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        r.q.to_string(),
                        num(r.qx_dist),
                        num(r.qy_gamma_dist),
                        num(r.product),
                        num(r.threshold),
                        r.below_threshold.to_string(),
                    ]
                })
                .collect();
            print_csv(
                &["q", "qx_dist", "qy_gamma_dist", "product", "threshold", "below_threshold"],
                &rows,
            )?;
            let cert = bad_certificate(&cf)?;
            eprintln!(
                "max_quotient={} lower_bound={} tail_min_product={}",
                cert.max_quotient, cert.lower_bound, cert.tail_min_product
            );
            Ok(())
        }
        Command::Experiment { action } => match action {
            ExperimentAction::ListPresets => {
                let mut out = io::stdout().lock();
                for p in Preset::ALL {
                    writeln!(out, "{:<22} {}", p.name(), p.description())?;
                }
                Ok(())
            }
            ExperimentAction::ShowPreset { preset } => {
                let p: Preset = preset.parse()?;
                println!("{}", serde_json::to_string_pretty(&p.defaults())?);
                Ok(())
            }
            ExperimentAction::Run { config } => {
                let text = std::fs::read_to_string(&config)?;
                let mut spec = ExperimentSpec::from_json(&text)?;
                if let Some(s) = cli.seed {
                    spec.seed = s;
                }
                if let Some(w) = cli.workers {
                    spec.workers = w;
                }
                spec.validate()?;
                let (report, csv, summary) = experiment::execute(&spec, cli.out_dir.as_deref())?;
                let mut out = io::stdout().lock();
                for c in &report.criteria {
                    writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
                }
                writeln!(out, "csv: {}", csv.display())?;
                writeln!(out, "summary: {}", summary.display())?;
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
