//! Command-line front end: simulate a corpus, ingest a live stream, train
//! and evaluate the classifier, sweep windowing parameters, and run the
//! three health analyses. Every command writes its resolved configuration
//! next to its outputs.

mod config;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use calfsense::csvio::{read_csv, write_csv};
use calfsense::health::{
    activation_envelope, chair_stand_count, gait_analyze, tandem_analyze, EventParams,
};
use calfsense::ingest::serve_ingest;
use calfsense::model::{estimate_baseline, normalize, MotionLabel, Session};
use calfsense::pipeline::{extract_features, run_experiment, train_pipeline, evaluate_indices};
use calfsense::sim::{
    synth_health, synth_session, HealthScenario, HealthTruth,
};
use calfsense::svm::{load_multiclass, save_multiclass};
use calfsense::wire::AdcScale;
use calfsense::NormalizedSeries;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "calfsense", about = "16-channel pressure-sleeve toolkit")]
struct Cli {
    /// Flat key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for every random choice in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file for `ingest`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the synthetic corpus, or one health-test recording.
    Simulate {
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        sets: Option<usize>,
        #[arg(long)]
        trial_s: Option<f64>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        /// Instead of the corpus, write a single scenario recording:
        /// gait | chairstand | tandem.
        #[arg(long)]
        scenario: Option<String>,
        /// Gait stance fraction.
        #[arg(long, default_value_t = 0.6)]
        duty: f64,
        /// Gait cycle length, seconds.
        #[arg(long, default_value_t = 1.2)]
        cycle_s: f64,
        /// Gait cycle count.
        #[arg(long, default_value_t = 40)]
        cycles: usize,
        /// Chair-stand repetitions.
        #[arg(long, default_value_t = 10)]
        stands: usize,
        /// Tandem shake-onset time, seconds.
        #[arg(long)]
        shake_s: Option<f64>,
        /// Tandem balance-loss time, seconds.
        #[arg(long)]
        loss_s: Option<f64>,
        /// Tandem recording length, seconds.
        #[arg(long, default_value_t = 20.0)]
        duration_s: f64,
    },
    /// Listen for one wire-protocol stream and record it to CSV.
    Ingest {
        #[arg(long, default_value = "127.0.0.1:7400")]
        listen: String,
        #[arg(long)]
        vref: Option<f64>,
        #[arg(long)]
        adc_bits: Option<u32>,
    },
    /// Train on a session directory and score the held-out half.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        window_s: Option<f64>,
        #[arg(long)]
        overlap: Option<f64>,
        #[arg(long)]
        fixed: bool,
        #[arg(long)]
        kernel: Option<String>,
    },
    /// Score a session directory with a saved model.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        window_s: Option<f64>,
        #[arg(long)]
        overlap: Option<f64>,
        #[arg(long)]
        fixed: bool,
    },
    /// Macro-recall over the window-length x overlap grid.
    Sweep {
        #[arg(long)]
        data: PathBuf,
    },
    /// Gait-cycle parameters from a recording.
    Gait {
        #[arg(long)]
        input: PathBuf,
    },
    /// 30-second chair-stand count from a recording.
    Chairstand {
        #[arg(long)]
        input: PathBuf,
    },
    /// Tandem-stance shake onset and balance loss from a recording.
    Tandem {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.merge_file(path)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match cli.cmd {
        Cmd::Simulate {
            subjects,
            sets,
            trial_s,
            noise_sigma,
            scenario,
            duty,
            cycle_s,
            cycles,
            stands,
            shake_s,
            loss_s,
            duration_s,
        } => {
            if let Some(v) = subjects {
                cfg.subjects = v;
            }
            if let Some(v) = sets {
                cfg.sets = v;
            }
            if let Some(v) = trial_s {
                cfg.trial_s = v;
            }
            if let Some(v) = noise_sigma {
                cfg.noise_sigma = v;
            }
            let out = cli.out.unwrap_or_else(|| PathBuf::from("dataset"));
            match scenario.as_deref() {
                None => cmd_simulate_corpus(&cfg, &out),
                Some("gait") => cmd_simulate_scenario(
                    &cfg,
                    &out,
                    HealthScenario::Gait {
                        duty,
                        cycle_s,
                        n_cycles: cycles,
                    },
                ),
                Some("chairstand") => {
                    cmd_simulate_scenario(&cfg, &out, HealthScenario::ChairStand { stands })
                }
                Some("tandem") => cmd_simulate_scenario(
                    &cfg,
                    &out,
                    HealthScenario::Tandem {
                        shake_s,
                        loss_s,
                        total_s: duration_s,
                    },
                ),
                Some(other) => bail!("unknown scenario `{other}`"),
            }
        }
        Cmd::Ingest {
            listen,
            vref,
            adc_bits,
        } => {
            if let Some(v) = vref {
                cfg.vref = v;
            }
            if let Some(v) = adc_bits {
                cfg.adc_bits = v;
            }
            let out = cli.out.unwrap_or_else(|| PathBuf::from("ingest.csv"));
            cmd_ingest(&cfg, &listen, &out)
        }
        Cmd::Train {
            data,
            window_s,
            overlap,
            fixed,
            kernel,
        } => {
            apply_window_flags(&mut cfg, window_s, overlap, fixed);
            if let Some(k) = kernel {
                cfg.set("kernel", &k)?;
            }
            let out = cli.out.unwrap_or_else(|| PathBuf::from("run"));
            cmd_train(&cfg, &data, &out)
        }
        Cmd::Evaluate {
            data,
            model,
            window_s,
            overlap,
            fixed,
        } => {
            apply_window_flags(&mut cfg, window_s, overlap, fixed);
            let out = cli.out.unwrap_or_else(|| PathBuf::from("run"));
            cmd_evaluate(&cfg, &data, &model, &out)
        }
        Cmd::Sweep { data } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("run"));
            cmd_sweep(&cfg, &data, &out)
        }
        Cmd::Gait { input } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("run"));
            cmd_gait(&cfg, &input, &out)
        }
        Cmd::Chairstand { input } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("run"));
            cmd_chairstand(&cfg, &input, &out)
        }
        Cmd::Tandem { input } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("run"));
            cmd_tandem(&cfg, &input, &out)
        }
    }
}

fn apply_window_flags(cfg: &mut RunConfig, window_s: Option<f64>, overlap: Option<f64>, fixed: bool) {
    if let Some(v) = window_s {
        cfg.window_s = v;
    }
    if let Some(v) = overlap {
        cfg.overlap = v;
    }
    if fixed {
        cfg.fixed = true;
        cfg.overlap = 0.0;
    }
}

fn prepare_out_dir(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("run_config.txt"), cfg.snapshot())
        .context("writing run_config.txt")?;
    Ok(())
}

fn cmd_simulate_corpus(cfg: &RunConfig, out: &Path) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let sim = cfg.sim_config();
    let mut manifest = String::from("file,subject,motion,set,frames,duration_s\n");
    let mut truth = String::from("file,subject,motion,set,rep_hz,duty,n_bursts,burst_times_s\n");
    for subject in 0..sim.subjects {
        for &motion in &MotionLabel::MOTIONS {
            for set in 1..=sim.sets_per_motion as u8 {
                let (session, t) = synth_session(motion, subject, set, &sim);
                let name = format!("{}_{}_{}.csv", session.subject_id, motion.as_str(), set);
                write_csv(&session, &out.join(&name))
                    .with_context(|| format!("persist stage: writing {name}"))?;
                manifest.push_str(&format!(
                    "{},{},{},{},{},{:.3}\n",
                    name,
                    session.subject_id,
                    motion.as_str(),
                    set,
                    session.frames.len(),
                    session.span_s(),
                ));
                let times: Vec<String> =
                    t.burst_times_s.iter().map(|v| format!("{v:.3}")).collect();
                truth.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    name,
                    session.subject_id,
                    motion.as_str(),
                    set,
                    t.rep_hz,
                    t.duty,
                    t.burst_times_s.len(),
                    times.join(";"),
                ));
            }
        }
    }
    fs::write(out.join("manifest.csv"), manifest).context("writing manifest.csv")?;
    fs::write(out.join("ground_truth.csv"), truth).context("writing ground_truth.csv")?;
    println!(
        "wrote {} sessions ({} subjects x {} motions x {} sets) to {}",
        sim.subjects * MotionLabel::MOTIONS.len() * sim.sets_per_motion,
        sim.subjects,
        MotionLabel::MOTIONS.len(),
        sim.sets_per_motion,
        out.display()
    );
    Ok(())
}

fn cmd_simulate_scenario(cfg: &RunConfig, out: &Path, scenario: HealthScenario) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let sim = cfg.sim_config();
    let (session, truth) = synth_health(scenario, &sim).context("simulate stage")?;
    write_csv(&session, &out.join("recording.csv")).context("persist stage")?;
    let mut t = String::new();
    match truth {
        HealthTruth::Gait {
            duty,
            cycle_s,
            cadence_cpm,
        } => {
            t.push_str(&format!(
                "scenario,gait\nduty,{duty}\ncycle_s,{cycle_s}\ncadence_cpm,{cadence_cpm}\n"
            ));
        }
        HealthTruth::ChairStand { stand_times_s } => {
            let times: Vec<String> = stand_times_s.iter().map(|v| format!("{v:.3}")).collect();
            t.push_str(&format!(
                "scenario,chairstand\ncount,{}\nstand_times_s,{}\n",
                stand_times_s.len(),
                times.join(";")
            ));
        }
        HealthTruth::Tandem { shake_s, loss_s } => {
            t.push_str(&format!(
                "scenario,tandem\nshake_s,{}\nloss_s,{}\n",
                shake_s.map_or("none".into(), |v| v.to_string()),
                loss_s.map_or("none".into(), |v| v.to_string())
            ));
        }
    }
    fs::write(out.join("ground_truth.csv"), t).context("writing ground_truth.csv")?;
    println!("wrote recording.csv to {}", out.display());
    Ok(())
}

fn cmd_ingest(cfg: &RunConfig, listen: &str, out: &Path) -> Result<()> {
    let scale = AdcScale::from_bits(cfg.vref, cfg.adc_bits);
    let mut frames = Vec::new();
    eprintln!("listening on {listen} (one connection, drained to EOF)");
    let stats = serve_ingest(listen, &scale, |frame| frames.push(frame))
        .context("ingest stage")?;
    let session = Session {
        subject_id: "ingest".into(),
        motion: MotionLabel::Rest,
        set_index: 1,
        frames,
        sample_rate_hz: cfg.rate_hz,
    };
    write_csv(&session, out).context("persist stage")?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::write(dir.join("run_config.txt"), cfg.snapshot()).ok();
        }
    }
    println!(
        "received {} frames ({} gaps, {} dropped, {} CRC failures, {} resyncs) -> {}",
        stats.frames_received,
        stats.gaps,
        stats.frames_dropped,
        stats.crc_failures,
        stats.resyncs,
        out.display()
    );
    Ok(())
}

/// Every data CSV in the directory, sorted by name for determinism.
fn load_sessions(dir: &Path) -> Result<Vec<Session>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && !matches!(
                    p.file_name().and_then(|n| n.to_str()),
                    Some("manifest.csv") | Some("ground_truth.csv")
                )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no session CSV files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            read_csv(p).with_context(|| format!("persist stage: reading {}", p.display()))
        })
        .collect()
}

fn write_metrics_report(
    out: &Path,
    confusion: &calfsense::svm::ConfusionMatrix,
    metrics: &calfsense::svm::Metrics,
    extra: &str,
) -> Result<()> {
    let mut report = String::new();
    report.push_str(&format!("macro_recall {:.6}\n", metrics.macro_recall));
    for (class, recall) in &metrics.recall_per_class {
        report.push_str(&format!("recall {} {:.6}\n", class.as_str(), recall));
    }
    report.push_str(extra);
    fs::write(out.join("metrics.txt"), &report).context("writing metrics.txt")?;
    fs::write(out.join("confusion.csv"), confusion.to_csv())
        .context("writing confusion.csv")?;
    print!("{report}");
    Ok(())
}

fn cmd_train(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let sessions = load_sessions(data)?;
    let pipeline_cfg = cfg.pipeline_config()?;
    let features = extract_features(&sessions, &pipeline_cfg.window, pipeline_cfg.baseline_window_s)
        .context("feature stage")?;
    let trained = train_pipeline(&features, &pipeline_cfg).context("train stage")?;
    for w in &trained.split.warnings {
        eprintln!("warning: {w}");
    }
    let mut file = fs::File::create(out.join("model.svm")).context("creating model.svm")?;
    save_multiclass(&trained.model, &mut file).context("writing model.svm")?;
    let (confusion, metrics) =
        evaluate_indices(&trained.model, &features, &trained.split.test)
            .context("evaluate stage")?;
    let extra = format!(
        "n_train {}\nn_test {}\ngamma {}\npca_k {}\n",
        trained.split.train.len(),
        trained.split.test.len(),
        trained.gamma.map_or("-".into(), |g| format!("{g:.6e}")),
        trained.pca_k.map_or("-".into(), |k| k.to_string()),
    );
    write_metrics_report(out, &confusion, &metrics, &extra)
}

fn cmd_evaluate(cfg: &RunConfig, data: &Path, model_path: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let sessions = load_sessions(data)?;
    let file = fs::File::open(model_path)
        .with_context(|| format!("opening {}", model_path.display()))?;
    let model = load_multiclass::<f64, _>(&mut BufReader::new(file)).context("model load stage")?;
    let pipeline_cfg = cfg.pipeline_config()?;
    let features = extract_features(&sessions, &pipeline_cfg.window, pipeline_cfg.baseline_window_s)
        .context("feature stage")?;
    let indices: Vec<usize> = (0..features.len()).collect();
    let (confusion, metrics) =
        evaluate_indices(&model, &features, &indices).context("evaluate stage")?;
    write_metrics_report(out, &confusion, &metrics, &format!("n_test {}\n", features.len()))
}

fn cmd_sweep(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let sessions = load_sessions(data)?;
    let lengths = [2.0, 4.0, 6.0];
    let overlaps = [0.0, 0.25, 0.30, 0.50, 0.60];
    struct Row {
        window_s: f64,
        overlap: f64,
        mode: &'static str,
        n_train: usize,
        n_test: usize,
        macro_recall: f64,
        runtime_s: f64,
    }
    let mut rows = Vec::new();
    for &window_s in &lengths {
        for &overlap in &overlaps {
            let mut c = cfg.clone();
            c.window_s = window_s;
            c.overlap = overlap;
            c.fixed = overlap == 0.0;
            let started = Instant::now();
            let report = run_experiment(&sessions, &c.pipeline_config()?)
                .with_context(|| format!("sweep cell {window_s}s/{overlap}"))?;
            let runtime_s = started.elapsed().as_secs_f64();
            eprintln!(
                "{window_s} s / {overlap}: macro-recall {:.4} ({runtime_s:.1} s)",
                report.metrics.macro_recall
            );
            rows.push(Row {
                window_s,
                overlap,
                mode: if overlap == 0.0 { "fixed" } else { "sliding" },
                n_train: report.n_train,
                n_test: report.n_test,
                macro_recall: report.metrics.macro_recall,
                runtime_s,
            });
        }
    }
    // best = max recall; ties to the smaller window, then smaller overlap
    let mut best = 0usize;
    for (i, row) in rows.iter().enumerate() {
        let b = &rows[best];
        if row.macro_recall > b.macro_recall
            || (row.macro_recall == b.macro_recall
                && (row.window_s, row.overlap) < (b.window_s, b.overlap))
        {
            best = i;
        }
    }
    let mut csv = String::from(
        "window_s,mode,overlap,n_train,n_test,macro_recall,runtime_s,best\n",
    );
    for (i, r) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.3},{}\n",
            r.window_s,
            r.mode,
            r.overlap,
            r.n_train,
            r.n_test,
            r.macro_recall,
            r.runtime_s,
            if i == best { 1 } else { 0 }
        ));
    }
    fs::write(out.join("sweep.csv"), &csv).context("writing sweep.csv")?;
    print!("{csv}");
    Ok(())
}

/// Load a recording and normalize it against its opening rest window.
fn load_normalized(cfg: &RunConfig, input: &Path) -> Result<NormalizedSeries> {
    let session = read_csv(input)
        .with_context(|| format!("persist stage: reading {}", input.display()))?;
    let baseline = estimate_baseline(&session.frames, calfsense::model::DEFAULT_BASELINE_WINDOW_S)
        .context("normalize stage")?;
    let _ = cfg;
    normalize::<f64>(&session, &baseline).context("normalize stage")
}

fn write_envelope_csv(
    out: &Path,
    series: &NormalizedSeries,
    params: &EventParams,
) -> Result<()> {
    let env = activation_envelope(series, params).context("envelope stage")?;
    let mut csv = String::from("t_s,envelope\n");
    for (i, v) in env.iter().enumerate() {
        csv.push_str(&format!("{:.6},{:.9}\n", i as f64 / series.sample_rate_hz, v));
    }
    fs::write(out.join("envelope.csv"), csv).context("writing envelope.csv")?;
    Ok(())
}

fn event_params_block(p: &EventParams) -> String {
    format!(
        "params smooth_s {}\nparams theta_factor {}\nparams release_factor {}\n\
         params min_event_gap_s {}\nparams min_prominence {}\nparams min_peak_gap_s {}\n\
         params chair_window_s {}\nparams loss_factor {}\n",
        p.smooth_s,
        p.theta_factor,
        p.release_factor,
        p.min_event_gap_s,
        p.min_prominence,
        p.min_peak_gap_s,
        p.chair_window_s,
        p.loss_factor
    )
}

/// Rest reference for the event analyses: the opening rest preamble.
const REST_SEGMENT: (f64, f64) = (0.0, 2.0);

fn cmd_gait(cfg: &RunConfig, input: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let series = load_normalized(cfg, input)?;
    let report = gait_analyze(&series, &cfg.events, REST_SEGMENT).context("gait stage")?;
    write_envelope_csv(out, &series, &cfg.events)?;
    let mut text = format!(
        "cycles {}\nstance_pct {:.2}\nswing_pct {:.2}\ncadence_spm {:.2}\ncycle_s {:.3}\n",
        report.cycles.len(),
        report.stance_pct,
        report.swing_pct,
        report.cadence_spm,
        report.cycle_s
    );
    text.push_str(&event_params_block(&cfg.events));
    fs::write(out.join("report.txt"), &text).context("writing report.txt")?;
    let mut cycles = String::from("start_s,stance_s,swing_s\n");
    for c in &report.cycles {
        cycles.push_str(&format!("{:.3},{:.3},{:.3}\n", c.start_s, c.stance_s, c.swing_s));
    }
    fs::write(out.join("cycles.csv"), cycles).context("writing cycles.csv")?;
    print!("{text}");
    Ok(())
}

fn cmd_chairstand(cfg: &RunConfig, input: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let series = load_normalized(cfg, input)?;
    let report = chair_stand_count(&series, &cfg.events).context("chairstand stage")?;
    write_envelope_csv(out, &series, &cfg.events)?;
    let times: Vec<String> = report.stand_times_s.iter().map(|v| format!("{v:.2}")).collect();
    let mut text = format!(
        "count {}\nwindow_s {}\nstand_times_s {}\n",
        report.count,
        report.window_s,
        times.join(";")
    );
    text.push_str(&event_params_block(&cfg.events));
    fs::write(out.join("report.txt"), &text).context("writing report.txt")?;
    print!("{text}");
    Ok(())
}

fn cmd_tandem(cfg: &RunConfig, input: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(cfg, out)?;
    let series = load_normalized(cfg, input)?;
    let report = tandem_analyze(&series, &cfg.events, REST_SEGMENT).context("tandem stage")?;
    write_envelope_csv(out, &series, &cfg.events)?;
    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |t| format!("{t:.2}"));
    let mut text = format!(
        "shake_onset_s {}\nbalance_loss_s {}\nrest_sigma {:.6e}\n",
        fmt(report.shake_onset_s),
        fmt(report.balance_loss_s),
        report.rest_sigma
    );
    text.push_str(&event_params_block(&cfg.events));
    fs::write(out.join("report.txt"), &text).context("writing report.txt")?;
    print!("{text}");
    Ok(())
}
