//! Merged run configuration: library defaults, then a flat key-value config
//! file, then command-line flags. The resolved snapshot is written next to
//! every output so a run can be reproduced from its artifacts.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use calfsense::health::EventParams;
use calfsense::pipeline::{KernelChoice, PipelineConfig};
use calfsense::sim::SimConfig;
use calfsense::svm::TrainConfig;
use calfsense::windowing::WindowSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // windowing
    pub window_s: f64,
    pub overlap: f64,
    pub fixed: bool,
    // classifier
    pub variance_target: f64,
    pub kernel: String,
    /// None selects the data-dependent default.
    pub gamma: Option<f64>,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub seed: u64,
    // simulator
    pub subjects: usize,
    pub sets: usize,
    pub trial_s: f64,
    pub rate_hz: f64,
    pub noise_sigma: f64,
    pub drift_per_s: f64,
    pub subject_scale_sigma: f64,
    // event detection
    pub events: EventParams,
    // acquisition
    pub vref: f64,
    pub adc_bits: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let train = TrainConfig::default();
        RunConfig {
            window_s: 2.0,
            overlap: 0.5,
            fixed: false,
            variance_target: 0.95,
            kernel: "rbf".into(),
            gamma: None,
            c: train.c,
            tol: train.tol,
            max_passes: train.max_passes,
            seed: 0,
            subjects: sim.subjects,
            sets: sim.sets_per_motion,
            trial_s: sim.trial_s,
            rate_hz: sim.sample_rate_hz,
            noise_sigma: sim.noise_sigma,
            drift_per_s: sim.drift_per_s,
            subject_scale_sigma: sim.subject_scale_sigma,
            events: EventParams::default(),
            vref: 3.3,
            adc_bits: 12,
        }
    }
}

impl RunConfig {
    /// Apply one `key = value` setting; unknown keys are an error so typos
    /// in a config file do not silently fall back to defaults.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let ctx = || format!("config key `{key}` value `{value}`");
        macro_rules! num {
            () => {
                value.parse().with_context(ctx)?
            };
        }
        match key {
            "window_s" => self.window_s = num!(),
            "overlap" => self.overlap = num!(),
            "fixed" => self.fixed = num!(),
            "variance_target" => self.variance_target = num!(),
            "kernel" => match value {
                "rbf" | "linear" => self.kernel = value.into(),
                other => bail!("unknown kernel `{other}` (rbf or linear)"),
            },
            "gamma" => {
                self.gamma = if value == "auto" { None } else { Some(num!()) }
            }
            "c" => self.c = num!(),
            "tol" => self.tol = num!(),
            "max_passes" => self.max_passes = num!(),
            "seed" => self.seed = num!(),
            "subjects" => self.subjects = num!(),
            "sets" => self.sets = num!(),
            "trial_s" => self.trial_s = num!(),
            "rate_hz" => self.rate_hz = num!(),
            "noise_sigma" => self.noise_sigma = num!(),
            "drift_per_s" => self.drift_per_s = num!(),
            "subject_scale_sigma" => self.subject_scale_sigma = num!(),
            "smooth_s" => self.events.smooth_s = num!(),
            "theta_factor" => self.events.theta_factor = num!(),
            "release_factor" => self.events.release_factor = num!(),
            "min_event_gap_s" => self.events.min_event_gap_s = num!(),
            "min_prominence" => self.events.min_prominence = num!(),
            "min_peak_gap_s" => self.events.min_peak_gap_s = num!(),
            "chair_window_s" => self.events.chair_window_s = num!(),
            "loss_factor" => self.events.loss_factor = num!(),
            "vref" => self.vref = num!(),
            "adc_bits" => self.adc_bits = num!(),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Read a flat `key = value` file; `#` starts a comment.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected key = value", path.display(), lineno + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    pub fn window_spec(&self) -> Result<WindowSpec> {
        let spec = if self.fixed {
            WindowSpec::fixed(self.window_s)
        } else {
            WindowSpec::sliding(self.window_s, self.overlap)
        };
        spec.context("resolving window spec")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            c: self.c,
            tol: self.tol,
            max_passes: self.max_passes,
            seed: self.seed,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            subjects: self.subjects,
            sets_per_motion: self.sets,
            trial_s: self.trial_s,
            sample_rate_hz: self.rate_hz,
            noise_sigma: self.noise_sigma,
            drift_per_s: self.drift_per_s,
            subject_scale_sigma: self.subject_scale_sigma,
            seed: self.seed,
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            window: self.window_spec()?,
            baseline_window_s: calfsense::model::DEFAULT_BASELINE_WINDOW_S,
            variance_target: if self.variance_target > 0.0 {
                Some(self.variance_target)
            } else {
                None
            },
            kernel: if self.kernel == "linear" {
                KernelChoice::Linear
            } else {
                KernelChoice::Rbf { gamma: self.gamma }
            },
            train: self.train_config(),
            split_seed: self.seed,
        })
    }

    /// The fully resolved configuration in the same `key = value` format the
    /// loader accepts.
    pub fn snapshot(&self) -> String {
        let mut s = String::new();
        let e = &self.events;
        let _ = write!(
            s,
            "window_s = {}\noverlap = {}\nfixed = {}\n\
             variance_target = {}\nkernel = {}\ngamma = {}\nc = {}\ntol = {}\nmax_passes = {}\n\
             seed = {}\nsubjects = {}\nsets = {}\ntrial_s = {}\nrate_hz = {}\n\
             noise_sigma = {}\ndrift_per_s = {}\nsubject_scale_sigma = {}\n\
             smooth_s = {}\ntheta_factor = {}\nrelease_factor = {}\nmin_event_gap_s = {}\n\
             min_prominence = {}\nmin_peak_gap_s = {}\nchair_window_s = {}\nloss_factor = {}\n\
             vref = {}\nadc_bits = {}\n",
            self.window_s,
            self.overlap,
            self.fixed,
            self.variance_target,
            self.kernel,
            self.gamma.map_or("auto".into(), |g| g.to_string()),
            self.c,
            self.tol,
            self.max_passes,
            self.seed,
            self.subjects,
            self.sets,
            self.trial_s,
            self.rate_hz,
            self.noise_sigma,
            self.drift_per_s,
            self.subject_scale_sigma,
            e.smooth_s,
            e.theta_factor,
            e.release_factor,
            e.min_event_gap_s,
            e.min_prominence,
            e.min_peak_gap_s,
            e.chair_window_s,
            e.loss_factor,
            self.vref,
            self.adc_bits,
        );
        s
    }
}
