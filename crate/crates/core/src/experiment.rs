//! Gradient-variance ensembles over random circuits, sweeps over qudit
//! dimension and qudit count, slope fits, and CSV/JSON emission.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    build_random_circuit, register_dim, AnsatzLabel, AnsatzMapping, AnsatzTemplate, Observable,
};
use crate::error::{Error, Result};
use crate::gradient::{first_parameter_index, partial_derivative, ParamIndex};
use crate::seed::{master_rng, sample_rng};
use crate::theory::corollary1_variance;

pub const DEFAULT_SAMPLES: usize = 2000;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Cells at or above this depth are expected to behave like 2-designs.
pub const DEEP_LAYERS: usize = 25;
/// `|mean| ≤ ZERO_MEAN_SIGMAS · SE` for deep cells.
pub const ZERO_MEAN_SIGMAS: f64 = 5.0;

/// Exact CSV header.
pub const CSV_HEADER: &str = "template,n,d_prime,L,samples,seed,grad_mean,grad_mean_se,grad_var,grad_var_se,theory_var,ratio";

// Mixed into the master seed for the bootstrap stream.
const BOOTSTRAP_SALT: u64 = 0xB007_5712_A9E5_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ObservableSpec {
    #[default]
    GlobalZeroProjector,
}

impl ObservableSpec {
    pub fn build(&self, n: usize, qudit_dim: usize) -> Result<Observable> {
        match self {
            ObservableSpec::GlobalZeroProjector => Observable::global_zero_projector(n, qudit_dim),
        }
    }
}

/// How the gradient variance is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanMode {
    /// About the sample mean, Bessel corrected.
    #[default]
    Empirical,
    /// About the theoretical mean 0: `Σx² / N`.
    Zero,
}

impl std::str::FromStr for MeanMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(MeanMode::Empirical),
            "zero" => Ok(MeanMode::Zero),
            other => Err(Error::Config(format!(
                "unknown mean mode {other:?} (expected empirical or zero)"
            ))),
        }
    }
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub template: AnsatzLabel,
    pub n: Vec<usize>,
    pub d_prime: Vec<usize>,
    #[serde(rename = "L")]
    pub layers: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default)]
    pub param_index: ParamIndex,
    #[serde(default)]
    pub mean_mode: MeanMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz_mapping: Option<AnsatzMapping>,
}

impl ExperimentConfig {
    pub fn new(
        template: AnsatzLabel,
        n: Vec<usize>,
        d_prime: Vec<usize>,
        layers: Vec<usize>,
    ) -> Self {
        Self {
            template,
            n,
            d_prime,
            layers,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            observable: ObservableSpec::GlobalZeroProjector,
            param_index: first_parameter_index(),
            mean_mode: MeanMode::Empirical,
            ansatz_mapping: None,
        }
    }

    /// n ∈ {3, 4}, L ∈ {10, 15, 20, 25, 30}, d' ∈ {2, …, 6}.
    pub fn default_grid(template: AnsatzLabel) -> Self {
        Self::new(
            template,
            vec![3, 4],
            (2..=6).collect(),
            vec![10, 15, 20, 25, 30],
        )
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.d_prime.is_empty() || self.layers.is_empty() {
            return Err(Error::Config(
                "n, d_prime and L lists must be nonempty".into(),
            ));
        }
        if self.samples < 2 {
            return Err(Error::Config(format!(
                "samples must be at least 2, got {}",
                self.samples
            )));
        }
        if self.n.contains(&0) || self.layers.contains(&0) || self.d_prime.iter().any(|&d| d < 2) {
            return Err(Error::Config("need n >= 1, L >= 1 and d' >= 2".into()));
        }
        if let Some(m) = &self.ansatz_mapping {
            // re-run the constructor checks on deserialized layouts
            let layouts = [
                AnsatzLabel::A,
                AnsatzLabel::B,
                AnsatzLabel::C,
                AnsatzLabel::D,
            ]
            .map(|l| {
                let t = m.template(l);
                (t.entangler, t.ordering)
            });
            AnsatzMapping::new(layouts)?;
        }
        let max_n = *self.n.iter().max().expect("nonempty");
        if self.param_index.qudit == 0 || self.param_index.layer == 0 {
            return Err(Error::Config("param_index is 1-based".into()));
        }
        if self.param_index.qudit > *self.n.iter().min().expect("nonempty")
            || self.param_index.layer > *self.layers.iter().min().expect("nonempty")
        {
            return Err(Error::Config(format!(
                "param_index (q={}, p={}) outside the smallest grid cell",
                self.param_index.qudit, self.param_index.layer
            )));
        }
        for &dp in &self.d_prime {
            register_dim(max_n, dp)?;
        }
        Ok(())
    }

    pub fn template(&self) -> AnsatzTemplate {
        self.ansatz_mapping
            .unwrap_or_default()
            .template(self.template)
    }

    pub fn cell_options(&self) -> CellOptions {
        CellOptions {
            observable: self.observable,
            param_index: self.param_index,
            mean_mode: self.mean_mode,
        }
    }
}

/// Per-cell knobs beyond the grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellOptions {
    pub observable: ObservableSpec,
    pub param_index: ParamIndex,
    pub mean_mode: MeanMode,
}

/// One ensemble estimate of the gradient variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRecord {
    pub template: AnsatzLabel,
    pub n: usize,
    pub d_prime: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub samples: usize,
    pub seed: u64,
    pub grad_mean: f64,
    pub grad_mean_se: f64,
    pub grad_var: f64,
    pub grad_var_se: f64,
    pub theory_var: f64,
    pub ratio: f64,
}

impl VarianceRecord {
    pub fn is_deep(&self) -> bool {
        self.layers >= DEEP_LAYERS
    }

    /// `|mean| ≤ ZERO_MEAN_SIGMAS · SE`; a zero-spread ensemble passes only with mean 0.
    pub fn mean_is_consistent_with_zero(&self) -> bool {
        self.grad_mean.abs() <= ZERO_MEAN_SIGMAS * self.grad_mean_se
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.template,
            self.n,
            self.d_prime,
            self.layers,
            self.samples,
            self.seed,
            sci(self.grad_mean),
            sci(self.grad_mean_se),
            sci(self.grad_var),
            sci(self.grad_var_se),
            sci(self.theory_var),
            sci(self.ratio),
        )
    }
}

/// 10 significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

/// `∂C` at `k` for `samples` random circuits; sample `i` uses stream `i` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_gradients(
    template: AnsatzTemplate,
    n: usize,
    qudit_dim: usize,
    depth: usize,
    samples: usize,
    seed: u64,
    observable: &Observable,
    k: ParamIndex,
) -> Result<Vec<f64>> {
    register_dim(n, qudit_dim)?;
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let circuit = build_random_circuit(template, n, qudit_dim, depth, &mut rng)?;
            partial_derivative(&circuit, observable, k)
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64], mode: MeanMode) -> f64 {
    let n = xs.len() as f64;
    match mode {
        MeanMode::Empirical => {
            let m = mean(xs);
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
        }
        MeanMode::Zero => xs.iter().map(|x| x * x).sum::<f64>() / n,
    }
}

/// Nonparametric bootstrap standard error of the variance estimate.
fn bootstrap_variance_se(xs: &[f64], mode: MeanMode, seed: u64) -> f64 {
    let mut rng = master_rng(seed ^ BOOTSTRAP_SALT);
    let mut resample = vec![0.0; xs.len()];
    let estimates: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for slot in resample.iter_mut() {
                *slot = xs[rng.gen_range(0..xs.len())];
            }
            variance(&resample, mode)
        })
        .collect();
    variance(&estimates, MeanMode::Empirical).sqrt()
}

/// Summary statistics of a gradient sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientStats {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

pub fn gradient_stats(grads: &[f64], mode: MeanMode, seed: u64) -> Result<GradientStats> {
    if grads.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 samples, got {}",
            grads.len()
        )));
    }
    let sample_var = variance(grads, MeanMode::Empirical);
    Ok(GradientStats {
        mean: mean(grads),
        mean_se: (sample_var / grads.len() as f64).sqrt(),
        variance: variance(grads, mode),
        variance_se: bootstrap_variance_se(grads, mode, seed),
    })
}

/// Ensemble estimate for one grid cell.
pub fn estimate_cell(
    template: AnsatzTemplate,
    n: usize,
    qudit_dim: usize,
    depth: usize,
    samples: usize,
    seed: u64,
    options: &CellOptions,
) -> Result<VarianceRecord> {
    if samples < 2 {
        return Err(Error::Config(format!(
            "samples must be at least 2, got {samples}"
        )));
    }
    let observable = options.observable.build(n, qudit_dim)?;
    let grads = ensemble_gradients(
        template,
        n,
        qudit_dim,
        depth,
        samples,
        seed,
        &observable,
        options.param_index,
    )?;
    let stats = gradient_stats(&grads, options.mean_mode, seed)?;
    let theory_var = match options.observable {
        ObservableSpec::GlobalZeroProjector => corollary1_variance(n, qudit_dim)?,
    };
    Ok(VarianceRecord {
        template: template.label,
        n,
        d_prime: qudit_dim,
        layers: depth,
        samples,
        seed,
        grad_mean: stats.mean,
        grad_mean_se: stats.mean_se,
        grad_var: stats.variance,
        grad_var_se: stats.variance_se,
        theory_var,
        ratio: stats.variance / theory_var,
    })
}

/// [`estimate_cell`] with the default template mapping and options.
pub fn estimate_variance_cell(
    template: AnsatzLabel,
    n: usize,
    qudit_dim: usize,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<VarianceRecord> {
    estimate_cell(
        AnsatzTemplate::from_label(template),
        n,
        qudit_dim,
        depth,
        samples,
        seed,
        &CellOptions::default(),
    )
}

/// Statistical anomaly found in a sweep. Reported, never fatal.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum SweepWarning {
    /// Variance failed to drop from `d_prime_low` to `d_prime_high`.
    NonMonotone {
        n: usize,
        #[serde(rename = "L")]
        layers: usize,
        d_prime_low: usize,
        d_prime_high: usize,
        var_low: f64,
        var_high: f64,
        shallow: bool,
    },
    /// Gradient mean more than `ZERO_MEAN_SIGMAS` standard errors from zero.
    NonzeroMean {
        n: usize,
        d_prime: usize,
        #[serde(rename = "L")]
        layers: usize,
        grad_mean: f64,
        grad_mean_se: f64,
        shallow: bool,
    },
}

impl SweepWarning {
    pub fn is_shallow(&self) -> bool {
        match self {
            SweepWarning::NonMonotone { shallow, .. }
            | SweepWarning::NonzeroMean { shallow, .. } => *shallow,
        }
    }
}

impl std::fmt::Display for SweepWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepWarning::NonMonotone { n, layers, d_prime_low, d_prime_high, var_low, var_high, shallow } => write!(
                f,
                "non-monotone variance at n={n}, L={layers}: d'={d_prime_low} -> {var_low:.4e}, d'={d_prime_high} -> {var_high:.4e}{}",
                if *shallow { " (shallow)" } else { "" }
            ),
            SweepWarning::NonzeroMean { n, d_prime, layers, grad_mean, grad_mean_se, shallow } => write!(
                f,
                "nonzero gradient mean at n={n}, d'={d_prime}, L={layers}: {grad_mean:.4e} ± {grad_mean_se:.4e}{}",
                if *shallow { " (shallow)" } else { "" }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub records: Vec<VarianceRecord>,
    pub warnings: Vec<SweepWarning>,
}

/// Records ordered by n, then L, then d', each list in the order given by the config.
fn run_grid(config: &ExperimentConfig) -> Result<Vec<VarianceRecord>> {
    config.validate()?;
    let template = config.template();
    let options = config.cell_options();
    let mut records = Vec::new();
    for &n in &config.n {
        for &l in &config.layers {
            for &dp in &config.d_prime {
                records.push(estimate_cell(
                    template,
                    n,
                    dp,
                    l,
                    config.samples,
                    config.seed,
                    &options,
                )?);
            }
        }
    }
    Ok(records)
}

fn collect_warnings(records: &[VarianceRecord]) -> Vec<SweepWarning> {
    let mut warnings = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<&VarianceRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.layers)).or_default().push(r);
    }
    for ((n, layers), mut group) in groups {
        group.sort_by_key(|r| r.d_prime);
        for w in group.windows(2) {
            if w[1].grad_var >= w[0].grad_var {
                warnings.push(SweepWarning::NonMonotone {
                    n,
                    layers,
                    d_prime_low: w[0].d_prime,
                    d_prime_high: w[1].d_prime,
                    var_low: w[0].grad_var,
                    var_high: w[1].grad_var,
                    shallow: layers < DEEP_LAYERS,
                });
            }
        }
    }
    for r in records {
        if !r.mean_is_consistent_with_zero() {
            warnings.push(SweepWarning::NonzeroMean {
                n: r.n,
                d_prime: r.d_prime,
                layers: r.layers,
                grad_mean: r.grad_mean,
                grad_mean_se: r.grad_mean_se,
                shallow: !r.is_deep(),
            });
        }
    }
    warnings
}

/// One record per (n, d', L) cell, with monotonicity and zero-mean anomalies flagged.
pub fn sweep_dimension(config: &ExperimentConfig) -> Result<SweepReport> {
    let records = run_grid(config)?;
    let warnings = collect_warnings(&records);
    Ok(SweepReport { records, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitAxis {
    LogVarianceVsN,
    LogVarianceVsLogDim,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub axis: FitAxis,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64], axis: FitAxis) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit(format!(
            "need matching x/y with at least 2 points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit(
            "non-finite fit input (non-positive variance?)".into(),
        ));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        axis,
    })
}

fn distinct(values: impl Iterator<Item = usize>) -> usize {
    let mut v: Vec<usize> = values.collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Fit of `ln Var` against `n` at one (d', L).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuditFit {
    pub d_prime: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub fit: SlopeFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuditSweep {
    pub records: Vec<VarianceRecord>,
    pub fits: Vec<QuditFit>,
    pub warnings: Vec<SweepWarning>,
}

/// Records over n at every (d', L), plus a fit of `ln Var` against `n` for each.
pub fn sweep_qudits(config: &ExperimentConfig) -> Result<QuditSweep> {
    if distinct(config.n.iter().copied()) < 3 {
        return Err(Error::Fit(
            "qudit sweep needs at least 3 distinct n values".into(),
        ));
    }
    let records = run_grid(config)?;
    let fits = fit_qudit_decay(&records)?;
    let warnings = collect_warnings(&records);
    Ok(QuditSweep {
        records,
        fits,
        warnings,
    })
}

pub fn fit_qudit_decay(records: &[VarianceRecord]) -> Result<Vec<QuditFit>> {
    let mut groups: BTreeMap<(usize, usize), Vec<&VarianceRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.d_prime, r.layers)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((d_prime, layers), group)| {
            if distinct(group.iter().map(|r| r.n)) < 3 {
                return Err(Error::Fit(format!(
                    "fewer than 3 n values at d'={d_prime}, L={layers}"
                )));
            }
            let xs: Vec<f64> = group.iter().map(|r| r.n as f64).collect();
            let ys: Vec<f64> = group.iter().map(|r| r.grad_var.ln()).collect();
            Ok(QuditFit {
                d_prime,
                layers,
                fit: least_squares(&xs, &ys, FitAxis::LogVarianceVsN)?,
            })
        })
        .collect()
}

/// Log-log fit against d', with the closed-form reference curve for overlay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionFit {
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub fit: SlopeFit,
    pub reference: Vec<(usize, f64)>,
    pub reference_fit: SlopeFit,
}

/// Fit `ln Var` against `ln d'` for records sharing one (n, L).
pub fn loglog_dimension_fit(records: &[VarianceRecord]) -> Result<DimensionFit> {
    let first = records
        .first()
        .ok_or_else(|| Error::Fit("no records".into()))?;
    let (n, layers) = (first.n, first.layers);
    if records.iter().any(|r| r.n != n || r.layers != layers) {
        return Err(Error::Fit("records must share n and L".into()));
    }
    if distinct(records.iter().map(|r| r.d_prime)) < 3 {
        return Err(Error::Fit("need at least 3 distinct d' values".into()));
    }
    let mut sorted: Vec<&VarianceRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.d_prime);
    let xs: Vec<f64> = sorted.iter().map(|r| (r.d_prime as f64).ln()).collect();
    let ys: Vec<f64> = sorted.iter().map(|r| r.grad_var.ln()).collect();
    let fit = least_squares(&xs, &ys, FitAxis::LogVarianceVsLogDim)?;
    let dims: Vec<usize> = sorted.iter().map(|r| r.d_prime).collect();
    let (reference, reference_fit) = reference_curve(n, &dims)?;
    Ok(DimensionFit {
        n,
        layers,
        fit,
        reference,
        reference_fit,
    })
}

/// Closed-form variance over `dims` and its log-log fit.
pub fn reference_curve(n: usize, dims: &[usize]) -> Result<(Vec<(usize, f64)>, SlopeFit)> {
    let reference = crate::theory::amplification_curve(n, dims)?;
    let xs: Vec<f64> = reference.iter().map(|(d, _)| (*d as f64).ln()).collect();
    let ys: Vec<f64> = reference.iter().map(|(_, v)| v.ln()).collect();
    let fit = least_squares(&xs, &ys, FitAxis::LogVarianceVsLogDim)?;
    Ok((reference, fit))
}

pub fn write_csv<W: Write>(records: &[VarianceRecord], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn to_csv(records: &[VarianceRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

#[derive(Serialize)]
struct JsonOutput<'a> {
    config: &'a ExperimentConfig,
    records: &'a [VarianceRecord],
}

pub fn write_json<W: Write>(
    config: &ExperimentConfig,
    records: &[VarianceRecord],
    mut out: W,
) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &JsonOutput { config, records })?;
    writeln!(out)?;
    Ok(())
}
