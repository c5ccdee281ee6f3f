//! Monte Carlo certification of the concentration and PAC-Bayes bounds.
//!
//! Trials run in parallel; each trial reads its own counter-based noise
//! stream and results are merged in trial order, so reports depend only on
//! the config and seed.

use crate::bounds::{
    best_concentration_bound, pacbayes_bound_graph, sheltered_regret_bound, tune_d_geometric, BaseBound, BoundRow,
};
use crate::error::{Error, Result};
use crate::ext;
use crate::graph::{generate_graph, GeneratorSpec, Graph};
use crate::mixing::{
    field_means, phi_value, theoretical_profile, vertex_laws, FieldModel, FieldSampler, MixingProfile, ValueLaw,
    ORACLE_DRAWS,
};
use crate::online::{
    make_ewa, make_sheltered, play_game, regret_of, DistributionOverW, FiniteHypothesisSetting, GameConfig, Learner,
    LossProvenance,
};
use crate::partitions::{
    greedy_power_coloring, rational_to_f64, residue_partition, validate_partition, weight_sum, ColoringStrategy,
    WeightedStableFamily,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;
/// Oracle standard errors are inflated by this factor when used as slack.
const ORACLE_SLACK_SE: f64 = 3.0;
const DEFAULT_MAX_D: u32 = 16;

/// `probs ∝ prior * exp(-beta * n * losses)`. `beta = inf` gives the
/// uniform distribution over the minimizers within the prior's support.
pub fn gibbs_posterior(prior: &DistributionOverW, losses: &[f64], beta: f64, n: usize) -> Result<DistributionOverW> {
    if !(beta >= 0.0) {
        return Err(Error::param(format!("beta must be non-negative, got {beta}")));
    }
    if losses.len() != prior.len() || losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::param("losses must be finite with one entry per hypothesis"));
    }
    let support = || prior.probs().iter().zip(losses).filter(|(p, _)| **p > 0.0);
    let best = support().map(|(_, l)| *l).fold(f64::INFINITY, f64::min);
    if beta.is_infinite() {
        let weights = prior
            .probs()
            .iter()
            .zip(losses)
            .map(|(p, l)| if *p > 0.0 && *l == best { 1.0 } else { 0.0 })
            .collect();
        return DistributionOverW::from_weights(weights);
    }
    if beta == 0.0 {
        return Ok(prior.clone());
    }
    let scale = beta * n as f64;
    let weights = prior
        .probs()
        .iter()
        .zip(losses)
        .map(|(p, l)| p * (-scale * (l - best)).exp())
        .collect();
    DistributionOverW::from_weights(weights)
}

/// `sum p log(p/q)`; infinite when `p` charges a zero of `q`.
pub fn kl_divergence(p: &DistributionOverW, q: &DistributionOverW) -> f64 {
    p.probs()
        .iter()
        .zip(q.probs())
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| if *qi == 0.0 { ext::INFINITE } else { pi * (pi / qi).ln() })
        .sum::<f64>()
        .max(0.0)
}

/// `(lo, hi)` Wilson 95% interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum GraphField {
    Short(String),
    Spec(GeneratorSpec),
}

mod graph_field {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(spec: &GeneratorSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
        spec.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<GeneratorSpec, D::Error> {
        match GraphField::deserialize(d)? {
            GraphField::Short(s) => s.parse().map_err(serde::de::Error::custom),
            GraphField::Spec(spec) => Ok(spec),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProfileSource {
    #[default]
    Theoretical,
    /// A profile asserted by the caller; reports flag it as uncertified.
    Declared { profile: MixingProfile },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PartitionSource {
    /// Residue classes where the generator supports them, greedy otherwise.
    #[default]
    Auto,
    Residue,
    Greedy {
        #[serde(default)]
        strategy: ColoringStrategy,
    },
    Explicit {
        family: WeightedStableFamily,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DSelection {
    /// Concentration: minimize over `1..=16`. Generalization: the smallest
    /// `d` with `phi_d = 0`, or the tuned `d` for geometric profiles.
    #[default]
    Auto,
    Fixed {
        d: u32,
    },
    Minimize {
        max_d: u32,
    },
    Tuned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    /// Number of threshold predictors.
    pub m: usize,
    /// Positive-label interval `[a, b)`; defaults to the upper half of the
    /// value range.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_pair")]
    pub label: Option<(f64, f64)>,
}

mod opt_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair(#[serde(with = "crate::ext")] f64, #[serde(with = "crate::ext")] f64);

    pub fn serialize<S: Serializer>(v: &Option<(f64, f64)>, s: S) -> Result<S::Ok, S::Error> {
        v.map(|(a, b)| Pair(a, b)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<(f64, f64)>, D::Error> {
        Ok(Option::<Pair>::deserialize(d)?.map(|p| (p.0, p.1)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    /// EWA rate for each sub-player; defaults to `sqrt(2 ln(m) W / n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

/// `"uniform"` or an explicit probability vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum PriorSpec {
    #[default]
    Uniform,
    Explicit(Vec<f64>),
}

mod prior_spec {
    use super::PriorSpec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Name(String),
        Probs(Vec<f64>),
    }

    pub fn serialize<S: Serializer>(p: &PriorSpec, s: S) -> Result<S::Ok, S::Error> {
        match p {
            PriorSpec::Uniform => Raw::Name("uniform".into()),
            PriorSpec::Explicit(v) => Raw::Probs(v.clone()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PriorSpec, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Name(n) if n == "uniform" => Ok(PriorSpec::Uniform),
            Raw::Name(n) => Err(serde::de::Error::custom(format!("unknown prior {n:?}"))),
            Raw::Probs(v) => Ok(PriorSpec::Explicit(v)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl Outputs {
    fn is_empty(&self) -> bool {
        self.report.is_none() && self.csv.is_none() && self.svg.is_none()
    }
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(with = "graph_field")]
    pub graph: GeneratorSpec,
    pub field: FieldModel,
    #[serde(default)]
    pub profile: ProfileSource,
    #[serde(default)]
    pub partition: PartitionSource,
    #[serde(default)]
    pub d: DSelection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisSpec>,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default, with = "prior_spec")]
    pub prior: PriorSpec,
    /// Gibbs inverse temperature; the posterior uses `exp(-beta n L_hat)`.
    #[serde(default = "default_beta", with = "ext")]
    pub beta: f64,
    pub delta: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Certification passes when the Wilson upper bound is at most this;
    /// defaults to `delta + 0.02`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Trials on which the sheltered game is also played and audited.
    #[serde(default)]
    pub audit_trials: usize,
    /// Run generalization even when the loss process has no certified profile.
    #[serde(default)]
    pub override_assumption: bool,
    #[serde(default, skip_serializing_if = "Outputs::is_empty")]
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be positive"));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::param("beta must be non-negative"));
        }
        if let ProfileSource::Declared { profile } = &self.profile {
            profile.validate()?;
        }
        if let PartitionSource::Explicit { family } = &self.partition {
            if family.graph_n() != self.graph.order() {
                return Err(Error::Config(format!(
                    "explicit family covers {} vertices, graph has {}",
                    family.graph_n(),
                    self.graph.order()
                )));
            }
            match self.d {
                DSelection::Fixed { d } if d == family.d() => {}
                _ => {
                    return Err(Error::Config(format!(
                        "an explicit family requires d fixed at {}",
                        family.d()
                    )))
                }
            }
        }
        if let Some(h) = &self.hypotheses {
            if h.m == 0 {
                return Err(Error::param("need at least one hypothesis"));
            }
            if let Some((a, b)) = h.label {
                if !(a < b) {
                    return Err(Error::param("label interval needs a < b"));
                }
            }
        }
        Ok(())
    }

    pub fn pass_threshold(&self) -> f64 {
        self.threshold.unwrap_or(self.delta + 0.02)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    /// Quantity the bound controls: the centered mean, or `L(P) - L_hat(P)`.
    pub target: f64,
    #[serde(with = "ext")]
    pub bound: f64,
    pub violated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret_excess: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub trials: usize,
    /// `max |L(P) - L_hat(P) - (R(P) + M)/n|`
    pub max_identity_residual: f64,
    /// `max (regret - sheltered bound)`; non-positive when the bound holds.
    pub max_regret_excess: f64,
    pub shelter_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub kind: String,
    pub graph: String,
    pub field: String,
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    pub wilson: (f64, f64),
    pub threshold: f64,
    pub certified: bool,
    pub profile: MixingProfile,
    pub profile_certified: bool,
    pub d: u32,
    pub weight_sum: f64,
    #[serde(with = "ext")]
    pub phi: f64,
    /// Fixed bound value (concentration only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bound_table: Vec<BoundRow>,
    /// Slack added to every bound to budget Monte Carlo error in the means.
    pub oracle_slack: f64,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSummary>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificationRun {
    pub report: CertificationReport,
    pub outcomes: Vec<TrialOutcome>,
}

impl CertificationRun {
    /// `trial,target,bound,violated`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,target,bound,violated\n");
        for o in &self.outcomes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                o.trial,
                ext::sig7(o.target),
                ext::sig7(o.bound),
                o.violated as u8
            ));
        }
        out
    }

    /// Histogram of `target - bound`; violations lie right of the marker.
    pub fn to_svg(&self) -> String {
        let margins: Vec<f64> = self
            .outcomes
            .iter()
            .filter(|o| o.bound.is_finite())
            .map(|o| o.target - o.bound)
            .collect();
        histogram_svg(&margins, 0.0, &format!("{}: target - bound", self.report.kind))
    }
}

/// A self-contained SVG bar chart with a vertical marker line.
pub fn histogram_svg(values: &[f64], marker: f64, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    const BINS: usize = 40;
    let lo = values.iter().copied().fold(marker, f64::min);
    let hi = values.iter().copied().fold(marker, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut counts = [0usize; BINS];
    for v in values {
        let b = (((v - lo) / span) * BINS as f64).floor() as usize;
        counts[b.min(BINS - 1)] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bar_w = (W - 2.0 * PAD) / BINS as f64;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{PAD}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        escape(title)
    );
    for (i, c) in counts.iter().enumerate() {
        let h = (H - 2.0 * PAD) * *c as f64 / top;
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4a78b0\"/>\n",
            PAD + i as f64 * bar_w,
            H - PAD - h,
            (bar_w - 1.0).max(0.5),
            h
        ));
    }
    let mx = PAD + (marker - lo) / span * (W - 2.0 * PAD);
    svg.push_str(&format!(
        "<line x1=\"{mx:.2}\" y1=\"{PAD}\" x2=\"{mx:.2}\" y2=\"{:.2}\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n",
        H - PAD
    ));
    svg.push_str(&format!(
        "<text x=\"{PAD}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n</svg>\n",
        H - 12.0,
        ext::sig7(lo),
        W - PAD,
        H - 12.0,
        ext::sig7(hi)
    ));
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn make_family(cfg: &ExperimentConfig, g: &Graph, d: u32) -> Result<WeightedStableFamily> {
    let fam = match &cfg.partition {
        PartitionSource::Auto => {
            residue_partition(&cfg.graph, d).or_else(|_| greedy_power_coloring(g, d, ColoringStrategy::Dsatur))?
        }
        PartitionSource::Residue => residue_partition(&cfg.graph, d)?,
        PartitionSource::Greedy { strategy } => greedy_power_coloring(g, d, *strategy)?,
        PartitionSource::Explicit { family } => family.clone(),
    };
    let report = validate_partition(g, &fam)?;
    if !report.valid {
        return Err(Error::Config(format!(
            "partition for d={d} failed validation: {:?}",
            report.violations.first()
        )));
    }
    Ok(fam)
}

fn resolve_profile(cfg: &ExperimentConfig, certified: Result<MixingProfile>) -> Result<(MixingProfile, bool)> {
    match &cfg.profile {
        ProfileSource::Declared { profile } => Ok((profile.clone(), false)),
        ProfileSource::Theoretical => Ok((certified?, true)),
    }
}

struct Prepared {
    graph: Graph,
    notes: Vec<String>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let graph = generate_graph(&cfg.graph)?;
    let mut notes = Vec::new();
    if !cfg.graph.is_vertex_transitive() {
        notes.push("graph is not vertex-transitive; vertex marginals may differ".into());
    }
    Ok(Prepared { graph, notes })
}

fn finish(
    kind: &str,
    cfg: &ExperimentConfig,
    n: usize,
    outcomes: Vec<TrialOutcome>,
    parts: ReportParts,
) -> CertificationRun {
    let violations = outcomes.iter().filter(|o| o.violated).count();
    let wilson = wilson_interval(violations, outcomes.len());
    let threshold = cfg.pass_threshold();
    CertificationRun {
        report: CertificationReport {
            kind: kind.into(),
            graph: cfg.graph.to_string(),
            field: cfg.field.tag(),
            n,
            delta: cfg.delta,
            trials: outcomes.len(),
            violations,
            rate: violations as f64 / outcomes.len() as f64,
            wilson,
            threshold,
            certified: wilson.1 <= threshold,
            profile: parts.profile,
            profile_certified: parts.profile_certified,
            d: parts.d,
            weight_sum: parts.weight_sum,
            phi: parts.phi,
            bound: parts.bound,
            bound_table: parts.bound_table,
            oracle_slack: parts.oracle_slack,
            notes: parts.notes,
            audit: parts.audit,
            seed: cfg.seed,
        },
        outcomes,
    }
}

struct ReportParts {
    profile: MixingProfile,
    profile_certified: bool,
    d: u32,
    weight_sum: f64,
    phi: f64,
    bound: Option<f64>,
    bound_table: Vec<BoundRow>,
    oracle_slack: f64,
    notes: Vec<String>,
    audit: Option<AuditSummary>,
}

/// Checks the concentration inequality for the centered empirical mean.
pub fn verify_concentration(cfg: &ExperimentConfig) -> Result<CertificationRun> {
    let Prepared { graph, mut notes } = prepare(cfg)?;
    let n = graph.order();
    let sampler = FieldSampler::new(&graph, &cfg.field)?;
    let (profile, profile_certified) = resolve_profile(cfg, theoretical_profile(&cfg.field))?;
    if !profile_certified {
        notes.push("mixing profile is declared, not certified".into());
    }

    let candidates: Vec<u32> = match cfg.d {
        DSelection::Fixed { d } => vec![d],
        DSelection::Minimize { max_d } => (1..=max_d.min(n as u32)).collect(),
        DSelection::Auto => (1..=DEFAULT_MAX_D.min(n as u32)).collect(),
        DSelection::Tuned => match profile {
            MixingProfile::Geometric { c, tau } => vec![tune_d_geometric(c, tau, n as u64)?],
            _ => return Err(Error::Config("tuned d needs a geometric profile".into())),
        },
    };
    let fixed = candidates.len() == 1;
    let mut table = Vec::new();
    for d in candidates {
        match make_family(cfg, &graph, d) {
            Ok(fam) => table.push((d, rational_to_f64(&weight_sum(&fam)))),
            Err(e) if fixed => return Err(e),
            Err(_) => {}
        }
    }
    if table.is_empty() {
        return Err(Error::Config("no candidate d admits a partition".into()));
    }
    let range = cfg.field.range_length();
    let best = best_concentration_bound(n as f64, cfg.delta, range, &profile, &table)?;
    let (Some(d), Some(bound)) = (best.d, best.value) else {
        return Err(Error::Config("no candidate d gives a finite bound".into()));
    };

    let means = field_means(&sampler, cfg.seed)?;
    let mean_center: f64 = means.iter().map(|m| m.value).sum::<f64>() / n as f64;
    let mean_se = means.iter().map(|m| m.std_error).sum::<f64>() / n as f64;
    let slack = ORACLE_SLACK_SE * mean_se;
    if slack > 0.0 {
        notes.push("vertex means come from the Monte Carlo oracle; slack added to the bound".into());
    }

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = sampler.sample(cfg.seed, t);
            let target = s.values.iter().sum::<f64>() / n as f64 - mean_center;
            TrialOutcome {
                trial: t,
                target,
                bound,
                violated: target > bound + slack,
                population_loss: None,
                empirical_loss: None,
                kl: None,
                identity_residual: None,
                regret_excess: None,
            }
        })
        .collect();

    Ok(finish(
        "concentration",
        cfg,
        n,
        outcomes,
        ReportParts {
            profile,
            profile_certified,
            d,
            weight_sum: best.weight_sum.unwrap_or(f64::NAN),
            phi: best.phi.unwrap_or(f64::NAN),
            bound: Some(bound),
            bound_table: best.table,
            oracle_slack: slack,
            notes,
            audit: None,
        },
    ))
}

/// Threshold predictors `1{z >= theta_w}` scored against the label
/// `1{a <= z < b}`. Instances are the cells cut out by the sorted
/// breakpoints, so the loss table is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdClass {
    pub thresholds: Vec<f64>,
    pub label: (f64, f64),
    pub breakpoints: Vec<f64>,
    /// `loss[w][cell]`
    pub loss: Vec<Vec<f64>>,
}

impl ThresholdClass {
    pub fn new(range: (f64, f64), m: usize, label: Option<(f64, f64)>) -> Result<Self> {
        let (lo, hi) = range;
        if m == 0 || !(lo < hi) {
            return Err(Error::param("need m >= 1 and a non-degenerate range"));
        }
        let width = hi - lo;
        let thresholds: Vec<f64> = (0..m).map(|w| lo + (w as f64 + 0.5) * width / m as f64).collect();
        let label = label.unwrap_or((lo + width / 2.0, ext::INFINITE));
        let mut breakpoints: Vec<f64> = thresholds.clone();
        breakpoints.extend([label.0, label.1].into_iter().filter(|x| x.is_finite()));
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let cells = breakpoints.len() + 1;
        let pos = |x: f64| breakpoints.partition_point(|&b| b < x);
        // cell c holds z with exactly c breakpoints <= z, so z >= x iff c > pos(x)
        let at_least = |c: usize, x: f64| c > pos(x);
        let loss = thresholds
            .iter()
            .map(|&theta| {
                (0..cells)
                    .map(|c| {
                        let predict = at_least(c, theta);
                        let truth = at_least(c, label.0) && !(label.1.is_finite() && at_least(c, label.1));
                        if predict == truth {
                            0.0
                        } else {
                            1.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(ThresholdClass {
            thresholds,
            label,
            breakpoints,
            loss,
        })
    }

    pub fn cell(&self, z: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= z)
    }

    /// Direct evaluation on a value, for cross-checking the cell table.
    pub fn loss_at(&self, w: usize, z: f64) -> f64 {
        let predict = z >= self.thresholds[w];
        let truth = self.label.0 <= z && z < self.label.1;
        if predict == truth {
            0.0
        } else {
            1.0
        }
    }

    /// Setting with population losses from the law of a single value.
    pub fn setting(&self, law: &ValueLaw) -> Result<FiniteHypothesisSetting> {
        let cells = law.cell_probabilities(&self.breakpoints);
        let population: Vec<f64> = self
            .loss
            .iter()
            .map(|row| row.iter().zip(&cells).map(|(l, p)| l * p.value).sum::<f64>().clamp(0.0, 1.0))
            .collect();
        let provenance = if law.is_exact() {
            LossProvenance::Exact
        } else {
            let draws = match law {
                ValueLaw::Sampled(d) => d.len(),
                _ => ORACLE_DRAWS,
            } as f64;
            let max_std_error = population
                .iter()
                .map(|l| (l * (1.0 - l) / draws).sqrt())
                .fold(0.0, f64::max);
            LossProvenance::Oracle { max_std_error }
        };
        FiniteHypothesisSetting::new(self.loss.clone(), population, provenance)
    }
}

/// Profile of the loss process `L(w) - loss(w, Z_v)`. Losses are functions
/// of a single field value, so they inherit the field's locality; the cap is
/// the loss range.
pub fn loss_profile(model: &FieldModel) -> Result<MixingProfile> {
    match theoretical_profile(model)? {
        MixingProfile::Threshold { d_star, .. } => Ok(MixingProfile::Threshold { d_star, cap: 1.0 }),
        other => Ok(other),
    }
}

fn generalization_d(cfg: &ExperimentConfig, profile: &MixingProfile, n: usize) -> Result<u32> {
    match (&cfg.d, profile) {
        (DSelection::Fixed { d }, _) => Ok(*d),
        (DSelection::Tuned, MixingProfile::Geometric { c, tau }) | (DSelection::Auto, MixingProfile::Geometric { c, tau }) => {
            tune_d_geometric(*c, *tau, n as u64)
        }
        (DSelection::Auto, MixingProfile::Zero) => Ok(1),
        (DSelection::Auto, MixingProfile::Threshold { d_star, .. }) => Ok((d_star + 1).min(n as u32).max(1)),
        (DSelection::Minimize { .. }, _) => Err(Error::Config(
            "the PAC-Bayes bound is evaluated at one d fixed before sampling; use fixed, tuned or auto".into(),
        )),
        _ => Err(Error::Config("cannot choose d for this profile; set it explicitly".into())),
    }
}

/// Checks the graph PAC-Bayes bound for the Gibbs posterior, optionally
/// replaying the sheltered game to audit the regret decomposition.
pub fn run_generalization(cfg: &ExperimentConfig) -> Result<CertificationRun> {
    let Prepared { graph, mut notes } = prepare(cfg)?;
    notes.push("certifies the bound for one fixed algorithm (Gibbs posterior), not uniformity over algorithms".into());
    let n = graph.order();
    let spec = cfg
        .hypotheses
        .as_ref()
        .ok_or_else(|| Error::Config("run-generalization needs a hypotheses section".into()))?;
    let certified = loss_profile(&cfg.field);
    let (profile, profile_certified) = match (&cfg.profile, certified) {
        (ProfileSource::Theoretical, Ok(p)) => (p, true),
        (ProfileSource::Theoretical, Err(e)) => {
            return Err(Error::Config(format!("loss process has no certified profile: {e}")));
        }
        (ProfileSource::Declared { profile }, Ok(_)) => (profile.clone(), false),
        (ProfileSource::Declared { profile }, Err(_)) if cfg.override_assumption => (profile.clone(), false),
        (ProfileSource::Declared { .. }, Err(e)) => {
            return Err(Error::Config(format!(
                "loss process has no certified profile ({e}); set override_assumption to proceed"
            )));
        }
    };
    if !profile_certified {
        notes.push("loss-process profile is declared, not certified".into());
    }

    let sampler = FieldSampler::new(&graph, &cfg.field)?;
    let laws = vertex_laws(&sampler, cfg.seed)?;
    if laws.windows(2).any(|w| !Arc::ptr_eq(&w[0], &w[1])) {
        return Err(Error::Config(
            "vertex values are not identically distributed on this graph; use a vertex-transitive graph".into(),
        ));
    }
    let class = ThresholdClass::new(cfg.field.value_range(), spec.m, spec.label)?;
    let setting = class.setting(&laws[0])?;
    let slack = match setting.provenance() {
        LossProvenance::Exact => 0.0,
        LossProvenance::Oracle { max_std_error } => {
            notes.push("population losses come from the Monte Carlo oracle; slack added to the bound".into());
            // L enters the gap once per side of the comparison
            2.0 * ORACLE_SLACK_SE * max_std_error
        }
    };

    let d = generalization_d(cfg, &profile, n)?;
    let phi = phi_value(&profile, d)?;
    let family = make_family(cfg, &graph, d)?;
    let w = rational_to_f64(&weight_sum(&family));
    let m = spec.m;
    let prior = match &cfg.prior {
        PriorSpec::Uniform => DistributionOverW::uniform(m),
        PriorSpec::Explicit(p) => {
            if p.len() != m {
                return Err(Error::Config(format!("prior has {} entries for {m} hypotheses", p.len())));
            }
            DistributionOverW::new(p.clone())?
        }
    };
    let eta = cfg
        .learner
        .eta
        .unwrap_or_else(|| (2.0 * (m as f64).ln().max(1.0) * w / n as f64).sqrt());
    let game = GameConfig::new(&graph, (0..n).collect(), d, Some(family.clone()))?;

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let s = sampler.sample(cfg.seed, t);
            let data: Vec<usize> = s.values.iter().map(|&z| class.cell(z)).collect();
            let emp = setting.empirical_loss(&data);
            let post = gibbs_posterior(&prior, &emp, cfg.beta, n)?;
            let pop_loss = post.dot(setting.population_loss());
            let emp_loss = post.dot(&emp);
            let kl = kl_divergence(&post, &prior);
            let excess = pacbayes_bound_graph(n as f64, cfg.delta, kl, phi, w)?;
            let target = pop_loss - emp_loss;
            let mut outcome = TrialOutcome {
                trial: t,
                target,
                bound: excess,
                violated: target > excess + slack,
                population_loss: Some(pop_loss),
                empirical_loss: Some(emp_loss),
                kl: Some(kl),
                identity_residual: None,
                regret_excess: None,
            };
            if (t as usize) < cfg.audit_trials {
                let mut learner = make_sheltered(
                    |_| Ok(Box::new(make_ewa(&prior, eta)?) as Box<dyn Learner>),
                    &family,
                    &game,
                )?;
                let transcript = play_game(&setting, &game, &mut learner, &data)?;
                let regret = regret_of(&transcript, &post);
                outcome.identity_residual = Some((target - (regret + transcript.m_total) / n as f64).abs());
                let kl_bound = BaseBound::Ewa { kl, eta };
                outcome.regret_excess = Some(regret - sheltered_regret_bound(w, &kl_bound, n as f64)?);
            }
            Ok(outcome)
        })
        .collect::<Result<Vec<_>>>()?;

    let audit = (cfg.audit_trials > 0).then(|| {
        let audited: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.identity_residual.is_some()).collect();
        AuditSummary {
            trials: audited.len(),
            max_identity_residual: audited.iter().filter_map(|o| o.identity_residual).fold(0.0, f64::max),
            max_regret_excess: audited
                .iter()
                .filter_map(|o| o.regret_excess)
                .fold(f64::NEG_INFINITY, f64::max),
            shelter_violations: 0,
        }
    });

    Ok(finish(
        "generalization",
        cfg,
        n,
        outcomes,
        ReportParts {
            profile,
            profile_certified,
            d,
            weight_sum: w,
            phi,
            bound: None,
            bound_table: Vec::new(),
            oracle_slack: slack,
            notes,
            audit,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{Marginal, Transform};

    #[test]
    fn gibbs_examples() {
        let prior = DistributionOverW::uniform(2);
        assert_eq!(gibbs_posterior(&prior, &[0.2, 0.4], 0.0, 50).unwrap(), prior);
        let p = gibbs_posterior(&prior, &[0.2, 0.4], 0.2, 50).unwrap();
        assert!((p.probs()[0] - 0.880797).abs() < 1e-6);
        assert!((p.probs()[1] - 0.119203).abs() < 1e-6);
        let tie = gibbs_posterior(&DistributionOverW::uniform(3), &[0.3, 0.3, 0.5], ext::INFINITE, 10).unwrap();
        assert_eq!(tie.probs(), &[0.5, 0.5, 0.0]);
        assert!(gibbs_posterior(&prior, &[0.2, 0.4], -1.0, 5).is_err());
    }

    #[test]
    fn kl_examples() {
        let half = DistributionOverW::uniform(2);
        let point = DistributionOverW::point_mass(2, 0);
        assert_eq!(kl_divergence(&half, &half), 0.0);
        assert!((kl_divergence(&point, &half) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence(&half, &point), ext::INFINITE);
    }

    #[test]
    fn wilson_interval_values() {
        let (lo, hi) = wilson_interval(0, 10_000);
        assert_eq!(lo, 0.0);
        assert!((hi - 3.8400e-4).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }

    #[test]
    fn threshold_cells_match_direct_loss() {
        let class = ThresholdClass::new((0.0, 1.0), 8, Some((0.25, 0.75))).unwrap();
        for i in 0..=1000 {
            let z = i as f64 / 1000.0;
            let c = class.cell(z);
            for w in 0..8 {
                assert_eq!(class.loss[w][c], class.loss_at(w, z), "z={z} w={w}");
            }
        }
        let open = ThresholdClass::new((-1.0, 1.0), 5, None).unwrap();
        for i in 0..=400 {
            let z = -1.0 + i as f64 / 200.0;
            for w in 0..5 {
                assert_eq!(open.loss[w][open.cell(z)], open.loss_at(w, z));
            }
        }
    }

    fn base_config(graph: &str, field: FieldModel) -> ExperimentConfig {
        ExperimentConfig {
            graph: graph.parse().unwrap(),
            field,
            profile: ProfileSource::Theoretical,
            partition: PartitionSource::Auto,
            d: DSelection::Auto,
            hypotheses: Some(HypothesisSpec { m: 8, label: None }),
            learner: LearnerSpec::default(),
            prior: PriorSpec::Uniform,
            beta: 1.0,
            delta: 0.05,
            trials: 200,
            seed: 9,
            threshold: None,
            audit_trials: 0,
            override_assumption: false,
            outputs: Outputs::default(),
        }
    }

    fn local(radius: u32) -> FieldModel {
        FieldModel::LocalAverage {
            radius,
            noise: Marginal::Bernoulli { p: 0.5 },
            transform: Transform::Identity,
        }
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{"graph":"cycle:60","field":{"kind":"local_average","radius":1,
            "noise":{"kind":"uniform","lo":0,"hi":1}},"hypotheses":{"m":4},
            "beta":"inf","delta":0.05,"trials":10,"seed":3}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.beta, ext::INFINITE);
        let emitted = cfg.to_json().unwrap();
        let again = ExperimentConfig::from_json(&emitted).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_json().unwrap(), emitted);
        assert!(ExperimentConfig::from_json(r#"{"graph":"path:3","field":{"kind":"iid","marginal":{"kind":"bernoulli","p":0.5}},"delta":0.05,"trials":1,"bogus":1}"#).is_err());
    }

    #[test]
    fn concentration_run_is_deterministic() {
        let cfg = base_config("cycle:60", local(1));
        let a = verify_concentration(&cfg).unwrap();
        let b = verify_concentration(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.report.d, 3);
        assert_eq!(a.report.violations, 0);
    }

    #[test]
    fn distance_weighted_needs_declared_profile() {
        let dw = FieldModel::DistanceWeighted {
            alpha: 0.5,
            noise: Marginal::Uniform { lo: 0.0, hi: 1.0 },
            clip: [0.0, 1.0],
        };
        let mut cfg = base_config("cycle:30", dw);
        assert!(matches!(verify_concentration(&cfg), Err(Error::NoCertifiedProfile(_))));
        cfg.profile = ProfileSource::Declared {
            profile: MixingProfile::Geometric { c: 1.0, tau: 1.0 },
        };
        let run = verify_concentration(&cfg).unwrap();
        assert!(!run.report.profile_certified);
        assert!(matches!(run_generalization(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn generalization_audit_identity() {
        let mut cfg = base_config("cycle:60", local(1));
        cfg.audit_trials = 5;
        cfg.trials = 10;
        let run = run_generalization(&cfg).unwrap();
        let audit = run.report.audit.unwrap();
        assert_eq!(audit.trials, 5);
        assert!(audit.max_identity_residual <= 1e-9, "{audit:?}");
        assert!(audit.max_regret_excess <= 1e-9, "{audit:?}");
        assert_eq!(run.report.d, 3);
        assert_eq!(run.report.weight_sum, 3.0);
    }

    #[test]
    fn non_identical_marginals_are_rejected() {
        let cfg = base_config("path:30", local(1));
        assert!(matches!(run_generalization(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn csv_and_svg_outputs() {
        let mut cfg = base_config("edgeless:50", FieldModel::Iid {
            marginal: Marginal::Uniform { lo: 0.0, hi: 1.0 },
        });
        cfg.trials = 20;
        let run = verify_concentration(&cfg).unwrap();
        let csv = run.to_csv();
        assert!(csv.starts_with("trial,target,bound,violated\n0,"));
        assert_eq!(csv.lines().count(), 21);
        let svg = run.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
