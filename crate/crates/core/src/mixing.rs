//! Mixing profiles and graph-indexed field models.
//!
//! A field assigns a bounded value to every vertex. Local-average fields
//! have a certified threshold profile: `X_v` is a function of the noise in
//! the radius-`r` ball around `v`, so variables at distance `>= 2r + 1` are
//! exactly independent of it.

use crate::error::{Error, Result};
use crate::ext;
use crate::graph::{Bfs, DistanceCache, Graph};
use crate::rng::{mix, CounterStream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest number of noise configurations enumerated exactly.
pub const MAX_EXACT_CONFIGURATIONS: u128 = 1 << 20;
/// Draws used by the Monte Carlo mean oracle.
pub const ORACLE_DRAWS: usize = 1_000_000;
/// Pair cap for the covariance diagnostic.
pub const MAX_DIAGNOSTIC_PAIRS: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawProfile", into = "RawProfile")]
pub enum MixingProfile {
    Zero,
    /// `cap` for `d <= d_star`, zero beyond.
    Threshold { d_star: u32, cap: f64 },
    /// `c * exp(-d / tau)`
    Geometric { c: f64, tau: f64 },
    /// `c * d^(-r)`
    Algebraic { c: f64, r: f64 },
    /// Explicit `phi_1, phi_2, ...`; the last entry repeats beyond the end.
    Table { values: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawProfile {
    Zero,
    Threshold {
        d_star: u32,
        #[serde(with = "ext")]
        cap: f64,
    },
    Geometric {
        c: f64,
        tau: f64,
    },
    Algebraic {
        c: f64,
        r: f64,
    },
    Table {
        #[serde(with = "ext::vec")]
        values: Vec<f64>,
    },
}

impl TryFrom<RawProfile> for MixingProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        let p = match raw {
            RawProfile::Zero => MixingProfile::Zero,
            RawProfile::Threshold { d_star, cap } => MixingProfile::Threshold { d_star, cap },
            RawProfile::Geometric { c, tau } => MixingProfile::Geometric { c, tau },
            RawProfile::Algebraic { c, r } => MixingProfile::Algebraic { c, r },
            RawProfile::Table { values } => MixingProfile::Table { values },
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<MixingProfile> for RawProfile {
    fn from(p: MixingProfile) -> Self {
        match p {
            MixingProfile::Zero => RawProfile::Zero,
            MixingProfile::Threshold { d_star, cap } => RawProfile::Threshold { d_star, cap },
            MixingProfile::Geometric { c, tau } => RawProfile::Geometric { c, tau },
            MixingProfile::Algebraic { c, r } => RawProfile::Algebraic { c, r },
            MixingProfile::Table { values } => RawProfile::Table { values },
        }
    }
}

impl MixingProfile {
    pub fn table(values: Vec<f64>) -> Result<Self> {
        let p = MixingProfile::Table { values };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be positive and finite, got {x}")))
            }
        };
        match self {
            MixingProfile::Zero => Ok(()),
            MixingProfile::Threshold { cap, .. } => {
                if cap.is_nan() || *cap < 0.0 {
                    Err(Error::param(format!("threshold cap must be non-negative, got {cap}")))
                } else {
                    Ok(())
                }
            }
            MixingProfile::Geometric { c, tau } => {
                positive("C", *c)?;
                positive("tau", *tau)
            }
            MixingProfile::Algebraic { c, r } => {
                positive("C", *c)?;
                positive("r", *r)
            }
            MixingProfile::Table { values } => {
                if values.is_empty() {
                    return Err(Error::param("profile table is empty"));
                }
                if values.iter().any(|v| v.is_nan() || *v < 0.0) {
                    return Err(Error::param("profile table has a negative entry"));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::param("profile table is not non-increasing"));
                }
                Ok(())
            }
        }
    }
}

/// `phi_d`; may be `+inf` for threshold profiles with an infinite cap.
pub fn phi_value(profile: &MixingProfile, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::param("d must be at least 1"));
    }
    let x = d as f64;
    Ok(match profile {
        MixingProfile::Zero => 0.0,
        MixingProfile::Threshold { d_star, cap } => {
            if d <= *d_star {
                *cap
            } else {
                0.0
            }
        }
        MixingProfile::Geometric { c, tau } => c * (-x / tau).exp(),
        MixingProfile::Algebraic { c, r } => c * x.powf(-r),
        MixingProfile::Table { values } => values[(d as usize - 1).min(values.len() - 1)],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Bernoulli { p: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        match self {
            Marginal::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            Marginal::Uniform { lo, hi } => Err(Error::param(format!("bad uniform range [{lo}, {hi}]"))),
            Marginal::Bernoulli { p } if (0.0..=1.0).contains(p) => Ok(()),
            Marginal::Bernoulli { p } => Err(Error::param(format!("bernoulli p={p} outside [0,1]"))),
            Marginal::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::param("discrete marginal needs matching non-empty values and probs"));
                }
                if values.iter().any(|v| !v.is_finite()) || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::param("discrete marginal has invalid entries"));
                }
                if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::param("discrete probabilities must sum to 1"));
                }
                Ok(())
            }
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            Marginal::Uniform { lo, hi } => (*lo, *hi),
            Marginal::Bernoulli { .. } => (0.0, 1.0),
            Marginal::Discrete { values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Bernoulli { p } => *p,
            Marginal::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }

    /// Inverse-CDF draw from a unit uniform.
    pub fn draw(&self, u: f64) -> f64 {
        match self {
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * u,
            Marginal::Bernoulli { p } => {
                if u < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Marginal::Discrete { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
        }
    }

    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Marginal::Uniform { .. } => None,
            Marginal::Bernoulli { p } => Some(vec![(0.0, 1.0 - p), (1.0, *p)]),
            Marginal::Discrete { values, probs } => Some(values.iter().copied().zip(probs.iter().copied()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    Affine {
        scale: f64,
        shift: f64,
    },
    /// `1{x >= threshold}`
    Indicator {
        threshold: f64,
    },
}

impl Transform {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Affine { scale, shift } => scale * x + shift,
            Transform::Indicator { threshold } => {
                if x >= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn image(&self, (lo, hi): (f64, f64)) -> (f64, f64) {
        match self {
            Transform::Identity => (lo, hi),
            Transform::Affine { .. } => {
                let (a, b) = (self.apply(lo), self.apply(hi));
                (a.min(b), a.max(b))
            }
            Transform::Indicator { .. } => (0.0, 1.0),
        }
    }

    fn is_affine(&self) -> bool {
        !matches!(self, Transform::Indicator { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldModel {
    Iid {
        marginal: Marginal,
    },
    /// `X_v = transform(mean of noise over the radius ball around v)`.
    LocalAverage {
        radius: u32,
        noise: Marginal,
        #[serde(default)]
        transform: Transform,
    },
    /// `X_v = clip(Σ_u alpha^dist(u,v) ξ_u / Σ_u alpha^dist(u,v))`.
    DistanceWeighted {
        alpha: f64,
        noise: Marginal,
        clip: [f64; 2],
    },
}

impl FieldModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldModel::Iid { marginal } => marginal.validate(),
            FieldModel::LocalAverage { noise, transform, .. } => {
                noise.validate()?;
                if let Transform::Affine { scale, shift } = transform {
                    if !scale.is_finite() || !shift.is_finite() {
                        return Err(Error::param("affine transform must be finite"));
                    }
                }
                Ok(())
            }
            FieldModel::DistanceWeighted { alpha, noise, clip } => {
                noise.validate()?;
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::param(format!("decay alpha={alpha} outside (0,1)")));
                }
                if !(clip[0] < clip[1]) {
                    return Err(Error::param("clip interval must have lo < hi"));
                }
                Ok(())
            }
        }
    }

    /// Interval every sampled value lies in.
    pub fn value_range(&self) -> (f64, f64) {
        match self {
            FieldModel::Iid { marginal } => marginal.range(),
            FieldModel::LocalAverage { noise, transform, .. } => transform.image(noise.range()),
            FieldModel::DistanceWeighted { clip, .. } => (clip[0], clip[1]),
        }
    }

    pub fn range_length(&self) -> f64 {
        let (lo, hi) = self.value_range();
        hi - lo
    }

    pub fn tag(&self) -> String {
        match self {
            FieldModel::Iid { .. } => "iid".into(),
            FieldModel::LocalAverage { radius, .. } => format!("local_average(r={radius})"),
            FieldModel::DistanceWeighted { alpha, .. } => format!("distance_weighted(alpha={alpha})"),
        }
    }

    fn noise(&self) -> &Marginal {
        match self {
            FieldModel::Iid { marginal } => marginal,
            FieldModel::LocalAverage { noise, .. } | FieldModel::DistanceWeighted { noise, .. } => noise,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub values: Vec<f64>,
    pub model_tag: String,
    pub seed: u64,
    pub trial: u64,
}

impl Sample {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,value\n");
        for (v, x) in self.values.iter().enumerate() {
            out.push_str(&format!("{v},{x:?}\n"));
        }
        out
    }
}

/// Weights below this are dropped from distance-weighted sums.
const NEGLIGIBLE_WEIGHT: f64 = 1e-15;

/// A field model bound to a graph with precomputed neighborhoods.
#[derive(Debug)]
pub struct FieldSampler<'g> {
    graph: &'g Graph,
    model: FieldModel,
    /// Per vertex: contributing noise sites and their weights.
    neighborhoods: Vec<Vec<(usize, f64)>>,
    range: (f64, f64),
}

impl<'g> FieldSampler<'g> {
    pub fn new(graph: &'g Graph, model: &FieldModel) -> Result<Self> {
        model.validate()?;
        let n = graph.order();
        let mut bfs = Bfs::new(n);
        let neighborhoods = match model {
            FieldModel::Iid { .. } => Vec::new(),
            FieldModel::LocalAverage { radius, .. } => (0..n)
                .map(|v| bfs.ball(graph, v, *radius).into_iter().map(|(u, _)| (u, 1.0)).collect())
                .collect(),
            FieldModel::DistanceWeighted { alpha, .. } => {
                let reach = (NEGLIGIBLE_WEIGHT.ln() / alpha.ln()).floor() as u32;
                (0..n)
                    .map(|v| {
                        let ball = bfs.ball(graph, v, reach);
                        let total: f64 = ball.iter().map(|&(_, d)| alpha.powi(d as i32)).sum();
                        ball.into_iter().map(|(u, d)| (u, alpha.powi(d as i32) / total)).collect()
                    })
                    .collect()
            }
        };
        Ok(FieldSampler {
            graph,
            model: model.clone(),
            neighborhoods,
            range: model.value_range(),
        })
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    /// Number of noise sites feeding each vertex.
    pub fn support_sizes(&self) -> Vec<usize> {
        match self.model {
            FieldModel::Iid { .. } => vec![1; self.graph.order()],
            _ => self.neighborhoods.iter().map(Vec::len).collect(),
        }
    }

    /// Per-vertex noise for `(seed, trial)`; vertex `v` reads slot `v`.
    pub fn noise(&self, seed: u64, trial: u64) -> Vec<f64> {
        let marginal = self.model.noise();
        let mut stream = CounterStream::new(seed, trial);
        (0..self.graph.order()).map(|_| marginal.draw(stream.next_unit())).collect()
    }

    /// Field values for an explicit noise vector.
    pub fn evaluate(&self, noise: &[f64]) -> Vec<f64> {
        assert_eq!(noise.len(), self.graph.order(), "noise length must equal graph order");
        let (lo, hi) = self.range;
        let values: Vec<f64> = match &self.model {
            FieldModel::Iid { .. } => noise.to_vec(),
            FieldModel::LocalAverage { transform, .. } => self
                .neighborhoods
                .iter()
                .map(|ball| {
                    let sum: f64 = ball.iter().map(|&(u, _)| noise[u]).sum();
                    transform.apply(sum / ball.len() as f64)
                })
                .collect(),
            FieldModel::DistanceWeighted { .. } => self
                .neighborhoods
                .iter()
                .map(|ball| ball.iter().map(|&(u, w)| w * noise[u]).sum())
                .collect(),
        };
        // rounding in the averages can leave the range by an ulp
        values
            .into_iter()
            .map(|x| {
                assert!(x >= lo - 1e-9 && x <= hi + 1e-9, "value {x} outside [{lo}, {hi}]");
                x.clamp(lo, hi)
            })
            .collect()
    }

    pub fn sample(&self, seed: u64, trial: u64) -> Sample {
        Sample {
            values: self.evaluate(&self.noise(seed, trial)),
            model_tag: self.model.tag(),
            seed,
            trial,
        }
    }
}

pub fn sample_field(g: &Graph, model: &FieldModel, seed: u64, trial: u64) -> Result<Sample> {
    Ok(FieldSampler::new(g, model)?.sample(seed, trial))
}

/// Certified profile of the centered field.
pub fn theoretical_profile(model: &FieldModel) -> Result<MixingProfile> {
    model.validate()?;
    match model {
        FieldModel::Iid { .. } | FieldModel::LocalAverage { radius: 0, .. } => Ok(MixingProfile::Zero),
        FieldModel::LocalAverage { radius, .. } => Ok(MixingProfile::Threshold {
            d_star: 2 * radius,
            cap: model.range_length(),
        }),
        FieldModel::DistanceWeighted { .. } => Err(Error::NoCertifiedProfile(model.tag())),
    }
}

/// A number with its Monte Carlo standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            exact: true,
        }
    }
}

/// Distribution of a single field value.
#[derive(Clone, Debug, PartialEq)]
pub enum ValueLaw {
    Atoms(Vec<(f64, f64)>),
    Uniform { lo: f64, hi: f64 },
    Sampled(Vec<f64>),
}

impl ValueLaw {
    pub fn is_exact(&self) -> bool {
        !matches!(self, ValueLaw::Sampled(_))
    }

    pub fn mean(&self) -> Estimate {
        match self {
            ValueLaw::Atoms(atoms) => Estimate::exact(atoms.iter().map(|(v, p)| v * p).sum()),
            ValueLaw::Uniform { lo, hi } => Estimate::exact(0.5 * (lo + hi)),
            ValueLaw::Sampled(draws) => mc_estimate(draws.iter().copied()),
        }
    }

    /// Probability of each cell `{z : #{b in breakpoints : b <= z} = i}`,
    /// `i = 0..=breakpoints.len()`. Breakpoints must be sorted.
    pub fn cell_probabilities(&self, breakpoints: &[f64]) -> Vec<Estimate> {
        let cells = breakpoints.len() + 1;
        let cell = |z: f64| breakpoints.partition_point(|&b| b <= z);
        match self {
            ValueLaw::Atoms(atoms) => {
                let mut p = vec![0.0; cells];
                for &(v, q) in atoms {
                    p[cell(v)] += q;
                }
                p.into_iter().map(Estimate::exact).collect()
            }
            ValueLaw::Uniform { lo, hi } => {
                let mut edges = vec![*lo];
                edges.extend(breakpoints.iter().map(|b| b.clamp(*lo, *hi)));
                edges.push(*hi);
                edges.windows(2).map(|w| Estimate::exact((w[1] - w[0]) / (hi - lo))).collect()
            }
            ValueLaw::Sampled(draws) => {
                let mut counts = vec![0usize; cells];
                for &z in draws {
                    counts[cell(z)] += 1;
                }
                let t = draws.len() as f64;
                counts
                    .into_iter()
                    .map(|c| {
                        let p = c as f64 / t;
                        Estimate {
                            value: p,
                            std_error: (p * (1.0 - p) / t).sqrt(),
                            exact: false,
                        }
                    })
                    .collect()
            }
        }
    }
}

fn mc_estimate(draws: impl Iterator<Item = f64>) -> Estimate {
    let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for x in draws {
        n += 1.0;
        let delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    Estimate {
        value: mean,
        std_error: (m2 / (n - 1.0) / n).sqrt(),
        exact: false,
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Calls `f` with every count vector of length `parts` summing to `total`.
fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(remaining: usize, slot: usize, counts: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slot + 1 == counts.len() {
            counts[slot] = remaining;
            f(counts);
            return;
        }
        for c in 0..=remaining {
            counts[slot] = c;
            rec(remaining - c, slot + 1, counts, f);
        }
    }
    let mut counts = vec![0; parts];
    rec(total, 0, &mut counts, f);
}

/// Law of `transform(mean of k iid noise draws)`: exact when the noise is
/// discrete and the configurations (grouped by count vector) number at most
/// [`MAX_EXACT_CONFIGURATIONS`], or when the result is uniform; otherwise a
/// seeded [`ORACLE_DRAWS`]-sample Monte Carlo law.
pub fn local_mean_law(noise: &Marginal, transform: &Transform, k: usize, seed: u64) -> ValueLaw {
    assert!(k >= 1);
    if let Some(atoms) = noise.atoms() {
        let q = atoms.len();
        if binomial((k + q - 1) as u128, (q - 1) as u128) <= MAX_EXACT_CONFIGURATIONS {
            let ln_fact: Vec<f64> = (0..=k)
                .scan(0.0, |acc, i| {
                    if i > 0 {
                        *acc += (i as f64).ln();
                    }
                    Some(*acc)
                })
                .collect();
            let mut merged: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
            for_each_composition(k, q, &mut |counts| {
                let mut ln_p = ln_fact[k];
                let mut sum = 0.0;
                for (c, (v, p)) in counts.iter().zip(&atoms) {
                    if *c > 0 {
                        if *p == 0.0 {
                            return;
                        }
                        ln_p += *c as f64 * p.ln() - ln_fact[*c];
                        sum += *c as f64 * v;
                    }
                }
                let value = transform.apply(sum / k as f64);
                let entry = merged.entry(value.to_bits()).or_insert((value, 0.0));
                entry.1 += ln_p.exp();
            });
            return ValueLaw::Atoms(merged.into_values().collect());
        }
    }
    if let (Marginal::Uniform { lo, hi }, 1) = (noise, k) {
        match transform {
            Transform::Identity => return ValueLaw::Uniform { lo: *lo, hi: *hi },
            Transform::Affine { scale, .. } if *scale != 0.0 => {
                let (a, b) = transform.image((*lo, *hi));
                return ValueLaw::Uniform { lo: a, hi: b };
            }
            Transform::Affine { shift, .. } => return ValueLaw::Atoms(vec![(*shift, 1.0)]),
            Transform::Indicator { threshold } => {
                let p = ((hi - threshold) / (hi - lo)).clamp(0.0, 1.0);
                return ValueLaw::Atoms(vec![(0.0, 1.0 - p), (1.0, p)]);
            }
        }
    }
    let mut stream = CounterStream::new(mix(&[seed, 0x6f72_6163_6c65, k as u64]), 0);
    let draws = (0..ORACLE_DRAWS)
        .map(|_| {
            let sum: f64 = (0..k).map(|_| noise.draw(stream.next_unit())).sum();
            transform.apply(sum / k as f64)
        })
        .collect();
    ValueLaw::Sampled(draws)
}

/// Law of each vertex value, shared between vertices with the same
/// neighborhood size.
pub fn vertex_laws(sampler: &FieldSampler, seed: u64) -> Result<Vec<std::sync::Arc<ValueLaw>>> {
    let sizes = sampler.support_sizes();
    let mut by_size: BTreeMap<usize, std::sync::Arc<ValueLaw>> = BTreeMap::new();
    match sampler.model() {
        FieldModel::Iid { marginal } => {
            let law = std::sync::Arc::new(local_mean_law(marginal, &Transform::Identity, 1, seed));
            return Ok(vec![law; sizes.len()]);
        }
        FieldModel::LocalAverage { noise, transform, .. } => {
            for &k in &sizes {
                by_size
                    .entry(k)
                    .or_insert_with(|| std::sync::Arc::new(local_mean_law(noise, transform, k, seed)));
            }
        }
        FieldModel::DistanceWeighted { .. } => {
            return Err(Error::Config(
                "distance_weighted fields have vertex-specific laws; no exact or oracle law is available".into(),
            ));
        }
    }
    Ok(sizes.iter().map(|k| by_size[k].clone()).collect())
}

/// Per-vertex means used to center the field.
pub fn field_means(sampler: &FieldSampler, seed: u64) -> Result<Vec<Estimate>> {
    match sampler.model() {
        FieldModel::LocalAverage { noise, transform, .. } if transform.is_affine() => {
            let m = transform.apply(noise.mean());
            Ok(vec![Estimate::exact(m); sampler.graph().order()])
        }
        FieldModel::DistanceWeighted { noise, clip, .. } => {
            let (lo, hi) = noise.range();
            if clip[0] <= lo && hi <= clip[1] {
                // normalized weights: the clip never binds
                Ok(vec![Estimate::exact(noise.mean()); sampler.graph().order()])
            } else {
                Err(Error::Config("clipped distance_weighted field has no exact mean".into()))
            }
        }
        _ => Ok(vertex_laws(sampler, seed)?.iter().map(|law| law.mean()).collect()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceDiagnostic {
    NoQualifyingPair,
    Estimate {
        /// Largest absolute empirical covariance over the examined pairs.
        max_abs_cov: f64,
        /// Standard error of the covariance estimate for that pair.
        std_error: f64,
        /// Largest `|cov| / std_error` over the examined pairs.
        max_z: f64,
        pair: (usize, usize),
        pairs_examined: usize,
        qualifying_pairs: usize,
        trials: usize,
    },
}

/// Maximum absolute empirical covariance between vertex pairs at distance
/// `>= d`, over at most [`MAX_DIAGNOSTIC_PAIRS`] pairs (reservoir-sampled
/// when more qualify).
pub fn empirical_max_cov(
    g: &Graph,
    model: &FieldModel,
    d: u32,
    trials: usize,
    seed: u64,
) -> Result<CovarianceDiagnostic> {
    if trials < 100 {
        return Err(Error::param(format!("need at least 100 trials, got {trials}")));
    }
    if d == 0 {
        return Err(Error::param("d must be at least 1"));
    }
    let sampler = FieldSampler::new(g, model)?;
    let pairs = qualifying_pairs(g, d, seed)?;
    let (pairs, qualifying) = match pairs {
        Some(p) => p,
        None => return Ok(CovarianceDiagnostic::NoQualifyingPair),
    };

    let mut needed: Vec<usize> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    needed.sort_unstable();
    needed.dedup();
    let column: BTreeMap<usize, usize> = needed.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let rows: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = sampler.sample(seed, t);
            needed.iter().map(|&v| s.values[v]).collect()
        })
        .collect();

    let tf = trials as f64;
    let means: Vec<f64> = (0..needed.len())
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / tf)
        .collect();

    let mut best = (0.0f64, 0.0f64, (0, 0));
    let mut max_z = 0.0f64;
    for &(u, v) in &pairs {
        let (cu, cv) = (column[&u], column[&v]);
        let products: Vec<f64> = rows.iter().map(|r| (r[cu] - means[cu]) * (r[cv] - means[cv])).collect();
        let cov = products.iter().sum::<f64>() / (tf - 1.0);
        let mean_p = products.iter().sum::<f64>() / tf;
        let var_p = products.iter().map(|p| (p - mean_p).powi(2)).sum::<f64>() / (tf - 1.0);
        let se = (var_p / tf).sqrt();
        if cov.abs() > best.0 || best.2 == (0, 0) {
            best = (cov.abs(), se, (u, v));
        }
        if se > 0.0 {
            max_z = max_z.max(cov.abs() / se);
        }
    }
    Ok(CovarianceDiagnostic::Estimate {
        max_abs_cov: best.0,
        std_error: best.1,
        max_z,
        pair: best.2,
        pairs_examined: pairs.len(),
        qualifying_pairs: qualifying,
        trials,
    })
}

type PairSample = (Vec<(usize, usize)>, usize);

fn qualifying_pairs(g: &Graph, d: u32, seed: u64) -> Result<Option<PairSample>> {
    let cache = DistanceCache::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x7061_6972]));
    let mut reservoir = Vec::with_capacity(MAX_DIAGNOSTIC_PAIRS);
    let mut seen = 0usize;
    for u in 0..g.order() {
        let row = cache.row(u)?;
        for v in u + 1..g.order() {
            if !row.get(v).at_least(d) {
                continue;
            }
            seen += 1;
            if reservoir.len() < MAX_DIAGNOSTIC_PAIRS {
                reservoir.push((u, v));
            } else {
                let j = rng.random_range(0..seen);
                if j < MAX_DIAGNOSTIC_PAIRS {
                    reservoir[j] = (u, v);
                }
            }
        }
    }
    if seen == 0 {
        return Ok(None);
    }
    // keep a stable order for reporting
    reservoir.sort_unstable();
    Ok(Some((reservoir, seen)))
}
