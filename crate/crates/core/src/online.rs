//! Sequential learning on a graph.
//!
//! The engine visits vertices in a fixed ordering. At round `t` on vertex
//! `v_t` the learner plays `pi_t`, the adversary reveals
//! `g_t(w) = L(w) - loss(w, Z_{v_t})` and the learner pays `-<pi_t, g_t>`.
//! Every read the learner makes is logged and audited: an action at `v` may
//! only depend on outcomes from vertices at distance `>= d` from `v`.

use crate::error::{Error, Result};
use crate::graph::{Bfs, Graph};
use crate::partitions::{rational_to_f64, validate_partition, WeightedStableFamily};
use serde::{Deserialize, Serialize};

pub use crate::bounds::{sheltered_regret_bound, BaseBound};

const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over the hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DistributionOverW {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for DistributionOverW {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        DistributionOverW::new(probs)
    }
}

impl From<DistributionOverW> for Vec<f64> {
    fn from(d: DistributionOverW) -> Self {
        d.probs
    }
}

impl DistributionOverW {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::param("distribution over an empty hypothesis set"));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::param("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::param(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DistributionOverW { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::param("weights must have a positive finite sum"));
        }
        DistributionOverW::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m > 0);
        DistributionOverW {
            probs: vec![1.0 / m as f64; m],
        }
    }

    pub fn point_mass(m: usize, w: usize) -> Self {
        assert!(w < m);
        let mut probs = vec![0.0; m];
        probs[w] = 1.0;
        DistributionOverW { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossProvenance {
    Exact,
    /// Largest standard error over the population-loss entries.
    Oracle { max_std_error: f64 },
}

/// Finite hypotheses against finitely many instance values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteHypothesisSetting {
    /// `loss[w][z]`
    loss: Vec<Vec<f64>>,
    population_loss: Vec<f64>,
    provenance: LossProvenance,
}

impl FiniteHypothesisSetting {
    pub fn new(loss: Vec<Vec<f64>>, population_loss: Vec<f64>, provenance: LossProvenance) -> Result<Self> {
        if loss.is_empty() {
            return Err(Error::param("no hypotheses"));
        }
        let z = loss[0].len();
        if z == 0 || loss.iter().any(|row| row.len() != z) {
            return Err(Error::param("loss table must be rectangular with at least one instance"));
        }
        if loss.iter().flatten().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::param("losses must lie in [0,1]"));
        }
        if population_loss.len() != loss.len() {
            return Err(Error::param("population loss length differs from hypothesis count"));
        }
        if population_loss.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::param("population losses must lie in [0,1]"));
        }
        Ok(FiniteHypothesisSetting {
            loss,
            population_loss,
            provenance,
        })
    }

    /// Population losses taken exactly from a law over instances.
    pub fn with_instance_law(loss: Vec<Vec<f64>>, law: &[f64]) -> Result<Self> {
        let population = loss
            .iter()
            .map(|row| {
                if row.len() != law.len() {
                    return Err(Error::param("instance law length differs from loss table"));
                }
                Ok(row.iter().zip(law).map(|(l, p)| l * p).sum::<f64>().clamp(0.0, 1.0))
            })
            .collect::<Result<Vec<f64>>>()?;
        FiniteHypothesisSetting::new(loss, population, LossProvenance::Exact)
    }

    pub fn m(&self) -> usize {
        self.loss.len()
    }

    pub fn instances(&self) -> usize {
        self.loss[0].len()
    }

    pub fn loss(&self, w: usize, z: usize) -> f64 {
        self.loss[w][z]
    }

    pub fn population_loss(&self) -> &[f64] {
        &self.population_loss
    }

    pub fn provenance(&self) -> &LossProvenance {
        &self.provenance
    }

    /// `g(w) = L(w) - loss(w, z)`
    pub fn outcome(&self, z: usize) -> Vec<f64> {
        self.population_loss
            .iter()
            .zip(&self.loss)
            .map(|(l, row)| l - row[z])
            .collect()
    }

    pub fn empirical_loss(&self, data: &[usize]) -> Vec<f64> {
        let n = data.len() as f64;
        self.loss
            .iter()
            .map(|row| data.iter().map(|&z| row[z]).sum::<f64>() / n)
            .collect()
    }
}

/// Graph, round ordering and shelter distance for one game.
#[derive(Clone, Debug)]
pub struct GameConfig<'g> {
    graph: &'g Graph,
    ordering: Vec<usize>,
    shelter_d: u32,
    family: Option<WeightedStableFamily>,
}

impl<'g> GameConfig<'g> {
    /// `ordering[t]` is the vertex played at round `t`; it must be a
    /// permutation (vertices never repeat). A family is required when
    /// `shelter_d > 1`.
    pub fn new(
        graph: &'g Graph,
        ordering: Vec<usize>,
        shelter_d: u32,
        family: Option<WeightedStableFamily>,
    ) -> Result<Self> {
        let n = graph.order();
        if ordering.len() != n {
            return Err(Error::param(format!("ordering has {} rounds for {n} vertices", ordering.len())));
        }
        let mut seen = vec![false; n];
        for &v in &ordering {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::param(format!("ordering is not a permutation (vertex {v})")));
            }
        }
        if shelter_d == 0 {
            return Err(Error::param("shelter distance must be at least 1"));
        }
        match &family {
            None if shelter_d > 1 => {
                return Err(Error::param("a stable family is required when shelter_d > 1"));
            }
            Some(fam) => {
                if fam.d() != shelter_d {
                    return Err(Error::param(format!(
                        "family has d={} but shelter_d={shelter_d}",
                        fam.d()
                    )));
                }
                let report = validate_partition(graph, fam)?;
                if !report.valid {
                    return Err(Error::param(format!(
                        "family is not a valid {shelter_d}-stable partition: {:?}",
                        report.violations.first()
                    )));
                }
            }
            None => {}
        }
        Ok(GameConfig {
            graph,
            ordering,
            shelter_d,
            family,
        })
    }

    pub fn natural(graph: &'g Graph) -> Self {
        GameConfig {
            graph,
            ordering: (0..graph.order()).collect(),
            shelter_d: 1,
            family: None,
        }
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn shelter_d(&self) -> u32 {
        self.shelter_d
    }

    pub fn family(&self) -> Option<&WeightedStableFamily> {
        self.family.as_ref()
    }
}

/// An online player. Actions must depend only on delivered observations.
pub trait Learner: Send {
    fn next_action(&mut self, round: usize, vertex: usize) -> DistributionOverW;

    fn observe(&mut self, round: usize, vertex: usize, outcome: &[f64]);

    /// Rounds whose outcomes fed the most recent action.
    fn access_set(&self) -> Vec<usize>;
}

/// Exponentially weighted averaging with expert cost `-g(w)`.
#[derive(Clone, Debug)]
pub struct Ewa {
    prior: Vec<f64>,
    eta: f64,
    cumulative_cost: Vec<f64>,
    observed: Vec<usize>,
}

pub fn make_ewa(prior: &DistributionOverW, eta: f64) -> Result<Ewa> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::param(format!("learning rate must be finite and non-negative, got {eta}")));
    }
    Ok(Ewa {
        prior: prior.probs().to_vec(),
        eta,
        cumulative_cost: vec![0.0; prior.len()],
        observed: Vec::new(),
    })
}

impl Ewa {
    pub fn action(&self) -> DistributionOverW {
        let scaled: Vec<f64> = self.cumulative_cost.iter().map(|c| self.eta * c).collect();
        let floor = scaled
            .iter()
            .zip(&self.prior)
            .filter(|(_, p)| **p > 0.0)
            .map(|(s, _)| *s)
            .fold(f64::INFINITY, f64::min);
        let factors: Vec<f64> = scaled.iter().map(|s| (floor - s).exp()).collect();
        if factors.iter().all(|f| *f == 1.0) {
            return DistributionOverW {
                probs: self.prior.clone(),
            };
        }
        let weights: Vec<f64> = self.prior.iter().zip(&factors).map(|(p, f)| p * f).collect();
        let total: f64 = weights.iter().sum();
        DistributionOverW {
            probs: weights.into_iter().map(|w| w / total).collect(),
        }
    }
}

impl Learner for Ewa {
    fn next_action(&mut self, _round: usize, _vertex: usize) -> DistributionOverW {
        self.action()
    }

    fn observe(&mut self, round: usize, _vertex: usize, outcome: &[f64]) {
        for (c, g) in self.cumulative_cost.iter_mut().zip(outcome) {
            *c -= g;
        }
        self.observed.push(round);
    }

    fn access_set(&self) -> Vec<usize> {
        self.observed.clone()
    }
}

/// One sub-player's rounds and actions inside a sheltered composite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubPlayerLog {
    pub rounds: Vec<usize>,
    pub actions: Vec<Vec<f64>>,
}

/// Independent copies of a base learner, one per stable subset, mixed with
/// the partition weights.
pub struct Sheltered {
    copies: Vec<Box<dyn Learner>>,
    weights: Vec<f64>,
    memberships: Vec<Vec<usize>>,
    logs: Vec<SubPlayerLog>,
    last_access: Vec<usize>,
}

pub fn make_sheltered<F>(base_factory: F, fam: &WeightedStableFamily, config: &GameConfig) -> Result<Sheltered>
where
    F: Fn(usize) -> Result<Box<dyn Learner>>,
{
    if fam.d() != config.shelter_d() {
        return Err(Error::param(format!(
            "family has d={} but the game shelters at d={}",
            fam.d(),
            config.shelter_d()
        )));
    }
    let report = validate_partition(config.graph(), fam)?;
    if !report.valid {
        return Err(Error::param(format!(
            "family is not a stable fractional partition: {:?}",
            report.violations.first()
        )));
    }
    let copies = (0..fam.len()).map(&base_factory).collect::<Result<Vec<_>>>()?;
    Ok(Sheltered {
        copies,
        weights: fam.weights().iter().map(rational_to_f64).collect(),
        memberships: fam.memberships(),
        logs: vec![SubPlayerLog::default(); fam.len()],
        last_access: Vec::new(),
    })
}

impl Sheltered {
    pub fn logs(&self) -> &[SubPlayerLog] {
        &self.logs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Regret of each sub-player against `q`, over its own rounds.
    pub fn sub_regrets(&self, transcript: &Transcript, q: &DistributionOverW) -> Vec<f64> {
        self.logs
            .iter()
            .map(|log| {
                log.rounds
                    .iter()
                    .zip(&log.actions)
                    .map(|(&t, a)| {
                        let g = &transcript.rounds[t].outcome;
                        q.dot(g) - a.iter().zip(g).map(|(p, x)| p * x).sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }
}

impl Learner for Sheltered {
    fn next_action(&mut self, round: usize, vertex: usize) -> DistributionOverW {
        let mut mixed: Vec<f64> = Vec::new();
        let mut access = Vec::new();
        for &k in &self.memberships[vertex] {
            let a = self.copies[k].next_action(round, vertex);
            if mixed.is_empty() {
                mixed = vec![0.0; a.len()];
            }
            for (acc, p) in mixed.iter_mut().zip(a.probs()) {
                *acc += self.weights[k] * p;
            }
            access.extend(self.copies[k].access_set());
            self.logs[k].rounds.push(round);
            self.logs[k].actions.push(a.probs);
        }
        access.sort_unstable();
        access.dedup();
        self.last_access = access;
        // exact coverage makes this a convex combination
        DistributionOverW { probs: mixed }
    }

    fn observe(&mut self, round: usize, vertex: usize, outcome: &[f64]) {
        for &k in &self.memberships[vertex] {
            self.copies[k].observe(round, vertex, outcome);
        }
    }

    fn access_set(&self) -> Vec<usize> {
        self.last_access.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub vertex: usize,
    pub action: Vec<f64>,
    pub outcome: Vec<f64>,
    /// `-<pi_t, g_t>`
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub shelter_d: u32,
    pub rounds: Vec<RoundRecord>,
    /// For each round, the earlier rounds whose outcomes the learner read.
    pub access_log: Vec<Vec<usize>>,
    /// `M = sum_t <pi_t, g_t>`
    pub m_total: f64,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// `round,vertex,cost,cumulative_m`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,vertex,cost,cumulative_m\n");
        let mut cumulative = 0.0;
        for r in &self.rounds {
            cumulative -= r.cost;
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.round,
                r.vertex,
                crate::ext::sig7(r.cost),
                crate::ext::sig7(cumulative)
            ));
        }
        out
    }
}

/// Plays all rounds and audits every read against the shelter distance.
pub fn play_game(
    setting: &FiniteHypothesisSetting,
    config: &GameConfig,
    learner: &mut dyn Learner,
    data: &[usize],
) -> Result<Transcript> {
    let g = config.graph();
    let n = g.order();
    if data.len() != n {
        return Err(Error::param(format!("data has {} entries for {n} vertices", data.len())));
    }
    if let Some(&z) = data.iter().find(|&&z| z >= setting.instances()) {
        return Err(Error::param(format!("instance {z} outside the loss table")));
    }
    let d = config.shelter_d();
    let mut bfs = Bfs::new(n);
    let mut near = vec![usize::MAX; n];
    let mut rounds = Vec::with_capacity(n);
    let mut access_log = Vec::with_capacity(n);
    let mut m_total = 0.0;
    for (t, &v) in config.ordering().iter().enumerate() {
        let action = learner.next_action(t, v);
        if action.len() != setting.m() {
            return Err(Error::param("learner action has the wrong dimension"));
        }
        let access = learner.access_set();
        for (u, _) in bfs.ball(g, v, d - 1) {
            near[u] = t;
        }
        for &s in &access {
            if s >= t {
                return Err(Error::Audit {
                    round: t,
                    message: format!("read outcome of round {s}, which has not been played"),
                });
            }
            let u = config.ordering()[s];
            if near[u] == t {
                return Err(Error::Audit {
                    round: t,
                    message: format!("read vertex {u} within distance {} of vertex {v}", d - 1),
                });
            }
        }
        let outcome = setting.outcome(data[v]);
        let gain = action.dot(&outcome);
        m_total += gain;
        learner.observe(t, v, &outcome);
        rounds.push(RoundRecord {
            round: t,
            vertex: v,
            action: action.probs,
            outcome,
            cost: -gain,
        });
        access_log.push(access);
    }
    Ok(Transcript {
        shelter_d: d,
        rounds,
        access_log,
        m_total,
    })
}

/// `sum_t <Q, g_t> - <pi_t, g_t>`
pub fn regret_of(transcript: &Transcript, comparator: &DistributionOverW) -> f64 {
    transcript
        .rounds
        .iter()
        .map(|r| comparator.dot(&r.outcome) + r.cost)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_graph;
    use crate::partitions::{rational, residue_partition};

    fn two_instance_setting() -> FiniteHypothesisSetting {
        FiniteHypothesisSetting::with_instance_law(vec![vec![0.0, 1.0], vec![1.0, 0.0]], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(DistributionOverW::new(vec![0.5, 0.5]).is_ok());
        assert!(DistributionOverW::new(vec![0.5, 0.4]).is_err());
        assert!(DistributionOverW::new(vec![-0.1, 1.1]).is_err());
        assert!(DistributionOverW::new(vec![]).is_err());
        let json = serde_json::to_string(&DistributionOverW::uniform(2)).unwrap();
        assert_eq!(json, "[0.5,0.5]");
        assert!(serde_json::from_str::<DistributionOverW>("[0.2,0.2]").is_err());
    }

    #[test]
    fn ewa_softmax_example() {
        let mut ewa = make_ewa(&DistributionOverW::uniform(2), 1.0).unwrap();
        // cost c = -g = (0, 1)
        ewa.observe(0, 0, &[0.0, -1.0]);
        let a = ewa.action();
        assert!((a.probs()[0] - 0.731059).abs() < 1e-6);
        assert!((a.probs()[1] - 0.268941).abs() < 1e-6);
    }

    #[test]
    fn ewa_zero_outcomes_and_zero_rate_keep_prior() {
        let prior = DistributionOverW::new(vec![0.2, 0.3, 0.5]).unwrap();
        let mut ewa = make_ewa(&prior, 0.7).unwrap();
        for t in 0..5 {
            ewa.observe(t, t, &[0.0; 3]);
        }
        assert!(ewa.action().probs().iter().zip(prior.probs()).all(|(a, b)| (a - b).abs() < 1e-15));
        let mut frozen = make_ewa(&prior, 0.0).unwrap();
        frozen.observe(0, 0, &[1.0, -1.0, 0.3]);
        assert_eq!(frozen.action(), prior);
        assert!(make_ewa(&prior, -1.0).is_err());
    }

    #[test]
    fn single_hypothesis_has_zero_regret() {
        let g = generate_graph(&"path:6".parse().unwrap()).unwrap();
        let setting = FiniteHypothesisSetting::with_instance_law(vec![vec![0.1, 0.9]], &[0.3, 0.7]).unwrap();
        let cfg = GameConfig::natural(&g);
        let mut ewa = make_ewa(&DistributionOverW::uniform(1), 1.0).unwrap();
        let tr = play_game(&setting, &cfg, &mut ewa, &[0, 1, 1, 0, 1, 0]).unwrap();
        assert!(tr.rounds.iter().all(|r| r.action == vec![1.0]));
        assert_eq!(regret_of(&tr, &DistributionOverW::point_mass(1, 0)), 0.0);
    }

    #[test]
    fn constant_loss_gives_zero_outcomes() {
        let g = generate_graph(&"cycle:8".parse().unwrap()).unwrap();
        let setting =
            FiniteHypothesisSetting::with_instance_law(vec![vec![0.3, 0.3], vec![0.3, 0.3]], &[0.4, 0.6]).unwrap();
        let mut ewa = make_ewa(&DistributionOverW::uniform(2), 1.0).unwrap();
        let tr = play_game(&setting, &GameConfig::natural(&g), &mut ewa, &[0, 1, 0, 1, 1, 1, 0, 0]).unwrap();
        assert!(tr.rounds.iter().flat_map(|r| &r.outcome).all(|&x| x.abs() < 1e-15));
        assert!(tr.m_total.abs() < 1e-15);
        assert!(regret_of(&tr, &DistributionOverW::point_mass(2, 1)).abs() < 1e-15);
    }

    #[test]
    fn two_round_hand_example() {
        let tr = Transcript {
            shelter_d: 1,
            rounds: vec![
                RoundRecord {
                    round: 0,
                    vertex: 0,
                    action: vec![0.5, 0.5],
                    outcome: vec![1.0, 0.0],
                    cost: -0.5,
                },
                RoundRecord {
                    round: 1,
                    vertex: 1,
                    action: vec![0.5, 0.5],
                    outcome: vec![0.0, 1.0],
                    cost: -0.5,
                },
            ],
            access_log: vec![vec![], vec![0]],
            m_total: 1.0,
        };
        assert_eq!(regret_of(&tr, &DistributionOverW::point_mass(2, 0)), 0.0);
    }

    #[test]
    fn ordering_must_be_a_permutation() {
        let g = generate_graph(&"path:4".parse().unwrap()).unwrap();
        assert!(GameConfig::new(&g, vec![0, 1, 1, 3], 1, None).is_err());
        assert!(GameConfig::new(&g, vec![0, 1, 2], 1, None).is_err());
        assert!(GameConfig::new(&g, vec![3, 2, 1, 0], 1, None).is_ok());
        assert!(GameConfig::new(&g, vec![0, 1, 2, 3], 2, None).is_err());
    }

    #[test]
    fn whole_set_composite_matches_base() {
        let g = generate_graph(&"cycle:12".parse().unwrap()).unwrap();
        let setting = two_instance_setting();
        let fam = WeightedStableFamily::new(1, 12, vec![(0..12).collect()], vec![rational(1)]).unwrap();
        let cfg = GameConfig::new(&g, (0..12).collect(), 1, Some(fam.clone())).unwrap();
        let prior = DistributionOverW::uniform(2);
        let data: Vec<usize> = (0..12).map(|v| (v * 7 % 5) % 2).collect();
        let mut composite = make_sheltered(
            |_| Ok(Box::new(make_ewa(&prior, 0.5)?) as Box<dyn Learner>),
            &fam,
            &cfg,
        )
        .unwrap();
        let mut base = make_ewa(&prior, 0.5).unwrap();
        let a = play_game(&setting, &cfg, &mut composite, &data).unwrap();
        let b = play_game(&setting, &cfg, &mut base, &data).unwrap();
        assert_eq!(a.rounds, b.rounds);
    }

    #[test]
    fn mod_three_chain_reads_same_class_only() {
        let spec = "path:10".parse().unwrap();
        let g = generate_graph(&spec).unwrap();
        let fam = residue_partition(&spec, 3).unwrap();
        let cfg = GameConfig::new(&g, (0..10).collect(), 3, Some(fam.clone())).unwrap();
        let prior = DistributionOverW::uniform(2);
        let mut composite = make_sheltered(
            |_| Ok(Box::new(make_ewa(&prior, 1.0)?) as Box<dyn Learner>),
            &fam,
            &cfg,
        )
        .unwrap();
        let tr = play_game(&two_instance_setting(), &cfg, &mut composite, &[0; 10]).unwrap();
        let read: Vec<usize> = tr.access_log[6].iter().map(|&s| cfg.ordering()[s]).collect();
        assert_eq!(read, vec![0, 3]);
    }

    #[test]
    fn half_coverage_family_is_rejected() {
        let g = generate_graph(&"path:4".parse().unwrap()).unwrap();
        let half = Rational::new(1.into(), 2.into());
        let fam = WeightedStableFamily::new(1, 4, vec![(0..4).collect()], vec![half]).unwrap();
        let cfg = GameConfig::natural(&g);
        let prior = DistributionOverW::uniform(2);
        let r = make_sheltered(|_| Ok(Box::new(make_ewa(&prior, 1.0)?) as Box<dyn Learner>), &fam, &cfg);
        assert!(r.is_err());
    }

    use crate::partitions::Rational;

    struct Peeker;

    impl Learner for Peeker {
        fn next_action(&mut self, _round: usize, _vertex: usize) -> DistributionOverW {
            DistributionOverW::uniform(2)
        }
        fn observe(&mut self, _round: usize, _vertex: usize, _outcome: &[f64]) {}
        fn access_set(&self) -> Vec<usize> {
            vec![0]
        }
    }

    #[test]
    fn audit_catches_nearby_reads() {
        let spec = "path:6".parse().unwrap();
        let g = generate_graph(&spec).unwrap();
        let fam = residue_partition(&spec, 3).unwrap();
        let cfg = GameConfig::new(&g, (0..6).collect(), 3, Some(fam)).unwrap();
        let err = play_game(&two_instance_setting(), &cfg, &mut Peeker, &[0; 6]).unwrap_err();
        assert!(matches!(err, Error::Audit { round: 0, .. }), "{err}");
    }

    #[test]
    fn transcript_csv_shape() {
        let g = generate_graph(&"path:3".parse().unwrap()).unwrap();
        let mut ewa = make_ewa(&DistributionOverW::uniform(2), 1.0).unwrap();
        let tr = play_game(&two_instance_setting(), &GameConfig::natural(&g), &mut ewa, &[0, 1, 0]).unwrap();
        let csv = tr.to_csv();
        assert!(csv.starts_with("round,vertex,cost,cumulative_m\n0,0,"));
        assert_eq!(csv.lines().count(), 4);
        let back: Transcript = serde_json::from_str(&serde_json::to_string(&tr).unwrap()).unwrap();
        assert_eq!(back, tr);
    }
}
