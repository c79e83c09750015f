use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{accuracy, optimize_weights, ScoreCache, WeightMatrix, WeightOptConfig};
use crate::data::SplitTag;
use crate::{Error, Result};

/// Schedule of the retained fraction `r_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RetainScheme {
    /// `r_i = 0.98`.
    #[serde(rename = "i")]
    Constant,
    /// `r_i = 0.98 + (0.9 − 0.98)·e^{−i/2}`.
    #[serde(rename = "ii")]
    Exponential,
    /// 0.9 below 20, 0.95 below 40, 0.98 from then on.
    #[serde(rename = "iii")]
    Stepwise,
}

impl RetainScheme {
    pub const ALL: [RetainScheme; 3] = [
        RetainScheme::Constant,
        RetainScheme::Exponential,
        RetainScheme::Stepwise,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RetainScheme::Constant => "i",
            RetainScheme::Exponential => "ii",
            RetainScheme::Stepwise => "iii",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "i" => Ok(RetainScheme::Constant),
            "ii" => Ok(RetainScheme::Exponential),
            "iii" => Ok(RetainScheme::Stepwise),
            other => Err(Error::invalid(format!("unknown retain scheme {other:?}"))),
        }
    }
}

/// Fraction of the ensemble kept at iteration `i`.
pub fn retain_fraction(i: usize, scheme: RetainScheme) -> f64 {
    match scheme {
        RetainScheme::Constant => 0.98,
        RetainScheme::Exponential => 0.98 + (0.9 - 0.98) * (-(i as f64) / 2.0).exp(),
        RetainScheme::Stepwise => {
            if i < 20 {
                0.9
            } else if i < 40 {
                0.95
            } else {
                0.98
            }
        }
    }
}

/// Iterations between random eliminations; `Never` is T = ∞. Written as an
/// integer or the string `"inf"` in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Interval {
    Every(usize),
    Never,
}

impl Interval {
    fn fires(self, i: usize) -> bool {
        match self {
            Interval::Every(t) => i % t == 0,
            Interval::Never => false,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interval::Every(t) => write!(f, "{t}"),
            Interval::Never => f.write_str("inf"),
        }
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Interval::Every(t) => s.serialize_u64(*t as u64),
            Interval::Never => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(0) => Err(serde::de::Error::custom("interval must be positive")),
            Raw::N(n) => Ok(Interval::Every(n as usize)),
            Raw::S(s) if s == "inf" => Ok(Interval::Never),
            Raw::S(s) => Err(serde::de::Error::custom(format!(
                "interval must be a positive integer or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Significance order used to eliminate members.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// L1 norm of each member's optimised weight row.
    #[default]
    L1,
    /// Each member's own accuracy on the cache (ablation).
    IndividualAccuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruningConfig {
    /// T.
    pub interval: Interval,
    /// m: random eliminations per ranked elimination on random steps.
    pub ratio: usize,
    /// p: random eliminations draw from the bottom `⌈p·n⌉` of the ranking.
    pub p: f64,
    pub scheme: RetainScheme,
    pub n_max: usize,
    pub seed: u64,
    pub ranking: Ranking,
    pub optimizer: WeightOptConfig,
}

impl Default for PruningConfig {
    fn default() -> Self {
        Self {
            interval: Interval::Every(10),
            ratio: 3,
            p: 2.0 / 3.0,
            scheme: RetainScheme::Stepwise,
            n_max: 12,
            seed: 0,
            ranking: Ranking::L1,
            optimizer: WeightOptConfig::default(),
        }
    }
}

impl PruningConfig {
    pub fn validate(&self) -> Result<()> {
        if let Interval::Every(0) = self.interval {
            return Err(Error::invalid("random-elimination interval must be positive"));
        }
        if self.ratio == 0 {
            return Err(Error::invalid("elimination ratio m must be positive"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::invalid(format!("p = {} outside (0, 1]", self.p)));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("N_max must be at least 1"));
        }
        if self.optimizer.eval_every == 0 {
            return Err(Error::invalid("eval_every must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationKind {
    Ranked,
    Random,
}

/// Positions `0..n` ordered from most to least significant: descending L1
/// norm, ascending index on ties.
pub fn rank_networks(w: &WeightMatrix) -> Vec<usize> {
    let l1: Vec<f64> = (0..w.networks()).map(|k| w.l1(k)).collect();
    let mut order: Vec<usize> = (0..w.networks()).collect();
    order.sort_by(|&a, &b| l1[b].total_cmp(&l1[a]).then(a.cmp(&b)));
    order
}

/// Ranking by each network's stand-alone accuracy on `cache`.
pub fn rank_by_accuracy(cache: &ScoreCache) -> Result<Vec<usize>> {
    let n = cache.n_networks();
    let acc = (0..n)
        .map(|k| accuracy(&cache.select(&[k])?, &WeightMatrix::equal(1, cache.classes())))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| acc[b].total_cmp(&acc[a]).then(a.cmp(&b)));
    Ok(order)
}

/// Members remaining after one elimination, and which were removed.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneStep {
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub kind: EliminationKind,
}

fn ceil_frac(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// One elimination from `members` at iteration `i`. `ranking` lists
/// positions into `members`, most significant first.
///
/// The ranked count is `n_d = max(1, round(n·(1 − r_i)))`. On a random
/// iteration `min(m·n_d, n − 1)` members are drawn uniformly from the
/// bottom `⌈p·n⌉` of the ranking (at most that many); otherwise the bottom
/// `n_d` go. `kept` preserves the order of `members`.
pub fn prune_step(
    members: &[usize],
    ranking: &[usize],
    i: usize,
    cfg: &PruningConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PruneStep> {
    let n = members.len();
    if ranking.len() != n {
        return Err(Error::invalid("ranking length differs from member count"));
    }
    if n < 2 {
        return Ok(PruneStep {
            kept: members.to_vec(),
            removed: Vec::new(),
            kind: EliminationKind::Ranked,
        });
    }
    let r = retain_fraction(i, cfg.scheme);
    let nd = ((n as f64 * (1.0 - r)).round() as usize).max(1);
    let (drop, kind): (Vec<usize>, EliminationKind) = if cfg.interval.fires(i) {
        let pool = ceil_frac(cfg.p * n as f64).clamp(1, n);
        let count = (cfg.ratio * nd).min(n - 1).min(pool);
        let bottom = &ranking[n - pool..];
        let picked = sample(rng, pool, count).into_vec();
        (picked.into_iter().map(|j| bottom[j]).collect(), EliminationKind::Random)
    } else {
        let count = nd.min(n - 1);
        (ranking[n - count..].to_vec(), EliminationKind::Ranked)
    };
    let mut gone = vec![false; n];
    for &pos in &drop {
        gone[pos] = true;
    }
    let kept = (0..n).filter(|&j| !gone[j]).map(|j| members[j]).collect();
    let mut removed: Vec<usize> = drop.iter().map(|&j| members[j]).collect();
    removed.sort_unstable();
    Ok(PruneStep {
        kept,
        removed,
        kind,
    })
}

/// One ensemble of the pruning sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Cache indices of the members.
    pub members: Vec<usize>,
    pub names: Vec<String>,
    pub size: usize,
    /// Best-accuracy snapshot of the optimised weights.
    pub weights: WeightMatrix,
    pub validation_accuracy: f64,
    pub equal_weights_accuracy: f64,
    pub best_step: usize,
    /// How the next ensemble was formed; `None` for the last record.
    pub elimination: Option<EliminationKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruningTrace {
    pub records: Vec<TraceRecord>,
}

/// Optimise, record, eliminate; repeated until one member is left.
/// Iterations are numbered from 1 and weights are re-initialised at every
/// iteration. Refuses caches built on the test split.
pub fn run_pruning(cache: &ScoreCache, cfg: &PruningConfig) -> Result<PruningTrace> {
    cfg.validate()?;
    if cache.split() == SplitTag::Test {
        return Err(Error::invalid("pruning must not see the test split"));
    }
    if cache.n_networks() == 0 {
        return Err(Error::EmptySplit("pool".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut members: Vec<usize> = (0..cache.n_networks()).collect();
    let mut records: Vec<TraceRecord> = Vec::new();
    for i in 1.. {
        let sub = cache.select(&members)?;
        let opt = optimize_weights(&sub, &cfg.optimizer)?;
        let equal = accuracy(&sub, &WeightMatrix::equal(members.len(), sub.classes()))?;
        records.push(TraceRecord {
            iteration: i,
            members: members.clone(),
            names: sub.networks().to_vec(),
            size: members.len(),
            weights: opt.best_weights.clone(),
            validation_accuracy: opt.best_accuracy,
            equal_weights_accuracy: equal,
            best_step: opt.best_step,
            elimination: None,
        });
        if members.len() == 1 {
            break;
        }
        let ranking = match cfg.ranking {
            Ranking::L1 => rank_networks(&opt.best_weights),
            Ranking::IndividualAccuracy => rank_by_accuracy(&sub)?,
        };
        let step = prune_step(&members, &ranking, i, cfg, &mut rng)?;
        records.last_mut().expect("just pushed").elimination = Some(step.kind);
        members = step.kept;
    }
    Ok(PruningTrace { records })
}

/// The record with the highest validation accuracy among those of at most
/// `n_max` members; ties go to the smaller ensemble, then the earlier
/// iteration.
pub fn select_ensemble(trace: &PruningTrace, n_max: usize) -> Result<&TraceRecord> {
    if n_max == 0 {
        return Err(Error::invalid("N_max must be at least 1"));
    }
    trace
        .records
        .iter()
        .filter(|r| r.size <= n_max)
        .fold(None::<&TraceRecord>, |best, r| match best {
            None => Some(r),
            Some(b) => {
                let better = r.validation_accuracy > b.validation_accuracy
                    || (r.validation_accuracy == b.validation_accuracy
                        && (r.size < b.size || (r.size == b.size && r.iteration < b.iteration)));
                Some(if better { r } else { b })
            }
        })
        .ok_or_else(|| Error::invalid("trace has no ensemble within N_max"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retain_examples() {
        assert_eq!(retain_fraction(7, RetainScheme::Constant), 0.98);
        assert!((retain_fraction(0, RetainScheme::Exponential) - 0.9).abs() < 1e-15);
        assert_eq!(retain_fraction(25, RetainScheme::Stepwise), 0.95);
        assert_eq!(retain_fraction(19, RetainScheme::Stepwise), 0.9);
        assert_eq!(retain_fraction(40, RetainScheme::Stepwise), 0.98);
        assert!(RetainScheme::parse("iv").is_err());
    }

    #[test]
    fn ranked_and_random_counts() {
        let cfg = PruningConfig {
            scheme: RetainScheme::Constant,
            interval: Interval::Every(10),
            ratio: 3,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let members: Vec<usize> = (0..14).collect();
        let ranking: Vec<usize> = (0..14).collect();
        let s = prune_step(&members, &ranking, 1, &cfg, &mut rng).unwrap();
        assert_eq!(s.removed, vec![13]);
        assert_eq!(s.kind, EliminationKind::Ranked);

        let s = prune_step(&[4, 9], &[1, 0], 10, &cfg, &mut rng).unwrap();
        assert_eq!(s.kept.len(), 1);

        let members: Vec<usize> = (100..130).collect();
        let ranking: Vec<usize> = (0..30).rev().collect();
        let s = prune_step(&members, &ranking, 10, &cfg, &mut rng).unwrap();
        assert_eq!(s.kind, EliminationKind::Random);
        assert_eq!(s.removed.len(), 3);
        // bottom 20 of the ranking are positions 19..0, i.e. members 100..120
        assert!(s.removed.iter().all(|m| (100..120).contains(m)));
    }

    #[test]
    fn l1_ranking() {
        let mut v = vec![0.0; 30];
        v[0] = 0.5;
        v[1] = -0.5;
        v[10] = 0.9;
        let w = WeightMatrix::from_values(3, 10, v).unwrap();
        assert_eq!(rank_networks(&w), vec![0, 1, 2]);
    }

    #[test]
    fn interval_config() {
        #[derive(Deserialize)]
        struct W {
            t: Interval,
        }
        assert_eq!(toml::from_str::<W>("t = 10").unwrap().t, Interval::Every(10));
        assert_eq!(toml::from_str::<W>("t = \"inf\"").unwrap().t, Interval::Never);
        assert!(toml::from_str::<W>("t = 0").is_err());
        assert!(toml::from_str::<W>("t = \"never\"").is_err());
    }
}
