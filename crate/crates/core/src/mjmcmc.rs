//! Mode jumping Metropolis-Hastings over the models of a fixed search space.

use crate::error::{Error, Result};
use crate::Scalar;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Inclusion indicators over the current search space.
pub type Gamma = Vec<bool>;

/// Log target `log p(m) + log p(y|m)` of models over a search space of fixed size.
/// Models outside the support (too many features, failed fits) score `-inf`.
pub trait ModelEvaluator<S> {
    fn space_size(&self) -> usize;
    fn log_target(&mut self, gamma: &[bool]) -> S;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalMethod {
    Greedy,
    SimulatedAnnealing,
}

/// Tuning of the mode jumping kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub large_jump_flip_prob: f64,
    pub local_steps: usize,
    pub local_method: LocalMethod,
    pub randomize_flip_prob: f64,
    /// Probability of a plain single-flip Metropolis step instead of a mode jump.
    pub single_flip_prob: f64,
    /// Maximum number of included features `Q`.
    pub max_features: usize,
    /// Starting temperature of the annealing ladder.
    pub sa_start_temperature: f64,
    /// Geometric cooling factor of the annealing ladder.
    pub sa_cooling: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            large_jump_flip_prob: 0.35,
            local_steps: 20,
            local_method: LocalMethod::Greedy,
            randomize_flip_prob: 0.05,
            single_flip_prob: 0.7,
            max_features: 20,
            sa_start_temperature: 10.0,
            sa_cooling: 0.8,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.randomize_flip_prob;
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::Config(format!("randomize_flip_prob must lie in (0, 0.5), got {p}")));
        }
        for (name, v) in [("large_jump_flip_prob", self.large_jump_flip_prob), ("single_flip_prob", self.single_flip_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.max_features == 0 {
            return Err(Error::Config("Q (max_features) must be at least 1".into()));
        }
        if !(self.sa_start_temperature > 0.0) || !(self.sa_cooling > 0.0 && self.sa_cooling < 1.0) {
            return Err(Error::Config("annealing needs a positive temperature and cooling in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Current model of a chain and its cached log target.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState<S> {
    pub current: Gamma,
    pub log_target: S,
}

impl<S: Scalar> ChainState<S> {
    pub fn new<E: ModelEvaluator<S> + ?Sized>(current: Gamma, eval: &mut E) -> Self {
        let log_target = eval.log_target(&current);
        Self { current, log_target }
    }
}

fn size(g: &[bool]) -> usize {
    g.iter().filter(|&&b| b).count()
}

fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Drops randomly chosen included features until at most `q` remain.
pub fn truncate<R: Rng + ?Sized>(g: &mut Gamma, q: usize, rng: &mut R) {
    let on: Vec<usize> = (0..g.len()).filter(|&i| g[i]).collect();
    if on.len() <= q {
        return;
    }
    for i in sample(rng, on.len(), on.len() - q) {
        g[on[i]] = false;
    }
}

/// Flips every indicator independently with the large-jump probability, then
/// truncates to `Q`.
pub fn large_jump<R: Rng + ?Sized>(m: &[bool], cfg: &KernelConfig, rng: &mut R) -> Gamma {
    let mut g: Gamma = m.iter().map(|&b| b ^ rng.random_bool(cfg.large_jump_flip_prob)).collect();
    truncate(&mut g, cfg.max_features, rng);
    g
}

/// Independent flips with the randomization probability.
pub fn randomize<R: Rng + ?Sized>(m: &[bool], cfg: &KernelConfig, rng: &mut R) -> Gamma {
    m.iter().map(|&b| b ^ rng.random_bool(cfg.randomize_flip_prob)).collect()
}

/// Log density `h log p + (s - h) log(1 - p)` of the randomization kernel.
pub fn log_q_randomize(to: &[bool], from: &[bool], p: f64) -> f64 {
    let h = hamming(to, from) as f64;
    let s = to.len() as f64;
    h * p.ln() + (s - h) * (1.0 - p).ln()
}

/// Local optimization from `m0` (never decreases the target for greedy search).
pub fn local_optimize<S: Scalar, E: ModelEvaluator<S> + ?Sized, R: Rng + ?Sized>(
    m0: Gamma,
    cfg: &KernelConfig,
    eval: &mut E,
    rng: &mut R,
) -> (Gamma, S) {
    let start = eval.log_target(&m0);
    match cfg.local_method {
        LocalMethod::Greedy => greedy(m0, start, cfg.local_steps, eval),
        LocalMethod::SimulatedAnnealing => anneal(m0, start, cfg, eval, rng),
    }
}

fn greedy<S: Scalar, E: ModelEvaluator<S> + ?Sized>(mut m: Gamma, mut best: S, steps: usize, eval: &mut E) -> (Gamma, S) {
    for _ in 0..steps {
        let mut choice = None;
        let mut cand_best = best;
        for j in 0..m.len() {
            m[j] = !m[j];
            let v = eval.log_target(&m);
            m[j] = !m[j];
            if v > cand_best {
                cand_best = v;
                choice = Some(j);
            }
        }
        match choice {
            Some(j) => {
                m[j] = !m[j];
                best = cand_best;
            }
            None => break,
        }
    }
    (m, best)
}

fn anneal<S: Scalar, E: ModelEvaluator<S> + ?Sized, R: Rng + ?Sized>(
    mut m: Gamma,
    mut cur: S,
    cfg: &KernelConfig,
    eval: &mut E,
    rng: &mut R,
) -> (Gamma, S) {
    let mut temp = cfg.sa_start_temperature;
    let (mut best_m, mut best) = (m.clone(), cur);
    if m.is_empty() {
        return (m, cur);
    }
    for _ in 0..cfg.local_steps {
        let j = rng.random_range(0..m.len());
        m[j] = !m[j];
        let v = eval.log_target(&m);
        let diff = (v - cur).to_f64_lossy();
        if v.is_finite() && (diff >= 0.0 || rng.random::<f64>().ln() < diff / temp) {
            cur = v;
            if cur > best {
                best = cur;
                best_m = m.clone();
            }
        } else {
            m[j] = !m[j];
        }
        temp *= cfg.sa_cooling;
    }
    (best_m, best)
}

/// What a step did, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    SingleFlip,
    ModeJump,
}

/// One transition: a single-flip Metropolis step with probability
/// `single_flip_prob`, otherwise a full mode jump with backward auxiliaries.
pub fn mjmcmc_step<S: Scalar, E: ModelEvaluator<S> + ?Sized, R: Rng + ?Sized>(
    state: &mut ChainState<S>,
    cfg: &KernelConfig,
    eval: &mut E,
    rng: &mut R,
) -> (StepKind, bool) {
    let s = state.current.len();
    if s == 0 {
        return (StepKind::SingleFlip, false);
    }
    if rng.random_bool(cfg.single_flip_prob) {
        let j = rng.random_range(0..s);
        let mut prop = state.current.clone();
        prop[j] = !prop[j];
        let v = eval.log_target(&prop);
        let accepted = accept(v - state.log_target, rng);
        if accepted {
            state.current = prop;
            state.log_target = v;
        }
        return (StepKind::SingleFlip, accepted);
    }
    let p = cfg.randomize_flip_prob;
    let m0_star = large_jump(&state.current, cfg, rng);
    let (m1_star, _) = local_optimize(m0_star, cfg, eval, rng);
    let proposal = randomize(&m1_star, cfg, rng);
    let target = eval.log_target(&proposal);
    if !target.is_finite() {
        return (StepKind::ModeJump, false);
    }
    let m0 = large_jump(&proposal, cfg, rng);
    let (m1, _) = local_optimize(m0, cfg, eval, rng);
    let log_ratio = (target - state.log_target).to_f64_lossy() + log_q_randomize(&state.current, &m1, p)
        - log_q_randomize(&proposal, &m1_star, p);
    let accepted = accept(S::lit(log_ratio), rng);
    if accepted {
        state.current = proposal;
        state.log_target = target;
    }
    (StepKind::ModeJump, accepted)
}

fn accept<S: Scalar, R: Rng + ?Sized>(log_ratio: S, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= S::zero() {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio.to_f64_lossy()
}

/// Acceptance probability `min(1, exp(log_ratio))`.
pub fn acceptance_probability(log_ratio: f64) -> f64 {
    if log_ratio.is_nan() {
        0.0
    } else {
        log_ratio.min(0.0).exp()
    }
}

/// Number of included features.
pub fn model_size(g: &[bool]) -> usize {
    size(g)
}
