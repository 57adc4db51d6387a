//! Genetically modified mode jumping MCMC: MJMCMC phases over a sequence of
//! feature populations, with populations evolved between phases.

use crate::error::{Error, Result};
use crate::evaluator::{MarginalMode, PopulationEvaluator};
use crate::feature::{
    AlphaStrategy, ColumnCache, Constraints, Feature, FeatureKind, FeatureRef, FitContext, Generator, Pool, TransformLibrary,
    is_redundant_in,
};
use crate::glm::log_marginal;
use crate::linalg::OrthoBasis;
use crate::mjmcmc::{mjmcmc_step, ChainState, Gamma, KernelConfig};
use crate::model_space::VisitedStore;
use crate::Scalar;
use log::{debug, info};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

/// Attempts per vacancy before falling back to an original covariate.
pub const MAX_GENERATION_ATTEMPTS: usize = 100;

/// Phase lengths, population size and evolution probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    /// Population size `s`.
    pub population_size: usize,
    /// Number of populations `T`.
    pub populations: usize,
    pub n_init: usize,
    pub n_expl: usize,
    /// Unique models to record after the last evolution.
    pub n_final: usize,
    /// Step cap for the final phase.
    pub max_final_steps: usize,
    /// `(P_p, P_mo, P_mu, P_i)`.
    pub kind_probs: [f64; 4],
    pub keep_threshold: f64,
    /// Covariates kept after marginal screening; `None` keeps `min(m, s)`.
    pub preselect_q0: Option<usize>,
    /// Number of top-ranked initial features that are never dropped.
    pub protected: usize,
    /// Parents are drawn with weight `inclusion + parent_floor`; original
    /// covariates outside the population get `parent_floor`.
    pub parent_floor: f64,
    /// After each phase, drop stored models more than this many log units
    /// below the best one.
    pub prune_gap: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            populations: 10,
            n_init: 200,
            n_expl: 100,
            n_final: 1000,
            max_final_steps: 20_000,
            kind_probs: [0.1, 0.3, 0.4, 0.2],
            keep_threshold: 0.5,
            preselect_q0: None,
            protected: 3,
            parent_floor: 0.05,
            prune_gap: Some(50.0),
        }
    }
}

/// Full configuration of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub schedule: ScheduleConfig,
    pub kernel: KernelConfig,
    pub constraints: Constraints,
    pub library: TransformLibrary,
    pub strategy: AlphaStrategy,
    /// `log(a)` of the model prior.
    pub log_a: f64,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.schedule;
        let p = s.kind_probs;
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("kind probabilities must sum to 1 (got {p:?})")));
        }
        if p[3] == 0.0 && s.protected == 0 {
            return Err(Error::Config(
                "P_i = 0 with an empty protected set makes original covariates unreachable".into(),
            ));
        }
        if s.population_size == 0 || s.populations == 0 {
            return Err(Error::Config("population size and number of populations must be positive".into()));
        }
        if !(s.parent_floor.is_finite() && s.parent_floor > 0.0) {
            return Err(Error::Config("parent_floor must be positive".into()));
        }
        if s.prune_gap.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::Config("prune_gap must be positive".into()));
        }
        if !(0.0..=1.0).contains(&s.keep_threshold) {
            return Err(Error::Config("keep_threshold must lie in [0, 1]".into()));
        }
        if self.constraints.max_width < 2 {
            return Err(Error::Config("L (max_width) must be at least 2".into()));
        }
        let need = self.kernel.max_features.min(self.constraints.max_width);
        if s.population_size < need {
            return Err(Error::Config(format!(
                "population size {} must be at least min(Q, L) = {need}",
                s.population_size
            )));
        }
        if !self.log_a.is_finite() || self.log_a >= 0.0 {
            return Err(Error::Config("prior parameter a must lie in (0, 1)".into()));
        }
        self.kernel.validate()
    }

    fn marginal_mode(&self, seed: u64) -> MarginalMode {
        match self.strategy {
            AlphaStrategy::FullyBayes { sigma_alpha, draws } => MarginalMode::MonteCarlo { sigma_alpha, draws, seed },
            _ => MarginalMode::Plugin,
        }
    }
}

/// A search space `S_t`.
#[derive(Debug, Clone)]
pub struct Population<S> {
    pub features: Vec<FeatureRef<S>>,
    /// Keys of features that are never dropped.
    pub protected: Vec<String>,
}

impl<S: Scalar> Population<S> {
    pub fn keys(&self) -> Vec<String> {
        self.features.iter().map(|f| f.key().to_string()).collect()
    }
}

/// Draws a replacement kind from `(P_p, P_mo, P_mu, P_i)`.
pub fn draw_kind<R: Rng + ?Sized>(probs: &[f64; 4], rng: &mut R) -> FeatureKind {
    let dist = WeightedIndex::new(probs).expect("validated kind probabilities");
    FeatureKind::ALL[dist.sample(rng)]
}

/// Ranks covariates by the log marginal of their univariate model and keeps the
/// best `min(m, s)` (or `preselect_q0`, padded at random).
pub fn init_population<S: Scalar, R: Rng + ?Sized>(
    ctx: &FitContext<'_, S>,
    schedule: &ScheduleConfig,
    protected: usize,
    rng: &mut R,
) -> Result<Population<S>> {
    let m = ctx.x.cols();
    if m == 0 {
        return Err(Error::Config("no input covariates".into()));
    }
    let mut scored: Vec<(usize, S)> = (0..m)
        .map(|j| {
            let score = log_marginal(&[ctx.x.col(j)], ctx.y, ctx.spec).map_or(S::neg_infinity(), |(v, _)| v);
            (j, score)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    let target = m.min(schedule.population_size);
    let q0 = schedule.preselect_q0.unwrap_or(target).min(target);
    let mut order: Vec<usize> = scored.iter().map(|x| x.0).collect();
    order[q0..].shuffle(rng);

    let mut basis = OrthoBasis::with_intercept(ctx.x.rows());
    let mut features = Vec::with_capacity(target);
    for j in order {
        if features.len() == target {
            break;
        }
        let f: FeatureRef<S> = Arc::new(Feature::input(j));
        let col = ctx.x.col(j);
        if is_redundant_in(&f, col, features.iter().map(|f: &FeatureRef<S>| f.key()), &basis) {
            continue;
        }
        basis.push(col);
        features.push(f);
    }
    let protected = features.iter().take(protected).map(|f| f.key().to_string()).collect();
    Ok(Population { features, protected })
}

/// Builds `S_{t+1}` from `S_t` and the inclusion probabilities of the phase.
#[allow(clippy::too_many_arguments)]
pub fn evolve_population<S: Scalar, R: Rng + ?Sized>(
    current: &Population<S>,
    inclusion: &BTreeMap<String, S>,
    originals: &[FeatureRef<S>],
    schedule: &ScheduleConfig,
    gen: &Generator<'_, S>,
    cache: &mut ColumnCache<S>,
    rng: &mut R,
    kinds: Option<&mut [usize; 4]>,
) -> Result<Population<S>> {
    let s = schedule.population_size;
    let prob = |f: &FeatureRef<S>| inclusion.get(f.key()).copied().unwrap_or(S::zero());
    let mut ranked: Vec<usize> = (0..current.features.len()).collect();
    ranked.sort_by(|&a, &b| {
        prob(&current.features[b])
            .partial_cmp(&prob(&current.features[a]))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let floor = s.div_ceil(4);
    let threshold = S::lit(schedule.keep_threshold);
    let mut keep = vec![false; current.features.len()];
    for (rank, &i) in ranked.iter().enumerate() {
        let f = &current.features[i];
        keep[i] = rank < floor || prob(f) >= threshold || current.protected.iter().any(|k| k == f.key());
    }

    let n = gen.fit.x.rows();
    let mut basis = OrthoBasis::with_intercept(n);
    let mut next: Vec<FeatureRef<S>> = Vec::with_capacity(s);
    for (i, f) in current.features.iter().enumerate() {
        if keep[i] {
            basis.push(&gen.column(f, cache)?);
            next.push(Arc::clone(f));
        }
    }

    let mut parents: Vec<FeatureRef<S>> = current.features.clone();
    let mut weights: Vec<f64> =
        parents.iter().map(|f| prob(f).to_f64_lossy() + schedule.parent_floor).collect();
    let mut seen: HashSet<String> = parents.iter().map(|f| f.key().to_string()).collect();
    for o in originals {
        if seen.insert(o.key().to_string()) {
            parents.push(Arc::clone(o));
            weights.push(schedule.parent_floor);
        }
    }
    let pool = Pool::weighted(parents, weights)?;

    let mut kinds = kinds;
    while next.len() < s {
        let mut placed = false;
        for _ in 0..MAX_GENERATION_ATTEMPTS {
            let kind = draw_kind(&schedule.kind_probs, rng);
            if let Some(k) = kinds.as_deref_mut() {
                k[FeatureKind::ALL.iter().position(|x| *x == kind).unwrap()] += 1;
            }
            let Ok(f) = gen.generate(kind, &pool, originals, cache, rng) else { continue };
            let Ok(col) = gen.column(&f, cache) else { continue };
            if is_redundant_in(&f, &col, next.iter().map(|x| x.key()), &basis) {
                continue;
            }
            basis.push(&col);
            next.push(f);
            placed = true;
            break;
        }
        if placed {
            continue;
        }
        // fallback: an unused original covariate, then the best dropped feature
        let mut candidates: Vec<FeatureRef<S>> = originals.to_vec();
        candidates.shuffle(rng);
        candidates.extend(ranked.iter().filter(|&&i| !keep[i]).map(|&i| Arc::clone(&current.features[i])));
        let mut filled = false;
        for f in candidates {
            let Ok(col) = gen.column(&f, cache) else { continue };
            if !is_redundant_in(&f, &col, next.iter().map(|x| x.key()), &basis) {
                basis.push(&col);
                next.push(f);
                filled = true;
                break;
            }
        }
        if !filled {
            debug!("population left with {} of {s} features: no admissible replacement", next.len());
            break;
        }
    }
    Ok(Population { features: next, protected: current.protected.clone() })
}

/// Diagnostics of one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLog {
    pub phase: usize,
    pub steps: usize,
    pub store_size: usize,
    pub new_models: usize,
    pub best_log_posterior: f64,
    pub population: Vec<String>,
}

/// Output of one chain.
#[derive(Debug, Clone)]
pub struct RunSummary<S> {
    /// Marginal inclusion probability over the whole-run store.
    pub feature_posteriors: BTreeMap<String, f64>,
    /// Posterior of every visited model.
    pub model_posteriors: Option<Vec<(String, f64)>>,
    /// `s_b`: log of the total unnormalized mass of the visited models.
    pub mass_s_b: f64,
    pub model_count: usize,
    pub seed: u64,
    /// Every feature appearing in a visited model.
    pub features: BTreeMap<String, FeatureRef<S>>,
    pub store: VisitedStore<S>,
    pub phases: Vec<PhaseLog>,
    /// Set when the chain stopped early; partial results are still reported.
    pub failure: Option<String>,
}

/// Runs one GMJMCMC chain on covariates `ctx.x`.
pub fn run_chain<S: Scalar>(ctx: &FitContext<'_, S>, cfg: &ChainConfig, seed: u64) -> Result<RunSummary<S>> {
    cfg.validate()?;
    ctx.spec.validate_response(ctx.y)?;
    if ctx.x.rows() != ctx.y.len() {
        return Err(Error::Dimension(format!("{} data rows but {} responses", ctx.x.rows(), ctx.y.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sched = &cfg.schedule;
    let originals: Vec<FeatureRef<S>> = (0..ctx.x.cols()).map(|j| Arc::new(Feature::input(j))).collect();
    let gen = Generator {
        lib: &cfg.library,
        strategy: cfg.strategy,
        constraints: cfg.constraints,
        fit: FitContext { x: ctx.x, y: ctx.y, spec: ctx.spec },
    };
    let mut store = VisitedStore::new();
    let mut cache = ColumnCache::new();
    let mut pop = init_population(ctx, sched, sched.protected, &mut rng)?;
    let mut current: Vec<String> = Vec::new();
    let mut phases = Vec::with_capacity(sched.populations);
    let mut inclusion: BTreeMap<String, S> = BTreeMap::new();
    let mut failure = None;
    let log_a = S::lit(cfg.log_a);

    for phase in 0..sched.populations {
        if phase > 0 {
            pop = evolve_population(&pop, &inclusion, &originals, sched, &gen, &mut cache, &mut rng, None)?;
            // keep the column cache bounded by the live features
            let live: HashSet<&str> = pop.features.iter().chain(&originals).map(|f| f.key()).collect();
            cache.retain(|k, _| live.contains(k.as_str()));
        }
        let columns = match pop.features.iter().map(|f| gen.column(f, &mut cache)).collect::<Result<Vec<_>>>() {
            Ok(c) => c,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let last = phase + 1 == sched.populations;
        let mut ev = PopulationEvaluator::new(
            pop.features.clone(),
            columns,
            ctx.x,
            ctx.y,
            ctx.spec,
            log_a,
            cfg.kernel.max_features,
            cfg.marginal_mode(seed),
            &mut store,
        )?;
        let start: Gamma = pop.features.iter().map(|f| current.iter().any(|k| k == f.key())).collect();
        let mut state = ChainState::new(start, &mut ev);
        let fixed = if phase == 0 { sched.n_init } else { sched.n_expl };
        let mut steps = 0;
        if !last || phase == 0 {
            for _ in 0..fixed {
                mjmcmc_step(&mut state, &cfg.kernel, &mut ev, &mut rng);
            }
            steps = fixed;
        }
        if last {
            let base = if phase == 0 { 0 } else { ev.new_models() };
            let target = if phase == 0 { sched.n_final } else { base + sched.n_final };
            let mut extra = 0;
            let need = |ev: &PopulationEvaluator<'_, S>| {
                if phase == 0 { ev.store().len() < target } else { ev.new_models() < target }
            };
            while need(&ev) && extra < sched.max_final_steps {
                mjmcmc_step(&mut state, &cfg.kernel, &mut ev, &mut rng);
                extra += 1;
            }
            steps += extra;
        }
        let keys = ev.visited_keys();
        let new_models = ev.new_models();
        let feats = ev.features().to_vec();
        drop(ev);
        inclusion = store.inclusion_over(keys.iter().map(|k| k.as_str())).unwrap_or_default();
        if let Some(gap) = sched.prune_gap {
            let removed = store.prune(S::lit(gap));
            debug!("seed {seed} phase {phase}: pruned {removed} negligible models");
        }
        current = feats
            .iter()
            .zip(&state.current)
            .filter(|(_, &on)| on)
            .map(|(f, _)| f.key().to_string())
            .collect();
        let best = store.records().map(|(_, r)| r.log_mass().to_f64_lossy()).fold(f64::NEG_INFINITY, f64::max);
        let log = PhaseLog {
            phase,
            steps,
            store_size: store.len(),
            new_models,
            best_log_posterior: best,
            population: pop.keys(),
        };
        info!(
            "seed {seed} phase {phase}: {} models in store, best log posterior {best:.4}, population [{}]",
            store.len(),
            log.population.join(", ")
        );
        phases.push(log);
    }
    summarize(store, seed, phases, failure)
}

fn summarize<S: Scalar>(
    store: VisitedStore<S>,
    seed: u64,
    phases: Vec<PhaseLog>,
    failure: Option<String>,
) -> Result<RunSummary<S>> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    let feature_posteriors =
        store.inclusion_probabilities()?.into_iter().map(|(k, v)| (k, v.to_f64_lossy())).collect();
    let model_posteriors =
        Some(store.posterior()?.into_iter().map(|(k, p)| (k.to_string(), p.to_f64_lossy())).collect());
    Ok(RunSummary {
        feature_posteriors,
        model_posteriors,
        mass_s_b: store.log_mass().to_f64_lossy(),
        model_count: store.len(),
        seed,
        features: store.features(),
        store,
        phases,
        failure,
    })
}
