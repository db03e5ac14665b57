//! Evolutionary search over strategies: structure-guided initialization, k-point crossover,
//! random-reset mutation and NSGA-III selection, with per-generation front traces.

mod init;
mod nsga3;
mod operators;
mod refdirs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blocks::BlockTable;
use crate::dataset::Instance;
use crate::error::{Error, Result};
use crate::objectives::{evaluate, pareto_front, ObjectiveVector, Strategy};

pub use init::init_population;
pub use nsga3::{nondominated_fronts, nondominated_ranks, nsga3_select, Fitness};
pub use operators::{crossover_kpoint, mutate_counted, mutate_random_reset};
pub use refdirs::{generate_reference_directions, ReferenceDirections};

/// Parameters of one MOEA run.
#[derive(Clone, Debug, PartialEq)]
pub struct MoeaConfig {
    pub l_bar: usize,
    pub d_bar: usize,
    pub d_max: u32,
    pub s_max: usize,
    pub p_m: f64,
    pub p_c: f64,
    pub k_crossover: usize,
    pub n_reference_directions: usize,
    pub generations: usize,
    pub seed: u64,
}

impl MoeaConfig {
    /// Sets `p_m` and couples `p_c = 1 - p_m`.
    pub fn with_mutation(mut self, p_m: f64) -> Self {
        self.p_m = p_m;
        self.p_c = 1.0 - p_m;
        self
    }

    /// Named configurations `pm{05,10,15,20}-{S,M,L}`.
    ///
    /// The size letter sets `l_bar = d_bar` to 30, 45 or 60 and the generation target to
    /// 9230, 6340 or 4700.
    pub fn named(name: &str, d_max: u32, s_max: usize) -> Result<Self> {
        let err = || Error::validation(format!("unknown configuration name {name:?}"));
        let (pm, size) = name.split_once('-').ok_or_else(err)?;
        let p_m = match pm {
            "pm05" => 0.05,
            "pm10" => 0.10,
            "pm15" => 0.15,
            "pm20" => 0.20,
            _ => return Err(err()),
        };
        let (bar, generations) = match size {
            "S" => (30, 9230),
            "M" => (45, 6340),
            "L" => (60, 4700),
            _ => return Err(err()),
        };
        Ok(MoeaConfig {
            l_bar: bar,
            d_bar: bar,
            d_max,
            s_max,
            generations,
            ..MoeaConfig::default()
        }
        .with_mutation(p_m))
    }

    /// `t_max * l_bar + d_max * d_bar + 1`.
    pub fn population_size(&self, t_max: usize) -> usize {
        t_max * self.l_bar + self.d_max as usize * self.d_bar + 1
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_m) || !(0.0..=1.0).contains(&self.p_c) {
            return Err(Error::validation("p_m and p_c must lie in [0, 1]"));
        }
        if self.k_crossover == 0 {
            return Err(Error::validation("k_crossover must be at least 1"));
        }
        if self.n_reference_directions < 4 {
            return Err(Error::validation(
                "at least 4 reference directions are required",
            ));
        }
        Ok(())
    }
}

impl Default for MoeaConfig {
    fn default() -> Self {
        MoeaConfig {
            l_bar: 30,
            d_bar: 30,
            d_max: 3,
            s_max: 5,
            p_m: 0.10,
            p_c: 0.90,
            k_crossover: 2,
            n_reference_directions: 100,
            generations: 100,
            seed: 0,
        }
    }
}

/// A population member with its cached evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub strategy: Strategy,
    pub objectives: ObjectiveVector,
}

impl Individual {
    pub fn within_bounds(&self, d_max: u32, s_max: usize) -> bool {
        self.objectives.depth <= d_max && self.objectives.switches as usize <= s_max
    }

    fn fitness(&self, d_max: u32, s_max: usize) -> Fitness {
        let o = &self.objectives;
        Fitness {
            objectives: o.as_array(),
            violation: o.depth.saturating_sub(d_max) as f64
                + (o.switches as usize).saturating_sub(s_max) as f64,
        }
    }
}

/// Output of one seeded run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub seed: u64,
    /// Entry `r` holds the unique nondominated in-bounds points of the population after
    /// generation `r`; entry 0 is the initial population.
    pub generations: Vec<Vec<ObjectiveVector>>,
    pub final_population: Vec<Individual>,
}

fn in_bounds_front(pop: &[Individual], d_max: u32, s_max: usize) -> Vec<ObjectiveVector> {
    let points: Vec<ObjectiveVector> = pop
        .iter()
        .filter(|i| i.within_bounds(d_max, s_max))
        .map(|i| i.objectives)
        .collect();
    pareto_front(&points)
}

fn evaluated(instance: &Instance, strategies: Vec<Strategy>) -> Result<Vec<Individual>> {
    strategies
        .into_iter()
        .map(|s| {
            let objectives = evaluate(instance, &s)?;
            Ok(Individual {
                strategy: s,
                objectives,
            })
        })
        .collect()
}

fn tournament<R: Rng + ?Sized>(ranks: &[usize], rng: &mut R) -> usize {
    let a = rng.random_range(0..ranks.len());
    let b = rng.random_range(0..ranks.len());
    match ranks[a].cmp(&ranks[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

/// Runs the MOEA; see [`run_moea_observed`].
pub fn run_moea(instance: &Instance, config: &MoeaConfig) -> Result<RunTrace> {
    run_moea_observed(instance, config, |_, _| {})
}

/// Runs the MOEA, calling `observer(generation, population)` after initialization and after
/// every generation.
pub fn run_moea_observed(
    instance: &Instance,
    config: &MoeaConfig,
    observer: impl FnMut(usize, &[Individual]),
) -> Result<RunTrace> {
    let table = BlockTable::new(instance, instance.max_depth());
    run_with_table(instance, &table, config, observer)
}

fn run_with_table(
    instance: &Instance,
    table: &BlockTable,
    config: &MoeaConfig,
    mut observer: impl FnMut(usize, &[Individual]),
) -> Result<RunTrace> {
    config.check()?;
    let (d_max, s_max) = (config.d_max, config.s_max);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dirs = generate_reference_directions(config.n_reference_directions, 4, config.seed)?;
    let initial = init_population(
        instance,
        table,
        config.l_bar,
        config.d_bar,
        d_max,
        s_max,
        &mut rng,
    )?;
    let mut pop = evaluated(instance, initial)?;
    let size = pop.len();
    observer(0, &pop);
    let mut generations = vec![in_bounds_front(&pop, d_max, s_max)];

    for generation in 1..=config.generations {
        let fitness: Vec<Fitness> = pop.iter().map(|i| i.fitness(d_max, s_max)).collect();
        let ranks = nondominated_ranks(&fitness);
        let mut children = Vec::with_capacity(size + 1);
        while children.len() < size {
            let a = &pop[tournament(&ranks, &mut rng)].strategy;
            let b = &pop[tournament(&ranks, &mut rng)].strategy;
            let (x, y) = if rng.random_bool(config.p_c) {
                crossover_kpoint(a, b, config.k_crossover, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            children.push(mutate_random_reset(instance, &x, config.p_m, &mut rng));
            children.push(mutate_random_reset(instance, &y, config.p_m, &mut rng));
        }
        children.truncate(size);
        pop.extend(evaluated(instance, children)?);

        let fitness: Vec<Fitness> = pop.iter().map(|i| i.fitness(d_max, s_max)).collect();
        let keep = nsga3_select(&fitness, size, &dirs, &mut rng)?;
        let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
        pop = keep
            .into_iter()
            .map(|i| slots[i].take().expect("selected once"))
            .collect();
        observer(generation, &pop);
        generations.push(in_bounds_front(&pop, d_max, s_max));
    }
    Ok(RunTrace {
        seed: config.seed,
        generations,
        final_population: pop,
    })
}

/// Runs one seed per entry of `seeds` in parallel, sharing the block table.
pub fn run_seeds(instance: &Instance, config: &MoeaConfig, seeds: &[u64]) -> Result<Vec<RunTrace>> {
    let table = BlockTable::new(instance, instance.max_depth());
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = MoeaConfig {
                seed,
                ..config.clone()
            };
            run_with_table(instance, &table, &cfg, |_, _| {})
        })
        .collect()
}

/// Per generation, the Pareto front of the union of all seeds' fronts (unique points).
pub fn combine_seeds(traces: &[RunTrace]) -> Result<Vec<Vec<ObjectiveVector>>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let n = first.generations.len();
    if traces.iter().any(|t| t.generations.len() != n) {
        return Err(Error::validation("traces have different generation counts"));
    }
    Ok((0..n)
        .map(|r| {
            let union: Vec<ObjectiveVector> = traces
                .iter()
                .flat_map(|t| t.generations[r].iter().copied())
                .collect();
            pareto_front(&union)
        })
        .collect())
}

/// Nondominated in-bounds members of the final populations, one individual per unique
/// objective vector (the first seed's first occurrence).
pub fn final_front(traces: &[RunTrace], d_max: u32, s_max: usize) -> Vec<Individual> {
    let members: Vec<&Individual> = traces
        .iter()
        .flat_map(|t| t.final_population.iter())
        .filter(|i| i.within_bounds(d_max, s_max))
        .collect();
    let points: Vec<ObjectiveVector> = members.iter().map(|i| i.objectives).collect();
    pareto_front(&points)
        .into_iter()
        .map(|p| {
            (*members
                .iter()
                .find(|i| i.objectives == p)
                .expect("front point comes from a member"))
            .clone()
        })
        .collect()
}
