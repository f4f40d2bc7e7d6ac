//! Genetic-algorithm sizing of the robot for a prescribed workspace.
//!
//! The genome is the real vector `(f, e, rf, re)`. Fitness is coverage of the prescribed
//! points minus a size penalty `λ · Σgenes / Σupper`; genomes that cannot assemble at home
//! score [`INFEASIBLE_FITNESS`].
//!
//! Random streams: every individual of every generation draws from its own ChaCha8 stream,
//! `stream = generation << 32 | slot`, all keyed by the configured seed. Generation 0 is the
//! initial population. Fitness evaluation consumes no randomness, so it may be batched or
//! run in parallel without affecting the result.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::kinematics::RobotGeometry;
use crate::workspace::{coverage, PrescribedWorkspace};

/// Score of a genome that does not describe a buildable robot.
pub const INFEASIBLE_FITNESS: f64 = -1.0;

/// Extension of the blend-crossover interval on each side, as a fraction of the parent span.
pub const BLEND_EXTENSION: f64 = 0.1;

const RANDOM_SEARCH_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignError {
    #[error("invalid design bounds for `{param}`: need 0 < lower < upper, got [{lower}, {upper}]")]
    InvalidBounds {
        param: &'static str,
        lower: f64,
        upper: f64,
    },
    #[error("invalid GA config: {0}")]
    InvalidConfig(&'static str),
}

/// Inclusive search interval of one parameter, mm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParamRange {
    pub lower: f64,
    pub upper: f64,
}

impl ParamRange {
    pub const fn new(lower: f64, upper: f64) -> Self {
        ParamRange { lower, upper }
    }

    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DesignBounds {
    pub f: ParamRange,
    pub e: ParamRange,
    pub rf: ParamRange,
    pub re: ParamRange,
}

impl DesignBounds {
    pub const PARAM_NAMES: [&'static str; 4] = ["f", "e", "rf", "re"];

    pub fn ranges(&self) -> [ParamRange; 4] {
        [self.f, self.e, self.rf, self.re]
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        for (param, r) in Self::PARAM_NAMES.into_iter().zip(self.ranges()) {
            let ok =
                r.lower.is_finite() && r.upper.is_finite() && 0.0 < r.lower && r.lower < r.upper;
            if !ok {
                return Err(DesignError::InvalidBounds {
                    param,
                    lower: r.lower,
                    upper: r.upper,
                });
            }
        }
        Ok(())
    }

    pub fn upper_sum(&self) -> f64 {
        self.ranges().iter().map(|r| r.upper).sum()
    }

    pub fn contains(&self, genome: &Genome) -> bool {
        self.ranges()
            .iter()
            .zip(genome.0)
            .all(|(r, v)| r.lower <= v && v <= r.upper)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Genome {
        Genome(self.ranges().map(|r| rng.random_range(r.lower..=r.upper)))
    }
}

/// Candidate `(f, e, rf, re)` in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Genome(pub [f64; 4]);

impl Genome {
    pub fn from_geometry(g: &RobotGeometry) -> Self {
        Genome([g.f(), g.e(), g.rf(), g.re()])
    }

    pub fn to_geometry(&self) -> Option<RobotGeometry> {
        let [f, e, rf, re] = self.0;
        RobotGeometry::new(f, e, rf, re).ok()
    }

    pub fn size(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_sigma_fraction: f64,
    pub elitism_count: usize,
    pub seed: u64,
    pub size_penalty_weight: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 100,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_sigma_fraction: 0.05,
            elitism_count: 1,
            seed: 42,
            size_penalty_weight: 0.05,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        if self.population_size < 2 {
            return Err(DesignError::InvalidConfig("population_size must be >= 2"));
        }
        if self.tournament_size < 1 || self.tournament_size > self.population_size {
            return Err(DesignError::InvalidConfig(
                "tournament_size must be in [1, population_size]",
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(DesignError::InvalidConfig(
                "crossover_rate must be in [0, 1]",
            ));
        }
        if !(self.mutation_sigma_fraction > 0.0 && self.mutation_sigma_fraction < 1.0) {
            return Err(DesignError::InvalidConfig(
                "mutation_sigma_fraction must be in (0, 1)",
            ));
        }
        if self.elitism_count >= self.population_size {
            return Err(DesignError::InvalidConfig(
                "elitism_count must be < population_size",
            ));
        }
        if !(self.size_penalty_weight.is_finite() && self.size_penalty_weight >= 0.0) {
            return Err(DesignError::InvalidConfig(
                "size_penalty_weight must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Fitness evaluations a run with this config performs.
    pub fn evaluation_budget(&self) -> usize {
        self.population_size + self.generations * (self.population_size - self.elitism_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GenerationStats {
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GaResult {
    pub best: Genome,
    pub best_fitness: f64,
    /// One entry per generation, the initial population included.
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
}

/// Coverage minus the normalised size penalty, or [`INFEASIBLE_FITNESS`].
pub fn fitness(
    genome: &Genome,
    prescribed: &PrescribedWorkspace,
    size_penalty_weight: f64,
    bounds: &DesignBounds,
) -> f64 {
    match genome.to_geometry() {
        Some(g) => {
            coverage(&g, prescribed) - size_penalty_weight * genome.size() / bounds.upper_sum()
        }
        None => INFEASIBLE_FITNESS,
    }
}

fn stream_rng(seed: u64, generation: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 32) | slot);
    rng
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64], size: usize) -> usize {
    let mut winner = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let contender = rng.random_range(0..fitness.len());
        if fitness[contender] > fitness[winner] {
            winner = contender;
        }
    }
    winner
}

fn blend(rng: &mut ChaCha8Rng, a: &Genome, b: &Genome, bounds: &DesignBounds) -> Genome {
    let ranges = bounds.ranges();
    let mut child = [0.0; 4];
    for k in 0..4 {
        let lo = a.0[k].min(b.0[k]);
        let hi = a.0[k].max(b.0[k]);
        let ext = BLEND_EXTENSION * (hi - lo);
        child[k] = if hi > lo {
            ranges[k].clamp(rng.random_range(lo - ext..=hi + ext))
        } else {
            lo
        };
    }
    Genome(child)
}

fn mutate(rng: &mut ChaCha8Rng, genome: &mut Genome, bounds: &DesignBounds, sigma_fraction: f64) {
    for (v, r) in genome.0.iter_mut().zip(bounds.ranges()) {
        let noise = Normal::new(0.0, sigma_fraction * r.width())
            .expect("sigma is finite and positive")
            .sample(rng);
        *v = r.clamp(*v + noise);
    }
}

fn stats(fitness: &[f64]) -> GenerationStats {
    GenerationStats {
        best: fitness[argmax(fitness)],
        mean: fitness.iter().sum::<f64>() / fitness.len() as f64,
    }
}

/// Runs the GA with sequential fitness evaluation.
pub fn run_ga(
    bounds: &DesignBounds,
    prescribed: &PrescribedWorkspace,
    config: &GaConfig,
) -> Result<GaResult, DesignError> {
    run_ga_with(bounds, config, |genomes| {
        genomes
            .iter()
            .map(|g| fitness(g, prescribed, config.size_penalty_weight, bounds))
            .collect()
    })
}

/// Runs the GA with a caller-supplied batch evaluator, which must return one fitness per
/// genome in input order.
pub fn run_ga_with<F>(
    bounds: &DesignBounds,
    config: &GaConfig,
    mut evaluate: F,
) -> Result<GaResult, DesignError>
where
    F: FnMut(&[Genome]) -> Vec<f64>,
{
    bounds.validate()?;
    config.validate()?;
    let n = config.population_size;

    let mut population: Vec<Genome> = (0..n as u64)
        .map(|slot| bounds.sample(&mut stream_rng(config.seed, 0, slot)))
        .collect();
    let mut scores = evaluate(&population);
    assert_eq!(
        scores.len(),
        n,
        "evaluator returned the wrong number of scores"
    );
    let mut evaluations = n;
    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(stats(&scores));
    let mut best_index = argmax(&scores);
    let mut best = population[best_index];
    let mut best_fitness = scores[best_index];

    for generation in 1..=config.generations as u64 {
        let mut order: Vec<usize> = (0..n).collect();
        // Stable, so ties keep population order.
        order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));

        let mut next = Vec::with_capacity(n);
        let mut next_scores = Vec::with_capacity(n);
        for &i in order.iter().take(config.elitism_count) {
            next.push(population[i]);
            next_scores.push(scores[i]);
        }
        let mut offspring = Vec::with_capacity(n - config.elitism_count);
        for slot in config.elitism_count..n {
            let mut rng = stream_rng(config.seed, generation, slot as u64);
            let a = tournament(&mut rng, &scores, config.tournament_size);
            let b = tournament(&mut rng, &scores, config.tournament_size);
            let mut child = if rng.random::<f64>() < config.crossover_rate {
                blend(&mut rng, &population[a], &population[b], bounds)
            } else {
                population[a]
            };
            mutate(&mut rng, &mut child, bounds, config.mutation_sigma_fraction);
            offspring.push(child);
        }
        let offspring_scores = evaluate(&offspring);
        assert_eq!(offspring_scores.len(), offspring.len());
        evaluations += offspring.len();
        next.extend(offspring);
        next_scores.extend(offspring_scores);

        population = next;
        scores = next_scores;
        history.push(stats(&scores));
        best_index = argmax(&scores);
        if scores[best_index] > best_fitness {
            best_fitness = scores[best_index];
            best = population[best_index];
        }
    }

    Ok(GaResult {
        best,
        best_fitness,
        history,
        evaluations,
    })
}

/// Uniform random search baseline: `evaluations` genomes drawn from the bounds.
pub fn random_search(
    bounds: &DesignBounds,
    prescribed: &PrescribedWorkspace,
    size_penalty_weight: f64,
    evaluations: usize,
    seed: u64,
) -> Result<(Genome, f64), DesignError> {
    bounds.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RANDOM_SEARCH_STREAM);
    let mut best = (bounds.sample(&mut rng), f64::NEG_INFINITY);
    best.1 = fitness(&best.0, prescribed, size_penalty_weight, bounds);
    for _ in 1..evaluations {
        let g = bounds.sample(&mut rng);
        let score = fitness(&g, prescribed, size_penalty_weight, bounds);
        if score > best.1 {
            best = (g, score);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    use crate::kinematics::Pose;

    fn bounds() -> DesignBounds {
        DesignBounds {
            f: ParamRange::new(200.0, 600.0),
            e: ParamRange::new(50.0, 200.0),
            rf: ParamRange::new(80.0, 250.0),
            re: ParamRange::new(200.0, 500.0),
        }
    }

    fn g0() -> Genome {
        let s3 = libm::sqrt(3.0);
        Genome([200.0 * s3, 60.0 * s3, 150.0, 350.0])
    }

    fn target() -> PrescribedWorkspace {
        PrescribedWorkspace::new(vec![
            Pose::new(0.0, 0.0, -272.2),
            Pose::new(0.0, 0.0, -350.0),
        ])
        .unwrap()
    }

    #[test]
    fn fitness_without_penalty_is_coverage() {
        assert_eq!(fitness(&g0(), &target(), 0.0, &bounds()), 1.0);
    }

    #[test]
    fn fitness_penalises_size() {
        let want = 1.0 - 0.1 * g0().size() / 1550.0;
        assert!((fitness(&g0(), &target(), 0.1, &bounds()) - want).abs() < 1e-15);
    }

    #[test]
    fn infeasible_genome_scores_sentinel() {
        // a + rf - b = 220 >= re
        let mut g = g0();
        g.0[3] = 220.0;
        assert_eq!(fitness(&g, &target(), 0.05, &bounds()), INFEASIBLE_FITNESS);
    }

    #[test]
    fn config_validation() {
        let bad = [
            GaConfig {
                population_size: 1,
                ..GaConfig::default()
            },
            GaConfig {
                tournament_size: 0,
                ..GaConfig::default()
            },
            GaConfig {
                tournament_size: 51,
                ..GaConfig::default()
            },
            GaConfig {
                crossover_rate: 1.5,
                ..GaConfig::default()
            },
            GaConfig {
                mutation_sigma_fraction: 0.0,
                ..GaConfig::default()
            },
            GaConfig {
                elitism_count: 50,
                ..GaConfig::default()
            },
            GaConfig {
                size_penalty_weight: -1.0,
                ..GaConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(
                run_ga(&bounds(), &target(), &cfg),
                Err(DesignError::InvalidConfig(_))
            ));
        }
        let mut b = bounds();
        b.rf = ParamRange::new(100.0, 100.0);
        assert!(matches!(
            run_ga(&b, &target(), &GaConfig::default()),
            Err(DesignError::InvalidBounds { param: "rf", .. })
        ));
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let cfg = GaConfig {
            generations: 0,
            population_size: 8,
            ..GaConfig::default()
        };
        let r = run_ga(&bounds(), &target(), &cfg).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.evaluations, 8);
        assert_eq!(r.best_fitness, r.history[0].best);
    }

    #[test]
    fn best_is_monotone_and_in_bounds() {
        let cfg = GaConfig {
            generations: 15,
            population_size: 12,
            ..GaConfig::default()
        };
        let r = run_ga(&bounds(), &target(), &cfg).unwrap();
        assert_eq!(r.history.len(), 16);
        assert_eq!(r.evaluations, cfg.evaluation_budget());
        for w in r.history.windows(2) {
            assert!(w[1].best >= w[0].best);
        }
        let max = r
            .history
            .iter()
            .map(|s| s.best)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.best_fitness, max);
        assert!(bounds().contains(&r.best));
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = GaConfig {
            generations: 5,
            population_size: 10,
            ..GaConfig::default()
        };
        let a = run_ga(&bounds(), &target(), &cfg).unwrap();
        let b = run_ga(&bounds(), &target(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_ga(&bounds(), &target(), &GaConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.history, c.history);
    }
}
