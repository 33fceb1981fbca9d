use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::{fit_constants, mae};
use crate::error::{Result, SymregError};
use crate::expr::{Expression, Node, N_VARS};
use crate::front::{FrontMember, ParetoFront};

#[derive(Debug, Clone, PartialEq)]
pub struct SymregConfig {
    pub population: usize,
    /// Generation budget. The search stops here unless the time cap hits first.
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// Share of offspring produced by mutation; the rest are copies.
    pub mutation_rate: f64,
    pub max_complexity: usize,
    /// Penalty per node, as a fraction of the training target's mean absolute
    /// deviation.
    pub parsimony: f64,
    /// Individuals carried over unchanged each generation.
    pub elite: usize,
    /// Candidate evaluations spent refining the constants of each offspring.
    pub constant_evals: usize,
    /// Evaluation budget for the final refinement of front candidates.
    pub polish_evals: usize,
    pub holdout_fraction: f64,
    /// Wall-clock cap, s. Runs that hit it are no longer reproducible.
    pub time_budget_s: f64,
    pub seed: u64,
}

impl Default for SymregConfig {
    fn default() -> Self {
        Self {
            population: 400,
            generations: 60,
            tournament: 5,
            crossover_rate: 0.6,
            mutation_rate: 0.35,
            max_complexity: 25,
            parsimony: 1e-3,
            elite: 4,
            constant_evals: 60,
            polish_evals: 4000,
            holdout_fraction: 0.2,
            time_budget_s: 60.0,
            seed: 0,
        }
    }
}

impl SymregConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SymregError::InvalidArgument(m));
        if self.population < 2 {
            return bad(format!("population {} below 2", self.population));
        }
        for (name, r) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} = {r} outside [0, 1]"));
            }
        }
        if self.crossover_rate + self.mutation_rate > 1.0 + 1e-12 {
            return bad("crossover_rate + mutation_rate exceeds 1".into());
        }
        if self.tournament == 0 || self.max_complexity == 0 {
            return bad("tournament size and max complexity must be positive".into());
        }
        if self.elite >= self.population {
            return bad(format!(
                "elite {} must be below the population {}",
                self.elite, self.population
            ));
        }
        if !(self.parsimony >= 0.0) {
            return bad(format!("parsimony {} must be nonnegative", self.parsimony));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad(format!("holdout fraction {} outside (0, 1)", self.holdout_fraction));
        }
        Ok(())
    }
}

/// Seeded 80/20-style split of `0..n`: `(train, holdout)` with
/// `ceil(n·fraction)` holdout rows, the same rule the tree learners use.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64 * fraction - 1e-9).ceil() as usize).clamp(1, n - 1);
    let test = idx.split_off(n - n_test);
    (idx, test)
}

#[derive(Clone)]
struct Individual {
    expr: Expression,
    mae: f64,
    fitness: f64,
}

struct Problem<'a> {
    train_x: Vec<[f64; N_VARS]>,
    train_y: Vec<f64>,
    test_x: Vec<[f64; N_VARS]>,
    test_y: Vec<f64>,
    node_penalty: f64,
    cfg: &'a SymregConfig,
    n_vars: usize,
    /// Largest magnitude for random constants.
    const_range: f64,
}

impl Problem<'_> {
    /// Scores `e` as given and in linearly scaled form `α + β·core`, and
    /// returns both, the variant to keep first.
    fn score(&self, e: &Expression) -> [Individual; 2] {
        let plain = self.score_with(&e.fold_constants(), self.cfg.constant_evals);
        let scaled = self.score_with(&self.linear_scaled(&plain.expr), self.cfg.constant_evals);
        if scaled.fitness < plain.fitness {
            [scaled, plain]
        } else {
            [plain, scaled]
        }
    }

    fn score_with(&self, e: &Expression, evals: usize) -> Individual {
        let expr = fit_constants(&e.fold_constants(), &self.train_x, &self.train_y, evals);
        let m = mae(&expr, &self.test_x, &self.test_y);
        let fitness = m + self.node_penalty * expr.complexity() as f64;
        Individual { expr, mae: m, fitness }
    }

    /// `α + β·core` with least-squares `α, β` on the training rows, where
    /// `core` is `e` stripped of an existing outer scaling. Returns `e`
    /// unchanged when its training output is constant or non-finite.
    fn linear_scaled(&self, e: &Expression) -> Expression {
        let core = match e.nodes() {
            [Node::Add, Node::Const(_), Node::Mul, Node::Const(_), rest @ ..] if !rest.is_empty() => {
                Expression::from_valid(rest.to_vec())
            }
            _ => e.clone(),
        };
        let p = core.predict(&self.train_x);
        let n = p.len() as f64;
        if p.iter().any(|v| !v.is_finite()) {
            return e.clone();
        }
        let (pm, ym) = (p.iter().sum::<f64>() / n, self.train_y.iter().sum::<f64>() / n);
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (pi, yi) in p.iter().zip(&self.train_y) {
            sxy += (pi - pm) * (yi - ym);
            sxx += (pi - pm) * (pi - pm);
        }
        if !(sxx > 0.0) {
            return e.clone();
        }
        let beta = sxy / sxx;
        let alpha = ym - beta * pm;
        if !(alpha.is_finite() && beta.is_finite()) || beta == 0.0 {
            return e.clone();
        }
        let mut nodes = vec![Node::Add, Node::Const(alpha), Node::Mul, Node::Const(beta)];
        nodes.extend_from_slice(core.nodes());
        Expression::from_valid(nodes)
    }

    fn terminal(&self, rng: &mut ChaCha8Rng) -> Node {
        if rng.random_bool(0.7) {
            Node::Var(rng.random_range(0..self.n_vars) as u8)
        } else {
            // Log-uniform magnitude from 0.01 up to the target's scale.
            let mag = 10f64.powf(rng.random_range(-2.0..self.const_range.log10().max(-1.0)));
            Node::Const(if rng.random_bool(0.5) { mag } else { -mag })
        }
    }

    fn operator(rng: &mut ChaCha8Rng) -> Node {
        const OPS: [Node; 6] = [Node::Add, Node::Sub, Node::Mul, Node::Div, Node::Neg, Node::Square];
        const WEIGHTS: [u32; 6] = [4, 3, 4, 2, 1, 2];
        let total: u32 = WEIGHTS.iter().sum();
        let mut pick = rng.random_range(0..total);
        for (op, w) in OPS.iter().zip(WEIGHTS) {
            if pick < w {
                return *op;
            }
            pick -= w;
        }
        unreachable!()
    }

    /// Random prefix-order tree; `full` forces operators down to `depth`.
    fn random_tree(&self, rng: &mut ChaCha8Rng, depth: usize, full: bool, out: &mut Vec<Node>) {
        if depth == 0 || (!full && rng.random_bool(0.3)) {
            out.push(self.terminal(rng));
            return;
        }
        let op = Self::operator(rng);
        out.push(op);
        for _ in 0..op.arity() {
            self.random_tree(rng, depth - 1, full, out);
        }
    }

    fn tournament<'p>(&self, pop: &'p [Individual], rng: &mut ChaCha8Rng) -> &'p Individual {
        let mut best = &pop[rng.random_range(0..pop.len())];
        for _ in 1..self.cfg.tournament {
            let c = &pop[rng.random_range(0..pop.len())];
            if c.fitness < best.fitness {
                best = c;
            }
        }
        best
    }

    fn crossover(&self, a: &Expression, b: &Expression, rng: &mut ChaCha8Rng) -> Expression {
        let i = rng.random_range(0..a.complexity());
        let j = rng.random_range(0..b.complexity());
        a.replace(i, &b.nodes()[j..b.subtree_end(j)])
    }

    fn mutate(&self, a: &Expression, rng: &mut ChaCha8Rng) -> Expression {
        let i = rng.random_range(0..a.complexity());
        if rng.random_bool(0.5) {
            let mut sub = Vec::new();
            let depth = rng.random_range(0..=3);
            self.random_tree(rng, depth, false, &mut sub);
            return a.replace(i, &sub);
        }
        let mut e = a.clone();
        let n = &mut e.nodes_mut()[i];
        *n = match *n {
            Node::Const(c) => {
                if rng.random_bool(0.5) {
                    Node::Const(c * rng.random_range(0.5..2.0))
                } else {
                    self.terminal(rng)
                }
            }
            Node::Var(_) => self.terminal(rng),
            Node::Neg => Node::Square,
            Node::Square => Node::Neg,
            _ => [Node::Add, Node::Sub, Node::Mul, Node::Div][rng.random_range(0..4)],
        };
        e
    }

    fn offspring(&self, pop: &[Individual], rng: &mut ChaCha8Rng) -> Option<Expression> {
        let r: f64 = rng.random();
        let parent = self.tournament(pop, rng);
        let child = if r < self.cfg.crossover_rate {
            let other = self.tournament(pop, rng);
            self.crossover(&parent.expr, &other.expr, rng)
        } else if r < self.cfg.crossover_rate + self.cfg.mutation_rate {
            self.mutate(&parent.expr, rng)
        } else {
            return None;
        };
        Some(if child.complexity() <= self.cfg.max_complexity {
            child
        } else {
            parent.expr.clone()
        })
    }
}

fn mean_abs_deviation(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).abs()).sum::<f64>() / y.len() as f64
}

fn r_squared(e: &Expression, x: &[[f64; N_VARS]], y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (row, &t) in x.iter().zip(y) {
        ss_res += (e.eval_row(row) - t).powi(2);
        ss_tot += (t - mean).powi(2);
    }
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Evolves expressions of the first `x[i].len()` variables (at most four)
/// fitting `y`.
///
/// Rows are split into training and holdout sets by
/// `cfg.holdout_fraction`. Constants are refined on the training rows;
/// selection uses holdout MAE plus the parsimony penalty. Offspring are
/// produced sequentially from the seeded generator and scored in parallel,
/// so the front depends only on `cfg` unless the time cap cuts the run short.
pub fn evolve(x: &[Vec<f64>], y: &[f64], cfg: &SymregConfig) -> Result<ParetoFront> {
    cfg.validate()?;
    if cfg.generations == 0 || !(cfg.time_budget_s > 0.0) {
        return Err(SymregError::EmptyFront(
            "generation and time budgets must be positive".into(),
        ));
    }
    if x.len() != y.len() {
        return Err(SymregError::InvalidArgument(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if y.len() < 10 {
        return Err(SymregError::InvalidArgument(format!(
            "{} rows; need at least 10",
            y.len()
        )));
    }
    let n_vars = x[0].len();
    if n_vars == 0 || n_vars > N_VARS || x.iter().any(|r| r.len() != n_vars) {
        return Err(SymregError::InvalidArgument(format!(
            "rows must all have 1 to {N_VARS} values"
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(SymregError::InvalidArgument("non-finite data".into()));
    }
    let started = Instant::now();
    let cap = Duration::from_secs_f64(cfg.time_budget_s);

    let rows: Vec<[f64; N_VARS]> = x
        .iter()
        .map(|r| {
            let mut a = [0.0; N_VARS];
            a[..n_vars].copy_from_slice(r);
            a
        })
        .collect();
    let (train, test) = holdout_split(y.len(), cfg.holdout_fraction, cfg.seed);
    let pick_x = |idx: &[usize]| idx.iter().map(|&i| rows[i]).collect::<Vec<_>>();
    let pick_y = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let train_y = pick_y(&train);
    let scale = mean_abs_deviation(&train_y).max(f64::MIN_POSITIVE);
    let problem = Problem {
        train_x: pick_x(&train),
        test_x: pick_x(&test),
        test_y: pick_y(&test),
        node_penalty: cfg.parsimony * scale,
        train_y,
        cfg,
        n_vars,
        const_range: y.iter().fold(10.0, |m: f64, v| m.max(v.abs())),
    };

    // Stream 0 seeds the split above; search draws from stream 1.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let mut seeds = Vec::with_capacity(cfg.population);
    // Every variable on its own, then ramped half-and-half trees.
    seeds.extend((0..n_vars.min(cfg.population)).map(Expression::var));
    for k in seeds.len()..cfg.population {
        let depth = 1 + k % 4;
        let mut nodes = Vec::new();
        problem.random_tree(&mut rng, depth, k % 2 == 0, &mut nodes);
        let e = Expression::from_valid(nodes);
        seeds.push(if e.complexity() <= cfg.max_complexity {
            e
        } else {
            Expression::var(k % n_vars)
        });
    }
    let scored: Vec<[Individual; 2]> = seeds.par_iter().map(|e| problem.score(e)).collect();
    let mut pop: Vec<Individual> = scored.iter().map(|[keep, _]| keep.clone()).collect();

    // Lowest holdout MAE seen at each complexity; first found wins ties.
    let mut archive: BTreeMap<usize, (f64, Expression)> = BTreeMap::new();
    let mut record = |evaluated: std::iter::Flatten<std::slice::Iter<'_, [Individual; 2]>>| {
        for ind in evaluated {
            let c = ind.expr.complexity();
            match archive.get(&c) {
                Some((m, _)) if *m <= ind.mae => {}
                _ => {
                    archive.insert(c, (ind.mae, ind.expr.clone()));
                }
            }
        }
    };
    record(scored.iter().flatten());
    let best_mae = |pop: &[Individual]| pop.iter().map(|i| i.mae).fold(f64::INFINITY, f64::min);
    let mut history = vec![best_mae(&pop)];

    let mut generations = 0;
    while generations < cfg.generations && started.elapsed() < cap {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&i, &j| pop[i].fitness.total_cmp(&pop[j].fitness).then(i.cmp(&j)));
        let mut next: Vec<Individual> = order[..cfg.elite].iter().map(|&i| pop[i].clone()).collect();
        // The lowest-MAE individual survives even when parsimony ranks it lower.
        let most_accurate = (0..pop.len()).min_by(|&i, &j| pop[i].mae.total_cmp(&pop[j].mae).then(i.cmp(&j)));
        if let Some(i) = most_accurate.filter(|i| !order[..cfg.elite].contains(i)) {
            next.push(pop[i].clone());
        }

        let mut fresh = Vec::new();
        while next.len() + fresh.len() < cfg.population {
            match problem.offspring(&pop, &mut rng) {
                Some(e) => fresh.push(e),
                None => next.push(problem.tournament(&pop, &mut rng).clone()),
            }
        }
        let scored: Vec<[Individual; 2]> = fresh.par_iter().map(|e| problem.score(e)).collect();
        record(scored.iter().flatten());
        next.extend(scored.into_iter().map(|[keep, _]| keep));
        pop = next;
        generations += 1;
        history.push(best_mae(&pop));
    }

    // Give each complexity's best a larger constant budget; keep the result
    // only where holdout error does not get worse.
    let polished: Vec<(usize, (f64, Expression))> = archive
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, (m, e))| {
            let p = problem.score_with(&e, cfg.polish_evals);
            debug_assert!(p.expr.complexity() <= c);
            if p.mae <= m && p.expr.complexity() == c {
                (c, (p.mae, p.expr))
            } else {
                (c, (m, e))
            }
        })
        .collect();

    let mut members = Vec::new();
    let mut last = f64::INFINITY;
    for (complexity, (m, expr)) in &polished {
        let complexity = *complexity;
        if *m < last && m.is_finite() {
            last = *m;
            members.push(FrontMember {
                complexity,
                mae: *m,
                r2: r_squared(expr, &problem.test_x, &problem.test_y),
                expression: expr.clone(),
            });
        }
    }
    if members.is_empty() {
        return Err(SymregError::EmptyFront(
            "no expression evaluated to finite values".into(),
        ));
    }
    Ok(ParetoFront {
        members,
        generations,
        best_mae_history: history,
    })
}
