//! Genetic operators over strategy expressions.
//!
//! Every operator proposes a candidate and keeps it only if the whole
//! strategy still type-checks within the size bounds. After
//! [`MAX_ATTEMPTS`] failed proposals the parent is returned unchanged.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::strategy::{Expr, Kind, Shape, Strategy};

pub const MAX_ATTEMPTS: usize = 8;
/// Standard deviation of constant perturbations.
pub const CONST_SIGMA: f64 = 0.25;
/// Depth bound for freshly generated subtrees.
pub const FRESH_DEPTH: usize = 3;

/// Relative odds of each mutation operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationWeights {
    pub point: f64,
    pub perturb: f64,
    pub subtree: f64,
    pub swap: f64,
}

impl Default for MutationWeights {
    fn default() -> Self {
        MutationWeights {
            point: 1.0,
            perturb: 1.0,
            subtree: 1.0,
            swap: 0.5,
        }
    }
}

impl MutationWeights {
    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Op {
        let w = [self.point, self.perturb, self.subtree, self.swap].map(|x| x.max(0.0));
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Op::Subtree;
        }
        let mut u = rng.random::<f64>() * total;
        for (op, weight) in [Op::Point, Op::Perturb, Op::Subtree, Op::Swap].into_iter().zip(w) {
            if u < weight {
                return op;
            }
            u -= weight;
        }
        Op::Swap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Point,
    Perturb,
    Subtree,
    Swap,
}

/// Which expression of a strategy an operator touches.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Solution,
    Test,
    Tiebreak,
}

fn slots(s: &Strategy) -> Vec<Slot> {
    let mut v = vec![Slot::Solution, Slot::Test];
    if s.solution_tiebreak.is_some() {
        v.push(Slot::Tiebreak);
    }
    v
}

fn get(s: &Strategy, slot: Slot) -> &Expr {
    match slot {
        Slot::Solution => &s.expr_solution,
        Slot::Test => &s.expr_test,
        Slot::Tiebreak => s.solution_tiebreak.as_ref().expect("tiebreak slot only offered when present"),
    }
}

fn with(s: &Strategy, slot: Slot, e: Expr) -> Strategy {
    let mut out = s.clone();
    match slot {
        Slot::Solution => out.expr_solution = e,
        Slot::Test => out.expr_test = e,
        Slot::Tiebreak => out.solution_tiebreak = Some(e),
    }
    out
}

/// Applies one randomly chosen operator, retrying on invalid results.
pub fn mutate<R: Rng + ?Sized>(parent: &Strategy, rng: &mut R, weights: &MutationWeights) -> Strategy {
    for _ in 0..MAX_ATTEMPTS {
        let op = weights.pick(rng);
        let candidate = match op {
            Op::Point => point_swap(parent, rng),
            Op::Perturb => perturb_const(parent, rng),
            Op::Subtree => replace_subtree(parent, rng),
            Op::Swap => swap_subtrees(parent, rng),
        };
        if let Some(c) = candidate.filter(|c| c.check().is_ok()) {
            return c;
        }
    }
    parent.clone()
}

fn random_node<'a, R: Rng + ?Sized>(s: &'a Strategy, rng: &mut R) -> (Slot, usize, &'a Expr) {
    let slots = slots(s);
    let slot = slots[rng.random_range(0..slots.len())];
    let e = get(s, slot);
    let idx = rng.random_range(0..e.node_count());
    (slot, idx, e)
}

fn point_swap<R: Rng + ?Sized>(s: &Strategy, rng: &mut R) -> Option<Strategy> {
    let (slot, idx, e) = random_node(s, rng);
    let node = e.subtree(idx)?;
    let kind = node.kind();
    let options: Vec<Kind> = Kind::ALL
        .into_iter()
        .filter(|k| *k != kind && k.arity() == kind.arity())
        .collect();
    let new_kind = options[rng.random_range(0..options.len())];
    let children = node.children().into_iter().cloned().collect();
    let value = rng.random_range(-2.0..2.0);
    let replaced = e.replace(idx, Expr::build(new_kind, children, value)?)?;
    Some(with(s, slot, replaced))
}

fn perturb_const<R: Rng + ?Sized>(s: &Strategy, rng: &mut R) -> Option<Strategy> {
    let mut sites = Vec::new();
    for slot in slots(s) {
        for (i, node) in get(s, slot).preorder().into_iter().enumerate() {
            if let Expr::Const(v) = node {
                sites.push((slot, i, *v));
            }
        }
    }
    if sites.is_empty() {
        return None;
    }
    let (slot, idx, v) = sites[rng.random_range(0..sites.len())];
    Some(with(s, slot, get(s, slot).replace(idx, Expr::Const(perturb(v, rng)))?))
}

/// `v` plus Gaussian noise with standard deviation [`CONST_SIGMA`].
pub fn perturb<R: Rng + ?Sized>(v: f64, rng: &mut R) -> f64 {
    v + Normal::new(0.0, CONST_SIGMA).expect("valid sigma").sample(rng)
}

fn replace_subtree<R: Rng + ?Sized>(s: &Strategy, rng: &mut R) -> Option<Strategy> {
    let (slot, idx, e) = random_node(s, rng);
    let shape = e.subtree(idx)?.shape().ok()?;
    let fresh = random_tree(shape, FRESH_DEPTH, rng);
    Some(with(s, slot, e.replace(idx, fresh)?))
}

fn swap_subtrees<R: Rng + ?Sized>(s: &Strategy, rng: &mut R) -> Option<Strategy> {
    let a = &s.expr_solution;
    let b = &s.expr_test;
    let ia = rng.random_range(0..a.node_count());
    let ib = rng.random_range(0..b.node_count());
    let sa = a.subtree(ia)?.clone();
    let sb = b.subtree(ib)?.clone();
    let mut out = s.clone();
    out.expr_solution = a.replace(ia, sb)?;
    out.expr_test = b.replace(ib, sa)?;
    Some(out)
}

/// Grafts a random subtree of `donor` into `parent` at a node of the same
/// shape in the same expression slot.
pub fn crossover<R: Rng + ?Sized>(parent: &Strategy, donor: &Strategy, rng: &mut R) -> Strategy {
    for _ in 0..MAX_ATTEMPTS {
        let slot = if rng.random_bool(0.5) { Slot::Solution } else { Slot::Test };
        let (into, from) = (get(parent, slot), get(donor, slot));
        let at = rng.random_range(0..into.node_count());
        let Ok(shape) = into.subtree(at).expect("index in range").shape() else {
            continue;
        };
        let pool: Vec<&Expr> = from
            .preorder()
            .into_iter()
            .filter(|n| n.shape().ok() == Some(shape))
            .collect();
        if pool.is_empty() {
            continue;
        }
        let graft = pool[rng.random_range(0..pool.len())].clone();
        let Some(e) = into.replace(at, graft) else { continue };
        let child = with(parent, slot, e);
        if child.check().is_ok() {
            return child;
        }
    }
    parent.clone()
}

fn other(shape: Shape) -> Shape {
    match shape {
        Shape::Row => Shape::Col,
        Shape::Col => Shape::Row,
        Shape::Scalar => Shape::Scalar,
    }
}

fn random_const<R: Rng + ?Sized>(rng: &mut R) -> Expr {
    Expr::Const((rng.random_range(-2.0f64..2.0) * 4.0).round() / 4.0)
}

/// A random expression of `shape` with depth at most `depth`.
pub fn random_tree<R: Rng + ?Sized>(shape: Shape, depth: usize, rng: &mut R) -> Expr {
    if shape == Shape::Scalar {
        return random_const(rng);
    }
    if depth <= 1 || rng.random_bool(0.3) {
        return match shape {
            Shape::Row => Expr::RowPassCount,
            _ => [
                Expr::ColPassCount,
                Expr::IdfWeight,
                Expr::StrictnessWeight,
                Expr::ExcludeSelfConsensus,
            ][rng.random_range(0..4)]
            .clone(),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..7) {
        0 => Expr::normalize(random_tree(shape, d, rng)),
        1 => Expr::neg(random_tree(shape, d, rng)),
        2 => Expr::mean_over_passers(random_tree(other(shape), d, rng)),
        3 => Expr::mean_over_failers(random_tree(other(shape), d, rng)),
        op => {
            let a = random_tree(shape, d, rng);
            let b = if rng.random_bool(0.25) {
                random_const(rng)
            } else {
                random_tree(shape, d, rng)
            };
            match op {
                4 => Expr::sub(a, b),
                5 => Expr::add(a, b),
                _ => Expr::mul(a, b),
            }
        }
    }
}
