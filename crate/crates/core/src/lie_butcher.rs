//! Planar rooted forests, the post-Lie product of the action connection,
//! elementary covariant differentials, iterated Lie derivatives, and Lie-series
//! partial sums.
//!
//! # Forest notation
//!
//! A leaf is written `•`. A tree whose root has children `τ₁ … τ_k` is written
//! `[τ₁ … τ_k]`, and a forest is its trees separated by single spaces. The
//! empty forest is `∅`. So `[•]` is the two-node chain, `• [•]` the forest of
//! a single node followed by that chain, and `[• •]` the cherry.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrators::{reference_trajectory, REFERENCE_TOL};
use crate::jet::Jet;
use crate::space::{CoefficientField, FieldExpr, Point, ScalarField};

/// Largest order accepted by [`generate_forests`].
pub const MAX_FOREST_ORDER: usize = 8;

/// Deepest jet nesting used when differentiating.
pub const MAX_DERIVATIVE_DEPTH: u32 = 8;

/// A planar (ordered) rooted tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlanarTree {
    children: Vec<PlanarTree>,
    nodes: usize,
}

/// An ordered sequence of planar trees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PlanarForest {
    trees: Vec<PlanarTree>,
}

impl PlanarTree {
    pub fn leaf() -> Self {
        PlanarTree {
            children: Vec::new(),
            nodes: 1,
        }
    }

    /// `B₊(τ₁, …, τ_k)`: graft the forest onto a new root.
    pub fn graft(children: PlanarForest) -> Self {
        let nodes = 1 + children.order();
        PlanarTree {
            children: children.trees,
            nodes,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn children(&self) -> &[PlanarTree] {
        &self.children
    }

    /// Children as a forest (`B₋`).
    pub fn branches(&self) -> PlanarForest {
        PlanarForest {
            trees: self.children.clone(),
        }
    }
}

impl PlanarForest {
    pub fn empty() -> Self {
        PlanarForest { trees: Vec::new() }
    }

    pub fn new(trees: Vec<PlanarTree>) -> Self {
        PlanarForest { trees }
    }

    pub fn single(tree: PlanarTree) -> Self {
        PlanarForest { trees: vec![tree] }
    }

    pub fn trees(&self) -> &[PlanarTree] {
        &self.trees
    }

    /// Total node count `|τ|`.
    pub fn order(&self) -> usize {
        self.trees.iter().map(|t| t.nodes).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

impl Ord for PlanarTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.nodes
            .cmp(&other.nodes)
            .then_with(|| self.children.cmp(&other.children))
    }
}

impl PartialOrd for PlanarTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded-lex: by order, then tree by tree (each tree by size, then branches).
impl Ord for PlanarForest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.trees.cmp(&other.trees))
    }
}

impl PartialOrd for PlanarForest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            return f.write_str("•");
        }
        f.write_str("[")?;
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for PlanarForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.trees.is_empty() {
            return f.write_str("∅");
        }
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for PlanarForest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "∅" || s.is_empty() {
            return Ok(PlanarForest::empty());
        }
        let chars: Vec<char> = s.chars().collect();
        let mut pos = 0;
        let forest = parse_forest(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::Domain(format!("trailing input in forest `{s}`")));
        }
        Ok(forest)
    }
}

fn parse_forest(c: &[char], pos: &mut usize) -> Result<PlanarForest> {
    let mut trees = Vec::new();
    loop {
        while *pos < c.len() && c[*pos] == ' ' {
            *pos += 1;
        }
        match c.get(*pos) {
            Some('•') => {
                *pos += 1;
                trees.push(PlanarTree::leaf());
            }
            Some('[') => {
                *pos += 1;
                let inner = parse_forest(c, pos)?;
                if c.get(*pos) != Some(&']') || inner.is_empty() {
                    return Err(Error::Domain("malformed tree".into()));
                }
                *pos += 1;
                trees.push(PlanarTree::graft(inner));
            }
            _ => break,
        }
    }
    Ok(PlanarForest { trees })
}

fn trees_of_order(n: usize) -> Vec<PlanarTree> {
    if n == 0 {
        return Vec::new();
    }
    forests_unchecked(n - 1)
        .into_iter()
        .map(PlanarTree::graft)
        .collect()
}

fn forests_unchecked(n: usize) -> Vec<PlanarForest> {
    if n == 0 {
        return vec![PlanarForest::empty()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        let heads = trees_of_order(first);
        let tails = forests_unchecked(n - first);
        for h in &heads {
            for t in &tails {
                let mut trees = Vec::with_capacity(1 + t.trees.len());
                trees.push(h.clone());
                trees.extend(t.trees.iter().cloned());
                out.push(PlanarForest { trees });
            }
        }
    }
    out
}

/// All planar forests with exactly `n` nodes, sorted graded-lex.
pub fn generate_forests(n: usize) -> Result<Vec<PlanarForest>> {
    if n > MAX_FOREST_ORDER {
        return Err(Error::SizeGuard(n));
    }
    let mut v = forests_unchecked(n);
    v.sort();
    Ok(v)
}

/// Planar forest factorial.
///
/// Every node is attached to its right sibling, or to its parent when it is
/// the rightmost child; this turns the forest into a single tree whose
/// ordinary tree factorial is returned. Recursively,
/// `(τ₁…τ_k)! = |τ₁…τ_k| · (τ₁…τ_{k−1})! · (B₋(τ_k))!`.
pub fn planar_factorial(forest: &PlanarForest) -> u64 {
    fn go(trees: &[PlanarTree]) -> u64 {
        match trees.split_last() {
            None => 1,
            Some((last, rest)) => {
                let size: usize = trees.iter().map(|t| t.nodes).sum();
                size as u64 * go(rest) * go(&last.children)
            }
        }
    }
    go(&forest.trees)
}

/// `(σ(τ), τ!, 1/(σ(τ)·τ!))` for the exact flow's planar character.
///
/// Planar forests carry no nontrivial automorphisms, so `σ ≡ 1`; `τ!` is
/// [`planar_factorial`].
pub fn sigma_factorial_character(forest: &PlanarForest) -> Result<(u64, u64, f64)> {
    if forest.order() > MAX_FOREST_ORDER {
        return Err(Error::SizeGuard(forest.order()));
    }
    let sigma = 1;
    let fact = planar_factorial(forest);
    Ok((sigma, fact, 1.0 / (sigma * fact) as f64))
}

/// `X ▷ Y`, the derivative of `Y`'s coefficient map along `X`.
pub fn post_lie_product(x: &CoefficientField, y: &CoefficientField) -> Result<CoefficientField> {
    if x.space() != y.space() {
        return Err(Error::Domain("post-Lie product across models".into()));
    }
    if y.regularity() < 1 {
        return Err(Error::Regularity {
            needed: 1,
            available: 0,
        });
    }
    Ok(CoefficientField::from_parts(
        x.space(),
        Arc::new(FieldExpr::PostLie(x.expr().clone(), y.expr().clone())),
        (y.regularity() - 1).min(x.regularity()),
        format!("({}) ▷ ({})", x.name(), y.name()),
    ))
}

fn post_lie_expr(x: &Arc<FieldExpr>, y: &Arc<FieldExpr>) -> Arc<FieldExpr> {
    Arc::new(FieldExpr::PostLie(x.clone(), y.clone()))
}

/// `(W₁ ⋯ W_k) ▷ Z` expanded by `(XW')▷Z = X▷(W'▷Z) − (X▷W')▷Z`, where `X▷`
/// acts on a word as a derivation.
fn word_act(word: &[Arc<FieldExpr>], z: &Arc<FieldExpr>) -> Vec<(f64, Arc<FieldExpr>)> {
    let Some((x, rest)) = word.split_first() else {
        return vec![(1.0, z.clone())];
    };
    let mut out = Vec::new();
    for (w, t) in word_act(rest, z) {
        out.push((w, post_lie_expr(x, &t)));
    }
    for j in 0..rest.len() {
        let mut mutated = rest.to_vec();
        mutated[j] = post_lie_expr(x, &rest[j]);
        for (w, t) in word_act(&mutated, z) {
            out.push((-w, t));
        }
    }
    out
}

fn tree_expr(tree: &PlanarTree, v: &Arc<FieldExpr>) -> Arc<FieldExpr> {
    if tree.children.is_empty() {
        return v.clone();
    }
    let word: Vec<Arc<FieldExpr>> = tree.children.iter().map(|c| tree_expr(c, v)).collect();
    Arc::new(FieldExpr::Combination(word_act(&word, v)))
}

/// The vector field `V_τ` of a tree.
pub fn elementary_field(tree: &PlanarTree, v: &CoefficientField) -> Result<CoefficientField> {
    let need = tree.nodes as u32;
    if v.regularity() + 1 < need {
        return Err(Error::Regularity {
            needed: need - 1,
            available: v.regularity(),
        });
    }
    Ok(CoefficientField::from_parts(
        v.space(),
        tree_expr(tree, v.expr()),
        v.regularity() + 1 - need,
        format!("V_{tree}"),
    ))
}

/// `D g(x)[V_X(x)]` where `g` is evaluated at one level deeper.
fn lie_jet(
    x_field: &FieldExpr,
    x: &[Jet],
    n: usize,
    cols: usize,
    depth: usize,
    g: &dyn Fn(&[Jet], usize) -> Jet,
) -> Jet {
    let dir = x_field.vector_jet(x, n, cols, depth);
    let seeded: Vec<Jet> = x
        .iter()
        .zip(dir.iter())
        .map(|(a, b)| Jet::seed(a, b, depth))
        .collect();
    g(&seeded, depth + 1).extract(depth)
}

/// Action of a concatenation word on `f`:
/// `(X W')(f) = X(W'(f)) − Σ_j (W' with W'_j ↦ X▷W'_j)(f)`.
fn word_apply(
    word: &[Arc<FieldExpr>],
    f: &ScalarField,
    x: &[Jet],
    n: usize,
    cols: usize,
    depth: usize,
) -> Jet {
    let Some((first, rest)) = word.split_first() else {
        return f.value_jet(x);
    };
    let mut acc = lie_jet(first, x, n, cols, depth, &|y, d| word_apply(rest, f, y, n, cols, d));
    for j in 0..rest.len() {
        let mut mutated = rest.to_vec();
        mutated[j] = post_lie_expr(first, &rest[j]);
        acc = &acc - &word_apply(&mutated, f, x, n, cols, depth);
    }
    acc
}

fn check_depth(needed: u32, v: &CoefficientField) -> Result<()> {
    if needed > MAX_DERIVATIVE_DEPTH {
        return Err(Error::Regularity {
            needed,
            available: MAX_DERIVATIVE_DEPTH,
        });
    }
    if needed > v.regularity() {
        return Err(Error::Regularity {
            needed,
            available: v.regularity(),
        });
    }
    Ok(())
}

/// `V_τ(f)(x)` for a forest `τ`.
pub fn elementary_differential(
    forest: &PlanarForest,
    v: &CoefficientField,
    f: &ScalarField,
    x: &Point,
) -> Result<f64> {
    check_depth(forest.order() as u32, v)?;
    if v.space() != x.space() || f.space() != x.space() {
        return Err(Error::Domain("field, function and point live in different models".into()));
    }
    let (n, cols) = x.space().ambient_shape();
    let word: Vec<Arc<FieldExpr>> = forest.trees.iter().map(|t| tree_expr(t, v.expr())).collect();
    Ok(word_apply(&word, f, &x.flat_jets(), n, cols, 0).real())
}

fn iterated_jet(v: &FieldExpr, f: &ScalarField, x: &[Jet], n: usize, cols: usize, depth: usize, k: u32) -> Jet {
    if k == 0 {
        return f.value_jet(x);
    }
    lie_jet(v, x, n, cols, depth, &|y, d| iterated_jet(v, f, y, n, cols, d, k - 1))
}

/// `V^k(f)(x)`.
pub fn iterated_lie_derivative(v: &CoefficientField, f: &ScalarField, x: &Point, k: u32) -> Result<f64> {
    check_depth(k, v)?;
    if v.space() != x.space() || f.space() != x.space() {
        return Err(Error::Domain("field, function and point live in different models".into()));
    }
    let (n, cols) = x.space().ambient_shape();
    Ok(iterated_jet(v.expr(), f, &x.flat_jets(), n, cols, 0, k).real())
}

/// `X(f)(x)`, the plain Lie derivative along any coefficient field.
pub fn lie_derivative(v: &CoefficientField, f: &ScalarField, x: &Point) -> Result<f64> {
    iterated_lie_derivative(v, f, x, 1)
}

/// Lie-series partial sum with a sampled remainder bound.
#[derive(Clone, Debug, PartialEq)]
pub struct LieSeriesSum {
    /// `f(x) + Σ_{k=1}^{p} h^k V^k(f)(x)/k!`.
    pub value: f64,
    /// `sup_{t ∈ grid ⊂ [0,h]} |V^{p+1}(f)(φ_t x)| · h^{p+1}/(p+1)!`.
    pub remainder_bound_probe: f64,
}

/// Number of intervals of the `t`-grid used by the remainder probe.
pub const REMAINDER_GRID: usize = 64;

pub fn lie_series_partial_sum(
    v: &CoefficientField,
    f: &ScalarField,
    x: &Point,
    h: f64,
    p: u32,
) -> Result<LieSeriesSum> {
    let mut value = f.value(x);
    let mut fact = 1.0;
    for k in 1..=p {
        fact *= k as f64;
        value += h.powi(k as i32) * iterated_lie_derivative(v, f, x, k)? / fact;
    }
    fact *= (p + 1) as f64;
    let grid: Vec<f64> = (0..=REMAINDER_GRID)
        .map(|i| h * i as f64 / REMAINDER_GRID as f64)
        .collect();
    let path = if h == 0.0 {
        vec![x.clone()]
    } else {
        reference_trajectory(v, x, &grid, REFERENCE_TOL)?
    };
    let mut sup: f64 = 0.0;
    for y in &path {
        sup = sup.max(iterated_lie_derivative(v, f, y, p + 1)?.abs());
    }
    Ok(LieSeriesSum {
        value,
        remainder_bound_probe: sup * h.abs().powi(p as i32 + 1) / fact,
    })
}
