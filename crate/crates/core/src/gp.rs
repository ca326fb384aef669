//! Expression trees for the redundancy mappings.
//!
//! Every tree is a single-input function of the source feature X. The
//! function catalog is deliberately skewed toward many-to-one shapes (folding
//! functions make redundancy harder for linear detectors to spot): sin, tan,
//! tanh, log, exp, sqrt, square, cube, neg, +, mul, max, min, pow, and a
//! ternary if. cos, subtraction, and division are intentionally absent —
//! cos duplicates sin's fold, and a−a / a÷a degenerate to constants.
//! Terminals are always X; there are no random constants.
//!
//! There are no protected operators. A tree whose final output contains any
//! NaN or ±Inf is *invalid* as a value-level outcome, and the evolution layer
//! ranks invalid individuals below every valid one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Sin,
    Tan,
    Tanh,
    Log,
    Exp,
    Sqrt,
    Square,
    Cube,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Mul,
    Max,
    Min,
    Pow,
}

const UNARY_OPS: [UnaryOp; 9] = [
    UnaryOp::Sin,
    UnaryOp::Tan,
    UnaryOp::Tanh,
    UnaryOp::Log,
    UnaryOp::Exp,
    UnaryOp::Sqrt,
    UnaryOp::Square,
    UnaryOp::Cube,
    UnaryOp::Neg,
];

const BINARY_OPS: [BinaryOp; 5] = [
    BinaryOp::Add,
    BinaryOp::Mul,
    BinaryOp::Max,
    BinaryOp::Min,
    BinaryOp::Pow,
];

impl UnaryOp {
    fn token(self) -> &'static str {
        match self {
            UnaryOp::Sin => "sin",
            UnaryOp::Tan => "tan",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Log => "log",
            UnaryOp::Exp => "exp",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Square => "square",
            UnaryOp::Cube => "cube",
            UnaryOp::Neg => "neg",
        }
    }

    fn apply(self, a: f64) -> f64 {
        match self {
            UnaryOp::Sin => a.sin(),
            UnaryOp::Tan => a.tan(),
            UnaryOp::Tanh => a.tanh(),
            UnaryOp::Log => a.ln(),
            UnaryOp::Exp => a.exp(),
            UnaryOp::Sqrt => a.sqrt(),
            UnaryOp::Square => a * a,
            UnaryOp::Cube => a * a * a,
            UnaryOp::Neg => -a,
        }
    }
}

impl BinaryOp {
    fn token(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Mul => "mul",
            BinaryOp::Max => "max",
            BinaryOp::Min => "min",
            BinaryOp::Pow => "pow",
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Mul => a * b,
            // NaN-propagating max/min: the std float versions silently drop
            // NaN operands, which would hide invalid intermediates.
            BinaryOp::Max => {
                if a.is_nan() || b.is_nan() {
                    f64::NAN
                } else if a >= b {
                    a
                } else {
                    b
                }
            }
            BinaryOp::Min => {
                if a.is_nan() || b.is_nan() {
                    f64::NAN
                } else if a <= b {
                    a
                } else {
                    b
                }
            }
            BinaryOp::Pow => a.powf(b),
        }
    }
}

/// One expression node. Arity is enforced by the shape of the variants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    X,
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    /// if(c, t, e): t where c ≥ 0, e elsewhere, selected per element.
    If(Box<Node>, Box<Node>, Box<Node>),
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::X => 1,
            Node::Unary(_, a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            Node::If(c, t, e) => 1 + c.depth().max(t.depth()).max(e.depth()),
        }
    }

    fn node_count(&self) -> usize {
        match self {
            Node::X => 1,
            Node::Unary(_, a) => 1 + a.node_count(),
            Node::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
            Node::If(c, t, e) => 1 + c.node_count() + t.node_count() + e.node_count(),
        }
    }

    /// Evaluates the subtree over all instances at once. May contain
    /// non-finite elements; the caller checks the final output.
    fn eval(&self, inputs: &[f64]) -> Vec<f64> {
        match self {
            Node::X => inputs.to_vec(),
            Node::Unary(op, a) => {
                let mut v = a.eval(inputs);
                for x in v.iter_mut() {
                    *x = op.apply(*x);
                }
                v
            }
            Node::Binary(op, a, b) => {
                let mut va = a.eval(inputs);
                let vb = b.eval(inputs);
                for (x, &y) in va.iter_mut().zip(vb.iter()) {
                    *x = op.apply(*x, y);
                }
                va
            }
            Node::If(c, t, e) => {
                let vc = c.eval(inputs);
                let mut vt = t.eval(inputs);
                let ve = e.eval(inputs);
                // Per-element selection: a NaN in the branch that is not
                // selected never reaches the output.
                for i in 0..vt.len() {
                    if !(vc[i] >= 0.0) {
                        vt[i] = ve[i];
                    }
                }
                vt
            }
        }
    }

    /// The `index`-th node in preorder (root = 0).
    fn get(&self, index: usize) -> Option<&Node> {
        fn walk<'a>(node: &'a Node, index: &mut usize) -> Option<&'a Node> {
            if *index == 0 {
                return Some(node);
            }
            *index -= 1;
            match node {
                Node::X => None,
                Node::Unary(_, a) => walk(a, index),
                Node::Binary(_, a, b) => walk(a, index).or_else(|| walk(b, index)),
                Node::If(c, t, e) => walk(c, index)
                    .or_else(|| walk(t, index))
                    .or_else(|| walk(e, index)),
            }
        }
        let mut index = index;
        walk(self, &mut index)
    }

    /// Replaces the `index`-th preorder node with `subtree`.
    fn replace(&mut self, index: usize, subtree: Node) {
        fn walk(node: &mut Node, index: &mut usize, subtree: &mut Option<Node>) {
            if *index == 0 {
                *node = subtree.take().expect("replace applied twice");
                return;
            }
            *index -= 1;
            match node {
                Node::X => {}
                Node::Unary(_, a) => walk(a, index, subtree),
                Node::Binary(_, a, b) => {
                    walk(a, index, subtree);
                    if subtree.is_some() {
                        walk(b, index, subtree);
                    }
                }
                Node::If(c, t, e) => {
                    walk(c, index, subtree);
                    if subtree.is_some() {
                        walk(t, index, subtree);
                    }
                    if subtree.is_some() {
                        walk(e, index, subtree);
                    }
                }
            }
        }
        let mut index = index;
        let mut subtree = Some(subtree);
        walk(self, &mut index, &mut subtree);
        debug_assert!(subtree.is_none(), "replace index out of bounds");
    }

    fn write_sexpr(&self, out: &mut String) {
        match self {
            Node::X => out.push('X'),
            Node::Unary(op, a) => {
                out.push('(');
                out.push_str(op.token());
                out.push(' ');
                a.write_sexpr(out);
                out.push(')');
            }
            Node::Binary(op, a, b) => {
                out.push('(');
                out.push_str(op.token());
                out.push(' ');
                a.write_sexpr(out);
                out.push(' ');
                b.write_sexpr(out);
                out.push(')');
            }
            Node::If(c, t, e) => {
                out.push_str("(if ");
                c.write_sexpr(out);
                out.push(' ');
                t.write_sexpr(out);
                out.push(' ');
                e.write_sexpr(out);
                out.push(')');
            }
        }
    }
}

/// An expression tree mapping the source feature to one redundant feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GpTree {
    root: Node,
}

/// Tree-construction method for [`random_tree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowMethod {
    /// Interior nodes may be terminals before the depth budget runs out.
    Grow,
    /// All-function interiors down to the depth budget.
    Full,
}

impl GpTree {
    pub fn new(root: Node) -> Self {
        GpTree { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Longest root-to-leaf path counted in nodes; a lone terminal has depth 1.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    /// The `index`-th preorder node (root = 0).
    pub fn node_at(&self, index: usize) -> Option<&Node> {
        self.root.get(index)
    }

    /// Returns a copy with the `index`-th preorder node replaced.
    pub fn with_replaced(&self, index: usize, subtree: Node) -> GpTree {
        let mut root = self.root.clone();
        root.replace(index, subtree);
        GpTree { root }
    }

    /// Applies the tree elementwise. `None` means the output contained a
    /// NaN or ±Inf element — the tree is invalid on these inputs.
    pub fn evaluate(&self, inputs: &[f64]) -> Option<Vec<f64>> {
        let out = self.root.eval(inputs);
        if out.iter().all(|v| v.is_finite()) {
            Some(out)
        } else {
            None
        }
    }

    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.root.write_sexpr(&mut out);
        out
    }
}

/// A candidate solution: n trees over the same source feature, one per
/// redundant feature, with the fitness cache the evolution loop maintains.
#[derive(Debug, Clone)]
pub struct Individual {
    pub trees: Vec<GpTree>,
    pub fitness: Option<crate::fitness::FitnessOutcome>,
}

impl Individual {
    pub fn new(trees: Vec<GpTree>) -> Self {
        Individual {
            trees,
            fitness: None,
        }
    }

    /// Total node count across all trees (the parsimony statistic).
    pub fn total_nodes(&self) -> usize {
        self.trees.iter().map(GpTree::node_count).sum()
    }
}

/// Builds a random arity-correct tree with depth ≤ max_depth.
pub fn random_tree<R: Rng>(max_depth: usize, method: GrowMethod, rng: &mut R) -> GpTree {
    assert!(max_depth >= 1, "max_depth must be >= 1");
    GpTree {
        root: random_node(max_depth, method, rng),
    }
}

fn random_node<R: Rng>(budget: usize, method: GrowMethod, rng: &mut R) -> Node {
    if budget <= 1 {
        return Node::X;
    }
    // 1 terminal + 9 unary + 5 binary + if = 16 primitives; grow draws from
    // all of them, full only from the 15 functions.
    let choice = match method {
        GrowMethod::Grow => rng.gen_range(0..16),
        GrowMethod::Full => rng.gen_range(1..16),
    };
    match choice {
        0 => Node::X,
        1..=9 => Node::Unary(
            UNARY_OPS[choice - 1],
            Box::new(random_node(budget - 1, method, rng)),
        ),
        10..=14 => Node::Binary(
            BINARY_OPS[choice - 10],
            Box::new(random_node(budget - 1, method, rng)),
            Box::new(random_node(budget - 1, method, rng)),
        ),
        _ => Node::If(
            Box::new(random_node(budget - 1, method, rng)),
            Box::new(random_node(budget - 1, method, rng)),
            Box::new(random_node(budget - 1, method, rng)),
        ),
    }
}

/// Parses the s-expression format written by [`GpTree::to_sexpr`].
pub fn parse_sexpr(s: &str) -> Result<GpTree> {
    let mut parser = Parser {
        src: s.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    let root = parser.node()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(Error::SexprParse {
            pos: parser.pos,
            msg: "trailing input after expression".into(),
        });
    }
    Ok(GpTree { root })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self) -> Result<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && !self.src[self.pos].is_ascii_whitespace()
            && self.src[self.pos] != b'('
            && self.src[self.pos] != b')'
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::SexprParse {
                pos: start,
                msg: "expected a token".into(),
            });
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).map_err(|_| {
            Error::SexprParse {
                pos: start,
                msg: "non-utf8 token".into(),
            }
        })?;
        Ok((start, text))
    }

    fn node(&mut self) -> Result<Node> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Err(Error::SexprParse {
                pos: self.pos,
                msg: "unexpected end of input".into(),
            });
        }
        if self.src[self.pos] != b'(' {
            let (start, text) = self.token()?;
            return if text == "X" {
                Ok(Node::X)
            } else {
                Err(Error::SexprParse {
                    pos: start,
                    msg: format!("unknown terminal '{text}' (only X is allowed)"),
                })
            };
        }
        self.pos += 1; // consume '('
        let (start, op) = self.token()?;
        enum OpKind {
            Unary(UnaryOp),
            Binary(BinaryOp),
            If,
        }
        let kind = if let Some(u) = UNARY_OPS.iter().find(|u| u.token() == op) {
            OpKind::Unary(*u)
        } else if let Some(b) = BINARY_OPS.iter().find(|b| b.token() == op) {
            OpKind::Binary(*b)
        } else if op == "if" {
            OpKind::If
        } else {
            return Err(Error::SexprParse {
                pos: start,
                msg: format!("unknown operator '{op}'"),
            });
        };
        let arity = match kind {
            OpKind::Unary(_) => 1,
            OpKind::Binary(_) => 2,
            OpKind::If => 3,
        };
        // collect arguments up to ')' so arity errors can name the operator
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            if self.pos >= self.src.len() {
                return Err(Error::SexprParse {
                    pos: self.pos,
                    msg: format!("unclosed '(' for operator '{op}'"),
                });
            }
            if self.src[self.pos] == b')' {
                self.pos += 1;
                break;
            }
            args.push(self.node()?);
        }
        if args.len() != arity {
            return Err(Error::SexprParse {
                pos: start,
                msg: format!(
                    "operator '{op}' expects {arity} argument(s), found {}",
                    args.len()
                ),
            });
        }
        let mut it = args.into_iter();
        Ok(match kind {
            OpKind::Unary(u) => Node::Unary(u, Box::new(it.next().unwrap())),
            OpKind::Binary(b) => Node::Binary(
                b,
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
            ),
            OpKind::If => Node::If(
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parse(s: &str) -> GpTree {
        parse_sexpr(s).unwrap()
    }

    #[test]
    fn square_evaluates_elementwise() {
        let t = parse("(square X)");
        assert_eq!(t.evaluate(&[0.5, 2.0]).unwrap(), vec![0.25, 4.0]);
    }

    #[test]
    fn neg_log_small_input() {
        let t = parse("(neg (log X))");
        let out = t.evaluate(&[0.001]).unwrap();
        assert!((out[0] - 6.907755).abs() < 1e-6, "got {}", out[0]);
    }

    #[test]
    fn negative_base_fractional_exponent_is_invalid() {
        let t = parse("(pow (neg X) X)");
        assert!(t.evaluate(&[0.5]).is_none());
    }

    #[test]
    fn overflow_is_invalid() {
        let t = parse("(exp (exp (exp X)))");
        assert!(t.evaluate(&[10.0]).is_none());
    }

    #[test]
    fn if_selects_per_element_and_masks_unselected_branch() {
        // else-branch log of a negative value is NaN, but only where the
        // condition selects it; selected elements must still be clean.
        let t = parse("(if X X (log X))");
        let out = t.evaluate(&[1.0, 4.0]).unwrap();
        assert_eq!(out, vec![1.0, 4.0]);
        // condition negative → else branch selected → NaN reaches output
        assert!(t.evaluate(&[-1.0]).is_none());
    }

    #[test]
    fn if_condition_boundary_is_nonnegative() {
        // c ≥ 0 takes the then-branch, strictly negative takes else.
        let t = parse("(if X (square X) (neg X))");
        let out = t.evaluate(&[0.0, -2.0, 3.0]).unwrap();
        assert_eq!(out, vec![0.0, 2.0, 9.0]);
    }

    #[test]
    fn max_min_propagate_nan() {
        let t = parse("(max X (log (neg X)))");
        // log(-2) = NaN; std f64::max would hide it, ours must not
        assert!(t.evaluate(&[2.0]).is_none());
    }

    #[test]
    fn deep_nested_listing_parses_to_depth_six() {
        let s = "(pow (+ (exp (sqrt (cube X))) (neg (log X))) (tan (exp (+ (log X) (mul X X)))))";
        let t = parse(s);
        assert_eq!(t.depth(), 6);
        assert_eq!(parse(&t.to_sexpr()), t);
    }

    #[test]
    fn terminal_serializes_bare() {
        let t = GpTree::new(Node::X);
        assert_eq!(t.to_sexpr(), "X");
        assert_eq!(t.depth(), 1);
        assert_eq!(t.node_count(), 1);
    }

    #[test]
    fn arity_errors_carry_position() {
        match parse_sexpr("(min X)") {
            Err(Error::SexprParse { pos, msg }) => {
                assert!(pos > 0, "position should be set");
                assert!(msg.contains("min"), "msg: {msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_sexpr("(sin X X)").is_err());
        assert!(parse_sexpr("(cos X)").is_err());
        assert!(parse_sexpr("(sub X X)").is_err());
        assert!(parse_sexpr("(div X X)").is_err());
        assert!(parse_sexpr("Y").is_err());
        assert!(parse_sexpr("(sin X) X").is_err());
        assert!(parse_sexpr("(sin X").is_err());
    }

    #[test]
    fn roundtrip_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..300 {
            let method = if i % 2 == 0 {
                GrowMethod::Grow
            } else {
                GrowMethod::Full
            };
            let t = random_tree(1 + i % 7, method, &mut rng);
            let s = t.to_sexpr();
            assert_eq!(parse(&s), t, "roundtrip failed for {s}");
        }
    }

    #[test]
    fn random_trees_respect_depth_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let t = random_tree(15, GrowMethod::Grow, &mut rng);
            assert!(t.depth() <= 15);
        }
    }

    #[test]
    fn full_method_reaches_exact_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for depth in 2..=6 {
            let t = random_tree(depth, GrowMethod::Full, &mut rng);
            assert_eq!(t.depth(), depth);
        }
    }

    #[test]
    fn max_depth_one_is_terminal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = random_tree(1, GrowMethod::Grow, &mut rng);
        assert_eq!(t, GpTree::new(Node::X));
    }

    #[test]
    fn fixed_seed_reproduces_tree() {
        let a = random_tree(6, GrowMethod::Grow, &mut ChaCha8Rng::seed_from_u64(23));
        let b = random_tree(6, GrowMethod::Grow, &mut ChaCha8Rng::seed_from_u64(23));
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_is_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let t = random_tree(5, GrowMethod::Grow, &mut rng);
        let inputs: Vec<f64> = (1..=40).map(|i| 0.05 * i as f64).collect();
        if let Some(out) = t.evaluate(&inputs) {
            let mut permuted = inputs.clone();
            permuted.reverse();
            let out_perm = t.evaluate(&permuted).unwrap();
            let mut expected = out.clone();
            expected.reverse();
            assert_eq!(out_perm, expected);
        }
    }

    #[test]
    fn terminal_tree_is_identity() {
        let t = GpTree::new(Node::X);
        let inputs = vec![0.3, 1.7, -2.0];
        assert_eq!(t.evaluate(&inputs).unwrap(), inputs);
    }

    #[test]
    fn preorder_indexing_and_replacement() {
        let t = parse("(+ (sin X) (mul X X))");
        assert_eq!(t.node_count(), 6);
        // preorder: 0 = +, 1 = sin, 2 = X, 3 = mul, 4 = X, 5 = X
        assert!(matches!(t.node_at(1), Some(Node::Unary(UnaryOp::Sin, _))));
        assert!(matches!(t.node_at(3), Some(Node::Binary(BinaryOp::Mul, _, _))));
        assert!(t.node_at(6).is_none());
        let replaced = t.with_replaced(1, Node::X);
        assert_eq!(replaced.to_sexpr(), "(+ X (mul X X))");
        let replaced_root = t.with_replaced(0, Node::X);
        assert_eq!(replaced_root.to_sexpr(), "X");
    }
}
