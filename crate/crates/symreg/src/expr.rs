use std::fmt;

use crate::error::{Result, SymregError};

/// Number of input variables.
pub const N_VARS: usize = 4;
pub const VAR_NAMES: [&str; N_VARS] = ["a", "b", "c", "d"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Square,
    Var(u8),
    Const(f64),
}

impl Node {
    pub fn arity(self) -> usize {
        match self {
            Node::Add | Node::Sub | Node::Mul | Node::Div => 2,
            Node::Neg | Node::Square => 1,
            Node::Var(_) | Node::Const(_) => 0,
        }
    }
}

/// Expression tree stored in prefix order; every subtree is a contiguous
/// slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    nodes: Vec<Node>,
}

impl Expression {
    /// Checks arity, variable indices and constant finiteness.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(SymregError::InvalidExpression("no nodes".into()));
        }
        let mut need = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if need == 0 {
                return Err(SymregError::InvalidExpression(format!(
                    "trailing nodes from position {i}"
                )));
            }
            match *n {
                Node::Var(v) if usize::from(v) >= N_VARS => {
                    return Err(SymregError::InvalidExpression(format!("variable index {v}")));
                }
                Node::Const(c) if !c.is_finite() => {
                    return Err(SymregError::InvalidExpression(format!("non-finite constant {c}")));
                }
                _ => {}
            }
            need = need - 1 + n.arity();
        }
        if need != 0 {
            return Err(SymregError::InvalidExpression(format!("{need} operand(s) missing")));
        }
        Ok(Self { nodes })
    }

    pub(crate) fn from_valid(nodes: Vec<Node>) -> Self {
        debug_assert!(Self::from_nodes(nodes.clone()).is_ok());
        Self { nodes }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_valid(vec![Node::Const(c)])
    }

    pub fn var(i: usize) -> Self {
        assert!(i < N_VARS, "variable index {i}");
        Self::from_valid(vec![Node::Var(i as u8)])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [Node] {
        &mut self.nodes
    }

    /// Node count.
    pub fn complexity(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_constants(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Const(_))).count()
    }

    /// One past the last node of the subtree rooted at `i`.
    pub(crate) fn subtree_end(&self, i: usize) -> usize {
        let mut need = 1usize;
        let mut j = i;
        while need > 0 {
            need = need - 1 + self.nodes[j].arity();
            j += 1;
        }
        j
    }

    /// Copy with the subtree at `i` replaced by `sub`.
    pub(crate) fn replace(&self, i: usize, sub: &[Node]) -> Self {
        let end = self.subtree_end(i);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - i) + sub.len());
        nodes.extend_from_slice(&self.nodes[..i]);
        nodes.extend_from_slice(sub);
        nodes.extend_from_slice(&self.nodes[end..]);
        Self::from_valid(nodes)
    }

    /// Collapses every variable-free subtree with a finite value into a single
    /// constant. Never changes the value at any point where it was finite.
    pub fn fold_constants(&self) -> Self {
        let mut out = Vec::with_capacity(self.nodes.len());
        self.fold_at(0, &mut out);
        Self::from_valid(out)
    }

    /// Appends the folded subtree at `i`; returns its end and its value if
    /// it reduced to a constant.
    fn fold_at(&self, i: usize, out: &mut Vec<Node>) -> (usize, Option<f64>) {
        let node = self.nodes[i];
        match node {
            Node::Const(c) => {
                out.push(node);
                (i + 1, Some(c))
            }
            Node::Var(_) => {
                out.push(node);
                (i + 1, None)
            }
            _ => {
                let start = out.len();
                out.push(node);
                let (j, l) = self.fold_at(i + 1, out);
                let (end, r) = if node.arity() == 2 {
                    self.fold_at(j, out)
                } else {
                    (j, Some(0.0))
                };
                let (Some(l), Some(r)) = (l, r) else { return (end, None) };
                let v = match node {
                    Node::Add => l + r,
                    Node::Sub => l - r,
                    Node::Mul => l * r,
                    Node::Div if r != 0.0 => l / r,
                    Node::Neg => -l,
                    Node::Square => l * l,
                    _ => f64::NAN,
                };
                if v.is_finite() {
                    out.truncate(start);
                    out.push(Node::Const(v));
                    (end, Some(v))
                } else {
                    (end, None)
                }
            }
        }
    }

    /// Evaluates on one row without validation. Division by zero gives
    /// infinity.
    pub(crate) fn eval_row(&self, x: &[f64; N_VARS]) -> f64 {
        let mut stack = [0.0f64; 64];
        let mut heap = Vec::new();
        let stack: &mut [f64] = if self.nodes.len() <= 64 {
            &mut stack
        } else {
            heap.resize(self.nodes.len(), 0.0);
            &mut heap
        };
        let mut top = 0;
        for n in self.nodes.iter().rev() {
            match *n {
                Node::Var(v) => {
                    stack[top] = x[usize::from(v)];
                    top += 1;
                }
                Node::Const(c) => {
                    stack[top] = c;
                    top += 1;
                }
                Node::Neg => stack[top - 1] = -stack[top - 1],
                Node::Square => stack[top - 1] *= stack[top - 1],
                op => {
                    let l = stack[top - 1];
                    let r = stack[top - 2];
                    top -= 1;
                    stack[top - 1] = match op {
                        Node::Add => l + r,
                        Node::Sub => l - r,
                        Node::Mul => l * r,
                        _ if r == 0.0 => f64::INFINITY,
                        _ => l / r,
                    };
                }
            }
        }
        stack[0]
    }

    pub fn predict(&self, x: &[[f64; N_VARS]]) -> Vec<f64> {
        x.iter().map(|row| self.eval_row(row)).collect()
    }

    fn fmt_at(&self, i: usize, f: &mut fmt::Formatter<'_>) -> std::result::Result<usize, fmt::Error> {
        match self.nodes[i] {
            Node::Var(v) => {
                f.write_str(VAR_NAMES[usize::from(v)])?;
                Ok(i + 1)
            }
            Node::Const(c) if c < 0.0 => {
                write!(f, "({c})")?;
                Ok(i + 1)
            }
            Node::Const(c) => {
                write!(f, "{c}")?;
                Ok(i + 1)
            }
            Node::Neg => {
                f.write_str("(-")?;
                let j = self.fmt_at(i + 1, f)?;
                f.write_str(")")?;
                Ok(j)
            }
            Node::Square => {
                f.write_str("(")?;
                let j = self.fmt_at(i + 1, f)?;
                f.write_str("^2)")?;
                Ok(j)
            }
            op => {
                let sym = match op {
                    Node::Add => " + ",
                    Node::Sub => " - ",
                    Node::Mul => " * ",
                    _ => " / ",
                };
                f.write_str("(")?;
                let j = self.fmt_at(i + 1, f)?;
                f.write_str(sym)?;
                let k = self.fmt_at(j, f)?;
                f.write_str(")")?;
                Ok(k)
            }
        }
    }
}

/// Parenthesized infix over `a, b, c, d`.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(0, f).map(|_| ())
    }
}

/// Evaluates `e` at one point. Division by zero yields a non-finite value,
/// which fitness treats as unfit; only a malformed tree is an error.
pub fn eval_expr(e: &Expression, x: &[f64]) -> Result<f64> {
    let e = Expression::from_nodes(e.nodes.clone())?;
    let max_var = e
        .nodes
        .iter()
        .filter_map(|n| {
            if let Node::Var(v) = n {
                Some(usize::from(*v))
            } else {
                None
            }
        })
        .max();
    if let Some(v) = max_var {
        if v >= x.len() {
            return Err(SymregError::InvalidArgument(format!(
                "expression uses `{}` but the point has {} value(s)",
                VAR_NAMES[v],
                x.len()
            )));
        }
    }
    let mut row = [0.0; N_VARS];
    for (r, v) in row.iter_mut().zip(x) {
        *r = *v;
    }
    Ok(e.eval_row(&row))
}
