use std::io::Write;

use crate::expr::Expression;

pub const FRONT_HEADER: &str = "complexity,mae,r2,expression";

#[derive(Debug, Clone, PartialEq)]
pub struct FrontMember {
    pub expression: Expression,
    pub complexity: usize,
    /// Holdout mean absolute error, target units.
    pub mae: f64,
    /// Holdout coefficient of determination.
    pub r2: f64,
}

/// Non-dominated members in order of increasing complexity and strictly
/// decreasing holdout MAE, plus search diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub members: Vec<FrontMember>,
    /// Generations completed (the initial population counts as zero).
    pub generations: usize,
    /// Lowest holdout MAE in the population after each generation.
    pub best_mae_history: Vec<f64>,
}

impl ParetoFront {
    /// Member with the highest holdout R² (the most complex one).
    pub fn best(&self) -> Option<&FrontMember> {
        self.members.last()
    }

    /// Best member no more complex than `max_complexity`.
    pub fn best_within(&self, max_complexity: usize) -> Option<&FrontMember> {
        self.members.iter().rfind(|m| m.complexity <= max_complexity)
    }

    pub fn write_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{FRONT_HEADER}")?;
        for m in &self.members {
            writeln!(sink, "{},{},{},\"{}\"", m.complexity, m.mae, m.r2, m.expression)?;
        }
        Ok(())
    }
}
