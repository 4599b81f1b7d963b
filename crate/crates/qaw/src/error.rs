use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum QawError {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation would need Fock levels beyond the truncation cap.
    #[error("truncation exceeded: degree {degree} does not fit below level cap {level_cap}")]
    TruncationExceeded { degree: usize, level_cap: usize },

    /// Reassembling an operator from its graded components missed the
    /// original beyond tolerance, so it is not (numerically) a combination
    /// of Wick words of degree below the truncation level.
    #[error("operator is not in the Wick span: relative reassembly residual {residual:.3e}")]
    NotInWickSpan { residual: f64 },

    /// A Gram matrix was requested above the level cap for direct
    /// symmetric-group assembly.
    #[error("Gram level {level} exceeds the assembly cap {cap}")]
    GramLevelCap { level: usize, cap: usize },

    /// A requested configuration would allocate more coefficient cells
    /// than the configured budget.
    #[error("memory budget exceeded: {cells} cells requested, cap is {cap}")]
    MemoryBudget { cells: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, QawError>;
