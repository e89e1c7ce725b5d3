use crate::alphabet::Str;
use crate::prob::Rational;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("alphabet size {0} is not in 2..=256")]
    InvalidAlphabet(usize),
    #[error("symbol {symbol} is outside an alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("alphabet mismatch: expected size {expected}, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(Rational),
    #[error("invalid parameter: {0}")]
    InvalidParameter(alloc::string::String),
    #[error("conditioning on a zero-probability prefix \"{prefix}\"")]
    ZeroConditioning { prefix: Str },
    #[error("enumeration of {requested} strings exceeds the budget of {cap}")]
    BudgetExceeded { requested: u128, cap: u128 },
    #[error("no exact limit is available for this staged semimeasure")]
    NoLimitHint,
    #[error("registry weights sum to {total}, above 1")]
    WeightOverflow { total: Rational },
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("no registry entry in the selected range is a measure")]
    EmptyMeasureSet,
    #[error("dominance fails at \"{witness}\"")]
    DominanceViolated { witness: Str },
    #[error("expectation {expectation} at n = {n} exceeds the bound {bound}")]
    ExpectationExceeded { n: usize, expectation: Rational, bound: Rational },
    #[error("functional is not monotone in n at \"{witness}\"")]
    FunctionalNotMonotone { witness: Str },
    #[error("gamma {0} is outside (0, 1/5)")]
    GammaOutOfRange(Rational),
    #[error("registry entry {index} is flagged as a measure but is not one (witness {witness:?})")]
    MeasureFlagInvalid { index: usize, witness: Option<Str> },
    #[error("conditionals at \"{prefix}\" do not sum to 1")]
    NotAMeasure { prefix: Str },
    #[error("semimeasure vanishes on \"{prefix}\"")]
    EmptySupport { prefix: Str },
    #[error("unknown model family \"{0}\"")]
    UnknownFamily(alloc::string::String),
    #[error("precision of {0} bits is below the minimum of 24")]
    PrecisionTooLow(usize),
    #[error("stage {stage} is outside 1..={max}")]
    StageOutOfRange { stage: u32, max: u32 },
}
