use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not a prime in 2..=251")]
    InvalidField(u32),

    #[error("cannot parse polynomial {input:?}: {reason}")]
    Syntax { input: String, reason: String },

    #[error("coefficient {coeff} is out of range for p = {p}")]
    CoefficientOutOfRange { coeff: u64, p: u32 },

    #[error("polynomials belong to different fields (p = {0} and p = {1})")]
    FieldMismatch(u32, u32),

    #[error("division by the zero polynomial")]
    DivisionByZero,

    #[error("gcd(0, 0) is undefined")]
    GcdOfZeros,

    #[error("expected a monic nonzero polynomial, got {0}")]
    NotMonic(String),

    #[error("p^{degree} does not fit the 64-bit enumeration index for p = {p}")]
    IndexOverflow { p: u32, degree: u32 },

    #[error("{what} needs {required} sieve entries but the budget is {budget}")]
    BudgetExceeded {
        what: String,
        required: u128,
        budget: u128,
    },

    #[error("irreducible table covers degree {have} but degree {needed} is required")]
    TableTooSmall { needed: u32, have: u32 },

    #[error("field mismatch between table (p = {table}) and input (p = {input})")]
    TableFieldMismatch { table: u32, input: u32 },

    #[error("residue {residue} is not coprime to modulus {modulus}")]
    NotCoprime { residue: String, modulus: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function {0} is not unit bounded")]
    NotUnitBounded(String),

    #[error("gamma = {gamma} is below the convergence threshold {threshold}")]
    ThresholdViolation { gamma: u32, threshold: u32 },

    #[error("series does not converge: {0}")]
    Divergent(String),

    #[error("corrupt irreducible cache: {0}")]
    CorruptCache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
