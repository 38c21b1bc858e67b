use thiserror::Error;

pub type Result<T> = std::result::Result<T, HeckeError>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeckeError {
    #[error("group elements of different kinds: {0} vs {1}")]
    MixedKinds(String, String),
    #[error("arithmetic overflow in {0}")]
    ArithmeticOverflow(&'static str),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("store is sealed; use the extension interning path")]
    StoreSealed,
    #[error("coset cap of {max_cosets} exceeded")]
    CapExceeded { max_cosets: usize },
    #[error("orbit cap of {max_orbit} exceeded (pair may not be Hecke, or cap too small)")]
    OrbitCapExceeded { max_orbit: usize },
    #[error("pair `{0}` is not finitely generated; ball enumeration disabled")]
    NotFinitelyGenerated(String),
    #[error("Hecke elements live over different coset stores")]
    StoreMismatch,
    #[error("convolution output is not constant on double coset {0}")]
    NonBiInvariantResult(usize),
    #[error("element is not self-adjoint")]
    NotSelfAdjoint,
    #[error("length function undefined on double coset {0}")]
    LengthUndefinedOnSupport(usize),
    #[error("pair is not relatively unimodular (witness {0})")]
    NotRelativelyUnimodular(String),
    #[error("subgroup H is infinite")]
    InfiniteH,
    #[error("ball of radius {requested} requested but only radius {complete} is enumerated")]
    BallIncomplete { requested: u32, complete: u32 },
    #[error("coset store is empty")]
    EmptyStore,
    #[error("subset is not a subgroup: {0}")]
    SubsetNotSubgroup(String),
    #[error("no stable weighted fit on the s grid")]
    NoStableFit,
    #[error("unknown pair label `{0}`")]
    UnknownPair(String),
    #[error("unknown double coset id {0}")]
    UnknownDoubleCoset(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}
