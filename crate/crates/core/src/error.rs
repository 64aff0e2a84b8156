use crate::objective::ActionId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("agent {agent} already has an action in the set")]
    DuplicateAgent { agent: usize },

    #[error("agent index {agent} out of range ({count} agents)")]
    AgentOutOfRange { agent: usize, count: usize },

    #[error("action {choice} out of range for agent {agent} ({count} actions)")]
    ActionOutOfRange {
        agent: usize,
        choice: usize,
        count: usize,
    },

    #[error("curvature is undefined: singleton value of {0:?} is zero")]
    UndefinedCurvature(ActionId),

    #[error("ground set is empty")]
    EmptyGround,

    #[error("reward {value} for arm {arm} is outside [0, 1]")]
    RewardOutOfRange { arm: usize, value: f64 },

    #[error("sampling probability {0} is outside (0, 1]")]
    InvalidProbability(f64),

    #[error("arm {arm} out of range ({count} arms)")]
    ArmOutOfRange { arm: usize, count: usize },

    #[error("expected {expected} rewards, got {got}")]
    RewardLength { expected: usize, got: usize },

    /// A drawn neighbor could not deliver its action; indicates a broken
    /// communication model rather than bad input.
    #[error("protocol error: agent {agent} drew candidate {candidate} but no action was delivered")]
    MissingNeighborAction { agent: usize, candidate: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    UnsupportedSize(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
