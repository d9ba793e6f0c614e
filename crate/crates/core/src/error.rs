use crate::physics::{BodyHandle, PhysicsError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("body {body} is not in group `{group}`")]
    NotInGroup { body: BodyHandle, group: String },
    #[error("body {0} does not belong to any group")]
    UnknownBody(BodyHandle),
    #[error("module {module} not found in group `{group}`")]
    ModuleNotFound { module: &'static str, group: String },
    #[error("body {0} is dead")]
    DeadBody(BodyHandle),
    #[error("invalid control: {0}")]
    InvalidControl(String),
    #[error("not enough free spawn cells: requested {requested}, free {free}")]
    NotEnoughCells { requested: usize, free: usize },
    #[error("simulation has not been reset")]
    NotReset,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed action: {0}")]
    MalformedAction(String),
    #[error("episode is done; call reset")]
    EpisodeDone,
    #[error("replay: {0}")]
    Replay(String),
    #[error("replay diverged at step {step}: recorded hash {recorded:#018x}, replayed {replayed:#018x}")]
    ReplayDivergence { step: u32, recorded: u64, replayed: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
