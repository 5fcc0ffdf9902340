use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] hgff_core::Error),

    #[error(transparent)]
    Nn(#[from] hgff_nn::NnError),

    #[error(transparent)]
    Agent(#[from] hgff_agent::AgentError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config file: {0}")]
    ConfigFile(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
