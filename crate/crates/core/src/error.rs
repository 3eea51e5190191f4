use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A requested size exceeds a configured cap.
    #[error("{what} = {value} exceeds the cap of {cap}")]
    Size {
        what: &'static str,
        value: u128,
        cap: u128,
    },
    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Overlap maps were requested between domains sharing no atoms.
    #[error("reference domains are disjoint")]
    DisjointDomains,
    /// Two independent counting routes disagreed.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("layer {layer}: {message}")]
    Config { layer: usize, message: String },
    /// An output neuron received no message from any input neuron.
    #[error("layer {layer}: neuron {neuron} has no contributing input neurons")]
    IsolatedNeuron { layer: usize, neuron: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn check_cap(what: &'static str, value: u128, cap: u128) -> Result<()> {
    if value > cap {
        Err(Error::Size { what, value, cap })
    } else {
        Ok(())
    }
}
