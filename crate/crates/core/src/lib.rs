pub mod error;
pub mod fixtures;
pub mod gauge;
pub mod io;
pub mod linalg;
pub mod mixed;
pub(crate) mod local;
pub mod oracle;
pub mod pure;
pub mod shape;
pub mod spectral;
pub mod state;
pub mod tensor_factor;
pub mod verdict;
