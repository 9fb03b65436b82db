pub mod authdict;
pub mod codec;
pub mod consensus;
pub mod hash;
pub mod ledger;
pub mod node;
pub mod simnet;
