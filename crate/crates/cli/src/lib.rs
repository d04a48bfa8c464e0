//! Report types printed by the `utcodim` binary, shared with its tests.

pub mod output;
