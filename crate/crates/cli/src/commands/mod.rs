mod compare;
mod evaluate;
mod grid;
mod train;

pub use compare::cmd_compare;
pub use evaluate::cmd_evaluate;
pub use grid::cmd_grid;
pub use train::cmd_train;
