//! Minimal reverse-mode autodiff, the fixed classifier, SGD training and evaluation.

mod gradcheck;
mod model;
mod tape;
mod tensor;
mod train;

pub use gradcheck::{gradient_check, relative_error, Coordinate, GradCheckReport, FD_STEP, REL_FLOOR};
pub use model::{argmax_rows, param_count, param_shapes, Architecture, Forward, Model};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
pub use train::{count_correct, evaluate, train, LrSchedule, TrainConfig};
