pub mod factor;
pub mod graph_train;
pub mod memo;
pub mod policy;
pub mod selector;
pub mod structure;
pub mod train;

pub use factor::{graph_infer, sigmoid, Factor, FactorGraphModel};
pub use graph_train::{graph_train, graph_train_counts, squared_loss_and_grad, GraphTrainHyper, GraphTrainReport};
pub use memo::{memo_fit, memo_score, MemoTable};
pub use policy::{dpgm_act, dpgm_forward, ActMode, ActionModel, DpgmPolicy};
pub use selector::{select_substate, SubstateSelector, Tuple};
pub use structure::{ModelKind, Structures};
pub use train::{accuracy, dpgm_train, DpgmHyper, DpgmTrainReport};
