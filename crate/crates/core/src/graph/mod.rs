//! Graph neural dynamics `D^{α(t,Y)} Y = F(Y)` for node classification:
//! graph ingestion and generation, the diffusion operators, and the
//! encode → solve → decode training loop.

mod data;
mod operator;
mod train;

pub use data::{generate_sbm, load_graph_csv, load_graph_dir, GraphSpec, SbmConfig, Split};
pub use operator::{
    apply_pattern, attention_matrix, grand_l_rhs, grand_nl_rhs, laplacian, normalized_operator, SparseMatrix,
};
pub use train::{cross_entropy, train_node_classifier, Dynamics, GnnConfig, GnnReport};
