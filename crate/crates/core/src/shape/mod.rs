//! Registration between clouds, Teichmüller distance matrices, classical MDS
//! and nearest-neighbor classification.

mod metric;
mod register;

pub use metric::{
    classical_mds, distance_matrix, loocv_nn, write_embedding_csv, ClassificationReport, DistanceMatrix, Prediction,
    ASYMMETRY_WARN,
};
pub use register::{register, register_parameterized, PlanarInverse, RegisterOptions, Registration};
