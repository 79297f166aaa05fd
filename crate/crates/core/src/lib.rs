//! Classification by joint statistical and spatial sparse representation.
//!
//! Each sample (an image set or a dense feature map) is summarized twice:
//!
//! * a **statistical** vector — fit a Gaussian to the sample's feature
//!   columns, shrink its covariance with a closed-form robust estimator,
//!   embed mean and covariance into one SPD matrix, and flatten its matrix
//!   log ([`gaussian`], [`spd`]);
//! * a **spatial** vector — learn a unitary sparsifying transform over the
//!   sample's patches and flatten the resulting dictionary ([`unitary`]).
//!
//! Gallery samples contribute one column per branch to a pair of stacked,
//! class-grouped dictionaries (optionally PCA-reduced, [`pca`]). A query is
//! then coded against both dictionaries at once with an `l2,1`-coupled ridge
//! solver ([`joint`]) and assigned to the class whose block reconstructs it
//! best ([`classify`]). [`dataset`] covers manifests, file formats, seeded
//! splits, and noise.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod gaussian;
pub mod joint;
pub mod pca;
pub mod spd;
pub mod unitary;

pub use classify::{class_error, predict, predict_global, PredictionReport, Query};
pub use error::{J3sError, Result};
pub use gaussian::{build_descriptor, FeatureMatrix, GaussianConfig, GaussianDescriptor};
pub use joint::{assemble_dictionaries, solve, J3sParams, JointCode, JointDictionary};
pub use pca::{pca_apply, pca_fit, PcaTransform};
pub use spd::{spd_logm, sym_eig, triu_vec, EigPair, SymMatrix};
pub use unitary::{learn_unitary, PatchConfig, UnitaryDictionary};
