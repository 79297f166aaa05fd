//! Benchmark harness around the `j3s-core` classifier: experiment
//! configuration, the benchmark/ablation runners, CSV reporting, and a
//! synthetic dataset generator. The `j3s` binary is a thin argument-parsing
//! shell over these modules.

pub mod config;
pub mod report;
pub mod runner;
pub mod synth;

use j3s_core::J3sError;

/// Map an error to the process exit code: 2 for configuration problems, 4 for
/// numerical failures, 3 for everything wrong with the data itself.
pub fn exit_code(err: &J3sError) -> i32 {
    match err {
        J3sError::InvalidConfig(_) => 2,
        J3sError::NotPositiveDefinite { .. }
        | J3sError::SingularSystem
        | J3sError::NumericalDivergence(_) => 4,
        _ => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_family() {
        assert_eq!(exit_code(&J3sError::InvalidConfig("x".into())), 2);
        assert_eq!(exit_code(&J3sError::SingularSystem), 4);
        assert_eq!(
            exit_code(&J3sError::NotPositiveDefinite {
                min_eigenvalue: -1.0,
                eig_floor: 1e-10
            }),
            4
        );
        assert_eq!(exit_code(&J3sError::NumericalDivergence("x".into())), 4);
        assert_eq!(exit_code(&J3sError::InvalidInput("x".into())), 3);
        assert_eq!(
            exit_code(&J3sError::FormatError {
                path: "f".into(),
                offset: 0,
                message: "bad".into()
            }),
            3
        );
        assert_eq!(
            exit_code(&J3sError::Io(std::io::Error::other("gone"))),
            3
        );
    }
}
