//! The two-stage estimator.
