//! Reference estimators.
