//! Experiment configs, seed plans, runners, report rendering.
