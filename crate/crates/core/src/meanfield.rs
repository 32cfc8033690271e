//! Macroscopic self-consistent equations (placeholder).
