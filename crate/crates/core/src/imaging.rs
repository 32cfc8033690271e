//! k-space imaging experiment (placeholder).
