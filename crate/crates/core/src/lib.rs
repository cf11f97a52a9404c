//! A type checker and evaluator for parametric cubical type theory.
//!
//! The kernel is split into the dimension algebra ([`interval`]), core terms
//! ([`syntax`]), typing contexts ([`context`]), small-step evaluation
//! ([`opsem`]), definitional equality ([`conversion`]) and bidirectional
//! checking ([`checker`]). [`frontend`] reads `.ptt` files.

pub mod checker;
pub mod context;
pub mod conversion;
pub mod diagnostic;
pub mod frontend;
pub mod interval;
pub mod opsem;
pub mod syntax;
