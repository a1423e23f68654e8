//! Expiring execution-time opacity of timed automata.
//!
//! An attacker observes only how long a run of a timed system takes. The
//! system is opaque for an expiration bound `Δ` when that duration cannot
//! reveal that a private location was entered at most `Δ` time units
//! before completion. This crate decides the property through region
//! automata with a tick clock, computes the bounds for which it holds,
//! and ships a brute-force oracle used to validate the pipeline.
//!
//! ```
//! use etop::modelfmt::parse_model;
//! use etop::model::{instantiate, ParamValuation, Rational};
//! use etop::opacity::{decide, Mode};
//! use etop::transforms::BoundValue;
//!
//! let pta = parse_model(etop::testsupport::FIG1_TA).unwrap();
//! let v = ParamValuation::from_bindings(
//!     &pta,
//!     [("p1", Rational::from_integer(1)), ("p2", Rational::new(5, 2))],
//! )
//! .unwrap();
//! let sys = instantiate(&pta, &v).unwrap();
//! assert!(decide(&sys, BoundValue::int(1), Mode::Weak).unwrap().opaque);
//! assert!(!decide(&sys, BoundValue::int(1), Mode::Full).unwrap().opaque);
//! ```

pub mod durations;
pub mod error;
pub mod model;
pub mod modelfmt;
pub mod opacity;
pub mod oracle;
pub mod regions;
pub mod testsupport;
pub mod transforms;
pub mod unary;

pub use error::{Error, Result};
