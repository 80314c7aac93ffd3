//! Tree-walking interpreter for api blocks.
//!
//! A call runs the request block against a fresh [`HttpExchange`], hands the
//! exchange to a [`Transport`], then runs the returns block with the
//! response bound to `__response`.

mod behavior;
mod exchange;
mod interp;
mod transport;

pub use behavior::{BehaviorRegistry, NativeBehavior};
pub use exchange::{HttpExchange, HttpRequest, HttpResponse, RuntimeConfig};
pub use interp::{
    build_request, build_request_with, conform, eval_expr, invoke, invoke_detailed, validate_args, Environment, EvalError,
    Invocation, RuntimeError,
};
pub use transport::{FixtureError, MockRule, MockTransport, RuleMatch, RuleResponse, Transport, TransportError};

#[cfg(test)]
mod tests;
