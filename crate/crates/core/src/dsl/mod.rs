//! Metric description language: component expressions over `y0..y3` and
//! named parameters, compiled into a [`MetricProvider`](crate::spacetime::MetricProvider).

mod expr;
mod metric;

pub use expr::{eval_expr, BinOp, Compiled, Expr, ExprError, Func};
pub use metric::{parse_index_pair, parse_metric, DslMetric, MetricSource};
