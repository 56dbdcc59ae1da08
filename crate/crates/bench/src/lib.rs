//! Criterion benchmarks for dhlab; see benches/.
