use std::fmt;

/// A run that completed but produced no usable metric. Maps to exit code 1;
/// every other error maps to 2.
#[derive(Debug)]
pub struct MetricFailure(pub String);

impl fmt::Display for MetricFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for MetricFailure {}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<MetricFailure>().is_some() {
        1
    } else {
        2
    }
}
