use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::countdown::Number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Sum of absolute differences to the target.
    #[default]
    Sum,
    /// Sum over numbers of the distance to the nearest factor of the
    /// target (1 and the target included).
    Multiply,
}

impl Heuristic {
    pub const ALL: [Heuristic; 2] = [Heuristic::Sum, Heuristic::Multiply];

    pub fn value(self, numbers: &[Number], target: Number) -> Number {
        match self {
            Heuristic::Sum => numbers.iter().map(|&n| n.abs_diff(target)).sum(),
            Heuristic::Multiply => {
                let factors = factors(target);
                numbers
                    .iter()
                    .map(|&n| factors.iter().map(|&f| n.abs_diff(f)).min().unwrap_or(n))
                    .sum()
            }
        }
    }
}

/// Divisors of `n` in ascending order (empty for 0).
pub fn factors(n: Number) -> Vec<Number> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1;
    while i * i <= n {
        if n.is_multiple_of(i) {
            small.push(i);
            if i != n / i {
                large.push(n / i);
            }
        }
        i += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Heuristic::Sum => "sum",
            Heuristic::Multiply => "multiply",
        })
    }
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sum" => Ok(Heuristic::Sum),
            "multiply" => Ok(Heuristic::Multiply),
            other => Err(format!("unknown heuristic `{other}`")),
        }
    }
}
