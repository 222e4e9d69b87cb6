use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Experimental arm of the three-arm design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Arm {
    /// Creative A with the algorithm seeing A's metadata.
    One,
    /// Creative A rendered, algorithm sees B's metadata.
    Two,
    /// Creative B with B's metadata.
    Three,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::One, Arm::Two, Arm::Three];

    /// Zero-based position, handy for `[T; 3]` storage.
    pub fn index(self) -> usize {
        match self {
            Arm::One => 0,
            Arm::Two => 1,
            Arm::Three => 2,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Arm> {
        match n {
            1 => Some(Arm::One),
            2 => Some(Arm::Two),
            3 => Some(Arm::Three),
            _ => None,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl TryFrom<u8> for Arm {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        Arm::from_number(n).ok_or_else(|| format!("arm must be 1, 2 or 3, got {n}"))
    }
}

impl From<Arm> for u8 {
    fn from(arm: Arm) -> u8 {
        arm.number()
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n: u8 = s.trim().parse().map_err(|_| format!("arm must be 1, 2 or 3, got `{s}`"))?;
        Arm::try_from(n)
    }
}
