use serde::{Deserialize, Serialize};

use crate::arm::Arm;
use crate::auction::MediatorRegime;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Creative {
    A,
    B,
}

/// Creative shown to users and mediator regime the platform runs under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub arm: Arm,
    pub creative: Creative,
    pub regime: MediatorRegime,
}

/// The three-arm design: `(A, S(A))`, `(A, S(B))`, `(B, S(B))`.
pub fn three_arm_design(regime_b: MediatorRegime) -> [ArmSpec; 3] {
    [
        ArmSpec { arm: Arm::One, creative: Creative::A, regime: MediatorRegime::noise_free() },
        ArmSpec { arm: Arm::Two, creative: Creative::A, regime: regime_b },
        ArmSpec { arm: Arm::Three, creative: Creative::B, regime: regime_b },
    ]
}

/// Check that `arms` follows the design table.
pub fn validate_design(arms: &[ArmSpec; 3]) -> Result<()> {
    let mut problems = Vec::new();
    for (spec, arm) in arms.iter().zip(Arm::ALL) {
        if spec.arm != arm {
            problems.push(format!("position {} holds arm {}", arm.number(), spec.arm));
        }
        if let Err(e) = spec.regime.validate() {
            problems.push(format!("arm {}: {e}", spec.arm));
        }
    }
    if arms[0].creative != Creative::A || arms[1].creative != Creative::A || arms[2].creative != Creative::B {
        problems.push("creatives must be A, A, B".into());
    }
    if !arms[0].regime.is_noise_free() {
        problems.push("arm 1 must run the noise-free regime".into());
    }
    if arms[1].regime != arms[2].regime {
        problems.push("arms 2 and 3 must share the treatment regime".into());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}
