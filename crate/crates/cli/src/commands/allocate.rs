use serde::Serialize;
use triarm_core::experiment::{allocation_objective, optimal_allocation};

use crate::args::AllocateArgs;
use crate::error::CliError;
use crate::report::{num, CsvRows, Output, Table};

#[derive(Debug, Serialize)]
struct AllocateConfig {
    sd: [f64; 3],
    n: usize,
}

#[derive(Debug, Serialize)]
struct AllocateResult {
    allocation: [usize; 3],
    objective: f64,
    equal_split: [usize; 3],
    equal_split_objective: f64,
}

pub fn allocate(args: &AllocateArgs) -> Result<Output, CliError> {
    let mut errors = Vec::new();
    let sd: [f64; 3] = match args.sd.as_deref() {
        None => [1.0; 3],
        Some(&[a, b, c]) => [a, b, c],
        Some(v) => {
            errors.push(format!("sd needs three values, got {}", v.len()));
            [1.0; 3]
        }
    };
    if args.n.is_none() {
        errors.push("n is required (--n)".into());
    }
    let Some(n) = args.n.filter(|_| errors.is_empty()) else {
        return Err(CliError::Config(errors));
    };
    let allocation = optimal_allocation(sd, n)?;
    let base = n / 3;
    let equal_split = [base + usize::from(n % 3 > 0), base + usize::from(n % 3 > 1), base];
    let result = AllocateResult {
        allocation,
        objective: allocation_objective(sd, allocation),
        equal_split,
        equal_split_objective: allocation_objective(sd, equal_split),
    };
    let mut table = Table::new("Arm sizes", &["arm 1", "arm 2", "arm 3", "Var(NIE)+Var(NDE)"]);
    table.push(vec![
        allocation[0].to_string(),
        allocation[1].to_string(),
        allocation[2].to_string(),
        format!("{:.6}", result.objective),
    ]);
    let mut csv = CsvRows::new(&["arm", "n"]);
    for (z, k) in allocation.iter().enumerate() {
        csv.push(vec![(z + 1).to_string(), num(*k as f64)]);
    }
    Output::new("allocate", None, &AllocateConfig { sd, n }, &result, vec![table], Some(csv))
}
