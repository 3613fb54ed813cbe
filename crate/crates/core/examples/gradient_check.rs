// Finite-difference check of the BPTT gradients on a small model.
//
// cargo run --example gradient_check -- [dropout]

use abc_lstm::corpus::IdGrid;
use abc_lstm::gradcheck::{check_gradients, Problem};
use abc_lstm::model::{init_params, LstmState, Mode, ModelConfig};
use abc_lstm::numerics::Rng;

pub fn run_example(dropout: f64) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig {
        vocab_size: 11,
        hidden_size: 8,
        num_layers: 3,
        dropout,
    };
    let params = init_params(cfg, &mut Rng::new(1).substream("weights"))?;
    let mut rng = Rng::new(2);
    let mut ids = || (0..10).map(|_| rng.below(cfg.vocab_size)).collect::<Vec<_>>();
    let problem = Problem {
        inputs: IdGrid::new(2, 5, ids()),
        targets: IdGrid::new(2, 5, ids()),
        state: LstmState::zeros(&cfg, 2),
        mode: Mode::Train,
        rng: Rng::new(3),
    };
    println!("{:<10} {:>12} {:>12}", "tensor", "rel error", "max abs");
    for c in check_gradients(&params, &problem, 1e-5)? {
        println!("{:<10} {:>12.3e} {:>12.3e}", c.name, c.rel_error, c.max_abs_error);
        if c.rel_error >= 1e-4 {
            return Err(format!("{} fails the 1e-4 bound", c.name).into());
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dropout: f64 = std::env::args().nth(1).map_or(Ok(0.0), |s| s.parse())?;
    run_example(dropout)
}
