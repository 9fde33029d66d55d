//! Compares tape gradients of a GRU unrolled over a short sequence against
//! central differences, parameter by parameter.
//!
//! cargo run --example gradient_check

use esnrl::autodiff::{ParamStore, Tape};
use esnrl::cells::{CellConfig, MemoryCell, MemoryKind};
use esnrl::rng::rng_from_seed;
use esnrl::Matrix;
use rand::Rng;

fn loss(cell: &MemoryCell, store: &ParamStore, xs: &[Matrix]) -> esnrl::Result<(Tape, esnrl::autodiff::NodeId)> {
    let mut tape = Tape::new();
    let mut state = cell.initial_state(&mut tape)?;
    let mut total = None;
    for x in xs {
        let xc = tape.constant(x.clone())?;
        let (next, y) = cell.step(&mut tape, store, &state, xc)?;
        state = next;
        let sq = tape.mul(y, y)?;
        let s = tape.sum_all(sq)?;
        total = Some(match total {
            Some(t) => tape.add(t, s)?,
            None => s,
        });
    }
    Ok((tape, total.expect("non-empty sequence")))
}

fn main() -> esnrl::Result<()> {
    let mut rng = rng_from_seed(1);
    let mut store = ParamStore::new();
    let config = CellConfig { kind: MemoryKind::Gru, input_dim: 3, hidden_dim: 5 };
    let cell = MemoryCell::new(config, &mut store, &mut rng)?;
    let xs: Vec<Matrix> = (0..20)
        .map(|_| Matrix::from_fn(1, 3, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();

    let (mut tape, l) = loss(&cell, &store, &xs)?;
    let grads = tape.backward(l, &store)?;
    let h = 1e-5;
    for id in cell.param_ids() {
        let mut worst: f64 = 0.0;
        for k in 0..store.get(id).len() {
            let mut s = store.clone();
            s.get_mut(id).data_mut()[k] += h;
            let (t, up) = loss(&cell, &s, &xs)?;
            let plus = t.value(up).item();
            s.get_mut(id).data_mut()[k] -= 2.0 * h;
            let (t, down) = loss(&cell, &s, &xs)?;
            let minus = t.value(down).item();
            let fd = (plus - minus) / (2.0 * h);
            let g = grads.get(id).data()[k];
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-8));
        }
        println!("{:<12} max relative error {worst:.2e}", store.name(id));
    }
    Ok(())
}
