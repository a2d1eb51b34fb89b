use radm::checkpoint::Checkpoint;
use radm::diagnostics::compute_spectrum;
use radm::solver::{turbulence_initial_condition, ModelParams, Solver};
use radm::spectral::Grid;
use radm::RadmError;

fn stepped(seed: u64, steps: usize) -> Checkpoint {
    let solver = Solver::new(ModelParams::new(16, 0.1, 2, 0.01, 2e-3).unwrap()).unwrap();
    let v = turbulence_initial_condition(solver.grid(), seed, 3.0, 0.5).unwrap();
    let mut st = solver.initial_state(v).unwrap();
    for _ in 0..steps {
        solver.step(&mut st).unwrap();
    }
    Checkpoint {
        time: st.time,
        alpha: 0.1,
        nu: 0.01,
        n_deconv: 2,
        field: st.v,
    }
}

#[test]
fn stepping_is_reproducible() {
    assert_eq!(stepped(3, 15), stepped(3, 15));
    assert_ne!(stepped(3, 15).field, stepped(4, 15).field);
}

#[test]
fn checkpoint_round_trips_through_bytes() {
    let ck = stepped(7, 5);
    let mut bytes = Vec::new();
    ck.write_to(&mut bytes).unwrap();
    assert_eq!(Checkpoint::read_from(bytes.as_slice()).unwrap(), ck);

    bytes.truncate(bytes.len() - 8);
    assert!(Checkpoint::read_from(bytes.as_slice()).is_err());
}

#[test]
fn spectrum_partitions_initial_energy() {
    let solver = Solver::new(ModelParams::new(16, 0.25, 1, 0.01, 1e-3).unwrap()).unwrap();
    let v = turbulence_initial_condition(solver.grid(), 11, 3.0, 0.75).unwrap();
    let e = solver.energies(&v).unwrap();
    assert!((e.kinetic - 0.75).abs() < 1e-12);
    let spec = compute_spectrum(&v, solver.symbols()).unwrap();
    assert!((spec.total() - e.kinetic).abs() < 1e-12);
}

#[test]
fn odd_grids_are_rejected() {
    assert!(matches!(Grid::new(7), Err(RadmError::InvalidGrid(_))));
}
