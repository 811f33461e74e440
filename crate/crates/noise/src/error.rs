use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("rate matrix must be square S×S with S ≥ 2 (got {rows}×{cols})")]
    Shape { rows: usize, cols: usize },
    #[error("rate matrix row {row} sums to {sum:e}, expected 0")]
    RowSum { row: usize, sum: f64 },
    #[error("negative off-diagonal rate Q[{row}][{col}] = {value}")]
    NegativeRate { row: usize, col: usize, value: f64 },
    #[error("chain is reducible: states {class:?} do not communicate with the rest")]
    Reducible { class: Vec<usize> },
    #[error("observable has {got} entries for {states} states")]
    ObservableLength { got: usize, states: usize },
    #[error("observable value {value} at state {state} exceeds 1 in magnitude")]
    ObservableRange { state: usize, value: f64 },
    #[error("observable is not mean-zero under the stationary law (mean {mean:e})")]
    ObservableMean { mean: f64 },
    #[error("joint noise space has {states} states, over the dense budget {budget}")]
    Budget { states: usize, budget: usize },
    #[error("no spectral gap at numerical precision (gap {gap:e})")]
    NoGap { gap: f64 },
    #[error("function is not mean-zero (mean {mean:e})")]
    NotMeanZero { mean: f64 },
    #[error("function has {got} entries, joint space has {want}")]
    Length { got: usize, want: usize },
    #[error("degenerate dynamic noise (chi = {chi:e})")]
    Degenerate { chi: f64 },
    #[error("interval [{s}, {t}] outside path horizon [0, {horizon}]")]
    Horizon { s: f64, t: f64, horizon: f64 },
    #[error("singular solve in B inverse")]
    Singular,
}
