//! Column names of the sequential supersample schema (rounds are 1-based).

pub fn hist(t: usize) -> String {
    format!("H_{t}")
}
pub fn z0(t: usize) -> String {
    format!("Z0_{t}")
}
pub fn z1(t: usize) -> String {
    format!("Z1_{t}")
}
pub fn u(t: usize) -> String {
    format!("U_{t}")
}
pub fn w(t: usize) -> String {
    format!("W_{t}")
}
pub fn q(t: usize) -> String {
    format!("Q_{t}")
}
/// Unweighted loss of W_t on the first coordinate.
pub fn l0(t: usize) -> String {
    format!("L0_{t}")
}
/// Unweighted loss of W_t on the second coordinate.
pub fn l1(t: usize) -> String {
    format!("L1_{t}")
}
/// Weighted first-coordinate loss Q_t * L0_t.
pub fn lplus(t: usize) -> String {
    format!("Lp_{t}")
}
/// Weighted second-coordinate loss Q_t * L1_t.
pub fn lminus(t: usize) -> String {
    format!("Lm_{t}")
}
/// Conditional population risk of W_t under the first-coordinate marginal of the row kernel.
pub fn rpop(t: usize) -> String {
    format!("R_{t}")
}

/// The proof-side context G_{t-1} = (H_{t-1}, Z_{t,0}, Z_{t,1}).
pub fn context(t: usize) -> Vec<String> {
    vec![hist(t - 1), z0(t), z1(t)]
}
