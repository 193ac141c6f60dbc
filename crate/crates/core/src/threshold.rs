//! Two-step hard thresholding on coefficient stacks.
//!
//! The edge-wise step keeps an entry iff `|β_i^(k)| >= λ`. The neighbor-wise
//! step keeps the whole group `(β_i^(1), ..., β_i^(K))` iff
//! `Σ_k (β_i^(k))² >= s0 λ²`. The combined operator applies the edge-wise step
//! first, so the group test only sees entries that survived it.

use crate::model::CoefficientStack;

/// Keeps entry `(i, k)` iff `|β_i^(k)| >= lambda`.
pub fn element_threshold(beta: &CoefficientStack, lambda: f64) -> CoefficientStack {
    let mut out = beta.clone();
    element_threshold_in_place(&mut out, lambda);
    out
}

/// Keeps group `i` iff `Σ_k (β_i^(k))² >= s0 lambda²`.
pub fn group_threshold(beta: &CoefficientStack, lambda: f64, s0: f64) -> CoefficientStack {
    let mut out = beta.clone();
    group_threshold_in_place(&mut out, lambda, s0);
    out
}

/// `group_threshold(element_threshold(beta, lambda), lambda, s0)`.
pub fn two_step_threshold(beta: &CoefficientStack, lambda: f64, s0: f64) -> CoefficientStack {
    let mut out = beta.clone();
    two_step_threshold_in_place(&mut out, lambda, s0);
    out
}

pub fn element_threshold_in_place(beta: &mut CoefficientStack, lambda: f64) {
    for k in 0..beta.k() {
        for v in beta.sub_mut(k).iter_mut() {
            if !(v.abs() >= lambda) {
                *v = 0.0;
            }
        }
    }
}

pub fn group_threshold_in_place(beta: &mut CoefficientStack, lambda: f64, s0: f64) {
    let bar = s0 * lambda * lambda;
    for i in 0..beta.dim() {
        let energy: f64 = beta.group(i).map(|v| v * v).sum();
        if !(energy >= bar) {
            for k in 0..beta.k() {
                beta.set(k, i, 0.0);
            }
        }
    }
}

pub fn two_step_threshold_in_place(beta: &mut CoefficientStack, lambda: f64, s0: f64) {
    element_threshold_in_place(beta, lambda);
    group_threshold_in_place(beta, lambda, s0);
}
