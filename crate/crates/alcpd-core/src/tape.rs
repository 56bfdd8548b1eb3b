// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimal reverse-mode gradient tape.
//!
//! Model math is written once, generic over [`Scalar`], and instantiated with
//! plain `f64` for evaluation or with [`Var`] for training. Each `Var`
//! records its value plus local partials w.r.t. at most two parents; a single
//! reverse sweep over the tape yields the gradient of one output w.r.t.
//! every leaf.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy)]
struct Node {
    p0: u32,
    d0: f64,
    p1: u32,
    d1: f64,
    value: f64,
}

/// Arena of recorded operations. Cleared and reused between optimizer steps.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Drops all recorded nodes but keeps the allocation.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
    }

    /// Registers a leaf (independent variable).
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(value, 0, 0.0, 0, 0.0);
        // Leaves point at themselves with zero partials.
        {
            let mut nodes = self.nodes.borrow_mut();
            let node = &mut nodes[idx as usize];
            node.p0 = idx;
            node.p1 = idx;
        }
        Var { tape: self, idx }
    }

    fn push(&self, value: f64, p0: u32, d0: f64, p1: u32, d1: f64) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node { p0, d0, p1, d1, value });
        idx
    }

    /// Adjoints of every node w.r.t. `output`. Index with `Var::index`.
    pub fn gradient(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adjoint = vec![0.0; nodes.len()];
        adjoint[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            let n = &nodes[i];
            if n.p0 as usize != i {
                adjoint[n.p0 as usize] += a * n.d0;
            }
            if n.p1 as usize != i {
                adjoint[n.p1 as usize] += a * n.d1;
            }
        }
        adjoint
    }
}

/// Handle to one tape entry; cheap to copy, borrows the tape.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
}

impl<'t> Var<'t> {
    pub fn index(self) -> usize {
        self.idx as usize
    }

    fn unary(self, value: f64, d: f64) -> Var<'t> {
        let idx = self.tape.push(value, self.idx, d, self.idx, 0.0);
        Var { tape: self.tape, idx }
    }

    fn binary(self, rhs: Var<'t>, value: f64, d0: f64, d1: f64) -> Var<'t> {
        let idx = self.tape.push(value, self.idx, d0, rhs.idx, d1);
        Var { tape: self.tape, idx }
    }
}

/// Numeric scalar shared by the evaluation (`f64`) and training ([`Var`])
/// paths. `lift` creates a constant living on the same tape as `self`.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    fn lift(self, c: f64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// `max(self, floor)`; derivative 1 above the floor, 0 below.
    fn clamp_min(self, floor: f64) -> Self;
}

impl Scalar for f64 {
    fn value(self) -> f64 {
        self
    }
    fn lift(self, c: f64) -> f64 {
        c
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn clamp_min(self, floor: f64) -> f64 {
        self.max(floor)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(self) -> f64 {
        self.tape.nodes.borrow()[self.idx as usize].value
    }

    fn lift(self, c: f64) -> Var<'t> {
        self.tape.var(c)
    }

    fn exp(self) -> Var<'t> {
        let e = self.value().exp();
        self.unary(e, e)
    }

    fn ln(self) -> Var<'t> {
        let v = self.value();
        self.unary(v.ln(), 1.0 / v)
    }

    fn sqrt(self) -> Var<'t> {
        let s = self.value().sqrt();
        self.unary(s, 0.5 / s)
    }

    fn abs(self) -> Var<'t> {
        let v = self.value();
        // signum(0) contributes 0, matching the symmetric subgradient.
        let d = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.unary(v.abs(), d)
    }

    fn clamp_min(self, floor: f64) -> Var<'t> {
        let v = self.value();
        if v >= floor {
            self.unary(v, 1.0)
        } else {
            self.unary(floor, 0.0)
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.value() + rhs.value(), 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.value() - rhs.value(), 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        self.binary(rhs, a * b, b, a)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), rhs.value());
        self.binary(rhs, a / b, 1.0 / b, -a / (b * b))
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(-self.value(), -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, c: f64) -> Var<'t> {
        self.unary(self.value() + c, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, c: f64) -> Var<'t> {
        self.unary(self.value() - c, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, c: f64) -> Var<'t> {
        self.unary(self.value() * c, c)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, c: f64) -> Var<'t> {
        self.unary(self.value() / c, 1.0 / c)
    }
}
