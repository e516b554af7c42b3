//! Numeric traits the crate is generic over.
//!
//! The neural model needs a real field ([`Real`]); the graph search only needs
//! an ordered additive monoid ([`Weight`]), so integer and rational weights work
//! there too and give exact comparisons in tests.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumAssignOps, ToPrimitive};

/// Floating-point scalar used by the lateness model.
pub trait Real: Float + FromPrimitive + NumAssignOps + Sum + Debug + Default + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("value representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Edge weight for shortest-path search: non-negative, totally ordered in practice.
pub trait Weight: Num + Copy + PartialOrd + ToPrimitive + Debug + Send + Sync {}

impl<T> Weight for T where T: Num + Copy + PartialOrd + ToPrimitive + Debug + Send + Sync {}
