//! Named extremal boxes used as building blocks and test fixtures.

use num_rational::BigRational;
use num_traits::Zero;

use crate::model::{CorrelationBox, Scenario};
use crate::scalar::ratio;

/// Two-party box with `a ⊕ b = x·y`, uniform over consistent outputs.
pub fn pr_box() -> CorrelationBox {
    let s = Scenario::uniform(2, 2, 2).expect("binary pair");
    CorrelationBox::from_fn(s, |x, a| {
        if (a[0] ^ a[1]) == (x[0] & x[1]) {
            ratio(1, 2)
        } else {
            BigRational::zero()
        }
    })
}

/// Three-party box with `a ⊕ b ⊕ c = xy ⊕ yz ⊕ xz`, uniform over consistent outputs.
pub fn svetlichny_box() -> CorrelationBox {
    let s = Scenario::uniform(3, 2, 2).expect("binary triple");
    CorrelationBox::from_fn(s, |x, a| {
        if a[0] ^ a[1] ^ a[2] == (x[0] & x[1]) ^ (x[1] & x[2]) ^ (x[0] & x[2]) {
            ratio(1, 4)
        } else {
            BigRational::zero()
        }
    })
}
