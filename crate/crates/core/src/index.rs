//! Mixed-radix helpers behind the canonical row-major table layout.

/// Product of the radices; `None` on overflow.
pub fn checked_product(radices: &[usize]) -> Option<usize> {
    radices.iter().try_fold(1usize, |acc, &r| acc.checked_mul(r))
}

pub fn product(radices: &[usize]) -> usize {
    radices.iter().product()
}

/// Row-major encoding, first digit most significant.
pub fn encode(radices: &[usize], digits: &[usize]) -> usize {
    debug_assert_eq!(radices.len(), digits.len());
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (&d, &r)| {
            debug_assert!(d < r);
            acc * r + d
        })
}

pub fn decode_into(radices: &[usize], mut index: usize, out: &mut [usize]) {
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
}

pub fn decode(radices: &[usize], index: usize) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    decode_into(radices, index, &mut out);
    out
}

/// All digit tuples in row-major order.
pub fn tuples(radices: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..product(radices)).map(move |i| decode(radices, i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_agree() {
        let radices = [2, 3, 4];
        for (i, t) in tuples(&radices).enumerate() {
            assert_eq!(encode(&radices, &t), i);
        }
        assert_eq!(decode(&radices, 23), vec![1, 2, 3]);
    }

    #[test]
    fn empty_radix_list_has_one_tuple() {
        assert_eq!(tuples(&[]).count(), 1);
        assert_eq!(encode(&[], &[]), 0);
    }

    #[test]
    fn overflow_is_detected() {
        assert!(checked_product(&[usize::MAX, 2]).is_none());
    }
}
