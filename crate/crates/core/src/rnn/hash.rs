//! Hashing of n-gram contexts into the direct-connection array.

/// Multipliers `P_0..P_8`; `P_0` keys the order, `P_k` the k-th most recent
/// context word. All are odd primes.
pub const ORDER_PRIMES: [u64; 9] = [
    108_641_969,
    116_049_371,
    125_925_907,
    133_333_439,
    143_441_063,
    150_886_471,
    158_317_703,
    165_548_161,
    174_174_179,
];

/// Multiplier that keys word-layer features by the target class.
pub const CLASS_PRIME: u64 = 182_182_193;

/// Largest supported maxent order.
pub const MAX_ORDER: usize = ORDER_PRIMES.len();

/// `(P_0 * order + sum_{k=1}^{order-1} P_k * (id_k + 1)) mod D`, where `id_k`
/// is the k-th most recent entry of `window` (most recent last).
///
/// Order 1 uses no context and acts as a bias feature.
pub fn hash_context(window: &[usize], order: usize, direct_size: usize) -> usize {
    assert!((1..=MAX_ORDER).contains(&order), "order {order} out of range");
    assert!(order <= window.len() + 1, "order {order} needs {} context words", order - 1);
    let d = direct_size as u128;
    let mut h = u128::from(ORDER_PRIMES[0]) * order as u128 % d;
    for k in 1..order {
        let id = window[window.len() - k] as u128;
        h = (h + u128::from(ORDER_PRIMES[k]) * (id + 1)) % d;
    }
    h as usize
}

/// Index of the class-layer feature for class `class` given a context hash.
#[inline]
pub fn class_feature(hash: usize, class: usize, direct_size: usize) -> usize {
    ((hash as u128 + class as u128) % direct_size as u128) as usize
}

/// Base index of the word-layer features of `class` given a context hash;
/// member `j` of the class uses `(base + j) mod D`.
#[inline]
pub fn word_feature_base(hash: usize, class: usize, direct_size: usize) -> usize {
    let d = direct_size as u128;
    ((hash as u128 + u128::from(CLASS_PRIME) * (class as u128 + 1)) % d) as usize
}

#[inline]
pub fn word_feature(base: usize, within: usize, direct_size: usize) -> usize {
    ((base as u128 + within as u128) % direct_size as u128) as usize
}
