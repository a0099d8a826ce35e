/// Bit-reversal (van der Corput) order of `0..n`: indices of the smallest
/// power of two `>= n`, bit-reversed, keeping those below `n`.
pub fn view_order(n: usize) -> Vec<usize> {
    assert!(n >= 1, "view_order needs at least one view");
    let m = n.next_power_of_two();
    let bits = m.trailing_zeros();
    (0..m)
        .map(|i| {
            if bits == 0 {
                0
            } else {
                i.reverse_bits() >> (usize::BITS - bits)
            }
        })
        .filter(|&i| i < n)
        .collect()
}

/// Largest run of consecutive view indices in `0..n` not covered by
/// `rendered`, counting the spans before the first and after the last.
pub fn largest_gap(rendered: &[usize], n: usize) -> usize {
    let mut seen = vec![false; n];
    for &i in rendered {
        seen[i] = true;
    }
    let (mut best, mut run) = (0, 0);
    for s in seen {
        run = if s { 0 } else { run + 1 };
        best = best.max(run);
    }
    best
}
