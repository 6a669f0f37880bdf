/// Length of a longest common subsequence, by the standard O(|a|·|b|)
/// dynamic program over two rolling rows.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    // prev[j] = LCS of the processed prefix of `long` and short[..j]
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(lcs_length(&["x"], &["x"]), 1);
        assert_eq!(lcs_length::<&str>(&[], &["a", "b"]), 0);
        assert_eq!(lcs_length(&["a", "b", "c", "b", "d"], &["b", "d", "c", "a", "b"]), 3);
        assert_eq!(lcs_length(&["body", "div", "p"], &["body", "p"]), 2);
        assert_eq!(lcs_length(&['a', 'b', 'c', 'd'], &['a', 'b', 'e', 'd']), 3);
    }
}
