//! Seeded stratified k-fold assignment.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Fold id per sample. Each class is shuffled and dealt round-robin; the
/// second class continues where the first one stopped so fold sizes stay
/// within one of each other.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Input(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = seed::rng_from(seed);
    let mut assignment = vec![usize::MAX; labels.len()];
    let mut next = 0usize;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::Input(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    if assignment.contains(&usize::MAX) {
        return Err(Error::Input("labels must be 0 or 1".into()));
    }
    Ok(assignment)
}

/// `(train, test)` index lists for fold `f`, both ascending.
pub fn split(assignment: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_paper_sized_folds() {
        let labels: Vec<u8> = (0..260).map(|i| (i % 2) as u8).collect();
        let a = stratified_kfold(&labels, 5, 42).unwrap();
        for f in 0..5 {
            let (_, test) = split(&a, f);
            assert_eq!(test.len(), 52);
            assert_eq!(test.iter().filter(|&&i| labels[i] == 1).count(), 26);
        }
    }

    #[test]
    fn partition_and_determinism() {
        let labels: Vec<u8> = (0..97).map(|i| u8::from(i % 3 == 0)).collect();
        let a = stratified_kfold(&labels, 5, 7).unwrap();
        assert_eq!(a, stratified_kfold(&labels, 5, 7).unwrap());
        assert_ne!(a, stratified_kfold(&labels, 5, 8).unwrap());
        let mut seen = [0usize; 5];
        for &f in &a {
            seen[f] += 1;
        }
        assert_eq!(seen.iter().sum::<usize>(), 97);
        assert!(seen.iter().max().unwrap() - seen.iter().min().unwrap() <= 1);
    }

    #[test]
    fn small_class_is_rejected() {
        assert!(stratified_kfold(&[0, 0, 0, 0, 0, 1, 1, 1], 5, 1).is_err());
    }
}
