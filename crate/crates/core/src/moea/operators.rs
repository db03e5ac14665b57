use rand::seq::index::sample;
use rand::Rng;

use crate::dataset::Instance;
use crate::objectives::Strategy;

/// k-point crossover: `k` distinct cut positions are drawn uniformly from `1..len`, and the
/// offspring alternate parent segments between cuts. Each gene comes from one parent at the
/// same position, so feasibility is inherited.
pub fn crossover_kpoint<R: Rng + ?Sized>(
    a: &Strategy,
    b: &Strategy,
    k: usize,
    rng: &mut R,
) -> (Strategy, Strategy) {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    let len = a.len();
    if len < 2 || k == 0 {
        return (a.clone(), b.clone());
    }
    let k = k.min(len - 1);
    let mut cuts: Vec<usize> = sample(rng, len - 1, k).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut x = a.genes.clone();
    let mut y = b.genes.clone();
    let mut swapped = false;
    let mut next = cuts.iter().peekable();
    for t in 0..len {
        while next.peek().is_some_and(|&&c| c == t) {
            swapped = !swapped;
            next.next();
        }
        if swapped {
            x[t] = b.genes[t];
            y[t] = a.genes[t];
        }
    }
    (Strategy::new(x), Strategy::new(y))
}

/// Random-reset mutation. Returns the mutant and the number of genes selected for reset.
pub fn mutate_counted<R: Rng + ?Sized>(
    instance: &Instance,
    s: &Strategy,
    p_m: f64,
    rng: &mut R,
) -> (Strategy, usize) {
    let mut genes = s.genes.clone();
    let mut reset = 0;
    if p_m <= 0.0 {
        return (Strategy::new(genes), 0);
    }
    for (t, gene) in genes.iter_mut().enumerate() {
        if rng.random_bool(p_m.min(1.0)) {
            let options = instance.available(t);
            *gene = options[rng.random_range(0..options.len())];
            reset += 1;
        }
    }
    (Strategy::new(genes), reset)
}

/// Each gene is independently replaced, with probability `p_m`, by a topology drawn
/// uniformly from those available at its step.
pub fn mutate_random_reset<R: Rng + ?Sized>(
    instance: &Instance,
    s: &Strategy,
    p_m: f64,
    rng: &mut R,
) -> Strategy {
    mutate_counted(instance, s, p_m, rng).0
}
