//! Shared helpers for the integration suites. The random-term builder here
//! is deliberately independent of the library's generator: it walks the
//! declared signature with a bare LCG and uniform choices, so it can serve
//! as an oracle for round-trip and statistics properties.

#![allow(dead_code)]

use instgen_core::term::{parse_signature, symbols_of_sort, GroundTerm, Signature, Sort};

/// Minimal 64-bit LCG; not shared with the library's rng.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x2545_f491_4f6c_dd1d))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.next_u64() >> 33) as usize) % n
    }

    pub fn chance(&mut self, percent: usize) -> bool {
        self.below(100) < percent
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Two sorts, both inhabited by constants, with unary and binary functions
/// and a sort-crossing pair so random terms exercise mixed-sort positions.
pub fn rich_signature() -> Signature {
    parse_signature(
        "(declare-sort S 0)\n\
         (declare-sort T 0)\n\
         (declare-const a S)\n\
         (declare-const b S)\n\
         (declare-const c T)\n\
         (declare-fun f (S) S)\n\
         (declare-fun g (S S) S)\n\
         (declare-fun h (T) S)\n\
         (declare-fun k (S) T)\n",
    )
    .expect("fixture signature is valid")
}

/// Uniform random well-sorted term of `sort` with depth at most `budget`.
pub fn random_term(sig: &Signature, sort: &Sort, rng: &mut Lcg, budget: u32) -> GroundTerm {
    let all = symbols_of_sort(sig.symbols(), sort);
    let pool: Vec<_> = if budget == 0 {
        all.into_iter().filter(|d| d.is_constant()).collect()
    } else {
        all
    };
    assert!(!pool.is_empty(), "every sort in the fixture has a constant");
    let head = pool[rng.below(pool.len())].clone();
    let args = head
        .arg_sorts()
        .iter()
        .map(|s| random_term(sig, s, rng, budget.saturating_sub(1)))
        .collect();
    GroundTerm::new(head, args).expect("arguments built at declared sorts")
}

/// A batch of random terms over the fixture signature's sort `S`.
pub fn random_terms(count: usize, seed: u64, max_depth: u32) -> (Signature, Vec<GroundTerm>) {
    let sig = rich_signature();
    let sort = sig.sort("S").cloned().unwrap();
    let mut rng = Lcg::new(seed);
    let terms = (0..count)
        .map(|_| {
            let budget = rng.below((max_depth + 1) as usize) as u32;
            random_term(&sig, &sort, &mut rng, budget)
        })
        .collect();
    (sig, terms)
}
