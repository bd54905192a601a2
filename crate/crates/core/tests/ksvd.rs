mod common;

use common::*;
use rand::Rng;
use sparsefer_core::ksvd::update_atoms;
use sparsefer_core::rng::rng_from_seed;
use sparsefer_core::synth::{perturb_dictionary, synth_generate, SynthSpec};
use sparsefer_core::{batch_encode, init_dictionary, ksvd_refine, objective, DenseMatrix, Dictionary, KsvdConfig, UnusedAtomPolicy};

fn assert_unit_atoms(d: &DenseMatrix) {
    for (j, col) in d.columns().enumerate() {
        let n = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-10, "atom {j} has norm {n}");
    }
}

#[test]
fn planted_dictionary_is_recovered() {
    let planted = synth_generate(&SynthSpec::new(20, 50, 3, 1500, 0.0, 2024)).unwrap();
    let init = perturb_dictionary(&planted.dictionary, 0.1, 99);
    let dict = Dictionary::from_atoms(init, None).unwrap();
    let cfg = KsvdConfig {
        max_iters: 50,
        ..KsvdConfig::default()
    };
    let (refined, x) = ksvd_refine(&dict, &planted.signals, 3, &cfg).unwrap();
    assert!(refined.training_log.len() <= 50);
    assert_unit_atoms(&refined.atoms);
    let sims = greedy_match(&refined.atoms, &planted.dictionary);
    let recovered = sims.iter().filter(|&&s| s > 0.99).count();
    assert!(recovered >= 45, "only {recovered}/50 atoms recovered");
    for c in 0..x.cols() {
        assert!(x.col(c).iter().filter(|v| **v != 0.0).count() <= 3);
    }
}

#[test]
fn atom_sweep_never_increases_objective() {
    for seed in 0..50u64 {
        let mut r = rng(seed);
        let n = r.random_range(4..16);
        let k = r.random_range(n / 2 + 1..2 * n + 2);
        let l = r.random_range(1..=n.min(k).min(4));
        let big_n = r.random_range(k..3 * k + 10);
        let mut d = unit_gaussian_dictionary(n, k, &mut r);
        let y = gaussian(n, big_n, &mut r);
        let mut x = batch_encode(&d, &y, l, 0.0).unwrap();
        let before = direct_objective(&d, &y, &x);
        let mut sweep_rng = rng_from_seed(seed);
        update_atoms(&mut d, &y, &mut x, UnusedAtomPolicy::ReplaceWithWorstSignal, &mut sweep_rng).unwrap();
        let after = direct_objective(&d, &y, &x);
        assert!(after <= before + 1e-9, "seed {seed}: {before} -> {after}");
        assert_unit_atoms(&d);


        let dict = Dictionary::from_atoms(unit_gaussian_dictionary(n, k, &mut r), None).unwrap();
        let cfg = KsvdConfig {
            max_iters: 5,
            rel_tol: 0.0,
            ..KsvdConfig::default()
        };
        let (refined, x) = ksvd_refine(&dict, &y, l, &cfg).unwrap();
        for it in &refined.training_log {
            assert!(it.objective <= it.objective_before_sweep + 1e-9, "seed {seed}: {it:?}");
        }
        let last = refined.training_log.last().unwrap().objective;
        assert!((objective(&refined.atoms, &y, &x).unwrap() - last).abs() <= 1e-9 * last.max(1.0));
    }
}

#[test]
fn exact_factorization_is_a_fixed_point() {
    // [Q, Q·H] over 16 dims has coherence 1/4, so 2-sparse codes are recovered exactly.
    let mut r = rng(8);
    let q = random_orthogonal(16, &mut r);
    let qh = q.matmul(&hadamard(16)).unwrap();
    let cols: Vec<Vec<f64>> = (0..16).map(|j| q.col(j).to_vec()).chain((0..16).map(|j| qh.col(j).to_vec())).collect();
    let d0 = DenseMatrix::from_columns(16, &cols).unwrap();
    // Every atom used: pair atom j with atom (j + 7) % 32.
    let x = DenseMatrix::from_fn(32, 64, |row, c| {
        let j = c % 32;
        let coef = if c < 32 { 1.0 } else { -0.75 };
        if row == j {
            coef
        } else if row == (j + 7) % 32 {
            0.5
        } else {
            0.0
        }
    });
    let y = d0.matmul(&x).unwrap();
    let dict = Dictionary::from_atoms(d0.clone(), None).unwrap();
    let (refined, _) = ksvd_refine(&dict, &y, 2, &KsvdConfig::default()).unwrap();
    let first = refined.training_log[0];
    assert!(first.objective_before_sweep < 1e-20 && first.objective < 1e-20, "{first:?}");
    for j in 0..32 {
        let ip: f64 = refined.atoms.col(j).iter().zip(d0.col(j)).map(|(a, b)| a * b).sum();
        assert!((ip.abs() - 1.0).abs() < 1e-9, "atom {j} moved: {ip}");
    }
}

#[test]
fn refinement_is_deterministic() {
    let planted = synth_generate(&SynthSpec::new(12, 30, 2, 200, 0.05, 5)).unwrap();
    let mut r = rng(1);
    let y = planted.signals;
    let dict = init_dictionary(&gaussian(12, 30, &mut r)).unwrap();
    let cfg = KsvdConfig {
        max_iters: 10,
        seed: 17,
        ..KsvdConfig::default()
    };
    let a = ksvd_refine(&dict, &y, 2, &cfg).unwrap();
    let b = ksvd_refine(&dict, &y, 2, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unused_atoms_are_replaced_or_kept() {
    // Two signals, four atoms: at L=1 at most two atoms are used.
    let y = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]).unwrap();
    let mut d = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0]]).unwrap();
    d.col_mut(3).copy_from_slice(&[0.0, 0.6, 0.8]);
    let dict = Dictionary::from_atoms(d.clone(), None).unwrap();
    let keep = KsvdConfig {
        max_iters: 1,
        unused_atom_policy: UnusedAtomPolicy::Keep,
        ..KsvdConfig::default()
    };
    let (kept, _) = ksvd_refine(&dict, &y, 1, &keep).unwrap();
    assert_eq!(kept.training_log[0].atoms_replaced, 0);
    assert_eq!(kept.atoms.col(2), d.col(2));
    let replace = KsvdConfig {
        max_iters: 1,
        ..KsvdConfig::default()
    };
    let (replaced, _) = ksvd_refine(&dict, &y, 1, &replace).unwrap();
    assert_eq!(replaced.training_log[0].atoms_replaced, 2);
    assert_unit_atoms(&replaced.atoms);
}
