use proptest::prelude::*;
use quotforge::geom::*;
use quotforge::linalg::{invert, op_norm_inf};
use quotforge::rational::q;
use quotforge::vertex::vertex_enumerate;
use quotforge::{RMatrix, Rational, WindowVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn wv(v: &[i64]) -> WindowVector {
    WindowVector::from_ints(0, v)
}

fn sup(v: &[Rational]) -> Rational {
    v.iter().map(|x| x.abs()).fold(Rational::zero(), Rational::max)
}

fn rat(rng: &mut ChaCha8Rng, lim: i64) -> Rational {
    q(rng.gen_range(-lim..=lim), rng.gen_range(1..=4))
}

/// Near-indicator family: disjoint supports plus small perturbations off the supports.
fn near_indicators(rng: &mut ChaCha8Rng, n: usize, h: usize) -> Vec<WindowVector> {
    let mut coords: Vec<usize> = (0..n).collect();
    coords.shuffle(rng);
    let mut vs = Vec::new();
    let mut next = 0;
    for k in 0..h {
        let remaining = n - next - (h - k - 1);
        let size = rng.gen_range(1..=remaining.min(3));
        let mut v = vec![Rational::zero(); n];
        for &c in &coords[next..next + size] {
            v[c] = Rational::one();
        }
        next += size;
        vs.push(v);
    }
    let free: Vec<usize> = coords[next..].to_vec();
    for v in vs.iter_mut() {
        if !free.is_empty() && rng.gen_bool(0.5) {
            let j = *free.choose(rng).unwrap();
            v[j] = q(if rng.gen_bool(0.5) { 1 } else { -1 }, *[4, 8].choose(rng).unwrap());
        }
    }
    vs.into_iter().map(|v| WindowVector::new(0, v)).collect()
}

fn extension_instance(seed: u64) -> LinMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = rng.gen_range(1..=3usize);
    let n = rng.gen_range((h * h).max(2)..=12);
    let y1 = Subspace::new(0, n, near_indicators(&mut rng, n, h)).unwrap();
    LinMap::new(y1, 0, n, near_indicators(&mut rng, n, h)).unwrap()
}

#[test]
fn lower_bound_examples() {
    let y = Subspace::ambient(0, 2);
    let t = LinMap::new(y.clone(), 0, 2, vec![wv(&[2, 0]), wv(&[0, 2])]).unwrap();
    assert_eq!(lower_bound(&t, 6).unwrap().value, q(2, 1));
    let k = LinMap::new(y, 0, 2, vec![wv(&[1, 1]), wv(&[1, 1])]).unwrap();
    assert_eq!(lower_bound(&k, 6).unwrap().value, Rational::zero());
}

#[test]
fn lower_bound_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let y = Subspace::ambient(0, 2);
        let imgs: Vec<WindowVector> = (0..2).map(|_| WindowVector::new(0, (0..4).map(|_| rat(&mut rng, 6)).collect())).collect();
        let t = LinMap::new(y, 0, 4, imgs).unwrap();
        let lb = lower_bound(&t, 6).unwrap();
        // grid over the boundary of the coefficient square gives ratios ≥ the exact minimum
        let k = 12;
        for i in -k..=k {
            for (a, b) in [(i, k), (i, -k), (k, i), (-k, i)] {
                let c = [q(a, k), q(b, k)];
                let ratio = t.apply_coeffs(&c).sup_norm() / sup(&c);
                assert!(lb.value <= ratio);
            }
        }
        if lb.value.is_positive() {
            assert_eq!(t.apply_coeffs(&lb.witness).sup_norm(), &lb.value * &sup(&lb.witness));
        }
    }
}

#[test]
fn lower_bound_sampled_property() {
    let t = extension_instance(17);
    let lb = lower_bound(&t, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = t.domain.matrix();
    for _ in 0..1000 {
        let c: Vec<Rational> = (0..t.domain.dim()).map(|_| rat(&mut rng, 9)).collect();
        let x = sup(&b.mul_vec(&c));
        assert!(&lb.value * &x <= t.apply_coeffs(&c).sup_norm());
    }
    assert_eq!(t.apply_coeffs(&lb.witness).sup_norm(), &lb.value * &sup(&b.mul_vec(&lb.witness)));
}

#[test]
fn hahn_banach_examples() {
    let full = Subspace::ambient(0, 3);
    let e = hahn_banach_extend(&full, &[q(1, 1), q(-2, 1), q(1, 2)]).unwrap();
    assert_eq!(e.representer.coords, vec![q(1, 1), q(-2, 1), q(1, 2)]);
    let y = Subspace::new(0, 2, vec![wv(&[1, 1])]).unwrap();
    let e = hahn_banach_extend(&y, &[Rational::one()]).unwrap();
    assert_eq!(e.norm, Rational::one());
    assert_eq!(e.representer.dot(&wv(&[1, 1])), Rational::one());
    let z = hahn_banach_extend(&y, &[Rational::zero()]).unwrap();
    assert!(z.representer.is_zero() && z.norm.is_zero());
}

fn random_subspace(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Subspace {
    loop {
        let basis = (0..k).map(|_| WindowVector::new(0, (0..n).map(|_| rat(rng, 3)).collect())).collect();
        if let Ok(s) = Subspace::new(0, n, basis) {
            return s;
        }
    }
}

#[test]
fn hahn_banach_preserves_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=n.min(3));
        let y = random_subspace(&mut rng, n, k);
        let phi: Vec<Rational> = (0..k).map(|_| rat(&mut rng, 5)).collect();
        let e = hahn_banach_extend(&y, &phi).unwrap();
        for (v, p) in y.basis.iter().zip(&phi) {
            assert_eq!(&e.representer.dot(v), p);
        }
        assert_eq!(e.representer.l1_norm(), e.norm);
        // dual norm: max of |φ(c)| over the vertices of {c : ‖Bc‖∞ ≤ 1}
        let verts = vertex_enumerate(&y.matrix(), 6).unwrap();
        let dual = verts
            .iter()
            .map(|c| c.iter().zip(&phi).map(|(a, b)| a * b).sum::<Rational>().abs())
            .fold(Rational::zero(), Rational::max);
        assert_eq!(e.norm, dual);
    }
}

#[test]
fn projection_examples() {
    let y = Subspace::new(0, 3, vec![wv(&[1, 0, 0])]).unwrap();
    let p = build_projection(&y, Some(&coordinate_witness(&y))).unwrap();
    assert_eq!(p.norm, Rational::one());
    let y = Subspace::new(0, 6, vec![wv(&[1, -1, 0, 0, 0, 0]), wv(&[0, 0, 1, 1, -1, 0])]).unwrap();
    let p = build_projection(&y, None).unwrap();
    assert_eq!(op_norm_inf(&p.p), Rational::one());
    assert_eq!(p.p.mul(&p.p).unwrap(), p.p);
    let bad = LinMap::new(y.clone(), 0, 2, vec![wv(&[1, 1]), wv(&[1, 1])]).unwrap();
    assert!(build_projection(&y, Some(&bad)).is_err());
}

#[test]
fn projection_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let n = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=n.min(3));
        let y = random_subspace(&mut rng, n, k);
        let p = build_projection(&y, None).unwrap();
        assert_eq!(p.p.mul(&p.p).unwrap(), p.p);
        for v in &y.basis {
            assert_eq!(p.p.mul_vec(&v.coords), v.coords);
        }
        assert!(p.norm <= p.bound);
    }
}

#[test]
fn complement_examples() {
    let z = Subspace::new(0, 3, vec![wv(&[0, 1, 0]), wv(&[0, 0, 1])]).unwrap();
    let c = complement_iso(&z, &z, &q(2, 1)).unwrap();
    assert_eq!(c.distortion_bound(), Rational::one());
    let z1 = Subspace::new(0, 4, vec![wv(&[1, 0, 0, 0]), wv(&[0, 1, 0, 0])]).unwrap();
    let z2 = Subspace::new(0, 4, vec![wv(&[0, 0, 1, 0]), wv(&[0, 0, 0, 1])]).unwrap();
    let c = complement_iso(&z1, &z2, &q(2, 1)).unwrap();
    assert_eq!(c.distortion_bound(), Rational::one());
    let m = c.forward.clone().with_windows(0, 0);
    for v in &z1.basis {
        assert!(z2.contains(&WindowVector::new(0, m.mul_vec(&v.coords))));
    }
}

#[test]
fn complement_kernels_in_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let y1 = Subspace::new(0, 8, near_indicators(&mut rng, 8, 2)).unwrap();
        let y2 = Subspace::new(0, 8, near_indicators(&mut rng, 8, 2)).unwrap();
        let z1 = build_projection(&y1, None).unwrap().kernel(0).unwrap();
        let z2 = build_projection(&y2, None).unwrap().kernel(0).unwrap();
        let c = complement_iso(&z1, &z2, &q(64, 1)).unwrap();
        // the restriction Q : Z1 → Z2 measured exactly
        let fwd = c.forward.clone().with_windows(0, 0);
        let imgs: Vec<WindowVector> = z1.basis.iter().map(|v| WindowVector::new(0, fwd.mul_vec(&v.coords))).collect();
        let qmap = LinMap::into_subspace(z1.clone(), &z2, imgs).unwrap();
        let lb = lower_bound(&qmap, 6).unwrap().value;
        let norm = map_norm(&qmap, 6).unwrap().value;
        assert!(norm <= c.norm_bound);
        assert!(lb.recip() <= c.inv_norm_bound);
        assert!(c.distortion_bound() <= q(64 * 64, 1));
    }
}

#[test]
fn rescale_examples() {
    let y = Subspace::ambient(0, 2);
    let id = LinMap::new(y.clone(), 0, 2, vec![wv(&[1, 0]), wv(&[0, 1])]).unwrap();
    let (r, s) = balanced_rescale(&id, 6, &q(1, 100)).unwrap();
    assert_eq!(s, Rational::one());
    assert_eq!(r, id);
    let four = LinMap::new(y, 0, 2, vec![wv(&[4, 0]), wv(&[0, 4])]).unwrap();
    let (r, _) = balanced_rescale(&four, 6, &q(1, 100)).unwrap();
    let n = map_norm(&r, 6).unwrap().value;
    let inv = lower_bound(&r, 6).unwrap().value.recip();
    assert_eq!(&n * &inv, Rational::one());
    assert!(n.max(inv) <= q(101, 100));
}

#[test]
fn rescale_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let delta = q(1, 100);
    for _ in 0..30 {
        let y = Subspace::ambient(0, 3);
        let imgs: Vec<WindowVector> = (0..3).map(|_| WindowVector::new(0, (0..3).map(|_| rat(&mut rng, 7)).collect())).collect();
        let t = LinMap::new(y, 0, 3, imgs).unwrap();
        if !t.is_injective() {
            continue;
        }
        let a = op_norm_inf(&t.image_matrix());
        let b = op_norm_inf(&invert(&t.image_matrix().with_windows(0, 0)).unwrap());
        let (r, s) = balanced_rescale(&t, 6, &delta).unwrap();
        let ra = op_norm_inf(&r.image_matrix());
        let rb = &b / &s;
        let m = ra.clone().max(rb.clone());
        assert_eq!(ra, &a * &s);
        assert!(&m * &m <= (Rational::one() + &delta).pow(2) * &a * &b);
    }
}

#[test]
fn extension_examples() {
    let y = Subspace::ambient(0, 2);
    let t = LinMap::new(y, 0, 2, vec![wv(&[1, 0]), wv(&[1, 2])]).unwrap();
    let cfg = ExtensionConfig { c1: q(2, 1), ..ExtensionConfig::default() };
    let e = extend_isomorphism(&t, None, None, &cfg).unwrap();
    assert_eq!(e.w.to_rows(), RMatrix::from_int_rows(&[&[1, 1], &[0, 2]]).to_rows());
    let y = Subspace::new(0, 2, vec![wv(&[1, 0])]).unwrap();
    let id = LinMap::new(y, 0, 2, vec![wv(&[1, 0])]).unwrap();
    verify_extension(&id, &extend_isomorphism(&id, None, None, &ExtensionConfig::default()).unwrap(), &q(64, 1));
    let y = Subspace::new(0, 4, vec![wv(&[1, 1, 0, 0])]).unwrap();
    let t = LinMap::new(y, 0, 4, vec![wv(&[0, 0, 1, 1])]).unwrap();
    verify_extension(&t, &extend_isomorphism(&t, None, None, &ExtensionConfig::default()).unwrap(), &q(64, 1));
}

#[test]
fn extension_preconditions() {
    let y = Subspace::ambient(0, 4);
    let t = LinMap::new(y.clone(), 0, 4, y.basis.clone()).unwrap();
    // h = 4 > c1·√4 = 2
    assert!(matches!(extend_isomorphism(&t, None, None, &ExtensionConfig::default()), Err(GeomError::Precondition(_))));
    let y = Subspace::new(0, 4, vec![wv(&[1, 0, 0, 0])]).unwrap();
    let big = LinMap::new(y, 0, 4, vec![wv(&[0, 5, 0, 0])]).unwrap();
    assert!(matches!(extend_isomorphism(&big, None, None, &ExtensionConfig::default()), Err(GeomError::Precondition(_))));
}

fn verify_extension(t: &LinMap, e: &Extension, c2: &Rational) {
    for (v, w) in t.domain.basis.iter().zip(&t.images) {
        assert_eq!(e.w.mul_vec(&v.coords), w.coords);
    }
    let inv = invert(&e.w).unwrap();
    assert_eq!(inv, e.w_inv);
    assert!(&op_norm_inf(&e.w) <= c2 && &op_norm_inf(&inv) <= c2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extension_near_indicators(seed in any::<u64>()) {
        let t = extension_instance(seed);
        let e = extend_isomorphism(&t, None, None, &ExtensionConfig::default()).unwrap();
        verify_extension(&t, &e, &q(64, 1));
    }
}
