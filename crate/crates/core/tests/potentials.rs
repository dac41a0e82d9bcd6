use std::f64::consts::{FRAC_1_SQRT_2, PI};

use approx::assert_relative_eq;
use cleavelab_core::cleavage::elastic_config;
use cleavelab_core::lattice::{neighbor_pairs, CellGeometry};
use cleavelab_core::linalg::{rotation_2d, rotation_axis_angle};
use cleavelab_core::potentials::{deformed_cell, total_energy};
use cleavelab_core::{
    BravaisBasis, CellEnergyModel, DomainBox, ElasticConstants, LatticeInstance, Mat,
    PairPotential, Preset, Shell, ShellClass,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn models() -> Vec<CellEnergyModel> {
    vec![
        CellEnergyModel::triangular(0.0, 1.0, 1.0).unwrap(),
        CellEnergyModel::triangular(0.4, 2.0, 0.5).unwrap(),
        CellEnergyModel::square(0.0, [1.0, 1.0], [1.0, 1.0]).unwrap(),
        CellEnergyModel::square(0.7, [1.5, 0.5], [1.0, 0.3]).unwrap(),
        CellEnergyModel::cubic(0.3, 0.2, [1.0, 0.6], [1.0, 0.8]).unwrap(),
    ]
}

fn rigid_image(cell: &CellGeometry, r: &Mat, c: &[f64]) -> Vec<f64> {
    let d = cell.dim();
    (0..cell.corner_count())
        .flat_map(|k| {
            let rz = r.mul_vec(cell.corner(k));
            (0..d).map(move |a| rz[a] + c[a]).collect::<Vec<_>>()
        })
        .collect()
}

fn random_rotation(d: usize, rng: &mut impl Rng) -> Mat {
    if d == 2 {
        rotation_2d(rng.gen_range(0.0..2.0 * PI))
    } else {
        let axis: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        rotation_axis_angle(&axis, rng.gen_range(0.0..2.0 * PI))
    }
}

#[test]
fn morse_constants() {
    let w = PairPotential::morse(1.0, 1.0).unwrap();
    assert_eq!(w.value(1.0), 0.0);
    // The Morse range parameter solves 2β̄k² = ᾱ.
    let k = FRAC_1_SQRT_2;
    for r in [0.6, 0.9, 1.3, 2.0, 7.0] {
        let s = 1.0 - (-k * (r - 1.0)).exp();
        assert_relative_eq!(w.value(r), s * s, max_relative = 1e-14);
    }
    for (alpha, beta) in [(1.0, 1.0), (3.0, 0.4), (1.0, 2.0)] {
        let w = PairPotential::morse(alpha, beta).unwrap();
        let h = 1e-4;
        let fd = (w.value(1.0 + h) - 2.0 * w.value(1.0) + w.value(1.0 - h)) / (h * h);
        assert_relative_eq!(fd, alpha, max_relative = 1e-5);
        assert!((w.value(50.0) - beta).abs() <= 1e-6 * beta);
    }
}

#[test]
fn lennard_jones_curvature() {
    let w = PairPotential::lennard_jones(72.0, 1.0).unwrap();
    assert_eq!(w.value(1.0), 0.0);
    let h = 1e-4;
    let fd = (w.value(1.0 + h) - 2.0 * w.value(1.0) + w.value(1.0 - h)) / (h * h);
    assert_relative_eq!(fd, 72.0, max_relative = 1e-5);
}

#[test]
fn potential_errors() {
    assert!(PairPotential::morse(0.0, 1.0).is_err());
    assert!(PairPotential::morse(1.0, -1.0).is_err());
    assert!(PairPotential::morse(f64::NAN, 1.0).is_err());
    assert!(PairPotential::lennard_jones(70.0, 1.0).is_err());
    assert!(PairPotential::table(&[0.5, 1.0, 2.0], &[1.0, 0.1, 1.0]).is_err());
    assert!(PairPotential::table(&[0.5, 2.0, 1.0], &[1.0, 1.0, 0.0]).is_err());
    assert!(PairPotential::table(&[0.5, 1.0], &[1.0, 0.0]).is_err());
}

#[test]
fn potentials_are_nonnegative_on_grid() {
    let table = PairPotential::table(
        &[0.5, 0.8, 1.0, 1.3, 2.0, 3.0],
        &[4.0, 0.5, 0.0, 0.4, 0.9, 1.0],
    )
    .unwrap();
    for w in [
        PairPotential::morse(1.0, 1.0).unwrap(),
        PairPotential::morse(5.0, 0.2).unwrap(),
        PairPotential::lennard_jones(72.0, 1.0).unwrap(),
        table,
    ] {
        for k in 0..10_000 {
            let r = 0.5 + 19.5 * k as f64 / 9_999.0;
            assert!(w.value(r) >= 0.0, "{} at {r}", w.form_name());
        }
    }
}

#[test]
fn derivative_matches_finite_differences() {
    for w in [
        PairPotential::morse(1.3, 0.7).unwrap(),
        PairPotential::lennard_jones(72.0, 1.0).unwrap(),
    ] {
        for r in [0.8, 1.0, 1.2, 2.5] {
            let h = 1e-6;
            let fd = (w.value(r + h) - w.value(r - h)) / (2.0 * h);
            assert!((w.derivative(r) - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
    }
}

#[test]
fn ground_state_and_rigid_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in models() {
        let cell = m.cell();
        assert!(m.cell_energy(cell.z()) <= 1e-20);
        for _ in 0..100 {
            let r = random_rotation(m.dim(), &mut rng);
            let c: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect();
            assert!(m.cell_energy(&rigid_image(cell, &r, &c)) <= 1e-12);
        }
    }
}

/// Distance from `g` to the rigid images of `z` in two dimensions: the best
/// translation is the column mean and the best rotation angle follows from
/// the summed dot and cross products.
fn rigid_distance_2d(g: &[f64], z: &[f64]) -> f64 {
    let n = g.len() / 2;
    let mean = [
        g.iter().step_by(2).sum::<f64>() / n as f64,
        g.iter().skip(1).step_by(2).sum::<f64>() / n as f64,
    ];
    let (mut dot, mut cross) = (0.0, 0.0);
    for k in 0..n {
        let (gx, gy) = (g[2 * k] - mean[0], g[2 * k + 1] - mean[1]);
        let (zx, zy) = (z[2 * k], z[2 * k + 1]);
        dot += zx * gx + zy * gy;
        cross += zx * gy - zy * gx;
    }
    let th = cross.atan2(dot);
    let (s, c) = th.sin_cos();
    (0..n)
        .map(|k| {
            let (zx, zy) = (z[2 * k], z[2 * k + 1]);
            let dx = g[2 * k] - mean[0] - (c * zx - s * zy);
            let dy = g[2 * k + 1] - mean[1] - (s * zx + c * zy);
            dx * dx + dy * dy
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn energy_well_away_from_rigid_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for m in models().into_iter().filter(|m| m.dim() == 2) {
        let z = m.cell().z().to_vec();
        let mut worst_ratio = 0.0f64;
        let mut tested = 0;
        while tested < 100 {
            let scale = rng.gen_range(0.05..1.0);
            let g: Vec<f64> = z
                .iter()
                .map(|v| v + scale * rng.gen_range(-1.0..1.0))
                .collect();
            let dist = rigid_distance_2d(&g, &z);
            if dist < 0.05 || g.iter().map(|v| v * v).sum::<f64>().sqrt() > 10.0 {
                continue;
            }
            tested += 1;
            let w = m.cell_energy(&g);
            assert!(w >= 1e-6, "W = {w} at distance {dist}");
            worst_ratio = worst_ratio.max(dist * dist / w);
        }
        assert!(
            worst_ratio.is_finite() && worst_ratio < 1e3,
            "dist²/W up to {worst_ratio}"
        );
    }
}

#[test]
fn small_strain_limit_square() {
    // Normal-normal entry of the square quadratic form at φ = 0.
    for (a1, a2) in [(1.0, 1.0), (2.0, 0.5)] {
        let m = CellEnergyModel::square(0.0, [a1, a2], [1.0, 1.0]).unwrap();
        let q11 = 0.5 * (2.0 * a1 + a2);
        let f = Mat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let errs: Vec<f64> = [1e-2, 1e-3]
            .iter()
            .map(|&t| (m.cell_energy(&deformed_cell(m.cell(), &f, t)) / (t * t) - 0.5 * q11).abs())
            .collect();
        assert!(errs[1] < 1e-3 * q11 && errs[1] < errs[0], "{errs:?}");
    }
}

#[test]
fn bond_betas_of_presets() {
    let tri = CellEnergyModel::triangular(0.0, 1.0, 0.7).unwrap();
    let carried: Vec<f64> = tri
        .bond_betas()
        .iter()
        .map(|b| b.beta)
        .filter(|&b| b > 0.0)
        .collect();
    assert_eq!(carried, vec![0.7; 3]);

    let sq = CellEnergyModel::square(0.0, [1.0, 1.0], [0.9, 0.4]).unwrap();
    for b in sq.bond_betas() {
        let want = if b.direction.order == 1 { 0.9 } else { 0.4 };
        assert_eq!(b.beta, want, "{:?}", b.direction.coeffs);
    }

    let cu = CellEnergyModel::cubic(0.0, 0.0, [1.0, 1.0], [0.9, 0.4]).unwrap();
    let count = |v: f64| cu.bond_betas().iter().filter(|b| b.beta == v).count();
    assert_eq!((count(0.9), count(0.4), count(0.0)), (3, 6, 4));
}

#[test]
fn bond_betas_survive_column_permutation() {
    let m = Mat::from_rows(&[&[1.0, 0.2, 0.1], &[0.0, 1.1, 0.3], &[0.1, 0.0, 0.9]]);
    let cols: Vec<Vec<f64>> = (0..3).map(|j| m.column(j)).collect();
    let permuted = vec![
        cols[1].clone(),
        cols[0].clone(),
        cols[2].iter().map(|x| -x).collect(),
    ];
    let build = |cols: &[Vec<f64>]| {
        let basis = BravaisBasis::custom(Mat::from_columns(cols)).unwrap();
        CellEnergyModel::new(
            &basis,
            vec![
                Shell::new(ShellClass::Nearest, PairPotential::morse(1.0, 1.0).unwrap()),
                Shell::new(
                    ShellClass::NextNearest,
                    PairPotential::morse(1.0, 0.5).unwrap(),
                ),
            ],
        )
        .unwrap()
    };
    let (a, b) = (build(&cols), build(&permuted));
    assert_eq!(a.bond_betas().len(), b.bond_betas().len());
    for x in a.bond_betas() {
        let v = &x.direction.vector;
        let matched = b.bond_betas().iter().find(|y| {
            let w = &y.direction.vector;
            let same = v.iter().zip(w).all(|(p, q)| (p - q).abs() < 1e-12);
            let opposite = v.iter().zip(w).all(|(p, q)| (p + q).abs() < 1e-12);
            same || opposite
        });
        assert_eq!(matched.map(|y| y.beta), Some(x.beta));
    }
}

#[test]
fn decomposition_residual_vanishes_with_separation() {
    let beta1 = 1.0;
    let m = CellEnergyModel::square(0.0, [1.0, 1.0], [beta1, 0.5]).unwrap();
    // Corners are numbered by binary counter with bit 0 along the first axis.
    let right = [false, true, false, true];
    assert!(m.decomposition_check(&right, 1e3, &[1.0, 0.0]).unwrap() <= 1e-3 * beta1);
    assert!(m.decomposition_check(&right, 1e6, &[1.0, 0.0]).unwrap() <= 1e-9 * beta1);
    let corner = [false, false, false, true];
    assert!(m.decomposition_check(&corner, 1e6, &[1.0, 1.0]).unwrap() <= 1e-9 * beta1);
    assert!(m
        .decomposition_check(&[false; 4], 1e3, &[1.0, 0.0])
        .is_err());
    assert!(m.decomposition_check(&[true; 4], 1e3, &[1.0, 0.0]).is_err());
    assert!(m.decomposition_check(&right, 0.0, &[1.0, 0.0]).is_err());
}

#[test]
fn rigid_configurations_have_zero_energy() {
    let basis = BravaisBasis::preset(Preset::Triangular, &[0.3]).unwrap();
    let lat = LatticeInstance::build(&basis, &DomainBox::new(vec![2.0, 1.0], 0.1)).unwrap();
    let m = CellEnergyModel::triangular(0.3, 1.0, 1.0).unwrap();
    assert!(total_energy(&lat, lat.positions(), &m).unwrap() <= 1e-20);
    let r = rotation_2d(1.1);
    let y: Vec<f64> = lat
        .positions()
        .chunks(2)
        .flat_map(|x| {
            let rx = r.mul_vec(x);
            [rx[0] + 0.4, rx[1] - 2.0]
        })
        .collect();
    assert!(total_energy(&lat, &y, &m).unwrap() <= 1e-12);
}

#[test]
fn triangular_elastic_energy_near_its_limit() {
    let eps: f64 = 0.05;
    let (l1, l2) = (4.0, 1.0);
    let a_eps = 0.3 * eps.sqrt();
    let m = CellEnergyModel::triangular(0.0, 1.0, 1.0).unwrap();
    let ec = ElasticConstants::compute(&m).unwrap();
    let lat = LatticeInstance::build(m.basis(), &DomainBox::new(vec![l1, l2], eps)).unwrap();
    let (conf, _) = elastic_config(&lat, a_eps, &ec.f_bar_unit);
    let e = total_energy(&lat, &conf.y, &m).unwrap();
    let limit = (l2 / m.basis().det()) * 0.5 * l1 * 1.0 * a_eps * a_eps / eps;
    assert!((e / limit - 1.0).abs() <= 0.10, "{e} vs {limit}");
}

/// Bond-sum form: every lattice bond carried by a shell contributes
/// `ε^{d−1} W(|Δy| / (ε ℓ))` once.
fn bond_sum(lat: &LatticeInstance, y: &[f64], m: &CellEnergyModel) -> f64 {
    let d = lat.dim();
    let eps = lat.epsilon();
    let mut e = 0.0;
    for (s, &len) in m.shell_lengths().iter().enumerate() {
        let w = &m.shells()[s].potential;
        for (i, j) in neighbor_pairs(lat, len, 1e-9) {
            let r = (0..d)
                .map(|a| (y[i * d + a] - y[j * d + a]).powi(2))
                .sum::<f64>()
                .sqrt();
            e += w.value(r / (eps * len));
        }
    }
    eps.powi(d as i32 - 1) * e
}

#[test]
fn cell_sum_equals_bond_sum_in_the_interior() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for m in models() {
        let lengths = vec![1.0; m.dim()];
        let eps = if m.dim() == 2 { 0.05 } else { 0.1 };
        let lat = LatticeInstance::build(m.basis(), &DomainBox::new(lengths.clone(), eps)).unwrap();
        let d = lat.dim();
        let mut y = lat.positions().to_vec();
        for i in 0..lat.atom_count() {
            let x = lat.position(i);
            let interior = (0..d).all(|a| x[a] >= 3.0 * eps && x[a] <= lengths[a] - 3.0 * eps);
            if interior {
                for a in 0..d {
                    y[i * d + a] += 0.1 * eps * rng.gen_range(-1.0..1.0);
                }
            }
        }
        let cells = total_energy(&lat, &y, &m).unwrap();
        let bonds = bond_sum(&lat, &y, &m);
        assert!(cells > 0.0);
        assert_relative_eq!(cells, bonds, max_relative = 1e-10);
    }
}

fn model_strategy() -> impl Strategy<Value = CellEnergyModel> {
    prop_oneof![
        (0.0f64..1.0, 0.5f64..2.0, 0.5f64..2.0)
            .prop_map(|(p, a, b)| CellEnergyModel::triangular(p, a, b).unwrap()),
        (0.0f64..1.5, 0.5f64..2.0, 0.5f64..2.0).prop_map(|(p, a, b)| CellEnergyModel::square(
            p,
            [a, 1.0],
            [b, 0.5]
        )
        .unwrap()),
        (0.0f64..1.5, 0.0f64..1.5).prop_map(|(p, s)| CellEnergyModel::cubic(
            p,
            s,
            [1.0, 0.7],
            [1.0, 0.6]
        )
        .unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cell_energy_is_frame_indifferent(
        m in model_strategy(),
        noise in proptest::collection::vec(-0.6f64..0.6, 24),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = m.dim();
        let g: Vec<f64> = m.cell().z().iter().zip(&noise).map(|(z, n)| z + n).collect();
        let r = random_rotation(d, &mut rng);
        let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let moved: Vec<f64> = g
            .chunks(d)
            .flat_map(|p| {
                let rp = r.mul_vec(p);
                (0..d).map(|a| rp[a] + c[a]).collect::<Vec<_>>()
            })
            .collect();
        let (w0, w1) = (m.cell_energy(&g), m.cell_energy(&moved));
        prop_assert!((w0 - w1).abs() <= 1e-9 * (1.0 + w0), "{} vs {}", w0, w1);
    }

    #[test]
    fn carried_betas_are_positive(m in model_strategy()) {
        for b in m.bond_betas() {
            prop_assert_eq!(b.beta > 0.0, b.shell.is_some());
        }
    }
}
