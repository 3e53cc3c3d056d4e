use covsteer_conic::{svec, Block, Cone, ConicProgram, ProgramBuilder, SparseRow};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random feasible, bounded program: `b = A x0`, `c = Aᵀ y0 + z0` with `x0`,
/// `z0` strictly inside the cone.
pub fn random_program(seed: u64) -> ConicProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cones = vec![];
    for _ in 0..rng.random_range(1..4) {
        if rng.random_bool(0.7) {
            cones.push(Cone::Psd(rng.random_range(1..5)));
        } else {
            cones.push(Cone::Nonneg(rng.random_range(1..4)));
        }
    }
    let interior = |rng: &mut ChaCha8Rng, c: Cone| -> Vec<f64> {
        match c {
            Cone::Psd(s) => {
                let a = DMatrix::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0));
                svec(&(&a * a.transpose() + DMatrix::identity(s, s) * 0.5))
            }
            Cone::Nonneg(f) => (0..f).map(|_| rng.random_range(0.5..2.0)).collect(),
        }
    };
    let x0: Vec<f64> = cones.clone().into_iter().flat_map(|c| interior(&mut rng, c)).collect();
    let z0: Vec<f64> = cones.clone().into_iter().flat_map(|c| interior(&mut rng, c)).collect();
    let dim = x0.len();
    let m = rng.random_range(dim.div_ceil(2)..dim.max(2));
    let mut rows = vec![];
    for _ in 0..m {
        let mut entries = vec![];
        for j in 0..dim {
            if rng.random_bool(0.6) {
                entries.push((j, rng.random_range(-1.0..1.0)));
            }
        }
        rows.push(SparseRow { entries });
    }
    let y0: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.dot(&x0)).collect();
    let mut cost = z0.clone();
    for (r, y) in rows.iter().zip(&y0) {
        for &(j, a) in &r.entries {
            cost[j] += a * y;
        }
    }
    let blocks = cones
        .into_iter()
        .enumerate()
        .map(|(i, cone)| Block {
            cone,
            label: format!("b{i}"),
        })
        .collect();
    ConicProgram::new(blocks, cost, rows, rhs).unwrap()
}


/// Block-separable eigenvalue programs `min Σ <C_k, X_k>` with
/// `tr X_k = t_k`: the optimizer `t_k v_k v_kᵀ` is unique and strictly
/// complementary whenever each `C_k` has a simple smallest eigenvalue.
/// Returns the program and its optimizer.
pub fn eigenvalue_program(seed: u64) -> (ConicProgram, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pb = ProgramBuilder::new();
    let mut xs = vec![];
    for k in 0..rng.random_range(1..4) {
        let n: usize = rng.random_range(1..6);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let c = &a + a.transpose();
        let t = rng.random_range(0.5..2.0);
        let b = pb.add_block(Cone::Psd(n), &format!("X{k}"));
        let r = pb.add_row(t);
        for i in 0..n {
            pb.add_coefficient(r, b, i, i, 1.0);
            for j in i..n {
                pb.add_cost(b, i, j, if i == j { c[(i, j)] } else { 2.0 * c[(i, j)] });
            }
        }
        let e = c.symmetric_eigen();
        let v = e.eigenvectors.column(e.eigenvalues.imin());
        xs.extend(svec(&(v * v.transpose() * t)));
    }
    (pb.build().unwrap(), xs)
}
