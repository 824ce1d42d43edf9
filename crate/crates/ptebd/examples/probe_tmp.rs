use num_complex::Complex64;
use ptebd::evolution::{parallel_truncate, stabilize_norm};
use ptebd::mps::VidalMps;
use ptebd::tensor::contract;

fn quality(m: &faer::Mat<Complex64>, u: &faer::MatRef<Complex64>, s: &[f64], v: &faer::MatRef<Complex64>) -> (f64, f64) {
    let (rows, cols) = (m.nrows(), m.ncols());
    let frob2: f64 = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| m[(r, c)].norm_sqr())
        .sum();
    let sum_s2: f64 = s.iter().map(|x| x * x).sum();
    let mut resid2 = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..s.len() {
                acc += u[(r, j)] * s[j] * v[(c, j)].conj();
            }
            resid2 += (acc - m[(r, c)]).norm_sqr();
        }
    }
    (sum_s2 - frob2, resid2.sqrt())
}

fn main() -> ptebd::Result<()> {
    let mut state = VidalMps::random_mps(20, 128, 97)?;
    let report = parallel_truncate(&mut state, 64)?;
    stabilize_norm(&mut state, &report)?;
    let state = state.normalized_by_bond_scaling()?;

    let b = 7usize;
    let mut tl = state.gamma(b - 1).clone();
    tl.scale_axis(0, state.lambda(b - 1))?;
    tl.scale_axis(2, state.lambda(b))?;
    let mut tr = state.gamma(b).clone();
    tr.scale_axis(2, state.lambda(b + 1))?;
    let theta = contract(&tl, &[2], &tr, &[0])?;
    let (cl, cr) = (theta.shape()[0], theta.shape()[3]);
    let m_t = theta.into_shape(&[cl * 2, 2 * cr])?;
    let (rows, cols) = (cl * 2, 2 * cr);

    // Entry statistics.
    let mut min_nz = f64::INFINITY;
    let mut max = 0.0f64;
    let mut zeros = 0usize;
    let mut subnormal = 0usize;
    for z in m_t.data() {
        let a = z.norm();
        if a == 0.0 {
            zeros += 1;
        } else {
            min_nz = min_nz.min(a);
            max = max.max(a);
            if !z.re.is_normal() && z.re != 0.0 || !z.im.is_normal() && z.im != 0.0 {
                subnormal += 1;
            }
        }
    }
    println!("{rows}x{cols}: zeros={zeros}/{} min|nz|={min_nz:.3e} max={max:.3e} subnormal={subnormal}", rows * cols);

    let a = faer::Mat::<Complex64>::from_fn(rows, cols, |r, c| m_t.data()[r * cols + c]);

    let f = a.thin_svd().unwrap();
    let s: Vec<f64> = f.S().column_vector().iter().map(|v| v.re).collect();
    let (d, r) = quality(&a, &f.U(), &s, &f.V());
    println!("thin_svd : diff={d:+.3e} resid={r:.3e}");
    println!("  s[60..68]={:?}", &s[60..68]);

    let f2 = a.svd().unwrap();
    let s2: Vec<f64> = f2.S().column_vector().iter().map(|v| v.re).collect();
    let (d2, r2) = quality(&a, &f2.U(), &s2, &f2.V());
    println!("full svd : diff={d2:+.3e} resid={r2:.3e}");

    let at = a.adjoint().to_owned();
    let f3 = at.thin_svd().unwrap();
    let s3: Vec<f64> = f3.S().column_vector().iter().map(|v| v.re).collect();
    let (d3, r3) = quality(&at, &f3.U(), &s3, &f3.V());
    println!("adj thin : diff={d3:+.3e} resid={r3:.3e}");

    Ok(())
}
