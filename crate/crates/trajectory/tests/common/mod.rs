#![allow(dead_code)]

/// J_n(z) for z > 0 by Miller's backward recurrence, normalised with
/// J₀ + 2ΣJ_{2k} = 1.
pub fn bessel_j(n: i64, z: f64) -> f64 {
    let n_abs = n.unsigned_abs() as usize;
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let start = (n_abs.max(z as usize) + 60) | 1;
    let mut vals = vec![0.0f64; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / z * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    let j = vals[n_abs] / norm;
    if n < 0 && n_abs % 2 == 1 {
        -j
    } else {
        j
    }
}

#[test]
fn bessel_reference_values() {
    assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
    assert!((bessel_j(1, 2.0) - 0.576_724_807_756_873_4).abs() < 1e-15);
    assert!((bessel_j(-1, 2.0) + 0.576_724_807_756_873_4).abs() < 1e-15);
    assert!((bessel_j(3, 20.0) + 0.098_901_394_560_449_58).abs() < 1e-14);
}
