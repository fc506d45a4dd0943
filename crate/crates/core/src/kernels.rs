//! Dense matrix kernels on row-major slices.

use crate::par;
use crate::scalar::Scalar;

/// Products smaller than this many multiply-adds stay on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;

fn row_kernel<T: Scalar>(a_row: &[T], b: &[T], n: usize, out: &mut [T]) {
    for (kk, &aik) in a_row.iter().enumerate() {
        if aik == T::zero() {
            continue;
        }
        let b_row = &b[kk * n..(kk + 1) * n];
        for (o, &bv) in out.iter_mut().zip(b_row) {
            *o = *o + aik * bv;
        }
    }
}

/// `out += a · b` with `a: [m, k]`, `b: [k, n]`, `out: [m, n]`, single threaded.
pub fn matmul_acc_seq<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    if n == 0 {
        return;
    }
    for (i, out_row) in out.chunks_mut(n).enumerate() {
        row_kernel(&a[i * k..(i + 1) * k], b, n, out_row);
    }
}

/// `out += a · b`, splitting rows across threads for large products.
///
/// Every output row is computed by the same sequential loop, so the result
/// is bit-identical to [`matmul_acc_seq`].
pub fn matmul_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    if m * k * n < PAR_THRESHOLD || m < 2 || !par::is_parallel() || n == 0 {
        return matmul_acc_seq(a, b, out, m, k, n);
    }
    par::for_each_chunk_mut(out, n, |i, out_row| {
        row_kernel(&a[i * k..(i + 1) * k], b, n, out_row);
    });
}

/// `out += a · bᵀ` with `a: [m, k]`, `b: [n, k]`.
pub fn matmul_nt_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    let body = |i: usize, out_row: &mut [T]| {
        let a_row = &a[i * k..(i + 1) * k];
        for (j, o) in out_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            let mut s = T::zero();
            for (&x, &y) in a_row.iter().zip(b_row) {
                s = s + x * y;
            }
            *o = *o + s;
        }
    };
    if n == 0 {
        return;
    }
    if m * k * n < PAR_THRESHOLD || m < 2 || !par::is_parallel() {
        out.chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
    } else {
        par::for_each_chunk_mut(out, n, body);
    }
}

/// `out += aᵀ · b` with `a: [k, m]`, `b: [k, n]`, `out: [m, n]`.
pub fn matmul_tn_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], k: usize, m: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    if n == 0 {
        return;
    }
    let body = |i: usize, out_row: &mut [T]| {
        for kk in 0..k {
            let aki = a[kk * m + i];
            if aki == T::zero() {
                continue;
            }
            let b_row = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o = *o + aki * bv;
            }
        }
    };
    if m * k * n < PAR_THRESHOLD || m < 2 || !par::is_parallel() {
        out.chunks_mut(n).enumerate().for_each(|(i, r)| body(i, r));
    } else {
        par::for_each_chunk_mut(out, n, body);
    }
}
