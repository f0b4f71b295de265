//! Sparse complex LU factorization backed by the system UMFPACK library.
//!
//! UMFPACK's `zi` interface accepts packed complex values (interleaved
//! re/im pairs with a null imaginary array), which matches the memory
//! layout of `Complex<f64>`, so matrix and vector buffers are passed
//! without copies. Solves run UMFPACK's built-in iterative refinement.

use std::os::raw::{c_int, c_void};
use std::ptr;

use num_complex::Complex64 as C64;
use sprs::CsMat;

use crate::error::{Error, Result};

const UMFPACK_A: c_int = 0;
const UMFPACK_OK: c_int = 0;
const UMFPACK_WARNING_SINGULAR_MATRIX: c_int = 1;

#[link(name = "umfpack")]
extern "C" {
    fn umfpack_zi_symbolic(
        n_row: c_int,
        n_col: c_int,
        ap: *const c_int,
        ai: *const c_int,
        ax: *const f64,
        az: *const f64,
        symbolic: *mut *mut c_void,
        control: *const f64,
        info: *mut f64,
    ) -> c_int;
    fn umfpack_zi_numeric(
        ap: *const c_int,
        ai: *const c_int,
        ax: *const f64,
        az: *const f64,
        symbolic: *mut c_void,
        numeric: *mut *mut c_void,
        control: *const f64,
        info: *mut f64,
    ) -> c_int;
    fn umfpack_zi_solve(
        sys: c_int,
        ap: *const c_int,
        ai: *const c_int,
        ax: *const f64,
        az: *const f64,
        xx: *mut f64,
        xz: *mut f64,
        bx: *const f64,
        bz: *const f64,
        numeric: *mut c_void,
        control: *const f64,
        info: *mut f64,
    ) -> c_int;
    fn umfpack_zi_free_symbolic(symbolic: *mut *mut c_void);
    fn umfpack_zi_free_numeric(numeric: *mut *mut c_void);
    fn umfpack_zi_defaults(control: *mut f64);
}

/// LU factorization of a square complex matrix in compressed-column form.
///
/// The column pointers, row indices, and values are retained because
/// UMFPACK's solve step reuses them for iterative refinement.
pub struct SparseLu {
    n: usize,
    ap: Vec<c_int>,
    ai: Vec<c_int>,
    ax: Vec<C64>,
    numeric: *mut c_void,
}

impl SparseLu {
    /// Factor a square CSC matrix. Fails on structurally or numerically
    /// singular input.
    pub fn factor(mat: &CsMat<C64>) -> Result<Self> {
        assert!(mat.is_csc(), "SparseLu::factor expects CSC storage");
        let n = mat.rows();
        if n != mat.cols() {
            return Err(Error::Factorization(format!(
                "matrix is {}x{}, expected square",
                mat.rows(),
                mat.cols()
            )));
        }
        if n > c_int::MAX as usize || mat.nnz() > c_int::MAX as usize {
            return Err(Error::Factorization(format!(
                "dimension {n} or nnz {} exceeds the 32-bit solver interface",
                mat.nnz()
            )));
        }
        let ap: Vec<c_int> = mat
            .indptr()
            .as_slice()
            .expect("contiguous indptr")
            .iter()
            .map(|&p| p as c_int)
            .collect();
        let ai: Vec<c_int> = mat.indices().iter().map(|&i| i as c_int).collect();
        let ax: Vec<C64> = mat.data().to_vec();

        let mut control = [0.0f64; 20];
        unsafe { umfpack_zi_defaults(control.as_mut_ptr()) };
        let mut info = [0.0f64; 90];
        let mut symbolic: *mut c_void = ptr::null_mut();
        let mut numeric: *mut c_void = ptr::null_mut();
        unsafe {
            let status = umfpack_zi_symbolic(
                n as c_int,
                n as c_int,
                ap.as_ptr(),
                ai.as_ptr(),
                ax.as_ptr().cast(),
                ptr::null(),
                &mut symbolic,
                control.as_ptr(),
                info.as_mut_ptr(),
            );
            if status != UMFPACK_OK {
                umfpack_zi_free_symbolic(&mut symbolic);
                return Err(Error::Factorization(format!(
                    "umfpack symbolic analysis failed (status {status})"
                )));
            }
            let status = umfpack_zi_numeric(
                ap.as_ptr(),
                ai.as_ptr(),
                ax.as_ptr().cast(),
                ptr::null(),
                symbolic,
                &mut numeric,
                control.as_ptr(),
                info.as_mut_ptr(),
            );
            umfpack_zi_free_symbolic(&mut symbolic);
            if status == UMFPACK_WARNING_SINGULAR_MATRIX {
                umfpack_zi_free_numeric(&mut numeric);
                return Err(Error::Factorization(
                    "matrix is numerically singular".into(),
                ));
            }
            if status != UMFPACK_OK {
                umfpack_zi_free_numeric(&mut numeric);
                return Err(Error::Factorization(format!(
                    "umfpack numeric factorization failed (status {status})"
                )));
            }
        }
        Ok(Self { n, ap, ai, ax, numeric })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b with iterative refinement.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let mut x = vec![C64::new(0.0, 0.0); self.n];
        let status = unsafe {
            umfpack_zi_solve(
                UMFPACK_A,
                self.ap.as_ptr(),
                self.ai.as_ptr(),
                self.ax.as_ptr().cast(),
                ptr::null(),
                x.as_mut_ptr().cast(),
                ptr::null_mut(),
                b.as_ptr().cast(),
                ptr::null(),
                self.numeric,
                ptr::null(),
                ptr::null_mut(),
            )
        };
        if status != UMFPACK_OK {
            return Err(Error::Factorization(format!(
                "umfpack solve failed (status {status})"
            )));
        }
        Ok(x)
    }

    /// r = b - A x using the stored CSC arrays.
    pub fn residual(&self, x: &[C64], b: &[C64]) -> Vec<C64> {
        let mut r = b.to_vec();
        for j in 0..self.n {
            let xj = x[j];
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            for k in self.ap[j] as usize..self.ap[j + 1] as usize {
                r[self.ai[k] as usize] -= self.ax[k] * xj;
            }
        }
        r
    }
}

impl Drop for SparseLu {
    fn drop(&mut self) {
        unsafe { umfpack_zi_free_numeric(&mut self.numeric) };
    }
}

// The Numeric object is an opaque heap allocation that UMFPACK only reads
// during solves; moving the owner across threads is safe.
unsafe impl Send for SparseLu {}
