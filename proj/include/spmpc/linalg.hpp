#pragma once

#include "spmpc/fom.hpp"

namespace spmpc {

/// Matrix exponential by scaling-and-squaring with a Pade(13) approximant.
Mat expm(const Mat& A);

/// Solution of the discrete algebraic Riccati equation
///   A'XA - X - A'XB (R + B'XB)^-1 B'XA + Q = 0
/// by fixed-point iteration to the given residual tolerance.
Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
               double tol = 1e-10, long max_iter = 100'000);

/// Solution of the discrete Lyapunov equation A'XA - X + Q = 0 for a Schur
/// stable A, via the doubling iteration.
Mat solve_dlyap(const Mat& A, const Mat& Q, double tol = 1e-12, long max_iter = 200);

/// LQR gain K = -(R + B'XB)^-1 B'XA for the DARE solution X.
Mat lqr_gain(const Mat& A, const Mat& B, const Mat& X, const Mat& R);

}  // namespace spmpc
