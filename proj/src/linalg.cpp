#include "spmpc/linalg.hpp"

#include <cmath>

namespace spmpc {

Mat expm(const Mat& A) {
  // Higham's scaling-and-squaring with the degree-13 Pade approximant.
  static const double pade13[] = {64764752532480000.0, 32382376266240000.0,
                                  7771770303897600.0,  1187353796428800.0,
                                  129060195264000.0,   10559470521600.0,
                                  670442572800.0,      33522128640.0,
                                  1323241920.0,        40840800.0,
                                  960960.0,            16380.0,
                                  182.0,               1.0};
  const int n = static_cast<int>(A.rows());
  const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  const double theta13 = 5.371920351148152;
  Mat As = A;
  if (nrm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    As /= std::pow(2.0, squarings);
  }
  const Mat I = Mat::Identity(n, n);
  const Mat A2 = As * As;
  const Mat A4 = A2 * A2;
  const Mat A6 = A2 * A4;
  const Mat U = As * (A6 * (pade13[13] * A6 + pade13[11] * A4 + pade13[9] * A2) +
                      pade13[7] * A6 + pade13[5] * A4 + pade13[3] * A2 + pade13[1] * I);
  const Mat V = A6 * (pade13[12] * A6 + pade13[10] * A4 + pade13[8] * A2) +
                pade13[6] * A6 + pade13[4] * A4 + pade13[2] * A2 + pade13[0] * I;
  Mat F = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) F = F * F;
  return F;
}

Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, double tol,
               long max_iter) {
  Mat X = Q;
  for (long it = 0; it < max_iter; ++it) {
    const Mat BtXA = B.transpose() * X * A;
    const Mat K = (R + B.transpose() * X * B).ldlt().solve(BtXA);
    const Mat X_next = A.transpose() * X * A - BtXA.transpose() * K + Q;
    const double diff = (X_next - X).cwiseAbs().maxCoeff();
    X = 0.5 * (X_next + X_next.transpose());
    if (diff < tol) return X;
  }
  throw std::runtime_error("solve_dare: fixed-point iteration did not converge");
}

Mat solve_dlyap(const Mat& A, const Mat& Q, double tol, long max_iter) {
  // doubling: X_{k+1} = X_k + M_k' X_k M_k, M_{k+1} = M_k^2
  Mat X = Q;
  Mat M = A;
  for (long it = 0; it < max_iter; ++it) {
    const Mat inc = M.transpose() * X * M;
    X += inc;
    X = 0.5 * (X + X.transpose());
    if (inc.cwiseAbs().maxCoeff() < tol) return X;
    M = M * M;
  }
  throw std::runtime_error("solve_dlyap: doubling iteration did not converge (A unstable?)");
}

Mat lqr_gain(const Mat& A, const Mat& B, const Mat& X, const Mat& R) {
  return -(R + B.transpose() * X * B).ldlt().solve(B.transpose() * X * A);
}

}  // namespace spmpc
