#include "lapack.hpp"

#include <complex>
#include <string>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace twophoton::lapack {

void heevd(Matrix& a, RealVector& w) {
  const auto n = static_cast<lapack_int>(a.rows());
  w.resize(a.rows());
  if (n == 0) return;
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data());
  if (info != 0) throw NumericalError("zheevd failed with info = " + std::to_string(info));
}

void heevr_window(const Matrix& a, double lower, double upper, RealVector& w, Matrix& z) {
  const auto n = static_cast<lapack_int>(a.rows());
  Matrix work = a;
  RealVector values(a.rows());
  Matrix vectors(a.rows(), a.rows());
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max<lapack_int>(n, 1)));
  lapack_int found = 0;
  if (n > 0) {
    const lapack_int info =
        LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'V', 'U', n, work.data(), n, lower, upper, 0, 0,
                       0.0, &found, values.data(), vectors.data(), n, support.data());
    if (info != 0) throw NumericalError("zheevr failed with info = " + std::to_string(info));
  }
  w = values.head(found);
  z = vectors.leftCols(found);
}

}  // namespace twophoton::lapack
