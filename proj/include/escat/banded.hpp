#pragma once

#include "escat/common.hpp"

extern "C" {
void zgbtrf_(const int* m, const int* n, const int* kl, const int* ku,
             escat::Complex* ab, const int* ldab, int* ipiv, int* info);
void zgbtrs_(const char* trans, const int* n, const int* kl, const int* ku,
             const int* nrhs, const escat::Complex* ab, const int* ldab,
             const int* ipiv, escat::Complex* b, const int* ldb, int* info,
             int trans_len);
}

namespace escat {

// Complex banded matrix in LAPACK band storage (column major, with kl extra
// rows for the pivoting fill-in). Solves go through zgbtrf/zgbtrs with one
// step of iterative refinement.
class BandMatrix {
 public:
  BandMatrix(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
        ab_(std::size_t(ldab_) * n, Complex(0, 0)) {}

  int size() const { return n_; }

  Complex& at(int i, int j) {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || i - j > kl_ || j - i > ku_)
      throw ShapeError("BandMatrix: index outside band");
    return ab_[std::size_t(j) * ldab_ + (kl_ + ku_ + i - j)];
  }
  Complex get(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || i - j > kl_ || j - i > ku_)
      return Complex(0, 0);
    return ab_[std::size_t(j) * ldab_ + (kl_ + ku_ + i - j)];
  }

  std::vector<Complex> multiply(const std::vector<Complex>& x) const {
    std::vector<Complex> y(n_, Complex(0, 0));
    for (int j = 0; j < n_; ++j) {
      const int ilo = std::max(0, j - ku_), ihi = std::min(n_ - 1, j + kl_);
      for (int i = ilo; i <= ihi; ++i) y[i] += get(i, j) * x[j];
    }
    return y;
  }

  void factor() {
    fact_ = ab_;
    ipiv_.assign(n_, 0);
    int info = 0;
    zgbtrf_(&n_, &n_, &kl_, &ku_, fact_.data(), &ldab_, ipiv_.data(), &info);
    if (info != 0)
      throw std::runtime_error("zgbtrf failed, info=" + std::to_string(info) +
                               (info > 0 ? " (singular system)" : ""));
    factored_ = true;
  }

  std::vector<Complex> solve(std::vector<Complex> b) const {
    if (!factored_) throw std::runtime_error("BandMatrix: factor() first");
    if (int(b.size()) != n_) throw ShapeError("BandMatrix: rhs size mismatch");
    auto rhs = b;
    back_substitute(rhs);
    // one step of iterative refinement
    auto res = multiply(rhs);
    for (int i = 0; i < n_; ++i) res[i] = b[i] - res[i];
    back_substitute(res);
    for (int i = 0; i < n_; ++i) rhs[i] += res[i];
    return rhs;
  }

  Real relative_residual(const std::vector<Complex>& x,
                         const std::vector<Complex>& b) const {
    auto ax = multiply(x);
    Real num = 0, den = 0;
    for (int i = 0; i < n_; ++i) {
      num += std::norm(ax[i] - b[i]);
      den += std::norm(b[i]);
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  }

 private:
  void back_substitute(std::vector<Complex>& b) const {
    const char trans = 'N';
    const int nrhs = 1, ldb = n_;
    int info = 0;
    zgbtrs_(&trans, &n_, &kl_, &ku_, &nrhs, fact_.data(), &ldab_, ipiv_.data(),
            b.data(), &ldb, &info, 1);
    if (info != 0)
      throw std::runtime_error("zgbtrs failed, info=" + std::to_string(info));
  }

  int n_, kl_, ku_, ldab_;
  std::vector<Complex> ab_, fact_;
  std::vector<int> ipiv_;
  bool factored_ = false;
};

}  // namespace escat
