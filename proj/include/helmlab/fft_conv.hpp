#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "helmlab/geometry.hpp"
#include "helmlab/kernels.hpp"
#include "helmlab/point.hpp"

// Discrete free-space convolution with a fundamental-solution kernel on a
// uniform grid, evaluated by FFT on a torus of (at least) twice the extent.
// Displacements between in-box points map one-to-one onto the torus, so the
// cyclic convolution reproduces the free-space midpoint sum exactly; the zero
// displacement carries the closed-form integral over the equal-measure
// disk/ball, which removes the singular self-cell.

namespace helmlab::fftconv {

struct KernelSpec {
  enum class Type { Laplace, Helmholtz } type{Type::Laplace};
  double k{0.0};

  static KernelSpec laplace() { return {Type::Laplace, 0.0}; }
  static KernelSpec helmholtz(double k) { return {Type::Helmholtz, k}; }
};

inline int next_fast_size(int n) {
  for (;; ++n) {
    int m = n;
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

class KernelConvolver {
 public:
  KernelConvolver(const geometry::Grid& box, KernelSpec spec) : box_(box) {
    const int dim = box.dim;
    torus_size_ = 1;
    for (int a = 0; a < 3; ++a) {
      torus_[a] = a < dim ? next_fast_size(2 * box.counts[a]) : 1;
      torus_size_ *= static_cast<size_t>(torus_[a]);
    }
    work_ = static_cast<cplx*>(fftw_malloc(sizeof(cplx) * torus_size_));
    if (!work_) throw std::bad_alloc();
    kernel_hat_.resize(torus_size_);

    // kernel table at wrapped displacements
    const double h = box.h;
    for (int kz = 0; kz < torus_[2]; ++kz)
      for (int jy = 0; jy < torus_[1]; ++jy)
        for (int ix = 0; ix < torus_[0]; ++ix) {
          const double dx = (ix <= torus_[0] / 2 ? ix : ix - torus_[0]) * h;
          const double dy = (jy <= torus_[1] / 2 ? jy : jy - torus_[1]) * h;
          const double dz = dim == 3 ? (kz <= torus_[2] / 2 ? kz : kz - torus_[2]) * h : 0.0;
          const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
          const size_t idx = (static_cast<size_t>(kz) * torus_[1] + jy) * torus_[0] + ix;
          const double measure = std::pow(h, dim);
          if (r == 0.0) {
            work_[idx] = spec.type == KernelSpec::Type::Laplace
                             ? cplx(kernels::laplace_selfcell_integral(h, dim), 0.0)
                             : kernels::helmholtz_selfcell_integral(spec.k, h, dim);
          } else if (spec.type == KernelSpec::Type::Laplace) {
            work_[idx] = measure * kernels::laplace_kernel({dx, dy, dz}, {0, 0, 0}, dim).value;
          } else {
            work_[idx] = measure * kernels::helmholtz_kernel({dx, dy, dz}, {0, 0, 0}, spec.k, dim).value;
          }
        }

    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      auto* w = reinterpret_cast<fftw_complex*>(work_);
      if (dim == 3) {
        fwd_ = fftw_plan_dft_3d(torus_[2], torus_[1], torus_[0], w, w, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_3d(torus_[2], torus_[1], torus_[0], w, w, FFTW_BACKWARD, FFTW_ESTIMATE);
      } else {
        fwd_ = fftw_plan_dft_2d(torus_[1], torus_[0], w, w, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(torus_[1], torus_[0], w, w, FFTW_BACKWARD, FFTW_ESTIMATE);
      }
    }
    fftw_execute(fwd_);
    for (size_t i = 0; i < torus_size_; ++i) kernel_hat_[i] = work_[i] / static_cast<double>(torus_size_);
  }

  KernelConvolver(const KernelConvolver&) = delete;
  KernelConvolver& operator=(const KernelConvolver&) = delete;

  ~KernelConvolver() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(work_);
  }

  const geometry::Grid& box() const { return box_; }

  /// out[i] = sum_c T[i-c] in[c] over box cells; in/out sized box.size().
  void apply(const cplx* in, cplx* out) {
    const auto& c = box_.counts;
    std::fill(work_, work_ + torus_size_, cplx(0.0, 0.0));
    for (int kz = 0; kz < c[2]; ++kz)
      for (int jy = 0; jy < c[1]; ++jy) {
        const size_t src = (static_cast<size_t>(kz) * c[1] + jy) * c[0];
        const size_t dst = (static_cast<size_t>(kz) * torus_[1] + jy) * torus_[0];
        std::copy(in + src, in + src + c[0], work_ + dst);
      }
    fftw_execute(fwd_);
    for (size_t i = 0; i < torus_size_; ++i) work_[i] *= kernel_hat_[i];
    fftw_execute(bwd_);
    for (int kz = 0; kz < c[2]; ++kz)
      for (int jy = 0; jy < c[1]; ++jy) {
        const size_t dst = (static_cast<size_t>(kz) * c[1] + jy) * c[0];
        const size_t src = (static_cast<size_t>(kz) * torus_[1] + jy) * torus_[0];
        std::copy(work_ + src, work_ + src + c[0], out + dst);
      }
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  geometry::Grid box_;
  int torus_[3]{1, 1, 1};
  size_t torus_size_{0};
  cplx* work_{nullptr};
  std::vector<cplx> kernel_hat_;
  fftw_plan fwd_{}, bwd_{};
};

}  // namespace helmlab::fftconv
