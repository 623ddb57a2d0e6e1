// SPDX-License-Identifier: Apache-2.0
//
// Complex linear-algebra and random-sampling primitives shared by the
// rest of the library.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>
#include <vector>

namespace mimose {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Deterministic, seedable random stream.
///
/// A stream is identified by (base_seed, stream_id); identical pairs
/// reproduce identical draws on every platform.  Use derive() to obtain
/// statistically independent streams for parallel work, e.g. one per
/// Monte Carlo trial.  A single stream must not be drawn from
/// concurrently.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  /// Stream for (label, index), e.g. derive(seed, "mc/q-blocks", trial).
  static RngStream derive(std::uint64_t base_seed, std::string_view label,
                          std::uint64_t index);

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform double in [0, 1).
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform angle in [0, 2*pi).
  double angle();
  /// Standard circular complex Gaussian CN(0, 1).
  Complex cgauss();
  /// Vector of m i.i.d. CN(0, 1) entries.
  CVector cgauss_vector(Eigen::Index m);

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 gen_;
};

/// max |a_ij| over all entries; 0 for empty matrices.
double max_abs(const CMatrix& a);

/// max |a - a^H| <= rel_tol * max|a|.
bool is_hermitian(const CMatrix& a, double rel_tol = 1e-10);

/// Hermitian square root factor B with B * B^H = a.
///
/// Uses an eigendecomposition so rank-deficient covariances are handled;
/// eigenvalues in [-1e-10 * lambda_max, 0) are clipped to zero, anything
/// more negative is an error, as is a non-Hermitian or non-square input.
CMatrix psd_sqrt(const CMatrix& a);

/// Entrywise (Hadamard) products.
CMatrix hadamard(const CMatrix& a, const CMatrix& b);
CMatrix hadamard(const CMatrix& a, const CMatrix& b, const CMatrix& c);

/// tr(a * b) without forming the product.
Complex trace_prod(const CMatrix& a, const CMatrix& b);

/// n draws from CN(0, r).
std::vector<CVector> sample_cgauss(const CMatrix& r, long n, RngStream& rng);

/// n draws of factor * g with g standard complex Gaussian.  Use with a
/// cached psd_sqrt() factor inside Monte Carlo loops.
std::vector<CVector> sample_cgauss_factor(const CMatrix& factor, long n,
                                          RngStream& rng);

/// Runs body(i) for i in [0, n) on up to n_threads threads.  Work items
/// must write to disjoint locations; no ordering is guaranteed.
void parallel_for(long n, int n_threads, const std::function<void(long)>& body);

/// Threads to use by default (hardware concurrency, at least 1).
int default_threads();

}  // namespace mimose
