// SPDX-License-Identifier: Apache-2.0

#include "mimose/numkit.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace mimose {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
    : base_seed_(base_seed),
      stream_id_(stream_id),
      gen_(splitmix64(splitmix64(base_seed) ^
                      splitmix64(stream_id * 0x9e3779b97f4a7c15ULL + 1))) {}

RngStream RngStream::derive(std::uint64_t base_seed, std::string_view label,
                            std::uint64_t index) {
  return RngStream(base_seed, splitmix64(fnv1a64(label) ^ splitmix64(index)));
}

double RngStream::uniform() {
  // 53 random bits; exact on every conforming platform.
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::angle() { return uniform(0.0, 2.0 * std::numbers::pi); }

Complex RngStream::cgauss() {
  // |z|^2 ~ Exp(1), arg(z) uniform: exact CN(0,1) without relying on
  // implementation-defined std::normal_distribution.
  const double u = 1.0 - uniform();  // (0, 1]
  const double r = std::sqrt(-std::log(u));
  const double phi = angle();
  return Complex(r * std::cos(phi), r * std::sin(phi));
}

CVector RngStream::cgauss_vector(Eigen::Index m) {
  CVector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = cgauss();
  return v;
}

double max_abs(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs(a);
  if (scale == 0.0) return true;
  return max_abs(a - a.adjoint()) <= rel_tol * scale;
}

CMatrix psd_sqrt(const CMatrix& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("psd_sqrt: matrix must be square");
  if (!is_hermitian(a))
    throw std::invalid_argument("psd_sqrt: matrix must be Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(a);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("psd_sqrt: eigendecomposition failed");
  RVector lam = eig.eigenvalues();
  const double lam_max = lam.size() ? lam.maxCoeff() : 0.0;
  const double floor = -1e-10 * std::max(lam_max, 0.0);
  // Below rank_cut an eigenvalue is rounding noise; zeroing it keeps the
  // factor rank equal to the numerical rank of the input.
  const double rank_cut = 1e-13 * std::max(lam_max, 0.0);
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < floor)
      throw std::invalid_argument("psd_sqrt: matrix is not PSD (eigenvalue " +
                                  std::to_string(lam(i)) + ")");
    if (lam(i) < rank_cut) lam(i) = 0.0;
  }
  return eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

CMatrix hadamard(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hadamard: dimension mismatch");
  return a.cwiseProduct(b);
}

CMatrix hadamard(const CMatrix& a, const CMatrix& b, const CMatrix& c) {
  return hadamard(hadamard(a, b), c);
}

Complex trace_prod(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols())
    throw std::invalid_argument("trace_prod: a*b is not square");
  return a.cwiseProduct(b.transpose()).sum();
}

std::vector<CVector> sample_cgauss(const CMatrix& r, long n, RngStream& rng) {
  return sample_cgauss_factor(psd_sqrt(r), n, rng);
}

std::vector<CVector> sample_cgauss_factor(const CMatrix& factor, long n,
                                          RngStream& rng) {
  std::vector<CVector> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    out.push_back(factor * rng.cgauss_vector(factor.cols()));
  return out;
}

void parallel_for(long n, int n_threads, const std::function<void(long)>& body) {
  if (n <= 0) return;
  const int workers =
      static_cast<int>(std::max<long>(1, std::min<long>(n_threads, n)));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  constexpr long kChunk = 16;
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const long begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      const long end = std::min(begin + kChunk, n);
      try {
        for (long i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace mimose
