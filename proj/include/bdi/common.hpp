#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <mutex>
#include <vector>
#include <functional>
#include <cmath>
#include <limits>

namespace bdi {

// ---------------------------------------------------------------------------
// Error taxonomy. Everything derives from bdi::error so callers can catch the
// whole family; the CLI maps validation errors to exit code 2.
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct validation_error : error { using error::error; };
struct negative_rate : validation_error { using validation_error::validation_error; };
struct variant_violation : validation_error { using validation_error::validation_error; };
struct invalid_trajectory : validation_error { using validation_error::validation_error; };
struct invalid_panel : validation_error { using validation_error::validation_error; };

struct numeric_error : error { using error::error; };
struct branch_degenerate : numeric_error { using numeric_error::numeric_error; };
struct inversion_unstable : numeric_error { using numeric_error::numeric_error; };
struct improbable_endpoint : numeric_error { using numeric_error::numeric_error; };
struct negative_moment : numeric_error { using numeric_error::numeric_error; };
struct quadrature_failure : numeric_error { using numeric_error::numeric_error; };
struct degenerate_estep : numeric_error { using numeric_error::numeric_error; };
struct boundary_mle : numeric_error { using numeric_error::numeric_error; };
struct singular_information : numeric_error { using numeric_error::numeric_error; };
struct degenerate_rates : numeric_error { using numeric_error::numeric_error; };
struct truncation_too_small : numeric_error { using numeric_error::numeric_error; };

struct sampler_failure : error { using error::error; };
struct max_tries_exceeded : sampler_failure { using sampler_failure::sampler_failure; };
struct explosion_guard : sampler_failure { using sampler_failure::sampler_failure; };
struct recursion_depth : sampler_failure { using sampler_failure::sampler_failure; };
struct budget_exceeded : error { using error::error; };
struct all_intervals_excluded : error { using error::error; };

constexpr double inf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Reproducible RNG streams.
//
// Every stochastic routine takes an explicit RngStream keyed by a user seed
// plus a hierarchical id (replicate, interval, path, ...).  Identical keys
// give identical draws no matter how work is scheduled across threads, so
// study outputs are byte-stable for a fixed seed.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  // Derive a child stream; mixing is one-way so sibling streams do not collide.
  RngStream child(std::uint64_t id) const {
    std::uint64_t x = s_[0] ^ (s_[1] + 0x165667b19e3779f9ULL);
    std::uint64_t h = splitmix64(x) ^ (id * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL);
    return RngStream(splitmix64(h));
  }
  RngStream child(std::uint64_t a, std::uint64_t b) const { return child(a).child(b); }
  RngStream child(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return child(a).child(b).child(c);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double u01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-u01()) / rate; }

  // Uniform integer on {lo, ..., hi}.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(std::floor(u01() * double(span)));
  }

  // Knuth inversion; fine for the small means used here.
  std::int64_t poisson(double mean) {
    const double limit = std::exp(-mean);
    double prod = 1.0;
    std::int64_t n = -1;
    do {
      prod *= u01();
      ++n;
    } while (prod > limit);
    return n;
  }

  double normal() {
    // Marsaglia polar method.
    for (;;) {
      const double a = 2.0 * u01() - 1.0, b = 2.0 * u01() - 1.0;
      const double r = a * a + b * b;
      if (r > 0.0 && r < 1.0) return a * std::sqrt(-2.0 * std::log(r) / r);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// ---------------------------------------------------------------------------
// parallel_for: static partition over [0, n).  Nested calls run serially so
// replicate-level and interval-level parallelism compose without
// oversubscription.  Callers must write results into per-index slots; no
// reduction happens here, which keeps results independent of scheduling.
// ---------------------------------------------------------------------------

namespace detail {
inline bool& in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

inline unsigned hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned max_threads = 0) {
  if (n == 0) return;
  unsigned nt = max_threads == 0 ? hardware_threads() : max_threads;
  if (nt > n) nt = unsigned(n);
  if (nt <= 1 || detail::in_parallel_region()) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::mutex err_mtx;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (unsigned w = 0; w < nt; ++w) {
    pool.emplace_back([&, w] {
      detail::in_parallel_region() = true;
      try {
        for (std::size_t k = w; k < n; k += nt) fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mtx);
        if (!first_error) first_error = std::current_exception();
      }
      detail::in_parallel_region() = false;
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bdi
