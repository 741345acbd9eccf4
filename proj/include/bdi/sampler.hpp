#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>

#include "bdi/common.hpp"
#include "bdi/model.hpp"
#include "bdi/quadrature.hpp"

namespace bdi {

// ---------------------------------------------------------------------------
// Forward (unconditional) simulation.
// ---------------------------------------------------------------------------

// Event-driven simulation from state i0 over [0, T]: holding rate
// k(lambda + mu) + nu, jump up with probability (k lambda + nu) / rate.
Trajectory simulate_forward(std::int64_t i0, double T, const BDIParams& params, RngStream& rng);

// ---------------------------------------------------------------------------
// Endpoint-conditioned simulation. The direct method is the Hobolth-style
// recursion: draw whether the first event before T is a jump up, a jump down,
// or absent, then draw its time by inverse CDF and recurse on the remainder.
// ---------------------------------------------------------------------------

// First-event law for the segment (a -> b over T), conditional on X_T = b.
struct JumpLaw {
  double p_stay = 0.0;  // no jump before T (only positive when a == b)
  double p_up = 0.0;
  double p_down = 0.0;
  Pchip F_up, F_down;   // normalized first-jump-time CDFs on [0, T]
  bool has_up = false, has_down = false;
};

enum class Strategy { Auto, Rejection, Direct };

struct SamplerOptions {
  Strategy strategy = Strategy::Auto;
  double rejection_threshold = 0.05;  // use rejection when p_ab(T) >= threshold
  std::int64_t max_tries = -1;        // -1: derived from p_ab(T)
  double quad_tol = 1e-10;
  double invert_tol = 1e-10;
};

// Shared precomputation for one conditioning problem (a, b, T, params):
// transition-probability interpolants sigma -> p_{x,b}(sigma) per start state
// x, built lazily, plus the cached first-event law. Not thread-safe; intended
// to be owned per worker.
class ConditionedSampler {
 public:
  ConditionedSampler(std::int64_t a, std::int64_t b, double T, const BDIParams& params,
                     SamplerOptions opts = {});

  double endpoint_prob() const { return p_ab_; }

  JumpLaw compute_jump_law(std::int64_t from, double horizon);

  Trajectory sample_direct(RngStream& rng);
  Trajectory sample_rejection(RngStream& rng, std::int64_t max_tries, std::int64_t* tries = nullptr);
  // Strategy switch: rejection for likely endpoints, direct otherwise.
  Trajectory sample(RngStream& rng);

  Strategy chosen_strategy() const { return chosen_; }

 private:
  const Cheb& prob_curve(std::int64_t x);

  std::int64_t a_, b_;
  double T_;
  BDIParams params_;
  SamplerOptions opts_;
  double p_ab_ = 0.0;
  Strategy chosen_ = Strategy::Direct;
  std::map<std::int64_t, Cheb> curves_;
  std::optional<JumpLaw> first_law_;
};

// One-shot conveniences (construct a ConditionedSampler internally).
Trajectory sample_conditioned_direct(std::int64_t a, std::int64_t b, double T,
                                     const BDIParams& params, RngStream& rng);
Trajectory sample_conditioned_rejection(std::int64_t a, std::int64_t b, double T,
                                        const BDIParams& params, RngStream& rng,
                                        std::int64_t max_tries);
Trajectory sample_conditioned(std::int64_t a, std::int64_t b, double T,
                              const BDIParams& params, RngStream& rng);

}  // namespace bdi
