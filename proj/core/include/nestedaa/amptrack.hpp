#ifndef NESTEDAA_AMPTRACK_HPP
#define NESTEDAA_AMPTRACK_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nestedaa/instances.hpp"
#include "nestedaa/ksolve.hpp"

namespace nestedaa {

/// QTG bias b and the reference assignment it favours.
struct BiasConfig {
  double bias_b = 0.0;
  Bitstring reference;

  /// Throws ParameterError unless b >= 0 and the reference is feasible.
  static BiasConfig make(const KnapsackInstance &inst, double bias_b, Bitstring reference);
};

struct TrackedState {
  Bitstring bits;
  double amplitude = 0.0;
};

/// Marked states with tracked real amplitudes. `theta` is the angle of the
/// marked subspace for the preparation that produced the amplitudes:
/// sin^2(theta) = sum amplitude^2.
struct MarkedEnsemble {
  std::size_t depth = 0;
  std::vector<TrackedState> states;
  double theta = 0.0;

  double weight() const; // sum of squared amplitudes
  bool empty() const { return states.empty(); }
};

/// arcsin(sqrt(s)) with s clamped to [0, 1].
double marked_angle(double squared_norm);

/// Amplitude factor contributed by QTG step i for choice x_i given the
/// weight already packed by items 0..i-1.
double qtg_step_factor(const KnapsackInstance &inst, const BiasConfig &bias,
                       std::int64_t prefix_weight, std::size_t i, bool x_i);

/// Product of step factors over items 0..k-1; 0 iff the prefix is infeasible.
double partial_amplitude(const KnapsackInstance &inst, const BiasConfig &bias, Bitstring x,
                         std::size_t k);

MarkedEnsemble build_partial_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                                      const MarkedSet &marked);

/// Amplitude amplification with r Grover iterations on a preparation
/// ensemble. Every marked amplitude scales by sin((2r+1)theta)/sin(theta),
/// so the marked weight becomes sin^2((2r+1)theta). `theta` is kept as the
/// preparation angle.
MarkedEnsemble apply_rotation(const MarkedEnsemble &ens, std::uint64_t r);

/// Scale factor used by apply_rotation; 0 for an empty subspace.
double rotation_factor(double theta, std::uint64_t r);

/// Runs the remaining QTG steps k..n-1 over every globally marked state,
/// starting from the (rotated) amplitude of its depth-k prefix.
MarkedEnsemble extend_ensemble(const KnapsackInstance &inst, const BiasConfig &bias,
                               const MarkedEnsemble &inner, const MarkedSet &global_marked);

/// sin^2((2r+1) theta).
double success_probability(const MarkedEnsemble &ens, std::uint64_t r);

} // namespace nestedaa

#endif // NESTEDAA_AMPTRACK_HPP
