#ifndef NESTEDAA_INSTANCES_HPP
#define NESTEDAA_INSTANCES_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nestedaa {

__extension__ using wide_int = __int128; // exact products of 64-bit weights and profits

/// Item selection; bit i is x_i. Supports up to 64 items, which bounds
/// every protocol in this library.
struct Bitstring {
  std::uint64_t mask = 0;

  constexpr bool test(std::size_t i) const { return (mask >> i) & 1ULL; }
  constexpr Bitstring with(std::size_t i, bool v) const {
    return v ? Bitstring{mask | (1ULL << i)} : Bitstring{mask & ~(1ULL << i)};
  }
  /// First k bits only.
  constexpr Bitstring prefix(std::size_t k) const {
    return k >= 64 ? *this : Bitstring{mask & ((1ULL << k) - 1)};
  }
  constexpr auto operator<=>(const Bitstring &) const = default;

  /// "x_0 x_1 ... x_{len-1}" as a string of '0'/'1'.
  std::string to_string(std::size_t len) const;
};

/// True if a precedes b when both are read as x_0 x_1 ... x_{len-1}.
bool lexicographic_less(Bitstring a, Bitstring b);

inline constexpr std::size_t kMaxItems = 62;

enum class CorrelationType { Uncorrelated, WeaklyCorrelated, StronglyCorrelated };
enum class ItemOrdering { AsGenerated, DensityDescending, ValueDescending };

std::string_view to_string(CorrelationType t);
std::string_view to_string(ItemOrdering o);
CorrelationType parse_correlation(std::string_view s);
ItemOrdering parse_ordering(std::string_view s);

struct KnapsackInstance {
  std::vector<std::int64_t> weights;
  std::vector<std::int64_t> profits;
  std::int64_t capacity = 0;
  CorrelationType corr_type = CorrelationType::Uncorrelated;
  std::int64_t range_r = 1;
  std::int64_t tightness_s = 1;
  std::int64_t index_i = 1;
  ItemOrdering ordering = ItemOrdering::AsGenerated;

  std::size_t n() const { return weights.size(); }
  std::int64_t total_weight() const;
  std::int64_t total_profit() const;
  std::int64_t weight_of(Bitstring x) const;
  std::int64_t profit_of(Bitstring x) const;

  bool operator==(const KnapsackInstance &) const = default;
};

/// Throws ParameterError if the instance breaks a structural invariant.
void validate(const KnapsackInstance &inst);

/// Reduced non-negative fraction.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational &) const = default;
  std::strong_ordering operator<=>(const Rational &o) const;
};

struct InstanceMetrics {
  Rational capweight;
  std::int64_t total_weight = 0;
  std::int64_t total_profit = 0;
};

struct GeneratorParams {
  std::size_t n = 0;
  std::int64_t range_r = 1000;
  CorrelationType corr_type = CorrelationType::Uncorrelated;
  std::int64_t tightness_s = 1;
  std::int64_t index_i = 1;
};

/// Deterministic instance generator.
///
/// Weights are uniform on {1..r}. Profits are uniform on {1..r}
/// (uncorrelated), uniform on [max(1, w-floor(r/10)), w+floor(r/10)]
/// (weakly correlated) or w+10 (strongly correlated). The capacity is
/// max(ceil(i/(S+1) * sum(w)), r+1). The random stream is keyed by
/// (n, r, type, i); the tightness S only changes the capacity.
KnapsackInstance generate_instance(const GeneratorParams &params);

InstanceMetrics compute_metrics(const KnapsackInstance &inst);

/// Keeps the first instance of every distinct (weights, profits, capacity).
std::vector<KnapsackInstance> dedup_instances(const std::vector<KnapsackInstance> &batch);

/// perm[j] is the original index of the item placed at position j.
/// Ties keep the original index order.
std::vector<std::size_t> ordering_permutation(const KnapsackInstance &inst, ItemOrdering ordering);

KnapsackInstance reorder_items(const KnapsackInstance &inst, ItemOrdering ordering);

// Newline-delimited JSON, one object per instance.
std::string to_json_line(const KnapsackInstance &inst);
KnapsackInstance from_json_line(std::string_view line);
void write_instances(std::ostream &os, const std::vector<KnapsackInstance> &batch);
std::vector<KnapsackInstance> read_instances(std::istream &is);

} // namespace nestedaa

template <> struct std::hash<nestedaa::Bitstring> {
  std::size_t operator()(const nestedaa::Bitstring &b) const noexcept {
    return std::hash<std::uint64_t>{}(b.mask);
  }
};

#endif // NESTEDAA_INSTANCES_HPP
