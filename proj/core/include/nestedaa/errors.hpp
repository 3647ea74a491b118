#ifndef NESTEDAA_ERRORS_HPP
#define NESTEDAA_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nestedaa {

/// Invalid argument combination passed to a public operation.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A configured resource limit (memory budget, qubit cap) would be exceeded.
class ResourceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Marked-set enumeration produced more states than the configured cap.
/// The simulation needs the complete set, so the run is aborted.
class MarkedSetCapError : public ResourceError {
public:
  MarkedSetCapError(std::size_t cap, std::size_t partial_count)
      : ResourceError("marked-set cap of " + std::to_string(cap) +
                      " states exceeded (enumerated " +
                      std::to_string(partial_count) + " before aborting)"),
        cap_(cap), partial_count_(partial_count) {}

  std::size_t cap() const { return cap_; }
  std::size_t partial_count() const { return partial_count_; }

private:
  std::size_t cap_;
  std::size_t partial_count_;
};

/// Internal invariant violated; indicates a bug rather than bad input.
class ConsistencyError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Statevector register layout cannot hold the requested values.
class LayoutError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Output file could not be created or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace nestedaa

#endif // NESTEDAA_ERRORS_HPP
