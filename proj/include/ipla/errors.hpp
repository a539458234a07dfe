#ifndef IPLA_ERRORS_HPP
#define IPLA_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ipla {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad config file, bad parameter, unsupported model.
// Maps to process exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

struct GammaOutOfRange : ConfigError {
  using ConfigError::ConfigError;
};

struct UnsupportedModel : ConfigError {
  using ConfigError::ConfigError;
};

// A model evaluation returned NaN/Inf at a probe point.
struct NonFiniteEvaluation : Error {
  using Error::Error;
};

// probe_convexity could not find a single usable pair.
struct DegenerateProbe : Error {
  using Error::Error;
};

// Chain produced a non-finite coordinate. Maps to exit code 3.
struct DivergedState : Error {
  DivergedState(const std::string& msg, std::uint64_t step_, std::int64_t particle_,
                int replicate_)
      : Error(msg), step(step_), particle(particle_), replicate(replicate_) {}
  std::uint64_t step = 0;
  std::int64_t particle = -1;  // -1 means the theta block
  int replicate = 0;
};

struct EmptySample : Error {
  using Error::Error;
};

struct SizeMismatch : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

}  // namespace ipla

#endif  // IPLA_ERRORS_HPP
