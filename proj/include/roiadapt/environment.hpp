#pragma once

#include <vector>

namespace roiadapt::rl {

struct EnvStep {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;   // true absorbing state: no bootstrap
  bool truncated = false;  // episode ended by length limit
};

// Agent-facing view of an environment: observations are real vectors and
// actions live in [-1, 1]^action_dim().
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::vector<double> reset() = 0;
  virtual EnvStep step(const std::vector<double>& action) = 0;
};

}  // namespace roiadapt::rl
