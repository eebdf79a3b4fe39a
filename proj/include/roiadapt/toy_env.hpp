#pragma once

#include <cstddef>
#include <vector>

#include "roiadapt/environment.hpp"

namespace roiadapt::rl {

// One-dimensional bandit-like task: constant observation, reward
// -(a - target)^2, fixed-length episodes.
class ToyTargetEnv : public Environment {
 public:
  explicit ToyTargetEnv(double target = 0.3, std::size_t episode_length = 10)
      : target_(target), episode_length_(episode_length) {}

  int observation_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  std::vector<double> reset() override {
    step_ = 0;
    return {0.0};
  }
  EnvStep step(const std::vector<double>& action) override {
    const double d = action.at(0) - target_;
    ++step_;
    return {{0.0}, -d * d, false, step_ >= episode_length_};
  }
  std::size_t episode_length() const { return episode_length_; }

 private:
  double target_;
  std::size_t episode_length_;
  std::size_t step_ = 0;
};

}  // namespace roiadapt::rl
