#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace roiadapt::sac {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;  // pre-squash range [-1, 1]
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

struct Batch {
  Eigen::MatrixXd s;       // obs_dim x n
  Eigen::MatrixXd a;       // act_dim x n
  Eigen::VectorXd r;
  Eigen::MatrixXd s_next;  // obs_dim x n
  Eigen::VectorXd done;    // 1.0 where the next state is terminal
  std::vector<std::size_t> indices;

  Eigen::Index size() const { return r.size(); }
};

// Fixed-capacity FIFO store with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  // Throws DomainError on wrong dimensions, non-finite values or actions
  // outside [-1, 1].
  void add(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // i-th oldest stored transition.
  Transition at(std::size_t i) const;
  // Uniform with replacement over stored transitions.
  Batch sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  Eigen::MatrixXd s_, a_, s_next_;
  Eigen::VectorXd r_, done_;
};

}  // namespace roiadapt::sac
