#include "roiadapt/replay.hpp"

#include <cmath>

#include "roiadapt/error.hpp"

namespace roiadapt::sac {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0) throw DomainError("replay capacity must be positive");
  const auto cap = static_cast<Eigen::Index>(capacity);
  s_.resize(obs_dim, cap);
  a_.resize(act_dim, cap);
  s_next_.resize(obs_dim, cap);
  r_.resize(cap);
  done_.resize(cap);
}

void ReplayBuffer::add(const Transition& t) {
  if (t.s.size() != static_cast<std::size_t>(obs_dim_) || t.s_next.size() != static_cast<std::size_t>(obs_dim_) ||
      t.a.size() != static_cast<std::size_t>(act_dim_))
    throw DomainError("transition has wrong dimensions");
  auto finite = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  if (!finite(t.s) || !finite(t.a) || !finite(t.s_next) || !std::isfinite(t.r))
    throw DomainError("transition contains non-finite values");
  for (double x : t.a)
    if (x < -1.0 || x > 1.0) throw DomainError("transition action outside [-1, 1]");
  const auto col = static_cast<Eigen::Index>(head_);
  for (int i = 0; i < obs_dim_; ++i) {
    s_(i, col) = t.s[i];
    s_next_(i, col) = t.s_next[i];
  }
  for (int i = 0; i < act_dim_; ++i) a_(i, col) = t.a[i];
  r_(col) = t.r;
  done_(col) = t.done ? 1.0 : 0.0;
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw DomainError("replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  const auto col = static_cast<Eigen::Index>((oldest + i) % capacity_);
  Transition t;
  t.s.assign(s_.col(col).data(), s_.col(col).data() + obs_dim_);
  t.a.assign(a_.col(col).data(), a_.col(col).data() + act_dim_);
  t.s_next.assign(s_next_.col(col).data(), s_next_.col(col).data() + obs_dim_);
  t.r = r_(col);
  t.done = done_(col) != 0.0;
  return t;
}

Batch ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (size_ == 0) throw DomainError("cannot sample an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch b;
  const auto m = static_cast<Eigen::Index>(n);
  b.s.resize(obs_dim_, m);
  b.a.resize(act_dim_, m);
  b.s_next.resize(obs_dim_, m);
  b.r.resize(m);
  b.done.resize(m);
  b.indices.resize(n);
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::size_t slot = pick(rng);
    b.indices[static_cast<std::size_t>(j)] = slot;
    const auto col = static_cast<Eigen::Index>(slot);
    b.s.col(j) = s_.col(col);
    b.a.col(j) = a_.col(col);
    b.s_next.col(j) = s_next_.col(col);
    b.r(j) = r_(col);
    b.done(j) = done_(col);
  }
  return b;
}

}  // namespace roiadapt::sac
