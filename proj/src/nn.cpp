#include "expect/nn.hpp"

#include <cmath>
#include <random>

#include "expect/errors.hpp"

namespace expect {

int ParameterStore::add(const std::string& name, int rows, int cols, InitKind init) {
  if (finalized_) throw ContractError("cannot add slot '" + name + "' after finalize");
  if (index_.count(name)) throw ContractError("duplicate parameter slot '" + name + "'");
  if (rows <= 0 || cols <= 0) throw DimensionError("slot '" + name + "' has empty shape");
  Slot s;
  s.name = name;
  s.rows = rows;
  s.cols = cols;
  s.offset = total_;
  s.init = init;
  index_[name] = static_cast<int>(slots_.size());
  slots_.push_back(std::move(s));
  total_ += static_cast<long>(rows) * cols;
  return static_cast<int>(slots_.size()) - 1;
}

void ParameterStore::finalize(std::uint64_t seed) {
  if (finalized_) throw ContractError("store already finalized");
  values_.setZero(total_);
  grads_.setZero(total_);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (const Slot& s : slots_) {
    double* p = values_.data() + s.offset;
    const long count = static_cast<long>(s.rows) * s.cols;
    switch (s.init) {
      case InitKind::Zero:
        break;
      case InitKind::One:
        for (long i = 0; i < count; ++i) p[i] = 1.0;
        break;
      case InitKind::Normal002:
        for (long i = 0; i < count; ++i) p[i] = 0.02 * unit(rng);
        break;
      case InitKind::Xavier: {
        const double std = std::sqrt(2.0 / (s.rows + s.cols));
        for (long i = 0; i < count; ++i) p[i] = std * unit(rng);
        break;
      }
    }
  }
  finalized_ = true;
}

const ParameterStore::Slot& ParameterStore::slot_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter slot '" + name + "'");
  if (!finalized_) throw ContractError("store not finalized");
  return slots_[it->second];
}

Eigen::Map<Eigen::MatrixXd> ParameterStore::mat(const std::string& name) {
  const Slot& s = slot_of(name);
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::VectorXd> ParameterStore::vec(const std::string& name) {
  const Slot& s = slot_of(name);
  if (s.cols != 1) throw DimensionError("slot '" + name + "' is not a vector");
  return {values_.data() + s.offset, s.rows};
}

Eigen::Map<Eigen::MatrixXd> ParameterStore::grad_mat(const std::string& name) {
  const Slot& s = slot_of(name);
  return {grads_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::VectorXd> ParameterStore::grad_vec(const std::string& name) {
  const Slot& s = slot_of(name);
  if (s.cols != 1) throw DimensionError("slot '" + name + "' is not a vector");
  return {grads_.data() + s.offset, s.rows};
}

Eigen::Map<const Eigen::MatrixXd> ParameterStore::mat(const std::string& name) const {
  const Slot& s = slot_of(name);
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::VectorXd> ParameterStore::vec(const std::string& name) const {
  const Slot& s = slot_of(name);
  if (s.cols != 1) throw DimensionError("slot '" + name + "' is not a vector");
  return {values_.data() + s.offset, s.rows};
}

void AdamOptimizer::reset(long n) {
  t = 0;
  m.setZero(n);
  v.setZero(n);
}

void AdamOptimizer::step(Eigen::VectorXd& values, const Eigen::VectorXd& grads) {
  if (m.size() != values.size()) reset(values.size());
  if (grads.size() != values.size()) throw DimensionError("gradient size mismatch");
  ++t;
  m = beta1 * m + (1.0 - beta1) * grads;
  v = beta2 * v + (1.0 - beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  values.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    Eigen::VectorXd col = z.col(j);
    z.col(j) = softmax(col);
  }
}

double nll(const Eigen::VectorXd& probs, int target) {
  if (target < 0 || target >= probs.size()) throw DimensionError("nll target out of range");
  return -std::log(std::max(probs[target], 1e-300));
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace expect
