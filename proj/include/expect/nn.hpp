#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace expect {

enum class InitKind { Zero, One, Normal002, Xavier };

/// All trainable parameters live in one flat vector, with named 2-D slots
/// mapped onto it. Gradients share the layout, so optimizers and finite
/// differences operate on plain vectors.
class ParameterStore {
 public:
  struct Slot {
    std::string name;
    int rows = 0;
    int cols = 0;
    long offset = 0;
    InitKind init = InitKind::Zero;
  };

  /// Registers a slot; returns its index. Must precede finalize().
  int add(const std::string& name, int rows, int cols, InitKind init);

  /// Allocates storage and draws initial values. Slots are initialized in
  /// registration order from a single generator, so layouts reproduce.
  void finalize(std::uint64_t seed);

  bool finalized() const { return finalized_; }
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  long size() const { return total_; }
  const std::vector<Slot>& slots() const { return slots_; }

  Eigen::Map<Eigen::MatrixXd> mat(const std::string& name);
  Eigen::Map<Eigen::VectorXd> vec(const std::string& name);
  Eigen::Map<Eigen::MatrixXd> grad_mat(const std::string& name);
  Eigen::Map<Eigen::VectorXd> grad_vec(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> mat(const std::string& name) const;
  Eigen::Map<const Eigen::VectorXd> vec(const std::string& name) const;

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& grads() { return grads_; }
  const Eigen::VectorXd& grads() const { return grads_; }

  void zero_grads() { grads_.setZero(); }

 private:
  const Slot& slot_of(const std::string& name) const;

  std::vector<Slot> slots_;
  std::map<std::string, int> index_;
  Eigen::VectorXd values_;
  Eigen::VectorXd grads_;
  long total_ = 0;
  bool finalized_ = false;
};

/// Adam with bias correction over the store's flat vectors.
struct AdamOptimizer {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(Eigen::VectorXd& values, const Eigen::VectorXd& grads);
  void reset(long n);

  long long t = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

/// Numerically stable softmax of one column vector.
Eigen::VectorXd softmax(const Eigen::VectorXd& z);

/// Column-wise softmax in place.
void softmax_columns(Eigen::MatrixXd& z);

/// -log(p[target]) with clamping far from 0 to keep losses finite.
double nll(const Eigen::VectorXd& probs, int target);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace expect
