#include "semattack/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semattack/error.hpp"

namespace semattack {

std::string to_string(LossKind kind) {
  return kind == LossKind::cw ? "cw" : "cross_entropy";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "cw") return LossKind::cw;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  throw InvalidArgument("unknown loss '" + name + "'");
}

namespace {

void check_index(const Vector& logits, std::size_t true_idx) {
  if (logits.size() < 2) throw InvalidArgument("loss needs at least two classes");
  if (true_idx >= logits.size()) throw InvalidArgument("class index out of range");
}

// Index and value of the best logit other than `true_idx`.
std::pair<std::size_t, double> best_other(const Vector& logits, std::size_t true_idx) {
  std::size_t best = true_idx == 0 ? 1 : 0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    if (t != true_idx && logits[t] > logits[best]) best = t;
  }
  return {best, logits[best]};
}

}  // namespace

std::size_t argmax(const Vector& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

Vector softmax(const Vector& logits) {
  const double shift = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - shift);
    total += out[i];
  }
  out *= 1.0 / total;
  return out;
}

double cross_entropy(const Vector& logits, std::size_t true_idx) {
  check_index(logits, true_idx);
  const double shift = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - shift);
  return std::log(total) + shift - logits[true_idx];
}

Vector cross_entropy_grad(const Vector& logits, std::size_t true_idx) {
  check_index(logits, true_idx);
  Vector g = softmax(logits);
  g[true_idx] -= 1.0;
  return g;
}

double cw_loss(const Vector& logits, std::size_t true_idx) {
  check_index(logits, true_idx);
  return std::max(0.0, best_other(logits, true_idx).second - logits[true_idx]);
}

double cw_attack_loss(const Vector& logits, std::size_t true_idx) {
  check_index(logits, true_idx);
  return std::max(0.0, logits[true_idx] - best_other(logits, true_idx).second);
}

Vector cw_attack_loss_grad(const Vector& logits, std::size_t true_idx) {
  check_index(logits, true_idx);
  Vector g(logits.size());
  const auto [other, other_value] = best_other(logits, true_idx);
  if (logits[true_idx] - other_value >= 0.0) {
    g[true_idx] = 1.0;
    g[other] = -1.0;
  }
  return g;
}

double attack_objective(LossKind kind, const Vector& logits, std::size_t true_idx) {
  return kind == LossKind::cw ? cw_attack_loss(logits, true_idx)
                              : -cross_entropy(logits, true_idx);
}

Vector attack_objective_grad(LossKind kind, const Vector& logits, std::size_t true_idx) {
  if (kind == LossKind::cw) return cw_attack_loss_grad(logits, true_idx);
  return -cross_entropy_grad(logits, true_idx);
}

}  // namespace semattack
