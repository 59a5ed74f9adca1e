#pragma once

#include <cstddef>
#include <string>

#include "semattack/tensor.hpp"

namespace semattack {

enum class LossKind { cross_entropy, cw };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// Index of the largest logit; ties resolve to the lowest index.
std::size_t argmax(const Vector& logits);

Vector softmax(const Vector& logits);

/// -log softmax(logits)[true_idx], computed with the log-sum-exp shift.
double cross_entropy(const Vector& logits, std::size_t true_idx);

/// d cross_entropy / d logits = softmax(logits) - onehot(true_idx).
Vector cross_entropy_grad(const Vector& logits, std::size_t true_idx);

/// max(0, max_{t != i} logits_t - logits_i), the Carlini-Wagner untargeted
/// margin as written for a candidate x~: positive by how far the best wrong
/// class leads the original class.
double cw_loss(const Vector& logits, std::size_t true_idx);

/// max(0, logits_i - max_{t != i} logits_t): the hinge an attacker drives to
/// zero. It vanishes exactly when the original class no longer strictly wins.
double cw_attack_loss(const Vector& logits, std::size_t true_idx);

/// Gradient of cw_attack_loss. At the hinge (loss == 0 with a tie) the active
/// branch is used so descent can still break the tie.
Vector cw_attack_loss_grad(const Vector& logits, std::size_t true_idx);

/// Loss minimized by an attacker: cw_attack_loss for LossKind::cw, the
/// negated cross-entropy for LossKind::cross_entropy.
double attack_objective(LossKind kind, const Vector& logits, std::size_t true_idx);
Vector attack_objective_grad(LossKind kind, const Vector& logits, std::size_t true_idx);

}  // namespace semattack
