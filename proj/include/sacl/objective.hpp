#pragma once

#include "sacl/data.hpp"
#include "sacl/parameters.hpp"

#include <optional>
#include <span>
#include <vector>

namespace sacl {

/// Linear sentiment head: z = h W + b with W of shape (d_h x 3).
struct ClassifierHead {
  Parameter weight;
  Parameter bias;

  ClassifierHead() = default;
  ClassifierHead(int hidden_size, std::uint64_t seed);

  int hidden_size() const { return static_cast<int>(weight.value.rows()); }
  ParameterRefs parameters() { return {&weight, &bias}; }
};

enum class Reduction { sum, mean };

/// Which samples count as positives of an anchor in the contrastive term.
enum class PositiveSet { gold, predicted };

struct LossConfig {
  double lambda = 0.1;
  double temperature = 0.1;
  double lambda_adv = 0.1;
  double temperature_adv = 0.1;
  double radius = 5.0;
  double rate = 1.0;
  Reduction reduction = Reduction::sum;
  PositiveSet positives = PositiveSet::gold;
  LabelWeights weights;

  /// Throws Error when a field is outside its domain.
  void validate() const;
};

/// A scalar loss together with its gradient with respect to the logits.
struct LossValue {
  double value = 0.0;
  Matrix grad_logits;
};

struct SoftSclValue {
  double total = 0.0;
  double ce = 0.0;
  double scl = 0.0;
  Matrix grad_logits;
};

/// Logits for a batch of pooled vectors (one row per sample).
Matrix classifier_logits(const Matrix& pooled, const ClassifierHead& head);

/// Accumulates head gradients for dL/dz and returns dL/dh.
Matrix classifier_backward(const Matrix& pooled, const Matrix& grad_logits, ClassifierHead& head);

Matrix softmax_rows(const Matrix& logits);

/// Class-weighted cross entropy: sum_i -w_{y_i} log softmax(z_i)_{y_i}.
/// Mean reduction divides by the batch size.
LossValue ce_loss(const Matrix& logits, std::span<const Polarity> labels, const LabelWeights& weights,
                  Reduction reduction = Reduction::sum);

/// Supervised contrastive loss on logits with dot-product similarity.
///
/// For anchor i with positives P(i) (other samples sharing its label) and
/// contrast set A(i) = all other samples:
///   l_i = -1/|P(i)| * sum_{e in P(i)} log( exp(z_i.z_e/tau) / sum_{a in A(i)} exp(z_i.z_a/tau) )
/// Anchors with no positives contribute 0. Mean reduction divides by B.
LossValue scl_loss(const Matrix& logits, std::span<const Polarity> labels, double temperature,
                   Reduction reduction = Reduction::sum, PositiveSet positives = PositiveSet::gold);

/// L_CE + lambda * L_SCL under one reduction.
SoftSclValue soft_scl_loss(const Matrix& logits, std::span<const Polarity> labels,
                           const LabelWeights& weights, double lambda, double temperature,
                           Reduction reduction = Reduction::sum,
                           PositiveSet positives = PositiveSet::gold);

/// r = epsilon * g / ||g||_F, or zero when g == 0.
Matrix fgm_perturbation(const Matrix& grad, double epsilon);

/// Clean-branch loss plus the adversarial-branch loss when that branch ran.
double sacl_loss(double clean_soft_scl, std::optional<double> adversarial_soft_scl);

/// Argmax per row; ties go to the earliest category (positive, negative, neutral).
std::vector<Polarity> predict(const Matrix& logits);

}  // namespace sacl
