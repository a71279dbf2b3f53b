#pragma once

#include "uatd/core.hpp"
#include "uatd/models.hpp"

namespace uatd::uncertainty {

// Runs K stochastic forward passes with fresh dropout masks and records the
// class probabilities of every pass. Deterministic given model weights and
// rng state. expected_classes != 0 enforces the caller's class count.
ProbabilityStack collect_probability_stack(const models::StochasticClassifier& model,
                                           const Matrix& inputs, int k_passes, Rng& rng,
                                           int expected_classes = 0);

// Per frame: mean probabilities over the K passes, predicted class =
// argmax of the mean (ties break to the lowest class index), uncertainty =
// population standard deviation of the winning class's probability across
// the passes.
UncertaintySequence estimate(const ProbabilityStack& stack);

}  // namespace uatd::uncertainty
