#include "uatd/uncertainty.hpp"

#include <cmath>
#include <stdexcept>

namespace uatd::uncertainty {

ProbabilityStack collect_probability_stack(const models::StochasticClassifier& model,
                                           const Matrix& inputs, int k_passes, Rng& rng,
                                           int expected_classes) {
    if (k_passes < 1) throw std::invalid_argument("k_passes must be >= 1");
    if (expected_classes != 0 && model.num_classes() != expected_classes)
        throw std::invalid_argument("model output dimension does not match the class count");

    const int t_len = inputs.rows;
    const int c_len = model.num_classes();
    ProbabilityStack stack(k_passes, t_len, c_len);
    for (int k = 0; k < k_passes; ++k) {
        Matrix probs = model.predict_probs(inputs, models::InferenceMode::stochastic, &rng);
        for (int t = 0; t < t_len; ++t)
            for (int c = 0; c < c_len; ++c) stack.at(k, t, c) = probs.at(t, c);
    }
    return stack;
}

UncertaintySequence estimate(const ProbabilityStack& stack) {
    const int k_len = stack.passes, t_len = stack.frames, c_len = stack.classes;
    UncertaintySequence out;
    out.predicted_class.resize(t_len);
    out.uncertainty.resize(t_len);
    out.mean_probs = Matrix(t_len, c_len);

    for (int t = 0; t < t_len; ++t) {
        for (int c = 0; c < c_len; ++c) {
            double sum = 0.0;
            for (int k = 0; k < k_len; ++k) sum += stack.at(k, t, c);
            out.mean_probs.at(t, c) = sum / k_len;
        }
        int best = 0;
        for (int c = 1; c < c_len; ++c)
            if (out.mean_probs.at(t, c) > out.mean_probs.at(t, best)) best = c;
        out.predicted_class[t] = best + 1;

        // population standard deviation at the winning class's column
        const double mean = out.mean_probs.at(t, best);
        double var = 0.0;
        for (int k = 0; k < k_len; ++k) {
            const double d = stack.at(k, t, best) - mean;
            var += d * d;
        }
        out.uncertainty[t] = std::sqrt(var / k_len);
    }
    return out;
}

}  // namespace uatd::uncertainty
