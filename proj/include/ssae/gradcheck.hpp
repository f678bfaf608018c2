#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssae/ssae_model.hpp"

namespace ssae {

struct TensorCheck {
    std::string name;
    std::size_t size = 0;
    double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-6)
};

struct GradcheckCase {
    std::string label;
    std::vector<TensorCheck> tensors;
    double max_error() const;
};

// Analytic vs central-difference gradients of the MSE loss on one random
// window, for every tensor of `model`. Weights are restored afterwards.
GradcheckCase gradcheck_model(SsaeModel& model, ConstMatrixView window, std::span<const double> target, double eps);

// The fixed tiny sweep: SSAE with each combination mode plus standalone
// S2S-1 and S2S-2 (3 inputs, hidden 4, T=12, c=3, l=6, Delta=3, H=2).
std::vector<GradcheckCase> gradcheck_sweep(std::uint64_t seed, double eps = 1e-5);

}  // namespace ssae
