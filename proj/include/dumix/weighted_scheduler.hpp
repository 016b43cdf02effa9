// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dumix/errors.hpp"

namespace dumix {

// Deterministic quota-clamped weighted selection. Each step adds every
// participant's weight to its credit (the running deficiency n*w - count),
// then picks the highest divisor priority weight/(count+1) among
// participants whose pick stays within their upper quota ceil(n*weight);
// the winner's credit drops by 1 and its count rises by 1. Ties break on
// the lowest index (catalog order).
//
// With weights summing to 1 this is the quota method of apportionment:
// house monotone and quota-satisfying, so every prefix of n picks keeps
// every count within one selection of n*weight on both sides, and the
// total credit stays at 0. A plain max-credit pick does not have that
// bound (deficiencies can cluster and push a source past 1), which is why
// the upper-quota clamp is part of the rule. No PRNG is involved; streams
// are reproducible by construction.
class CreditScheduler {
public:
    explicit CreditScheduler(std::vector<double> weights)
        : weights_(std::move(weights)),
          credits_(weights_.size(), 0.0),
          counts_(weights_.size(), 0) {
        double sum = 0.0;
        for (double w : weights_) {
            if (w < 0.0) throw ValidationError("negative selection weight");
            sum += w;
        }
        if (sum <= 0.0) throw ValidationError("no positive selection weights");
        for (double& w : weights_) w /= sum;
    }

    // One selection step; returns the chosen index.
    std::size_t next() {
        ++steps_;
        double n = static_cast<double>(steps_);
        std::size_t best = SIZE_MAX, fallback = SIZE_MAX;
        double best_priority = 0.0, fallback_credit = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            double w = weights_[i];
            if (w <= 0.0) continue;
            credits_[i] += w;
            if (fallback == SIZE_MAX || credits_[i] > fallback_credit) {
                fallback = i;
                fallback_credit = credits_[i];
            }
            if (static_cast<double>(counts_[i] + 1) > std::ceil(n * w)) continue;
            double priority = w / static_cast<double>(counts_[i] + 1);
            if (best == SIZE_MAX || priority > best_priority) {
                best = i;
                best_priority = priority;
            }
        }
        // The eligible set is provably non-empty while the weights sum to
        // 1 within tolerance; the fallback only guards fp pathology.
        if (best == SIZE_MAX) best = fallback;
        credits_[best] -= 1.0;
        ++counts_[best];
        return best;
    }

    void reset() {
        credits_.assign(credits_.size(), 0.0);
        counts_.assign(counts_.size(), 0);
        steps_ = 0;
    }

    std::span<const double> credits() const { return credits_; }
    std::span<const double> weights() const { return weights_; }
    std::span<const std::uint64_t> counts() const { return counts_; }
    std::uint64_t steps() const { return steps_; }

    // Resume support: credits are the serialized state; counts follow from
    // count = steps*w - credit, which is integral up to accumulated fp
    // drift (far below 0.5 at any reachable step count).
    void restore(std::span<const double> credits, std::uint64_t steps) {
        if (credits.size() != credits_.size())
            throw ValidationError("credit vector size mismatch");
        credits_.assign(credits.begin(), credits.end());
        steps_ = steps;
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            if (weights_[i] <= 0.0) {
                counts_[i] = 0;
                continue;
            }
            double exact = static_cast<double>(steps) * weights_[i] - credits_[i];
            long long rounded = std::llround(exact);
            if (rounded < 0 || std::abs(exact - static_cast<double>(rounded)) > 0.25)
                throw IntegrityError("restored credits are inconsistent with the step count");
            counts_[i] = static_cast<std::uint64_t>(rounded);
            total += counts_[i];
        }
        if (total != steps)
            throw IntegrityError("restored selection counts do not sum to the step count");
    }

private:
    std::vector<double> weights_;
    std::vector<double> credits_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t steps_ = 0;
};

}  // namespace dumix
