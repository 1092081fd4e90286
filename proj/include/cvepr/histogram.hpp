// Copyright 2026 The cvepr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <vector>

namespace cvepr {

/// Empirical distribution of the A outcome within one bin of the B outcome.
struct ConditionalBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mean = 0.0;
    /// Unbiased sample variance of the A outcomes in the bin.
    double variance = 0.0;
    /// Fraction of all records falling in this bin, P(x_i^B).
    double weight = 0.0;
    /// Sorted |x - mean| over the bin; empty unless deviations were requested.
    std::vector<double> abs_deviations;

    double center() const { return 0.5 * (lo + hi); }
};

/// Conditional histogram over the B outcome. Only bins meeting the occupancy
/// threshold are retained; the mass of dropped bins is recorded, never
/// extrapolated.
struct ConditionalHistogram {
    double bin_width = 0.0;
    double origin = 0.0;
    std::size_t occupancy_threshold = 0;
    std::size_t total_count = 0;
    std::vector<ConditionalBin> bins;
    double excluded_weight = 0.0;
    std::size_t dropped_bins = 0;
    /// True when excluded_weight > 0 and weighted averages are renormalized.
    bool renormalized = false;

    double retained_weight() const {
        double w = 0.0;
        for (const auto& b : bins) w += b.weight;
        return w;
    }

    /// sum_i P(x_i^B) Delta_i^2 over retained bins, renormalized to their mass.
    double inferred_variance() const {
        double num = 0.0;
        double den = 0.0;
        for (const auto& b : bins) {
            num += b.weight * b.variance;
            den += b.weight;
        }
        return num / den;
    }
};

}  // namespace cvepr
