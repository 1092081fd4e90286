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

#include <stdexcept>
#include <string>

namespace cvepr {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
   public:
    using Error::Error;
};

/// The covariance matrix violates cov + i*Omega >= 0.
class UnphysicalState : public Error {
   public:
    using Error::Error;
};

/// Conditioning on a quadrature whose variance is (numerically) zero.
class DegenerateConditioner : public Error {
   public:
    using Error::Error;
};

/// Conditioning one quadrature of a mode on another quadrature of the same mode.
class InvalidPair : public Error {
   public:
    using Error::Error;
};

/// Fock truncation or grid too small to normalize the joint density.
class TruncationInsufficient : public Error {
   public:
    using Error::Error;
};

/// Conditioning value lies where the conditioning marginal is negligible.
class NegligibleMarginal : public Error {
   public:
    using Error::Error;
};

/// No conditioning bin reached the occupancy threshold.
class OccupancyFailure : public Error {
   public:
    using Error::Error;
};

/// Outcome tables of a discrete hidden-variable model are inconsistent.
class MalformedTable : public Error {
   public:
    using Error::Error;
};

}  // namespace cvepr
