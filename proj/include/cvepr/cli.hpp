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

// Command-line front end. Every command writes a CSV document whose first
// line is the schema marker, either to stdout or to --out.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvepr/criteria.hpp"
#include "cvepr/csv.hpp"
#include "cvepr/error.hpp"
#include "cvepr/fock_oracle.hpp"
#include "cvepr/gaussian.hpp"
#include "cvepr/lhv.hpp"
#include "cvepr/sampler.hpp"

namespace cvepr::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kInvalidArgs = 2,
    kUnphysical = 3,
    kSampling = 4,
    kOracle = 5,
};

inline constexpr std::string_view kSweepHeader = "r,eta,d2_inf_x,d2_inf_p,epr1989,g_opt,tms_x,tms_p,tms_product";
inline constexpr std::string_view kOracleHeader = "quantity,closed_form,oracle,abs_err";
inline constexpr std::string_view kMomentHeader = "basis,moment,quantum,lhv,diff,sigma,z,within_3sigma";
inline constexpr std::string_view kAuditHeader = "min_product,fraction_below_1";

struct RunConfig {
    double r = 0.0;
    double eta = 1.0;
    std::optional<double> eta_a;
    std::optional<double> eta_b;
    std::vector<double> cov;  // optional 16 row-major entries (analyze only)
    std::size_t samples = 1000000;
    std::optional<std::uint64_t> seed;
    double bin_width = 0.0;
    std::size_t occupancy = 50;
    std::size_t bootstrap = 200;
    double confidence = 0.95;
    double coverage = 0.999;
    double delta = 0.75;
    std::optional<int> n_max;
    std::size_t grid_points = 801;
    std::optional<double> grid_halfwidth;
    std::optional<double> tolerance;
    std::string r_values;
    std::string r_range;
    std::string eta_values;
    std::string eta_range;
    std::string samples_out;
    std::string out;
    unsigned workers = 0;

    double transmissivity_a() const { return eta_a.value_or(eta); }
    double transmissivity_b() const { return eta_b.value_or(eta); }
};

namespace detail {

inline void check_config(const RunConfig& c) {
    if (!std::isfinite(c.r) || c.r < 0.0) throw InvalidArgument("--r must be finite and >= 0");
    for (double e : {c.transmissivity_a(), c.transmissivity_b()}) {
        if (!(e >= 0.0 && e <= 1.0)) throw InvalidArgument("--eta values must lie in [0, 1]");
    }
    if (!(c.coverage > 0.0 && c.coverage <= 1.0)) throw InvalidArgument("--coverage must lie in (0, 1]");
    if (!(c.delta > 0.0)) throw InvalidArgument("--delta must be positive");
    if (!(c.confidence > 0.0 && c.confidence < 1.0)) throw InvalidArgument("--confidence must lie in (0, 1)");
}

inline GaussianState configured_state(const RunConfig& c) {
    if (!c.cov.empty()) {
        if (c.cov.size() != 16) throw InvalidArgument("--cov needs 16 comma-separated entries");
        Matrix4 m;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) m(i, j) = c.cov[static_cast<std::size_t>(4 * i + j)];
        }
        return apply_loss(GaussianState(Vector4::Zero(), m), c.transmissivity_a(), c.transmissivity_b());
    }
    return apply_loss(two_mode_squeezed(c.r), c.transmissivity_a(), c.transmissivity_b());
}

/// "a,b,c" or "start:stop:count" (count >= 1, inclusive endpoints).
inline std::vector<double> parse_grid(const std::string& values, const std::string& range, const char* what) {
    std::vector<double> out;
    if (!values.empty() && !range.empty()) {
        throw InvalidArgument(std::string("give either a value list or a range for ") + what);
    }
    if (!values.empty()) {
        for (auto f : csv::split(values)) out.push_back(csv::parse_double(f));
    } else if (!range.empty()) {
        const auto parts = csv::split(range, ':');
        if (parts.size() != 3) throw InvalidArgument(std::string("range for ") + what + " must be start:stop:count");
        const double start = csv::parse_double(parts[0]);
        const double stop = csv::parse_double(parts[1]);
        const double count = csv::parse_double(parts[2]);
        if (!(count >= 1.0) || count != std::floor(count)) throw InvalidArgument("range count must be a positive integer");
        const auto n = static_cast<std::size_t>(count);
        for (std::size_t k = 0; k < n; ++k) {
            out.push_back(n == 1 ? start : start + (stop - start) * static_cast<double>(k) / static_cast<double>(n - 1));
        }
    }
    if (out.empty()) throw InvalidArgument(std::string("empty grid for ") + what);
    for (std::size_t k = 1; k < out.size(); ++k) {
        if (!(out[k] > out[k - 1])) throw InvalidArgument(std::string("grid for ") + what + " must be strictly increasing");
    }
    return out;
}

inline std::string opt_format(double v) { return std::isfinite(v) ? csv::format(v) : std::string(); }

inline void emit_settings(std::ostream& os, const RunConfig& c) {
    os << "# r=" << csv::format(c.r) << " eta_a=" << csv::format(c.transmissivity_a())
       << " eta_b=" << csv::format(c.transmissivity_b()) << '\n';
}

inline void run_analyze(const RunConfig& c, std::ostream& os) {
    const GaussianState s = configured_state(c);
    require_physical(s);
    os << csv::kSchemaLine << '\n';
    emit_settings(os, c);
    os << kReportCsvHeader << '\n';
    os << to_csv_row(epr_1989(s)) << '\n';
    os << to_csv_row(epr_linear_optimal(s)) << '\n';
    os << to_csv_row(epr_linear(s, 1.0, 1.0)) << '\n';
    const auto tms = two_mode_squeezing_criterion(s);
    os << to_csv_row(tms.product) << '\n' << to_csv_row(tms.x_only) << '\n' << to_csv_row(tms.p_only) << '\n';
    os << to_csv_row(bounded_conditional_criterion(s, c.delta, c.coverage)) << '\n';
}

inline void run_sweep(const RunConfig& c, std::ostream& os) {
    const auto rs = parse_grid(c.r_values, c.r_range, "r");
    const auto etas = c.eta_values.empty() && c.eta_range.empty() ? std::vector<double>{c.eta}
                                                                  : parse_grid(c.eta_values, c.eta_range, "eta");
    for (double r : rs) {
        if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("sweep values of r must be >= 0");
    }
    for (double e : etas) {
        if (!(e >= 0.0 && e <= 1.0)) throw InvalidArgument("sweep values of eta must lie in [0, 1]");
    }
    os << csv::kSchemaLine << '\n' << kSweepHeader << '\n';
    for (double r : rs) {
        for (double eta : etas) {
            const GaussianState s = apply_loss(two_mode_squeezed(r), eta, eta);
            const auto v = inferred_variances(s);
            const auto tms = two_mode_squeezing_criterion(s);
            os << csv::row(r, eta, v.x, v.p, epr_1989(v.x, v.p).value, optimal_gain(s, kInferX), tms.x_only.value,
                           tms.p_only.value, tms.product.value)
               << '\n';
        }
    }
}

inline std::uint64_t require_seed(const RunConfig& c, const char* command) {
    if (!c.seed) throw InvalidArgument(std::string(command) + " requires --seed");
    return *c.seed;
}

inline void run_simulate(const RunConfig& c, std::ostream& os) {
    const std::uint64_t seed = require_seed(c, "simulate");
    const GaussianState s = configured_state(c);
    require_physical(s);
    auto bx = sample_joint(s, kBasisXX, c.samples, seed, c.workers);
    auto bp = sample_joint(s, kBasisPP, c.samples, seed, c.workers);
    const Provenance prov{c.r, c.transmissivity_a(), c.transmissivity_b()};
    bx.provenance = prov;
    bp.provenance = prov;
    if (!c.samples_out.empty()) {
        for (const auto* b : {&bx, &bp}) {
            const std::string path = c.samples_out + "_" + to_string(b->basis) + ".csv";
            std::ofstream f(path);
            if (!f) throw InvalidArgument("cannot write " + path);
            write_batch_csv(f, *b);
        }
    }
    EstimatorConfig cfg;
    cfg.bin_width = c.bin_width;
    cfg.occupancy = c.occupancy;
    cfg.bootstrap = c.bootstrap;
    cfg.confidence = c.confidence;
    cfg.bootstrap_seed = rng::derive_seed(seed, 0xB007);
    cfg.workers = c.workers;
    const auto est = empirical_criteria(bx, bp, cfg);
    const ConditionalHistogram hists[] = {empirical_conditionals(bx, c.bin_width, c.occupancy, true),
                                          empirical_conditionals(bp, c.bin_width, c.occupancy, true)};
    // The coverage test needs well-populated bins; small runs report why the row is absent.
    std::optional<CriterionReport> bounded;
    std::string bounded_note;
    try {
        bounded = bounded_conditional_criterion(hists, c.delta, c.coverage);
    } catch (const OccupancyFailure& e) {
        bounded_note = e.what();
    }

    os << csv::kSchemaLine << '\n';
    os << "# seed=" << seed << " samples=" << c.samples << " bootstrap=" << c.bootstrap
       << " confidence=" << csv::format(c.confidence) << '\n';
    emit_settings(os, c);
    os << "# bin_width_x=" << csv::format(est.bin_width_x) << " bin_width_p=" << csv::format(est.bin_width_p)
       << " excluded_weight_x=" << csv::format(est.excluded_weight_x)
       << " excluded_weight_p=" << csv::format(est.excluded_weight_p) << '\n';
    os << kEmpiricalCsvHeader << '\n';
    for (const auto& r : est.reports) {
        os << to_csv_row(r.report) << ',' << opt_format(r.ci_low) << ',' << opt_format(r.ci_high) << ','
           << csv::format(r.significant) << '\n';
    }
    if (bounded) {
        os << to_csv_row(*bounded) << ",,," << csv::format(bounded->violated) << '\n';
    } else {
        os << "# BoundedConditional skipped: " << bounded_note << " (needs "
           << resolvable_bin_count(c.coverage) << " records per bin)\n";
    }
}

inline void run_lhv_audit(const RunConfig& c, std::ostream& os) {
    const std::uint64_t seed = require_seed(c, "lhv-audit");
    const GaussianState s = configured_state(c);
    const LhvModel model = wigner_lhv_model(s);
    os << csv::kSchemaLine << '\n';
    os << "# seed=" << seed << " samples=" << c.samples << '\n';
    emit_settings(os, c);
    os << kMomentHeader << '\n';
    for (Basis basis : kAllBases) {
        const auto q = sample_joint(s, basis, c.samples, rng::derive_seed(seed, 1), c.workers);
        const auto l = sample_lhv(model, basis, c.samples, rng::derive_seed(seed, 2), c.workers);
        for (const auto& m : compare_moments(q, l)) {
            os << csv::row(m.basis, m.moment, m.quantum, m.lhv, m.diff, m.sigma, m.z(), m.within(3.0)) << '\n';
        }
    }
    const auto audit = auxiliary_constraint_audit(model);
    os << "# audit\n" << kAuditHeader << '\n' << csv::row(audit.min_product, audit.fraction_below_one) << '\n';
}

inline void run_oracle_check(const RunConfig& c, std::ostream& os) {
    if (!c.cov.empty() || c.transmissivity_a() != 1.0 || c.transmissivity_b() != 1.0) {
        throw InvalidArgument("oracle-check covers the lossless two-mode squeezed state only");
    }
    const int n_max = c.n_max.value_or(fock::default_n_max(c.r));
    fock::GridSpec grid = fock::default_grid(c.r);
    grid.points = c.grid_points;
    if (c.grid_halfwidth) grid.half_width = *c.grid_halfwidth;
    const auto f = fock::tmsv_coefficients(c.r, n_max);
    const auto g = fock::joint_density(f, grid);
    const auto m = fock::grid_moments(g);
    const GaussianState s = two_mode_squeezed(c.r);
    const double cond_closed = conditional_variance(s, kXa, kXb);
    const double x_probe = std::min(1.0, 0.5 * grid.half_width);
    const auto probe = fock::conditional_moments(g, x_probe);

    struct Row {
        const char* name;
        double closed;
        double oracle;
    };
    const Row rows[] = {
        {"norm", 1.0, f.norm_squared()},
        {"density_integral", 1.0, g.integral},
        {"var_xa", marginal_variance(s, kXa), m.var_a},
        {"var_xb", marginal_variance(s, kXb), m.var_b},
        {"cov_xa_xb", s.cov(kXa, kXb), m.cov_ab},
        {"inferred_var_x", cond_closed, fock::inferred_variance_numeric(g)},
        {"conditional_var_probe", cond_closed, probe.variance},
        {"conditional_slope_probe", optimal_gain(s, kInferX), probe.mean / x_probe},
        {"var_xa_minus_xb", combination_variance(s, Vector4(1, 0, -1, 0)), m.var_a + m.var_b - 2.0 * m.cov_ab},
    };
    os << csv::kSchemaLine << '\n';
    os << "# r=" << csv::format(c.r) << " n_max=" << n_max << " grid_points=" << grid.points
       << " grid_halfwidth=" << csv::format(grid.half_width) << " truncation_error=" << csv::format(f.truncation_error)
       << '\n';
    os << kOracleHeader << '\n';
    double worst = 0.0;
    for (const auto& row : rows) {
        const double err = std::abs(row.oracle - row.closed);
        worst = std::max(worst, err);
        os << csv::row(row.name, row.closed, row.oracle, err) << '\n';
    }
    if (c.tolerance && worst > *c.tolerance) {
        throw TruncationInsufficient("oracle disagrees with closed forms by " + csv::format(worst));
    }
}

}  // namespace detail

inline void add_state_options(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--r", c.r, "Two-mode squeeze parameter r >= 0")->capture_default_str();
    cmd->add_option("--eta", c.eta, "Detection transmissivity applied to both modes")->capture_default_str();
    cmd->add_option("--eta-a", c.eta_a, "Transmissivity of mode A (overrides --eta)");
    cmd->add_option("--eta-b", c.eta_b, "Transmissivity of mode B (overrides --eta)");
}

inline void add_estimator_options(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--samples", c.samples, "Records per measurement setting")->capture_default_str();
    cmd->add_option("--seed", c.seed, "64-bit seed; required, all randomness derives from it");
    cmd->add_option("--workers", c.workers, "Worker threads (0 = hardware); output does not depend on it")
        ->capture_default_str();
}

/// Parse and execute. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{
        "Two-mode Gaussian EPR and entanglement criteria.\n"
        "Units: quadratures X = a + a^dagger, P = (a - a^dagger)/i, vacuum variance 1;\n"
        "the uncertainty bound is Var(X) Var(P) >= 1."};
    app.require_subcommand(1);
    RunConfig c;
    std::string cov_text;

    auto* analyze = app.add_subcommand("analyze", "Criteria from exact Gaussian moments");
    add_state_options(analyze, c);
    analyze->add_option("--cov", cov_text, "Explicit covariance: 16 comma-separated row-major entries");
    analyze->add_option("--delta", c.delta, "Half-width for the bounded-conditional criterion")->capture_default_str();
    analyze->add_option("--coverage", c.coverage, "Coverage for the bounded-conditional criterion")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Tabulate criteria over a grid of r and eta");
    sweep->add_option("--r-values", c.r_values, "Comma-separated r values");
    sweep->add_option("--r-range", c.r_range, "start:stop:count");
    sweep->add_option("--eta-values", c.eta_values, "Comma-separated eta values (both modes)");
    sweep->add_option("--eta-range", c.eta_range, "start:stop:count");
    sweep->add_option("--eta", c.eta, "Single eta when no eta grid is given")->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo homodyne estimates with bootstrap intervals");
    add_state_options(simulate, c);
    add_estimator_options(simulate, c);
    simulate->add_option("--bin-width", c.bin_width, "Conditioning bin width (0 = Scott's rule)")->capture_default_str();
    simulate->add_option("--occupancy", c.occupancy, "Minimum records per retained bin")->capture_default_str();
    simulate->add_option("--bootstrap", c.bootstrap, "Bootstrap resamples")->capture_default_str();
    simulate->add_option("--confidence", c.confidence, "Interval confidence level")->capture_default_str();
    simulate->add_option("--coverage", c.coverage, "Coverage for the bounded-conditional criterion")->capture_default_str();
    simulate->add_option("--delta", c.delta, "Half-width for the bounded-conditional criterion")->capture_default_str();
    simulate->add_option("--samples-out", c.samples_out, "Write raw batches to <prefix>_XX.csv and <prefix>_PP.csv");

    auto* audit = app.add_subcommand("lhv-audit", "Compare quantum and Wigner hidden-variable statistics");
    add_state_options(audit, c);
    add_estimator_options(audit, c);

    auto* oracle = app.add_subcommand("oracle-check", "Compare closed forms with the Fock-space oracle");
    oracle->add_option("--r", c.r, "Two-mode squeeze parameter r >= 0")->capture_default_str();
    oracle->add_option("--nmax", c.n_max, "Fock truncation order (default scales with r)");
    oracle->add_option("--grid-points", c.grid_points, "Grid nodes per axis")->capture_default_str();
    oracle->add_option("--grid-halfwidth", c.grid_halfwidth, "Grid half-width (default 8 sqrt(cosh 2r), minimum 6 sqrt(cosh 2r))");
    oracle->add_option("--tolerance", c.tolerance, "Exit 5 when any abs_err exceeds this");

    for (auto* cmd : {analyze, sweep, simulate, audit, oracle}) {
        cmd->add_option("--out", c.out, "Write CSV here instead of stdout");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInvalidArgs;
    }

    std::ostringstream doc;
    try {
        if (!cov_text.empty()) {
            for (auto f : csv::split(cov_text)) c.cov.push_back(csv::parse_double(f));
        }
        detail::check_config(c);
        if (analyze->parsed()) {
            detail::run_analyze(c, doc);
        } else if (sweep->parsed()) {
            detail::run_sweep(c, doc);
        } else if (simulate->parsed()) {
            detail::run_simulate(c, doc);
        } else if (audit->parsed()) {
            detail::run_lhv_audit(c, doc);
        } else {
            detail::run_oracle_check(c, doc);
        }
    } catch (const UnphysicalState& e) {
        err << "error: " << e.what() << '\n';
        return kUnphysical;
    } catch (const OccupancyFailure& e) {
        err << "error: " << e.what() << '\n';
        return kSampling;
    } catch (const TruncationInsufficient& e) {
        err << "error: " << e.what() << '\n';
        return kOracle;
    } catch (const NegligibleMarginal& e) {
        err << "error: " << e.what() << '\n';
        return kOracle;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidArgs;
    } catch (const InvalidPair& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidArgs;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }

    if (c.out.empty()) {
        out << doc.str();
    } else {
        std::ofstream f(c.out);
        if (!f) {
            err << "error: cannot write " << c.out << '\n';
            return kInvalidArgs;
        }
        f << doc.str();
    }
    return kOk;
}

}  // namespace cvepr::cli
