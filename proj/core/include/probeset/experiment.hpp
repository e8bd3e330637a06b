#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probeset/calibrate.hpp"

namespace probeset {

// Empirical CDF over a finite sample: thresholds are the distinct observed
// values in increasing order, fractions the cumulative shares (ending at 1).
struct Ecdf {
    std::vector<double> thresholds;
    std::vector<double> fractions;
};

Ecdf make_ecdf(std::vector<double> values);

// Smallest threshold whose cumulative fraction reaches `level`.
double ecdf_quantile(const Ecdf& ecdf, double level);

// Two-column table "t,fraction", one row per distinct value.
std::string ecdf_to_csv(const Ecdf& ecdf);

// Everything cmd_calibrate needs beyond the data. epsilon <= 0 asks for the
// default of 1e-6 times the sample's parameter span.
struct CalibrateSpec {
    Method method = Method::stepdown;
    SetFamily family = SetFamily::threshold;
    double alpha = 0.1;
    double delta = 0.2;
    double epsilon = 0.0;
    double alpha_fst = 0.1;
    std::size_t grid_size = 50;
};

// Dispatches to the right calibrator, building the default grid / epsilon
// from the sample when the request leaves them open.
CalibrationOutcome run_calibration(const CalibrateSpec& spec, const std::vector<Example>& examples);

// Held-out evaluation of one calibrated set family.
struct EvalReport {
    Method method = Method::stepdown;
    SetFamily family = SetFamily::threshold;
    double parameter = 0.0;
    double alpha = 0.1;  // level of the reported loss quantile
    double delta = 0.0;
    std::int64_t count = 0;
    double loss_quantile = 0.0;
    double loss_quantile_gap = 0.0;  // loss_quantile - delta
    double mean_loss = 0.0;
    double mean_abstention = 0.0;
    bool abstain_all = false;
    Ecdf loss_ecdf;
    Ecdf abstention_ecdf;
    std::string source_digest;
    std::string warning;
};

// Applies the outcome to every test example and aggregates FPP loss and
// abstention. The quantile is read off the loss ECDF, so re-deriving it from
// the emitted CSV gives the identical value.
EvalReport evaluate_outcome(const CalibrationOutcome& outcome, const std::vector<Example>& test,
                            double alpha);

std::string report_to_json(const EvalReport& report);

// Grid experiment: cells are (family, alpha, delta); per cell and seed a
// fresh calibration + test split is generated and every method is calibrated
// and evaluated on it, mirroring how the methods are meant to be compared.
//
// The ranking defaults deliberately run a noisier scorer and denser queries
// than the library's generator defaults: with near-perfect scores every
// method picks a near-zero parameter and their orderings are ties. At
// sigma/scale ~ 0.6 and ~20 queries per instance the conservative-to-lax
// ordering (stepdown, fixed-sequence, stepup) separates cleanly.
struct SweepConfig {
    std::string task = "ranking";  // "ranking" | "tree"
    std::vector<Method> methods;
    std::vector<SetFamily> families;
    std::vector<double> alphas;
    std::vector<double> deltas;
    std::size_t seeds = 10;
    std::uint64_t base_seed = 1;
    std::size_t n_calibrate = 2000;
    std::size_t n_test = 2000;
    std::int32_t k = 10;            // ranking: number of items
    double relevance_scale = 12.0;  // ranking: latent relevance scale
    double noise_sigma = 7.0;       // ranking: score noise
    std::int32_t leaves = 1000;     // tree: leaf count
    std::int32_t branching = 8;     // tree: fanout
    std::size_t grid_size = 200;
    double alpha_fst = 0.1;
    double epsilon = 0.0;  // <= 0: default per sample
};

SweepConfig sweep_config_from_json(const std::string& bytes);

// One long-format result row. A nonempty error marks a failed cell; its
// metrics are meaningless and the row is skipped in summaries.
struct SweepRow {
    double alpha = 0.0;
    double delta = 0.0;
    Method method = Method::stepdown;
    SetFamily family = SetFamily::threshold;
    std::uint64_t seed = 0;
    double parameter = 0.0;
    double loss_quantile_gap = 0.0;
    double mean_loss = 0.0;
    double mean_abstention = 0.0;
    bool abstain_all = false;
    std::string error;
};

// Across-seed aggregate for one (alpha, delta, method, family) cell.
struct SweepSummary {
    double alpha = 0.0;
    double delta = 0.0;
    Method method = Method::stepdown;
    SetFamily family = SetFamily::threshold;
    std::int64_t count = 0;
    double gap_mean = 0.0;
    double gap_q25 = 0.0;
    double gap_q50 = 0.0;
    double gap_q75 = 0.0;
    double abstention_mean = 0.0;
    double abstention_q25 = 0.0;
    double abstention_q50 = 0.0;
    double abstention_q75 = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummary> summaries;
};

// Work units run concurrently up to `jobs` threads (0 = hardware); each unit
// owns a seed stream derived from (base_seed, cell, seed index), so results
// are byte-identical for any job count.
SweepResult run_sweep(const SweepConfig& config, int jobs);

std::string sweep_rows_csv(const std::vector<SweepRow>& rows);
std::string sweep_summary_csv(const std::vector<SweepSummary>& summaries);

}  // namespace probeset
