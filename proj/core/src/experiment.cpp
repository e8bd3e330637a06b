#include "probeset/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "probeset/errors.hpp"
#include "probeset/io.hpp"
#include "probeset/loss.hpp"
#include "probeset/parallel.hpp"
#include "probeset/synthetic.hpp"

namespace probeset {

namespace {

using nlohmann::json;

// CSV cells holding free text (error messages) get quoted; numbers never
// need it.
std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt(double x) { return io::format_double(x); }

// Linear-interpolation quantile of a sample (position p*(n-1)).
double sample_quantile(std::vector<double> values, double p) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    double pos = p * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double mean_of(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) total += v;
    return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

}  // namespace

Ecdf make_ecdf(std::vector<double> values) {
    if (values.empty()) throw DomainError("ECDF of an empty sample");
    std::sort(values.begin(), values.end());
    Ecdf ecdf;
    auto n = static_cast<double>(values.size());
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        ecdf.thresholds.push_back(values[i]);
        ecdf.fractions.push_back(static_cast<double>(j) / n);
        i = j;
    }
    return ecdf;
}

double ecdf_quantile(const Ecdf& ecdf, double level) {
    for (std::size_t i = 0; i < ecdf.thresholds.size(); ++i)
        if (ecdf.fractions[i] >= level) return ecdf.thresholds[i];
    return ecdf.thresholds.back();  // fractions end at 1, so level > 1 only
}

std::string ecdf_to_csv(const Ecdf& ecdf) {
    std::string out = "t,fraction\n";
    for (std::size_t i = 0; i < ecdf.thresholds.size(); ++i) {
        out += fmt(ecdf.thresholds[i]);
        out += ',';
        out += fmt(ecdf.fractions[i]);
        out += '\n';
    }
    return out;
}

CalibrationOutcome run_calibration(const CalibrateSpec& spec,
                                   const std::vector<Example>& examples) {
    CalibSample sample{spec.family, examples};
    switch (spec.method) {
        case Method::stepdown: return calibrate_stepdown(sample, spec.delta, spec.alpha);
        case Method::stepup: {
            double epsilon = spec.epsilon;
            if (epsilon <= 0.0) epsilon = 1e-6 * parameter_span(sample);
            return calibrate_stepup(sample, spec.delta, spec.alpha, epsilon);
        }
        case Method::fst:
            return calibrate_fst(sample, spec.delta, spec.alpha_fst,
                                 default_grid(sample, spec.grid_size));
        case Method::fst_quantile:
            return calibrate_fst_quantile(sample, spec.delta, spec.alpha, spec.alpha_fst,
                                          default_grid(sample, spec.grid_size));
    }
    throw DomainError("unknown method");
}

EvalReport evaluate_outcome(const CalibrationOutcome& outcome, const std::vector<Example>& test,
                            double alpha) {
    if (test.empty()) throw DomainError("test sample is empty");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    CalibSample sample{outcome.family, test};
    check_sample(sample);

    std::vector<double> losses;
    std::vector<double> abstentions;
    losses.reserve(test.size());
    abstentions.reserve(test.size());
    for (const auto& example : test) {
        ProbeAdaptedSet set = apply_outcome(outcome, example);
        losses.push_back(fpp_loss(example.feedback, set).value());
        abstentions.push_back(abstention(example.feedback, set));
    }

    EvalReport report;
    report.method = outcome.method;
    report.family = outcome.family;
    report.parameter = outcome.parameter;
    report.alpha = alpha;
    report.delta = outcome.delta;
    report.count = static_cast<std::int64_t>(test.size());
    report.abstain_all = outcome.abstain_all;
    report.mean_loss = mean_of(losses);
    report.mean_abstention = mean_of(abstentions);
    report.loss_ecdf = make_ecdf(std::move(losses));
    report.abstention_ecdf = make_ecdf(std::move(abstentions));
    report.loss_quantile = ecdf_quantile(report.loss_ecdf, 1.0 - alpha);
    report.loss_quantile_gap = report.loss_quantile - outcome.delta;
    return report;
}

std::string report_to_json(const EvalReport& report) {
    using io::JsonValue;
    auto ecdf_to_value = [](const Ecdf& ecdf) {
        JsonValue::Array rows;
        for (std::size_t i = 0; i < ecdf.thresholds.size(); ++i) {
            JsonValue::Array row;
            row.emplace_back(ecdf.thresholds[i]);
            row.emplace_back(ecdf.fractions[i]);
            rows.emplace_back(std::move(row));
        }
        return rows;
    };
    JsonValue::Object object;
    object.emplace("method", to_string(report.method));
    object.emplace("family", to_string(report.family));
    object.emplace("parameter", report.parameter);
    object.emplace("alpha", report.alpha);
    object.emplace("delta", report.delta);
    object.emplace("count", report.count);
    object.emplace("loss_quantile", report.loss_quantile);
    object.emplace("loss_quantile_gap", report.loss_quantile_gap);
    object.emplace("mean_loss", report.mean_loss);
    object.emplace("mean_abstention", report.mean_abstention);
    object.emplace("abstain_all", report.abstain_all);
    object.emplace("loss_ecdf", ecdf_to_value(report.loss_ecdf));
    object.emplace("abstention_ecdf", ecdf_to_value(report.abstention_ecdf));
    if (!report.source_digest.empty()) object.emplace("source_digest", report.source_digest);
    if (!report.warning.empty()) object.emplace("warning", report.warning);
    return io::dump(JsonValue(std::move(object)));
}

SweepConfig sweep_config_from_json(const std::string& bytes) {
    json j = json::parse(bytes, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) throw DataError("sweep config must be a JSON object");

    SweepConfig config;
    config.task = j.value("task", config.task);
    if (config.task != "ranking" && config.task != "tree")
        throw DataError("task must be 'ranking' or 'tree'");

    try {
        if (j.contains("methods"))
            for (const auto& m : j.at("methods"))
                config.methods.push_back(method_from_name(m.get<std::string>()));
        if (j.contains("families"))
            for (const auto& f : j.at("families"))
                config.families.push_back(family_from_name(f.get<std::string>()));
    } catch (const DomainError& e) {
        throw DataError(e.what());
    }
    if (config.methods.empty()) config.methods = {Method::stepdown, Method::fst_quantile, Method::stepup};
    if (config.families.empty()) config.families = {SetFamily::threshold};

    if (j.contains("alphas"))
        for (const auto& a : j.at("alphas")) config.alphas.push_back(a.get<double>());
    if (j.contains("deltas"))
        for (const auto& d : j.at("deltas")) config.deltas.push_back(d.get<double>());
    if (config.alphas.empty() || config.deltas.empty())
        throw DataError("sweep config needs alphas and deltas");
    for (double a : config.alphas)
        if (!(a > 0.0 && a < 1.0)) throw DataError("alphas must lie in (0,1)");
    for (double d : config.deltas)
        if (!(d > 0.0 && d < 1.0)) throw DataError("deltas must lie in (0,1)");

    config.seeds = j.value("seeds", config.seeds);
    if (config.seeds == 0) throw DataError("seeds must be positive");
    config.base_seed = j.value("base_seed", config.base_seed);
    config.n_calibrate = j.value("n_calibrate", config.n_calibrate);
    config.n_test = j.value("n_test", config.n_test);
    if (config.n_calibrate == 0 || config.n_test == 0)
        throw DataError("n_calibrate and n_test must be positive");
    config.k = j.value("k", config.k);
    config.relevance_scale = j.value("relevance_scale", config.relevance_scale);
    config.noise_sigma = j.value("noise_sigma", config.noise_sigma);
    if (!(config.relevance_scale > 0.0) || !(config.noise_sigma >= 0.0))
        throw DataError("relevance_scale must be positive and noise_sigma nonnegative");
    config.leaves = j.value("leaves", config.leaves);
    config.branching = j.value("branching", config.branching);
    config.grid_size = j.value("grid_size", config.grid_size);
    if (config.grid_size == 0) throw DataError("grid_size must be positive");
    config.alpha_fst = j.value("alpha_fst", config.alpha_fst);
    if (!(config.alpha_fst > 0.0 && config.alpha_fst < 1.0))
        throw DataError("alpha_fst must lie in (0,1)");
    config.epsilon = j.value("epsilon", config.epsilon);
    return config;
}

namespace {

struct SweepCell {
    SetFamily family;
    double alpha;
    double delta;
};

CalibSample generate_dataset(const SweepConfig& config, SetFamily family, std::size_t n,
                             std::uint64_t seed) {
    if (config.task == "tree") {
        TreeModel model = make_default_tree_model(config.leaves, config.branching);
        return make_tree_dataset(model, TreeQueryParams{}, family, n, seed);
    }
    RankingModel model;
    model.k = config.k;
    model.relevance_scale = config.relevance_scale;
    model.noise_sigma = config.noise_sigma;
    return make_ranking_dataset(model, PairQueryParams{}, family, n, seed);
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config, int jobs) {
    std::vector<SweepCell> cells;
    for (SetFamily family : config.families)
        for (double alpha : config.alphas)
            for (double delta : config.deltas) cells.push_back({family, alpha, delta});

    // slot layout: unit = (cell, seed), rows per unit = one per method
    auto units = static_cast<std::int64_t>(cells.size() * config.seeds);
    std::vector<std::vector<SweepRow>> slots(static_cast<std::size_t>(units));

    parallel_for(units, jobs, [&](std::int64_t unit) {
        auto cell_index = static_cast<std::size_t>(unit) / config.seeds;
        auto seed_index = static_cast<std::uint64_t>(unit) % config.seeds;
        const SweepCell& cell = cells[cell_index];

        SplitRng root(config.base_seed);
        SplitRng stream = root.split(static_cast<std::uint64_t>(cell_index)).split(seed_index);
        std::uint64_t calib_seed = stream.next_u64();
        std::uint64_t test_seed = stream.next_u64();

        auto& rows = slots[static_cast<std::size_t>(unit)];
        CalibSample calib;
        CalibSample test;
        std::string generation_error;
        try {
            calib = generate_dataset(config, cell.family, config.n_calibrate, calib_seed);
            test = generate_dataset(config, cell.family, config.n_test, test_seed);
        } catch (const std::exception& e) {
            generation_error = e.what();
        }

        for (Method method : config.methods) {
            SweepRow row;
            row.alpha = cell.alpha;
            row.delta = cell.delta;
            row.method = method;
            row.family = cell.family;
            row.seed = seed_index;
            if (!generation_error.empty()) {
                row.error = generation_error;
                rows.push_back(std::move(row));
                continue;
            }
            try {
                CalibrateSpec spec;
                spec.method = method;
                spec.family = cell.family;
                spec.alpha = cell.alpha;
                spec.delta = cell.delta;
                spec.epsilon = config.epsilon;
                spec.alpha_fst = config.alpha_fst;
                spec.grid_size = config.grid_size;
                CalibrationOutcome outcome = run_calibration(spec, calib.examples);
                EvalReport report = evaluate_outcome(outcome, test.examples, cell.alpha);
                row.parameter = outcome.parameter;
                row.loss_quantile_gap = report.loss_quantile_gap;
                row.mean_loss = report.mean_loss;
                row.mean_abstention = report.mean_abstention;
                row.abstain_all = outcome.abstain_all;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    });

    SweepResult result;
    // cells were laid out family-major, alpha, delta; emit long-format rows in
    // (alpha, delta, method, family, seed) order regardless
    auto cell_at = [&](std::size_t family_index, std::size_t alpha_index,
                       std::size_t delta_index) {
        return (family_index * config.alphas.size() + alpha_index) * config.deltas.size() +
               delta_index;
    };
    for (std::size_t alpha_index = 0; alpha_index < config.alphas.size(); ++alpha_index) {
        for (std::size_t delta_index = 0; delta_index < config.deltas.size(); ++delta_index) {
            for (std::size_t method_index = 0; method_index < config.methods.size();
                 ++method_index) {
                for (std::size_t family_index = 0; family_index < config.families.size();
                     ++family_index) {
                    std::size_t cell_index = cell_at(family_index, alpha_index, delta_index);
                    std::vector<double> gaps;
                    std::vector<double> absts;
                    for (std::size_t s = 0; s < config.seeds; ++s) {
                        const auto& unit_rows = slots[cell_index * config.seeds + s];
                        const SweepRow& row = unit_rows[method_index];
                        result.rows.push_back(row);
                        if (row.error.empty()) {
                            gaps.push_back(row.loss_quantile_gap);
                            absts.push_back(row.mean_abstention);
                        }
                    }
                    SweepSummary summary;
                    summary.alpha = config.alphas[alpha_index];
                    summary.delta = config.deltas[delta_index];
                    summary.method = config.methods[method_index];
                    summary.family = config.families[family_index];
                    summary.count = static_cast<std::int64_t>(gaps.size());
                    summary.gap_mean = mean_of(gaps);
                    summary.gap_q25 = sample_quantile(gaps, 0.25);
                    summary.gap_q50 = sample_quantile(gaps, 0.5);
                    summary.gap_q75 = sample_quantile(gaps, 0.75);
                    summary.abstention_mean = mean_of(absts);
                    summary.abstention_q25 = sample_quantile(absts, 0.25);
                    summary.abstention_q50 = sample_quantile(absts, 0.5);
                    summary.abstention_q75 = sample_quantile(absts, 0.75);
                    result.summaries.push_back(summary);
                }
            }
        }
    }
    return result;
}

std::string sweep_rows_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "alpha,delta,method,family,seed,parameter,loss_quantile_gap,mean_loss,"
        "mean_abstention,abstain_all,error\n";
    for (const auto& row : rows) {
        out += fmt(row.alpha);
        out += ',';
        out += fmt(row.delta);
        out += ',';
        out += to_string(row.method);
        out += ',';
        out += to_string(row.family);
        out += ',';
        out += std::to_string(row.seed);
        out += ',';
        if (row.error.empty()) {
            out += fmt(row.parameter);
            out += ',';
            out += fmt(row.loss_quantile_gap);
            out += ',';
            out += fmt(row.mean_loss);
            out += ',';
            out += fmt(row.mean_abstention);
            out += ',';
            out += row.abstain_all ? "1" : "0";
            out += ',';
        } else {
            out += ",,,,,";
        }
        out += csv_escape(row.error);
        out += '\n';
    }
    return out;
}

std::string sweep_summary_csv(const std::vector<SweepSummary>& summaries) {
    std::string out =
        "alpha,delta,method,family,count,gap_mean,gap_q25,gap_q50,gap_q75,"
        "abstention_mean,abstention_q25,abstention_q50,abstention_q75\n";
    for (const auto& s : summaries) {
        out += fmt(s.alpha);
        out += ',';
        out += fmt(s.delta);
        out += ',';
        out += to_string(s.method);
        out += ',';
        out += to_string(s.family);
        out += ',';
        out += std::to_string(s.count);
        for (double v : {s.gap_mean, s.gap_q25, s.gap_q50, s.gap_q75, s.abstention_mean,
                         s.abstention_q25, s.abstention_q50, s.abstention_q75}) {
            out += ',';
            out += fmt(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace probeset
