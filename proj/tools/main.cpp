// probeset: generate weakly supervised datasets, calibrate probe-adapted
// predictive sets against a false-probe-proportion target, evaluate them on
// held-out data, and run parameter sweeps or the statistical self check.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 self-check failure.

#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "probeset/calibrate.hpp"
#include "probeset/errors.hpp"
#include "probeset/experiment.hpp"
#include "probeset/io.hpp"
#include "probeset/oracle.hpp"
#include "probeset/synthetic.hpp"

namespace {

using namespace probeset;

// Parameter problems CLI11's validators cannot express (cross-flag rules).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const CLI::Validator kOpenUnit(
    [](std::string& input) -> std::string {
        double v = 0.0;
        try {
            v = std::stod(input);
        } catch (const std::exception&) {
            return "'" + input + "' is not a number";
        }
        if (!(v > 0.0 && v < 1.0)) return "'" + input + "' must lie strictly inside (0,1)";
        return {};
    },
    "FLOAT in (0,1)");

struct GenArgs {
    std::string task = "ranking";
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::string out;
    std::int32_t k = 8;
    double relevance_scale = 6.0;
    double noise_sigma = 0.5;
    std::int32_t leaves = 1000;
    std::int32_t branching = 8;
};

int cmd_gen(const GenArgs& args) {
    CalibSample sample;
    std::string tag;
    io::DatasetMeta meta;
    meta.task = args.task;
    meta.seed = args.seed;
    meta.count = args.n;
    io::JsonValue::Object generator;

    if (args.task == "ranking") {
        RankingModel model;
        model.k = args.k;
        model.relevance_scale = args.relevance_scale;
        model.noise_sigma = args.noise_sigma;
        // bernoulli fills the accuracy estimates too, so one file serves both
        // set families
        sample = make_ranking_dataset(model, PairQueryParams{}, SetFamily::bernoulli, args.n,
                                      args.seed);
        tag = io::format_family_tag(make_pairwise_family(args.k));
        generator.emplace("k", std::int64_t{args.k});
        generator.emplace("relevance_scale", args.relevance_scale);
        generator.emplace("noise_sigma", args.noise_sigma);
    } else {
        TreeModel model = make_default_tree_model(args.leaves, args.branching);
        sample = make_tree_dataset(model, TreeQueryParams{}, SetFamily::bernoulli, args.n,
                                   args.seed);
        tag = "tree";
        meta.tree = model.tree;
        generator.emplace("leaves", std::int64_t{args.leaves});
        generator.emplace("branching", std::int64_t{args.branching});
    }
    meta.family_tag = tag;
    meta.generator = std::move(generator);

    io::write_file(args.out, io::dataset_to_jsonl(sample.examples, tag));
    io::write_file(io::meta_path_for(args.out), io::meta_to_json(meta) + "\n");
    std::cout << "wrote " << sample.examples.size() << " records to " << args.out << "\n";
    return 0;
}

struct CalibrateArgs {
    std::string in;
    std::string out;
    std::string method = "stepdown";
    std::string family = "threshold";
    double alpha = 0.1;
    double delta = 0.2;
    double epsilon = 0.0;
    double alpha_fst = 0.1;
    std::size_t grid_size = 100;
};

int cmd_calibrate(const CalibrateArgs& args) {
    CalibrateSpec spec;
    spec.method = method_from_name(args.method);
    spec.family = family_from_name(args.family);
    spec.alpha = args.alpha;
    spec.delta = args.delta;
    spec.epsilon = args.epsilon;
    spec.alpha_fst = args.alpha_fst;
    spec.grid_size = args.grid_size;
    if ((spec.method == Method::fst || spec.method == Method::fst_quantile) && args.delta >= 1.0)
        throw UsageError("fixed-sequence methods need --delta strictly below 1");

    io::Dataset dataset = io::dataset_from_jsonl(io::read_file(args.in));
    CalibrationOutcome outcome = run_calibration(spec, dataset.examples);
    outcome.created_from = dataset.digest;
    io::write_file(args.out, io::outcome_to_json(outcome) + "\n");
    if (!outcome.warning.empty()) std::cerr << "warning: " << outcome.warning << "\n";
    std::cout << "calibrated " << to_string(spec.method) << "/" << to_string(spec.family)
              << " on " << dataset.examples.size() << " examples: parameter "
              << io::format_double(outcome.parameter) << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string outcome;
    std::string in;
    std::string report;
    std::string ecdf_out;
    double alpha = 0.0;  // 0: take the outcome's recorded alpha
    std::string format = "json";
};

std::string report_csv(const EvalReport& report) {
    std::string out =
        "method,family,parameter,alpha,delta,count,loss_quantile,loss_quantile_gap,"
        "mean_loss,mean_abstention,abstain_all\n";
    out += to_string(report.method);
    out += ',';
    out += to_string(report.family);
    for (double v : {report.parameter, report.alpha, report.delta}) {
        out += ',';
        out += io::format_double(v);
    }
    out += ',';
    out += std::to_string(report.count);
    for (double v : {report.loss_quantile, report.loss_quantile_gap, report.mean_loss,
                     report.mean_abstention}) {
        out += ',';
        out += io::format_double(v);
    }
    out += ',';
    out += report.abstain_all ? "1" : "0";
    out += '\n';
    return out;
}

int cmd_evaluate(const EvaluateArgs& args) {
    CalibrationOutcome outcome = io::outcome_from_json(io::read_file(args.outcome));
    io::Dataset dataset = io::dataset_from_jsonl(io::read_file(args.in));

    double alpha = args.alpha;
    if (alpha <= 0.0) {
        if (!outcome.alpha) throw UsageError("the outcome records no alpha; pass --alpha");
        alpha = *outcome.alpha;
    }

    EvalReport report = evaluate_outcome(outcome, dataset.examples, alpha);
    report.source_digest = dataset.digest;
    if (!outcome.created_from.empty() && outcome.created_from == dataset.digest) {
        report.warning = "evaluation data matches the calibration data (digest " +
                         dataset.digest + "); the guarantee needs a fresh sample";
        std::cerr << "warning: " << report.warning << "\n";
    }

    std::string body =
        args.format == "csv" ? report_csv(report) : report_to_json(report) + "\n";
    if (args.report.empty())
        std::cout << body;
    else
        io::write_file(args.report, body);

    if (!args.ecdf_out.empty()) {
        io::write_file(args.ecdf_out + ".loss.csv", ecdf_to_csv(report.loss_ecdf));
        io::write_file(args.ecdf_out + ".abstention.csv", ecdf_to_csv(report.abstention_ecdf));
    }
    return 0;
}

struct SweepArgs {
    std::string config;
    std::string out;
    int jobs = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_sweep(const SweepArgs& args) {
    SweepConfig config = sweep_config_from_json(io::read_file(args.config));
    if (args.seed_given) config.base_seed = args.seed;
    SweepResult result = run_sweep(config, args.jobs);
    io::write_file(args.out + ".csv", sweep_rows_csv(result.rows));
    io::write_file(args.out + ".summary.csv", sweep_summary_csv(result.summaries));

    std::size_t failed = 0;
    for (const auto& row : result.rows)
        if (!row.error.empty()) ++failed;
    if (failed > 0) std::cerr << "warning: " << failed << " cells failed; see the error column\n";
    std::cout << "wrote " << result.rows.size() << " rows to " << args.out << ".csv and "
              << result.summaries.size() << " summaries to " << args.out << ".summary.csv\n";
    return 0;
}

struct SelfcheckArgs {
    double trials = 1.0;
    std::uint64_t seed = 20260816;
    int jobs = 0;
    bool inject_quantile_bug = false;
    std::string out;
};

int cmd_selfcheck(const SelfcheckArgs& args) {
    oracle::SelfCheckOptions options;
    options.trials_scale = args.trials;
    options.seed = args.seed;
    options.jobs = args.jobs;
    options.inject_quantile_bug = args.inject_quantile_bug;

    std::vector<oracle::CheckResult> results = oracle::run_selfcheck(options);
    std::size_t passed = 0;
    for (const auto& r : results) {
        if (r.passed) ++passed;
        std::cout << (r.passed ? "ok   " : "FAIL ") << r.name << "  observed="
                  << io::format_double(r.observed) << " bound=" << io::format_double(r.bound);
        if (!r.details.empty()) std::cout << "  (" << r.details << ")";
        std::cout << "\n";
    }
    std::cout << "checks passed: " << passed << "/" << results.size() << "\n";

    if (!args.out.empty()) {
        io::JsonValue::Array checks;
        for (const auto& r : results) {
            io::JsonValue::Object check;
            check.emplace("name", r.name);
            check.emplace("passed", r.passed);
            check.emplace("observed", r.observed);
            check.emplace("bound", r.bound);
            if (!r.details.empty()) check.emplace("details", r.details);
            checks.emplace_back(std::move(check));
        }
        io::JsonValue::Object report;
        report.emplace("passed", passed == results.size());
        report.emplace("checks", std::move(checks));
        io::write_file(args.out, io::dump(io::JsonValue(std::move(report))) + "\n");
    }
    return passed == results.size() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "probe-adapted predictive sets under weak supervision: synthetic data, "
        "false-probe-proportion calibration, evaluation, sweeps, self checks"};
    app.require_subcommand(1);
    int rc = 0;

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic weakly supervised dataset");
    gen_cmd->add_option("--task", gen.task, "Label space: ranking (permutations) or tree (leaves)")
        ->check(CLI::IsMember({"ranking", "tree"}));
    gen_cmd->add_option("--n", gen.n, "Number of examples")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output JSONL path (sidecar: <out>.meta.json)")
        ->required();
    gen_cmd->add_option("--k", gen.k, "ranking: number of items")
        ->check(CLI::Range(2, 20))
        ->capture_default_str();
    gen_cmd->add_option("--relevance-scale", gen.relevance_scale, "ranking: relevance scale")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen_cmd->add_option("--noise-sigma", gen.noise_sigma, "ranking: score noise")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    gen_cmd->add_option("--leaves", gen.leaves, "tree: number of leaves")
        ->check(CLI::Range(2, 1000000))
        ->capture_default_str();
    gen_cmd->add_option("--branching", gen.branching, "tree: fanout of the balanced tree")
        ->check(CLI::Range(2, 1000))
        ->capture_default_str();
    gen_cmd->callback([&]() { rc = cmd_gen(gen); });

    CalibrateArgs cal;
    auto* cal_cmd = app.add_subcommand(
        "calibrate", "Pick the set-family parameter achieving the requested loss control");
    cal_cmd->add_option("--in", cal.in, "Calibration dataset (JSONL)")->required();
    cal_cmd->add_option("--out", cal.out, "Outcome JSON path")->required();
    cal_cmd->add_option("--method", cal.method,
                        "stepdown: quantile of stay-below scores; stepup: quantile of first-"
                        "crossing scores plus epsilon; fst: fixed-sequence testing of the "
                        "expected loss; fst-quantile: fixed-sequence testing of the loss "
                        "quantile")
        ->check(CLI::IsMember({"stepdown", "stepup", "fst", "fst-quantile"}))
        ->capture_default_str();
    cal_cmd->add_option("--family", cal.family,
                        "threshold: answer probes with |score| above the parameter; bernoulli: "
                        "adaptive accuracy cutoff, parameter is a nominal accuracy target (the "
                        "target matching loss level d is 1-d)")
        ->check(CLI::IsMember({"threshold", "bernoulli"}))
        ->capture_default_str();
    cal_cmd->add_option("--alpha", cal.alpha, "Quantile level: control the (1-alpha)-quantile")
        ->check(kOpenUnit)
        ->capture_default_str();
    cal_cmd->add_option("--delta", cal.delta, "Loss level to stay below")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cal_cmd->add_option("--epsilon", cal.epsilon,
                        "stepup: margin added to the quantile (0 = 1e-6 of the parameter span)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cal_cmd->add_option("--alpha-fst", cal.alpha_fst, "fst: per-walk error probability")
        ->check(kOpenUnit)
        ->capture_default_str();
    cal_cmd->add_option("--grid-size", cal.grid_size, "fst: number of grid points")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
        ->capture_default_str();
    cal_cmd->callback([&]() { rc = cmd_calibrate(cal); });

    EvaluateArgs eval;
    auto* eval_cmd =
        app.add_subcommand("evaluate", "Apply a calibrated outcome to held-out data");
    eval_cmd->add_option("--outcome", eval.outcome, "Calibration outcome JSON")->required();
    eval_cmd->add_option("--in", eval.in, "Evaluation dataset (JSONL)")->required();
    eval_cmd->add_option("--report", eval.report, "Report path (default: stdout)");
    eval_cmd->add_option("--ecdf-out", eval.ecdf_out,
                         "Prefix for <prefix>.loss.csv and <prefix>.abstention.csv");
    eval_cmd->add_option("--alpha", eval.alpha,
                         "Quantile level for the gap metric (default: the outcome's alpha)")
        ->check(kOpenUnit);
    eval_cmd->add_option("--format", eval.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    eval_cmd->callback([&]() { rc = cmd_evaluate(eval); });

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Generate, calibrate, and evaluate across a parameter grid");
    sweep_cmd->add_option("--config", sweep.config, "Sweep config JSON")->required();
    sweep_cmd->add_option("--out", sweep.out, "Prefix for <prefix>.csv and <prefix>.summary.csv")
        ->required();
    sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads (0 = all cores)")
        ->check(CLI::Range(0, 1024))
        ->capture_default_str();
    auto* sweep_seed = sweep_cmd->add_option("--seed", sweep.seed,
                                             "Override the config's base seed");
    sweep_cmd->callback([&]() {
        sweep.seed_given = sweep_seed->count() > 0;
        rc = cmd_sweep(sweep);
    });

    SelfcheckArgs check;
    auto* check_cmd = app.add_subcommand(
        "selfcheck", "Run the oracle suite: exact re-derivations and Monte-Carlo guarantee "
                     "checks; exits 4 on any failure");
    check_cmd->add_option("--trials", check.trials, "Scale factor on Monte-Carlo trial counts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    check_cmd->add_option("--seed", check.seed, "Suite seed")->capture_default_str();
    check_cmd->add_option("--jobs", check.jobs, "Worker threads (0 = all cores)")
        ->check(CLI::Range(0, 1024))
        ->capture_default_str();
    check_cmd->add_flag("--inject-quantile-bug", check.inject_quantile_bug,
                        "Fault injection: corrupt the conformal index by -1; the suite must "
                        "then fail (tests the tests)");
    check_cmd->add_option("--out", check.out, "Also write a JSON report here");
    check_cmd->callback([&]() { rc = cmd_selfcheck(check); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}
