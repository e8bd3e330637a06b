#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "probeset/io.hpp"

// End-to-end coverage of the command-line surface: happy paths, the exit-code
// contract (0 ok, 2 usage, 3 data, 4 failed self checks), and byte-identical
// reruns. The binary path comes from the build (PROBESET_CLI_PATH).

namespace fs = std::filesystem;
using probeset::io::read_file;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "probeset-cli-tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string path_in(const std::string& name) { return (work_dir() / name).string(); }

CliResult run_cli(const std::string& args) {
    fs::path out = work_dir() / "stdout.txt";
    fs::path err = work_dir() / "stderr.txt";
    std::string command = std::string("\"") + PROBESET_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
    int status = std::system(command.c_str());
    CliResult result;
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_file(out.string());
    result.err = read_file(err.string());
    return result;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("").code == 2);                       // a subcommand is required
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("gen --out x.jsonl --bogus 1").code == 2);
    CHECK(run_cli("gen").code == 2);                    // --out is required
    CHECK(run_cli("gen --out x.jsonl --k 1").code == 2);
    CHECK(run_cli("calibrate --in a --out b --method mcmc").code == 2);
    CHECK(run_cli("calibrate --in a --out b --alpha 1.0").code == 2);
    CHECK(run_cli("evaluate --outcome a --in b --alpha 0").code == 2);
    CHECK(run_cli("evaluate --outcome a --in b --format yaml").code == 2);
    CHECK(run_cli("selfcheck --trials 0").code == 2);
    CHECK(run_cli("sweep --config a --out b --jobs -1").code == 2);
}

TEST_CASE("gen writes identical bytes for identical seeds") {
    std::string base = "gen --task ranking --n 50 --seed 3 --k 6 --out ";
    CliResult first = run_cli(base + path_in("a.jsonl"));
    REQUIRE(first.code == 0);
    CHECK(contains(first.out, "wrote 50 records"));
    CHECK(run_cli(base + path_in("b.jsonl")).code == 0);
    CHECK(read_file(path_in("a.jsonl")) == read_file(path_in("b.jsonl")));
    CHECK(read_file(path_in("a.jsonl.meta.json")) == read_file(path_in("b.jsonl.meta.json")));

    CHECK(run_cli("gen --task ranking --n 50 --seed 4 --k 6 --out " + path_in("c.jsonl")).code ==
          0);
    CHECK(read_file(path_in("a.jsonl")) != read_file(path_in("c.jsonl")));

    auto dataset = probeset::io::dataset_from_jsonl(read_file(path_in("a.jsonl")));
    CHECK(dataset.family_tag == "pairwise:6");
    CHECK(dataset.examples.size() == 50);
    auto meta = probeset::io::meta_from_json(read_file(path_in("a.jsonl.meta.json")));
    CHECK(meta.task == "ranking");
    CHECK(meta.seed == 3);
    CHECK(meta.count == 50);
}

TEST_CASE("gen --n 0 still writes a valid (empty) dataset with metadata") {
    REQUIRE(run_cli("gen --task ranking --n 0 --seed 1 --out " + path_in("empty.jsonl")).code ==
            0);
    CHECK(read_file(path_in("empty.jsonl")).empty());
    auto meta = probeset::io::meta_from_json(read_file(path_in("empty.jsonl.meta.json")));
    CHECK(meta.count == 0);

    // but an empty test split is a data error downstream
    REQUIRE(run_cli("gen --task ranking --n 40 --seed 9 --k 5 --out " + path_in("small.jsonl"))
                .code == 0);
    REQUIRE(run_cli("calibrate --in " + path_in("small.jsonl") + " --out " +
                    path_in("small.outcome.json"))
                .code == 0);
    CHECK(run_cli("evaluate --outcome " + path_in("small.outcome.json") + " --in " +
                  path_in("empty.jsonl"))
              .code == 3);
}

TEST_CASE("gen tree datasets carry the tree in the sidecar") {
    CliResult r = run_cli("gen --task tree --n 20 --seed 8 --leaves 32 --branching 4 --out " +
                          path_in("tree.jsonl"));
    REQUIRE(r.code == 0);
    auto dataset = probeset::io::dataset_from_jsonl(read_file(path_in("tree.jsonl")));
    CHECK(dataset.family_tag == "tree");
    auto meta = probeset::io::meta_from_json(read_file(path_in("tree.jsonl.meta.json")));
    REQUIRE(meta.tree.has_value());
    CHECK(meta.tree->leaves().size() == 32);
}

TEST_CASE("calibrate-evaluate pipeline: every method, fresh test data") {
    std::string calib = path_in("calib.jsonl");
    std::string test = path_in("test.jsonl");
    REQUIRE(run_cli("gen --task ranking --n 120 --seed 41 --k 6 --out " + calib).code == 0);
    REQUIRE(run_cli("gen --task ranking --n 80 --seed 42 --k 6 --out " + test).code == 0);

    struct MethodCase {
        const char* name;
        std::string extra;
    };
    const MethodCase methods[] = {
        {"stepdown", " --delta 0.25"},
        {"stepup", " --delta 0.25 --epsilon 0.001"},
        {"fst", " --delta 0.3 --family bernoulli --grid-size 40"},
        {"fst-quantile", " --delta 0.25 --grid-size 40"},
    };
    for (const auto& m : methods) {
        CAPTURE(m.name);
        std::string outcome = path_in(std::string("outcome-") + m.name + ".json");
        CliResult cal = run_cli("calibrate --in " + calib + " --out " + outcome + " --method " +
                                m.name + " --alpha 0.2" + m.extra);
        REQUIRE(cal.code == 0);
        CHECK(contains(cal.out, std::string("calibrated ") + m.name));
        CHECK(contains(read_file(outcome), std::string("\"method\":\"") + m.name + "\""));

        std::string alpha_flag = std::string(m.name) == "fst" ? " --alpha 0.2" : "";
        CliResult eval = run_cli("evaluate --outcome " + outcome + " --in " + test + alpha_flag);
        REQUIRE(eval.code == 0);
        CHECK(contains(eval.out, "\"loss_quantile\":"));
        CHECK(contains(eval.out, "\"count\":80"));
        CHECK(!contains(eval.err, "matches the calibration data"));
    }

    // the expected-loss walk records no quantile level, so evaluating its
    // outcome needs an explicit --alpha
    CHECK(run_cli("evaluate --outcome " + path_in("outcome-fst.json") + " --in " + test).code ==
          2);
}

TEST_CASE("evaluate warns when the data digest matches the calibration run") {
    std::string data = path_in("reuse.jsonl");
    std::string outcome = path_in("reuse.outcome.json");
    REQUIRE(run_cli("gen --task ranking --n 60 --seed 77 --k 5 --out " + data).code == 0);
    REQUIRE(run_cli("calibrate --in " + data + " --out " + outcome).code == 0);
    CliResult eval = run_cli("evaluate --outcome " + outcome + " --in " + data);
    CHECK(eval.code == 0);  // warned, not refused
    CHECK(contains(eval.err, "matches the calibration data"));
    CHECK(contains(eval.err, "digest"));
    CHECK(contains(eval.out, "\"warning\":"));
}

TEST_CASE("evaluate writes csv reports and ecdf tables on request") {
    std::string calib = path_in("fmt-calib.jsonl");
    std::string test = path_in("fmt-test.jsonl");
    std::string outcome = path_in("fmt.outcome.json");
    REQUIRE(run_cli("gen --task ranking --n 80 --seed 51 --k 6 --out " + calib).code == 0);
    REQUIRE(run_cli("gen --task ranking --n 60 --seed 52 --k 6 --out " + test).code == 0);
    REQUIRE(run_cli("calibrate --in " + calib + " --out " + outcome).code == 0);

    CliResult eval = run_cli("evaluate --outcome " + outcome + " --in " + test +
                             " --format csv --report " + path_in("report.csv") + " --ecdf-out " +
                             path_in("curves"));
    REQUIRE(eval.code == 0);
    std::string report = read_file(path_in("report.csv"));
    CHECK(report.rfind("method,family,parameter,alpha,delta,count,loss_quantile,"
                       "loss_quantile_gap,mean_loss,mean_abstention,abstain_all\n",
                       0) == 0);
    CHECK(contains(report, "stepdown,threshold,"));
    CHECK(read_file(path_in("curves.loss.csv")).rfind("t,fraction\n", 0) == 0);
    CHECK(read_file(path_in("curves.abstention.csv")).rfind("t,fraction\n", 0) == 0);
}

TEST_CASE("data errors exit 3 and name the offending line") {
    CHECK(run_cli("calibrate --in " + path_in("no-such-file.jsonl") + " --out " +
                  path_in("x.json"))
              .code == 3);

    std::string good =
        "{\"answers\":{\"b:1\":1},\"family\":\"bitvector:2\",\"id\":\"ok\","
        "\"queries\":[\"b:1\"],\"scores\":{\"b:1\":1.5}}";
    probeset::io::write_file(path_in("broken.jsonl"), good + "\n{oops\n");
    CliResult r = run_cli("calibrate --in " + path_in("broken.jsonl") + " --out " +
                          path_in("x.json"));
    CHECK(r.code == 3);
    CHECK(contains(r.err, "line 2"));

    probeset::io::write_file(path_in("garbage.outcome.json"), "not json\n");
    probeset::io::write_file(path_in("scores-only.jsonl"), good + "\n");
    CHECK(run_cli("evaluate --outcome " + path_in("garbage.outcome.json") + " --in " +
                  path_in("scores-only.jsonl"))
              .code == 3);

    // a bernoulli outcome cannot be applied to data without accuracy estimates
    probeset::io::write_file(
        path_in("bern.outcome.json"),
        "{\"abstain_all\":false,\"alpha\":0.2,\"delta\":0.25,\"family\":\"bernoulli\","
        "\"method\":\"stepdown\",\"parameter\":0.75}\n");
    CHECK(run_cli("evaluate --outcome " + path_in("bern.outcome.json") + " --in " +
                  path_in("scores-only.jsonl"))
              .code == 3);

    // calibrating the expected-loss walk at delta >= 1 is a usage error instead
    CHECK(run_cli("calibrate --in " + path_in("scores-only.jsonl") + " --out " +
                  path_in("x.json") + " --method fst --delta 1.0")
              .code == 2);
}

TEST_CASE("sweep writes row and summary tables, byte-identical across reruns") {
    std::string config = path_in("sweep-config.json");
    probeset::io::write_file(config,
                             "{\"task\":\"ranking\",\"methods\":[\"stepdown\",\"stepup\"],"
                             "\"alphas\":[0.2],\"deltas\":[0.3],\"seeds\":2,\"base_seed\":11,"
                             "\"n_calibrate\":50,\"n_test\":50,\"k\":5,\"relevance_scale\":6,"
                             "\"noise_sigma\":3,\"grid_size\":15}\n");
    CliResult first = run_cli("sweep --config " + config + " --out " + path_in("sweep-a"));
    REQUIRE(first.code == 0);
    CHECK(contains(first.out, "wrote 4 rows"));

    std::string rows = read_file(path_in("sweep-a.csv"));
    CHECK(rows.rfind("alpha,delta,method,family,seed,", 0) == 0);
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 5);  // header + 4 rows
    std::string summary = read_file(path_in("sweep-a.summary.csv"));
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);  // header + 2 cells

    REQUIRE(run_cli("sweep --config " + config + " --out " + path_in("sweep-b")).code == 0);
    CHECK(read_file(path_in("sweep-b.csv")) == rows);
    CHECK(read_file(path_in("sweep-b.summary.csv")) == summary);

    // --seed overrides the config's base seed and changes the draw
    REQUIRE(run_cli("sweep --config " + config + " --seed 12 --out " + path_in("sweep-c")).code ==
            0);
    CHECK(read_file(path_in("sweep-c.csv")) != rows);
}

TEST_CASE("selfcheck passes fresh and fails under fault injection") {
    CliResult clean = run_cli("selfcheck --trials 0.05 --out " + path_in("selfcheck.json"));
    CHECK(clean.code == 0);
    CHECK(contains(clean.out, "ok   thm1-coverage-headline"));
    CHECK(contains(clean.out, "checks passed:"));
    CHECK(!contains(clean.out, "FAIL"));
    CHECK(contains(read_file(path_in("selfcheck.json")), "\"passed\":true"));

    // corrupting the conformal index by one must be caught
    CliResult bugged = run_cli("selfcheck --trials 0.3 --inject-quantile-bug");
    CHECK(bugged.code == 4);
    CHECK(contains(bugged.out, "FAIL thm1-coverage-small-n"));
}

}  // TEST_SUITE
