#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "qsgauc/data.hpp"
#include "qsgauc/model.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/table.hpp"

namespace fs = std::filesystem;
using namespace qsgauc;

namespace {

struct Run {
    int status = 0;
    std::string out;
    std::string err;
};

Run qsgauc_run(std::vector<std::string> args) {
    args.insert(args.begin(), "qsgauc");
    std::ostringstream out, err;
    Run r;
    r.status = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, '\t');)
            cells.push_back(cell);
        if (!line.empty() && line.back() == '\t')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::string column(const std::vector<std::vector<std::string>>& rows, std::size_t row,
                   const std::string& name) {
    for (std::size_t c = 0; c < rows[0].size(); ++c)
        if (rows[0][c] == name)
            return rows[row][c];
    FAIL("no column " << name);
    return {};
}

class Scratch {
public:
    Scratch() : dir_(fs::temp_directory_path() / ("qsgauc_cli_" + std::to_string(counter_++))) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Scratch() { fs::remove_all(dir_); }
    fs::path operator/(const std::string& name) const { return dir_ / name; }
    std::string str(const std::string& name) const { return (dir_ / name).string(); }

private:
    static inline int counter_ = 0;
    fs::path dir_;
};

void make_synth(const Scratch& s, const std::string& seed = "3") {
    const Run r = qsgauc_run({"synth", "--n-p", "30", "--n-n", "30", "--n-u", "80", "--n-test", "60", "--seed",
                              seed, "--out", s.str("data")});
    REQUIRE(r.status == 0);
}

} // namespace

TEST_CASE("synth writes the three pools") {
    Scratch s;
    make_synth(s);
    CHECK(read_libsvm_file(s.str("data/labeled.libsvm")).rows.size() == 60u);
    CHECK(read_libsvm_file(s.str("data/unlabeled.libsvm")).rows.size() == 80u);
    CHECK(read_libsvm_file(s.str("data/test.libsvm")).rows.size() == 60u);
    CHECK(fs::exists(s / "data/resolved.cfg"));
}

TEST_CASE("train writes model, trace and metrics") {
    Scratch s;
    make_synth(s);
    const Run r = qsgauc_run({"train", "--data", s.str("data"), "--iterations", "50",
                              "--feature-count", "16", "--probes", "3", "--probe-cadence", "10",
                              "--out", s.str("run")});
    REQUIRE(r.status == 0);
    CHECK(r.out.rfind("train iterations=50 train_risk=", 0) == 0);
    CHECK(r.out.find(" labeled_auc=") != std::string::npos);
    CHECK(r.out.find(" test_auc=") != std::string::npos);
    const CoefficientHistory m = load_file(s.str("run/model.txt"));
    CHECK(m.size() == 50u);
    CHECK(m.feature_count() == 16u);
    const auto trace = read_tsv(s / "run/trace.tsv");
    CHECK(trace.size() == 51u);
    CHECK(trace[0].size() == 6u);
    CHECK(column(trace, 10, "probe_0") != "");
    CHECK(column(trace, 11, "probe_0") == "");
    const auto metrics = read_tsv(s / "run/metrics.tsv");
    CHECK(metrics[0] == std::vector<std::string>{"metric", "value"});
    CHECK(slurp(s / "run/resolved.cfg").find("iterations = 50") != std::string::npos);
}

TEST_CASE("train is byte-for-byte reproducible") {
    Scratch s;
    make_synth(s);
    const std::vector<std::string> base{"train", "--data", s.str("data"), "--iterations", "40",
                                        "--feature-count", "8", "--seed", "17"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", s.str("a")});
    b.insert(b.end(), {"--out", s.str("b")});
    REQUIRE(qsgauc_run(a).status == 0);
    REQUIRE(qsgauc_run(b).status == 0);
    CHECK(slurp(s / "a/model.txt") == slurp(s / "b/model.txt"));
    CHECK(slurp(s / "a/trace.tsv") == slurp(s / "b/trace.tsv"));
}

TEST_CASE("zero-iteration model predicts zeros") {
    Scratch s;
    make_synth(s);
    REQUIRE(qsgauc_run({"train", "--data", s.str("data"), "--iterations", "0", "--out",
                        s.str("run")})
                .status == 0);
    CHECK(load_file(s.str("run/model.txt")).empty());
    REQUIRE(qsgauc_run({"predict", "--model", s.str("run/model.txt"), "--input",
                        s.str("data/test.libsvm"), "--out", s.str("pred")})
                .status == 0);
    const auto scores = read_tsv(s / "pred/scores.tsv");
    CHECK(scores.size() == 61u);
    for (std::size_t r = 1; r < scores.size(); ++r)
        CHECK(scores[r][0] == "0");
}

TEST_CASE("predict matches the library and preserves row order") {
    Scratch s;
    make_synth(s);
    REQUIRE(qsgauc_run({"train", "--data", s.str("data"), "--iterations", "30",
                        "--feature-count", "8", "--out", s.str("run")})
                .status == 0);
    REQUIRE(qsgauc_run({"predict", "--model", s.str("run/model.txt"), "--input",
                        s.str("data/test.libsvm"), "--out", s.str("pred")})
                .status == 0);
    const CoefficientHistory m = load_file(s.str("run/model.txt"));
    const LabeledDataset test = read_libsvm_file(s.str("data/test.libsvm"));
    const std::vector<double> expected = predict_batch(m, densify(test, m.dim()).points);
    const auto scores = read_tsv(s / "pred/scores.tsv");
    REQUIRE(scores.size() == expected.size() + 1);
    CHECK(scores[0][0] == "score");
    for (std::size_t r = 0; r < expected.size(); ++r)
        CHECK(parse_real(scores[r + 1][0]) == expected[r]);

    LabeledDataset reversed = test;
    std::reverse(reversed.rows.begin(), reversed.rows.end());
    {
        std::ofstream o(s / "reversed.libsvm");
        write_libsvm(reversed, o);
    }
    REQUIRE(qsgauc_run({"predict", "--model", s.str("run/model.txt"), "--input",
                        s.str("reversed.libsvm"), "--out", s.str("pred2")})
                .status == 0);
    const auto flipped = read_tsv(s / "pred2/scores.tsv");
    for (std::size_t r = 0; r < expected.size(); ++r)
        CHECK(flipped[r + 1][0] == scores[expected.size() - r][0]);

    std::ofstream(s / "empty.libsvm").close();
    REQUIRE(qsgauc_run({"predict", "--model", s.str("run/model.txt"), "--input",
                        s.str("empty.libsvm"), "--out", s.str("pred3")})
                .status == 0);
    CHECK(slurp(s / "pred3/scores.tsv") == "score\n");

    std::ofstream(s / "wide.libsvm") << "+1 1:0.5 5:1\n";
    const Run bad = qsgauc_run({"predict", "--model", s.str("run/model.txt"), "--input",
                                s.str("wide.libsvm"), "--out", s.str("pred4")});
    CHECK(bad.status == 1);
    CHECK(bad.err.rfind("error code=INVALID_INPUT", 0) == 0);
    CHECK(bad.err.find("5") != std::string::npos);
    CHECK(bad.err.find("2") != std::string::npos);
    CHECK_FALSE(fs::exists(s / "pred4"));
}

TEST_CASE("configuration precedence and validation") {
    Scratch s;
    make_synth(s);
    std::ofstream(s / "run.cfg") << "# settings\niterations = 12\nfeature_count = 4\n"
                                    "data = "
                                 << s.str("data") << "\nout = " << s.str("from_file") << "\n";
    REQUIRE(qsgauc_run({"train", "--config", s.str("run.cfg")}).status == 0);
    CHECK(load_file(s.str("from_file/model.txt")).size() == 12u);

    REQUIRE(qsgauc_run({"train", "--config", s.str("run.cfg"), "--iterations", "5", "--out",
                        s.str("override")})
                .status == 0);
    CHECK(load_file(s.str("override/model.txt")).size() == 5u);
    const std::string resolved = slurp(s / "override/resolved.cfg");
    CHECK(resolved.find("iterations = 5") != std::string::npos);
    CHECK(resolved.find("feature_count = 4") != std::string::npos);

    std::ofstream(s / "unknown.cfg") << "iterations = 3\nbogus_key = 1\n";
    const Run unknown = qsgauc_run({"train", "--config", s.str("unknown.cfg")});
    CHECK(unknown.status == 1);
    CHECK(unknown.err.rfind("error code=PARSE_ERROR", 0) == 0);
    CHECK(unknown.err.find("line 2") != std::string::npos);
    CHECK(unknown.err.find("bogus_key") != std::string::npos);

    std::ofstream(s / "broken.cfg") << "iterations = 3\nthis line has no equals sign\n";
    const Run broken = qsgauc_run({"train", "--config", s.str("broken.cfg")});
    CHECK(broken.status == 1);
    CHECK(broken.err.rfind("error code=PARSE_ERROR", 0) == 0);

    const Run typed = qsgauc_run({"train", "--data", s.str("data"), "--iterations", "many",
                                  "--out", s.str("typed")});
    CHECK(typed.status == 1);
    CHECK_FALSE(fs::exists(s / "typed"));

    const Run regime = qsgauc_run({"train", "--data", s.str("data"), "--theta", "0.5",
                                   "--out", s.str("regime")});
    CHECK(regime.status == 1);
    CHECK(regime.err.rfind("error code=INVALID_PARAMETER", 0) == 0);
    CHECK_FALSE(fs::exists(s / "regime"));

    REQUIRE(qsgauc_run({"train", "--data", s.str("data"), "--theta", "0.5", "--iterations",
                        "3", "--unsafe-schedule", "true", "--out", s.str("unsafe")})
                .status == 0);

    const Run missing = qsgauc_run({"train", "--data", s.str("nowhere"), "--out", s.str("m")});
    CHECK(missing.status == 1);
    CHECK(missing.err.rfind("error code=IO_ERROR", 0) == 0);
}

TEST_CASE("usage errors and help") {
    CHECK(qsgauc_run({}).status == 2);
    CHECK(qsgauc_run({"nonsense"}).status == 2);
    const Run unknown_flag = qsgauc_run({"cv", "--gamma", "0.5"});
    CHECK(unknown_flag.status == 2);
    const Run flag = qsgauc_run({"train", "--no-such-flag", "1"});
    CHECK(flag.status == 2);
    CHECK(flag.err.rfind("error code=USAGE", 0) == 0);
    const Run help = qsgauc_run({"--help"});
    CHECK(help.status == 0);
    CHECK(help.out.find("train") != std::string::npos);
    const Run sub = qsgauc_run({"train", "--help"});
    CHECK(sub.status == 0);
    CHECK(sub.out.find("--feature-count") != std::string::npos);
}

TEST_CASE("eval on the unlabeled pool") {
    Scratch s;
    make_synth(s);
    const Run r = qsgauc_run({"train", "--data", s.str("data"), "--iterations", "20",
                              "--feature-count", "8", "--eval-on", "unlabeled", "--out",
                              s.str("run")});
    REQUIRE(r.status == 0);
    CHECK(r.out.find("unlabeled_auc=") != std::string::npos);
    CHECK(r.out.find("test_auc=") == std::string::npos);
}

TEST_CASE("cv on a one-cell grid") {
    Scratch s;
    make_synth(s);
    const std::vector<std::string> args{
        "cv", "--data", s.str("data"), "--lambda-values", "0.5", "--sigma-values", "1",
        "--gamma-values", "0.4", "--folds", "3", "--iterations", "30", "--feature-count", "8"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", s.str("a")});
    b.insert(b.end(), {"--out", s.str("b"), "--threads", "2"});
    const Run ra = qsgauc_run(a);
    REQUIRE(ra.status == 0);
    CHECK(ra.out.find("best_lambda=0.5") != std::string::npos);
    REQUIRE(qsgauc_run(b).status == 0);
    const auto ta = read_tsv(s / "a/cv_table.tsv");
    const auto tb = read_tsv(s / "b/cv_table.tsv");
    REQUIRE(ta.size() == 2u);
    CHECK(column(ta, 1, "mean_auc") == column(tb, 1, "mean_auc"));
    CHECK(column(ta, 0, "wall_seconds") == "wall_seconds");
    const std::string best = slurp(s / "a/best.cfg");
    CHECK(best.find("lambda = 0.5") != std::string::npos);
    CHECK(best.find("theta = 3") != std::string::npos);

    const auto grid = qsgauc_run({"cv", "--data", s.str("data"), "--lambda-values", "0.5,1",
                                  "--sigma-values", "1,2", "--gamma-values", "0,0.5,1",
                                  "--folds", "2", "--iterations", "10", "--feature-count", "4",
                                  "--time-budget", "1e-9", "--out", s.str("grid")});
    REQUIRE(grid.status == 0);
    CHECK(read_tsv(s / "grid/cv_table.tsv").size() == 13u);
    CHECK(grid.out.find("warning: grid took") != std::string::npos);
}

TEST_CASE("bench table with a refused exact solve") {
    Scratch s;
    const Run r = qsgauc_run({"bench", "--unlabeled-sizes", "40,120", "--n-p", "20", "--n-n", "20",
                              "--n-test", "100", "--iterations", "30", "--feature-count", "8",
                              "--exact-cap", "100", "--trials", "2", "--out", s.str("bench")});
    REQUIRE(r.status == 0);
    const auto rows = read_tsv(s / "bench/bench.tsv");
    REQUIRE(rows.size() == 9u);
    CHECK(rows[0] == std::vector<std::string>{"unlabeled_size", "trial", "method", "n_train",
                                              "wall_seconds", "test_auc", "status"});
    CHECK(rows[2][2] == "exact");
    CHECK(rows[2][6] == "ok");
    CHECK(rows[4][0] == "120");
    CHECK(rows[4][2] == "exact");
    CHECK(rows[4][3] == "160");
    CHECK(rows[4][6] == "refused_over_cap");
    CHECK(rows[4][5] == "");
    CHECK(rows[3][6] == "ok");
    const auto summary = read_tsv(s / "bench/bench_summary.tsv");
    REQUIRE(summary.size() == 5u);
    CHECK(summary[4][5] == "refused_over_cap");
    CHECK(summary[1][2] == "2");
}

TEST_CASE("train agrees with the bench baseline on the same synthetic split") {
    Scratch s;
    const std::uint64_t seed = derive_seed(0, 0);
    const std::vector<std::string> hp{"--iterations", "400", "--feature-count", "64",
                                      "--batch-p", "8", "--batch-n", "8", "--batch-u", "8"};
    auto bench = std::vector<std::string>{"bench", "--unlabeled-sizes", "300", "--n-p", "60", "--n-n", "60",
                                          "--n-test", "500", "--out", s.str("bench")};
    bench.insert(bench.end(), hp.begin(), hp.end());
    REQUIRE(qsgauc_run(bench).status == 0);
    REQUIRE(qsgauc_run({"synth", "--n-p", "60", "--n-n", "60", "--n-u", "300", "--n-test", "500", "--seed",
                        std::to_string(seed), "--out", s.str("data")})
                .status == 0);
    auto train = std::vector<std::string>{"train", "--data", s.str("data"), "--seed",
                                          std::to_string(seed), "--out", s.str("run")};
    train.insert(train.end(), hp.begin(), hp.end());
    REQUIRE(qsgauc_run(train).status == 0);

    const auto rows = read_tsv(s / "bench/bench.tsv");
    const auto metrics = read_tsv(s / "run/metrics.tsv");
    std::string train_auc;
    for (const auto& row : metrics)
        if (row[0] == "test_auc")
            train_auc = row[1];
    CHECK(train_auc == rows[1][5]);
    CHECK(parse_real(train_auc) >= parse_real(rows[2][5]) - 0.02);
}

TEST_CASE("diag") {
    Scratch s;
    const Run refused = qsgauc_run({"diag", "--theta", "0.5", "--out", s.str("refused")});
    CHECK(refused.status == 1);
    CHECK(refused.err.rfind("error code=INVALID_PARAMETER", 0) == 0);
    CHECK(refused.err.find("regime") != std::string::npos);
    CHECK_FALSE(fs::exists(s / "refused"));

    const Run ok = qsgauc_run({"diag", "--t", "10000", "--convergence", "false", "--out",
                               s.str("bounds")});
    REQUIRE(ok.status == 0);
    CHECK(ok.out.rfind("bounds PASS theta=1.5 lambda=1 t=10000", 0) == 0);
    CHECK(read_tsv(s / "bounds/coefficients.tsv").size() == 10001u);
    CHECK_FALSE(fs::exists(s / "bounds/convergence.tsv"));

    const Run conv = qsgauc_run({"diag", "--t", "300", "--iterations", "300", "--repeats", "2",
                                 "--probes", "5", "--n-p", "10", "--n-n", "10", "--n-u", "40",
                                 "--feature-count", "16", "--t-min", "10", "--out",
                                 s.str("conv")});
    REQUIRE(conv.status == 0);
    CHECK(conv.out.find("convergence slope=") != std::string::npos);
    const auto table = read_tsv(s / "conv/convergence.tsv");
    CHECK(table[0] == std::vector<std::string>{"iteration", "mse_vs_fstar"});
    CHECK(table.back()[0] == "# intercept");
}

TEST_CASE("split") {
    Scratch s;
    std::ofstream raw(s / "raw.libsvm");
    RandomStream stream(4);
    for (int i = 0; i < 120; ++i)
        raw << (i % 3 ? "-1" : "+1") << " 1:" << 10.0 * stream.uniform01() << " 2:"
            << -5.0 + stream.uniform01() << '\n';
    raw.close();
    const Run r = qsgauc_run({"split", "--input", s.str("raw.libsvm"), "--n-labeled", "30",
                              "--seed", "2", "--out", s.str("split")});
    REQUIRE(r.status == 0);
    CHECK(r.out == "split labeled=30 unlabeled=66 test=24\n");
    for (const char* f : {"labeled.libsvm", "unlabeled.libsvm", "test.libsvm"})
        for (const auto& row : read_libsvm_file(s.str(std::string("split/") + f)).rows)
            for (const auto& [idx, v] : row.features) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
    CHECK(fs::exists(s / "split/manifest.txt"));
    CHECK(fs::exists(s / "split/minmax.tsv"));

    const Run again = qsgauc_run({"split", "--input", s.str("raw.libsvm"), "--n-labeled", "30",
                                  "--seed", "2", "--out", s.str("split2")});
    REQUIRE(again.status == 0);
    CHECK(slurp(s / "split/manifest.txt") == slurp(s / "split2/manifest.txt"));

    const Run bad = qsgauc_run({"split", "--input", s.str("raw.libsvm"), "--n-labeled", "500",
                                "--out", s.str("split3")});
    CHECK(bad.status == 1);
    CHECK_FALSE(fs::exists(s / "split3"));
}
