#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "cli/config.hpp"
#include "qsgauc/data.hpp"
#include "qsgauc/error.hpp"
#include "qsgauc/eval.hpp"
#include "qsgauc/loss.hpp"
#include "qsgauc/model.hpp"
#include "qsgauc/oracle.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/table.hpp"
#include "qsgauc/trainer.hpp"

namespace qsgauc::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- key tables

std::vector<KeySpec> hyper_keys(const std::string& batch, const std::string& iterations) {
    return {
        {"gamma", ValueType::Real, "0.5", "weight of the PN risk, in [0, 1]"},
        {"lambda", ValueType::Real, "1", "regularization strength"},
        {"theta", ValueType::Real, "1.5", "step size eta_t = theta / t"},
        {"sigma", ValueType::Real, "1", "kernel width, k = exp(-sigma |x - x'|^2)"},
        {"feature_count", ValueType::Count, "256", "random features per iteration (D)"},
        {"iterations", ValueType::Count, iterations, "training iterations (T)"},
        {"batch_p", ValueType::Count, batch, "positives per mini-batch"},
        {"batch_n", ValueType::Count, batch, "negatives per mini-batch"},
        {"batch_u", ValueType::Count, batch, "unlabeled points per mini-batch"},
        {"seed", ValueType::Seed, "0", "master seed"},
        {"unsafe_schedule", ValueType::Bool, "false", "allow theta * lambda outside (1, 2) and the integers"},
        {"strategy", ValueType::Text, "cache", "f_t evaluation: cache or replay"},
    };
}

std::vector<KeySpec> data_keys() {
    return {
        {"data", ValueType::Text, "", "directory holding labeled/unlabeled/test .libsvm files"},
        {"labeled", ValueType::Text, "", "labeled LIBSVM file (default <data>/labeled.libsvm)"},
        {"unlabeled", ValueType::Text, "", "unlabeled LIBSVM file (default <data>/unlabeled.libsvm)"},
        {"test", ValueType::Text, "", "test LIBSVM file (default <data>/test.libsvm if present)"},
        {"dim", ValueType::Count, "0", "input dimension; 0 takes the largest index seen"},
    };
}

std::vector<KeySpec> synth_keys(const std::string& n_p, const std::string& n_u,
                                const std::string& n_test) {
    return {
        {"n_p", ValueType::Count, n_p, "labeled positives"},
        {"n_n", ValueType::Count, n_p, "labeled negatives"},
        {"n_u", ValueType::Count, n_u, "unlabeled points"},
        {"n_test", ValueType::Count, n_test, "test points"},
        {"dim", ValueType::Count, "2", "dimension"},
        {"separation", ValueType::Real, "2", "distance between the class means"},
        {"prior", ValueType::Real, "0.5", "positive fraction of unlabeled and test points"},
    };
}

KeySpec out_key() { return {"out", ValueType::Text, "out", "output directory"}; }

template <class... Lists>
std::vector<KeySpec> concat(Lists... lists) {
    std::vector<KeySpec> all;
    (all.insert(all.end(), lists.begin(), lists.end()), ...);
    return all;
}

std::vector<KeySpec> without(std::vector<KeySpec> keys, const std::vector<std::string>& drop) {
    keys.erase(std::remove_if(keys.begin(), keys.end(),
                              [&](const KeySpec& k) {
                                  return std::find(drop.begin(), drop.end(), k.name) != drop.end();
                              }),
               keys.end());
    return keys;
}

std::string join_reals(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += (i ? "," : "") + format_real(values[i]);
    return s;
}

// ---------------------------------------------------------------- readers

Hyperparams hyperparams(const Config& c) {
    Hyperparams hp;
    // cv searches over gamma, lambda and sigma, so its commands omit those keys.
    if (c.has("gamma"))
        hp.gamma = c.real("gamma");
    if (c.has("lambda"))
        hp.lambda = c.real("lambda");
    if (c.has("theta"))
        hp.theta = c.real("theta");
    if (c.has("sigma"))
        hp.sigma = c.real("sigma");
    hp.feature_count = c.count("feature_count");
    hp.iterations = c.count("iterations");
    hp.batch_p = c.count("batch_p");
    hp.batch_n = c.count("batch_n");
    hp.batch_u = c.count("batch_u");
    hp.master_seed = c.seed("seed");
    hp.unsafe_schedule = c.has("unsafe_schedule") && c.flag("unsafe_schedule");
    return hp;
}

EvalStrategy strategy(const Config& c) {
    const std::string& s = c.text("strategy");
    if (s == "cache")
        return EvalStrategy::PointCache;
    if (s == "replay")
        return EvalStrategy::Replay;
    throw InvalidParameter("key 'strategy': expected cache or replay, got '" + s + "'");
}

std::string one_of(const Config& c, const std::string& key, std::vector<std::string> allowed) {
    const std::string& v = c.text(key);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed)
            list += (list.empty() ? "" : ", ") + a;
        throw InvalidParameter("key '" + key + "': expected one of " + list + ", got '" + v + "'");
    }
    return v;
}

std::size_t positive(const Config& c, const std::string& key) {
    const std::size_t v = c.count(key);
    if (v == 0)
        throw InvalidParameter("key '" + key + "' must be positive");
    return v;
}

struct Inputs {
    SemiSupervisedDataset train;
    LabeledPoints test;
    std::vector<int> unlabeled_labels;
    bool has_test = false;
};

std::string resolve_path(const Config& c, const std::string& key, const std::string& file) {
    if (!c.text(key).empty())
        return c.text(key);
    if (c.text("data").empty())
        return {};
    return (fs::path(c.text("data")) / file).string();
}

Inputs load_inputs(const Config& c, bool need_unlabeled) {
    const std::string labeled_path = resolve_path(c, "labeled", "labeled.libsvm");
    if (labeled_path.empty())
        throw InvalidParameter("no training data: set 'data' or 'labeled'");
    const LabeledDataset labeled = read_libsvm_file(labeled_path);

    const std::string unlabeled_path = resolve_path(c, "unlabeled", "unlabeled.libsvm");
    LabeledDataset unlabeled;
    const bool unlabeled_explicit = !c.text("unlabeled").empty();
    if (!unlabeled_path.empty() && (unlabeled_explicit || fs::exists(unlabeled_path)))
        unlabeled = read_libsvm_file(unlabeled_path);
    else if (need_unlabeled)
        throw InvalidParameter("gamma < 1 needs unlabeled data: set 'unlabeled' or provide " +
                               (unlabeled_path.empty() ? std::string("<data>/unlabeled.libsvm")
                                                       : unlabeled_path));

    const std::string test_path = resolve_path(c, "test", "test.libsvm");
    LabeledDataset test;
    const bool has_test = !test_path.empty() && (!c.text("test").empty() || fs::exists(test_path));
    if (has_test)
        test = read_libsvm_file(test_path);

    std::size_t dim = c.count("dim");
    const std::size_t seen = std::max({labeled.dim, unlabeled.dim, test.dim});
    if (dim == 0)
        dim = std::max<std::size_t>(seen, 1);
    else if (seen > dim)
        throw InvalidInput("inputs use feature index " + std::to_string(seen) +
                           " but dim is " + std::to_string(dim));

    Inputs in;
    in.train.dim = dim;
    in.train.provenance = labeled_path;
    const LabeledPoints lab = densify(labeled, dim);
    for (std::size_t i = 0; i < lab.size(); ++i)
        (lab.labels[i] > 0 ? in.train.positives : in.train.negatives).push_back(lab.points[i]);
    const LabeledPoints unl = densify(unlabeled, dim);
    in.train.unlabeled = unl.points;
    in.unlabeled_labels = unl.labels;
    if (has_test) {
        in.test = densify(test, dim);
        in.has_test = true;
    }
    in.train.validate();
    if (in.train.positives.empty())
        throw EmptyPool("positive");
    if (in.train.negatives.empty())
        throw EmptyPool("negative");
    return in;
}

// ---------------------------------------------------------------- writers

class Outputs {
public:
    explicit Outputs(const Config& c) : dir_(c.text("out")), config_(c) {
        if (dir_.empty())
            throw InvalidParameter("key 'out' must name a directory");
        if (fs::exists(dir_) && !fs::is_directory(dir_))
            throw IoError("output path " + dir_.string() + " exists and is not a directory");
    }

    std::string path(const std::string& file) const { return (dir_ / file).string(); }

    void write(const std::string& file, const std::function<void(std::ostream&)>& writer) const {
        atomic_write_file(path(file), writer);
    }

    void resolved() const {
        write("resolved.cfg", [&](std::ostream& o) { config_.write(o); });
    }

private:
    fs::path dir_;
    const Config& config_;
};

void write_metrics(const Outputs& out, const std::string& file,
                   const std::vector<std::pair<std::string, std::string>>& rows) {
    out.write(file, [&](std::ostream& o) {
        o << "metric\tvalue\n";
        for (const auto& [k, v] : rows)
            o << k << '\t' << v << '\n';
    });
}

double labeled_auc(const CoefficientHistory& model, const SemiSupervisedDataset& ds) {
    PointSet points = ds.positives;
    points.insert(points.end(), ds.negatives.begin(), ds.negatives.end());
    std::vector<int> labels(ds.positives.size(), 1);
    labels.resize(points.size(), -1);
    return auc(predict_batch(model, points), labels);
}

// ---------------------------------------------------------------- commands

int cmd_train(const Config& c, std::ostream& out) {
    const Hyperparams hp = hyperparams(c);
    hp.validate();
    TrainOptions options;
    options.strategy = strategy(c);
    options.probe_cadence = c.count("probe_cadence");
    const std::size_t n_probes = c.count("probes");
    const std::string eval_on = one_of(c, "eval_on", {"test", "unlabeled", "none"});
    const Outputs outputs(c);
    const Inputs in = load_inputs(c, hp.gamma < 1.0);
    if (n_probes > 0) {
        if (!in.has_test || in.test.size() < n_probes)
            throw InvalidParameter("probes = " + std::to_string(n_probes) +
                                   " needs at least that many test points");
        options.probes.assign(in.test.points.begin(),
                              in.test.points.begin() + static_cast<std::ptrdiff_t>(n_probes));
        if (options.probe_cadence == 0)
            throw InvalidParameter("probes > 0 needs probe_cadence > 0");
    }
    if (eval_on == "unlabeled" && in.train.unlabeled.empty())
        throw InvalidParameter("eval_on = unlabeled but the unlabeled pool is empty");

    const auto start = Clock::now();
    const TrainResult result = train(in.train, hp, options);
    const double wall = seconds_since(start);

    const SquarePairLoss loss;
    const auto sp = predict_batch(result.model, in.train.positives);
    const auto sn = predict_batch(result.model, in.train.negatives);
    const auto su = predict_batch(result.model, in.train.unlabeled);
    const RiskReport risk = empirical_risks(sp, sn, su, hp.gamma, loss);
    const double lab_auc = labeled_auc(result.model, in.train);

    std::vector<std::pair<std::string, std::string>> metrics{
        {"iterations", std::to_string(hp.iterations)},
        {"train_r_pn", format_real(risk.r_pn)},
        {"train_r_pu", format_real(risk.r_pu)},
        {"train_r_nu", format_real(risk.r_nu)},
        {"train_r_pnu", format_real(risk.r_pnu)},
        {"labeled_auc", format_real(lab_auc)},
    };
    std::string eval_text;
    if (eval_on == "test" && in.has_test) {
        const double a = auc(predict_batch(result.model, in.test.points), in.test.labels);
        metrics.emplace_back("test_auc", format_real(a));
        eval_text = " test_auc=" + format_real(a);
    } else if (eval_on == "unlabeled") {
        const double a = auc(su, in.unlabeled_labels);
        metrics.emplace_back("unlabeled_auc", format_real(a));
        eval_text = " unlabeled_auc=" + format_real(a);
    }

    outputs.write("model.txt", [&](std::ostream& o) { save(result.model, o); });
    outputs.write("trace.tsv", [&](std::ostream& o) { result.trace.write(o); });
    write_metrics(outputs, "metrics.tsv", metrics);
    outputs.resolved();
    out << "train iterations=" << hp.iterations << " train_risk=" << format_real(risk.r_pnu)
        << " labeled_auc=" << format_real(lab_auc) << eval_text
        << " wall_seconds=" << format_real(wall) << '\n';
    return 0;
}

int cmd_predict(const Config& c, std::ostream& out) {
    if (c.text("model").empty())
        throw InvalidParameter("key 'model' is required");
    if (c.text("input").empty())
        throw InvalidParameter("key 'input' is required");
    const Outputs outputs(c);
    const CoefficientHistory model = load_file(c.text("model"));
    const LabeledDataset input = read_libsvm_file(c.text("input"));
    if (input.dim > model.dim())
        throw InvalidInput("input dimension " + std::to_string(input.dim) +
                           " does not match model dimension " + std::to_string(model.dim()));
    const LabeledPoints points = densify(input, model.dim());
    const std::vector<double> scores = predict_batch(model, points.points);
    outputs.write("scores.tsv", [&](std::ostream& o) {
        o << "score\n";
        for (double s : scores)
            o << format_real(s) << '\n';
    });
    outputs.resolved();
    out << "predict rows=" << scores.size() << '\n';
    return 0;
}

int cmd_cv(const Config& c, std::ostream& out) {
    CvGrid grid;
    grid.lambda_values = c.reals("lambda_values");
    grid.sigma_values = c.reals("sigma_values");
    grid.gamma_values = c.reals("gamma_values");
    grid.folds = c.count("folds");
    grid.validate();
    Hyperparams base = hyperparams(c);
    base.theta = c.real("schedule");
    base.lambda = 1.0;
    base.validate();
    const double budget = c.real("time_budget");
    const std::size_t threads = positive(c, "threads");
    TrainOptions options;
    options.strategy = strategy(c);
    const Outputs outputs(c);
    const Inputs in = load_inputs(c, std::any_of(grid.gamma_values.begin(),
                                                 grid.gamma_values.end(),
                                                 [](double g) { return g < 1.0; }));

    const auto start = Clock::now();
    const CvResult result = cross_validate(in.train, grid, base, c.seed("seed"), options, threads);
    const double wall = seconds_since(start);

    outputs.write("cv_table.tsv", [&](std::ostream& o) { result.write(o); });
    outputs.write("best.cfg", [&](std::ostream& o) {
        o << "gamma = " << format_real(result.best.gamma) << '\n'
          << "lambda = " << format_real(result.best.lambda) << '\n'
          << "sigma = " << format_real(result.best.sigma) << '\n'
          << "theta = " << format_real(result.best.theta) << '\n';
    });
    outputs.resolved();

    const auto best = std::find_if(result.cells.begin(), result.cells.end(), [&](const CvCell& x) {
        return x.lambda == result.best.lambda && x.sigma == result.best.sigma &&
               x.gamma == result.best.gamma;
    });
    out << "cv cells=" << result.cells.size() << " best_lambda=" << format_real(result.best.lambda)
        << " best_sigma=" << format_real(result.best.sigma)
        << " best_gamma=" << format_real(result.best.gamma)
        << " best_auc=" << format_real(best->mean_auc) << " wall_seconds=" << format_real(wall)
        << '\n';
    if (budget > 0.0 && wall > budget)
        out << "warning: grid took " << format_real(wall) << " s, over the budget of "
            << format_real(budget) << " s\n";
    return 0;
}

struct BenchRow {
    std::size_t size = 0;
    std::size_t trial = 0;
    std::string method;
    std::size_t n_train = 0;
    double wall = std::nan("");
    double test_auc = std::nan("");
    std::string status;
};

int cmd_bench(const Config& c, std::ostream& out) {
    const std::string source = one_of(c, "source", {"synth", "libsvm"});
    const Hyperparams hp = hyperparams(c);
    hp.validate();
    TrainOptions options;
    options.strategy = strategy(c);
    const std::vector<std::size_t> sizes = c.counts("unlabeled_sizes");
    if (sizes.empty())
        throw InvalidParameter("key 'unlabeled_sizes' must list at least one size");
    const std::size_t trials = positive(c, "trials");
    const std::size_t cap = c.count("exact_cap");

    SynthOptions so;
    so.n_p = positive(c, "n_p");
    so.n_n = positive(c, "n_n");
    so.n_test = positive(c, "n_test");
    so.dim = positive(c, "dim");
    so.separation = c.real("separation");
    so.prior = c.real("prior");
    if (!(so.prior > 0.0 && so.prior < 1.0))
        throw InvalidParameter("key 'prior' must lie in (0, 1)");
    SplitOptions split;
    split.n_labeled = positive(c, "n_labeled");
    split.test_fraction = c.real("test_fraction");

    const Outputs outputs(c);
    LabeledDataset table;
    if (source == "libsvm") {
        if (c.text("input").empty())
            throw InvalidParameter("source = libsvm needs key 'input'");
        table = read_libsvm_file(c.text("input"));
        if (c.flag("normalize"))
            table = normalize_unit_interval(table).first;
    }

    std::vector<BenchRow> rows;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::uint64_t trial_seed = derive_seed(c.seed("seed"), trial);
        SplitResult base_split;
        if (source == "libsvm") {
            split.seed = trial_seed;
            base_split = split_semi(table, split);
        }
        for (std::size_t size : sizes) {
            SemiSupervisedDataset train_set;
            LabeledPoints test_set;
            if (source == "synth") {
                SynthOptions o = so;
                o.n_u = size;
                o.seed = trial_seed;
                SynthResult s = synth_gaussian(o);
                train_set = std::move(s.train);
                test_set = std::move(s.test);
            } else {
                train_set = base_split.train;
                test_set = base_split.test;
                if (size > train_set.unlabeled.size()) {
                    for (const char* m : {"qsg", "exact"})
                        rows.push_back({size, trial, m, 0, std::nan(""), std::nan(""),
                                        "unavailable"});
                    continue;
                }
                if (size > 0)
                    train_set.unlabeled.resize(size);
            }
            const std::size_t reported = source == "synth" || size > 0
                                             ? size
                                             : train_set.unlabeled.size();
            Hyperparams run = hp;
            run.master_seed = trial_seed;

            BenchRow qsg{reported, trial, "qsg", train_set.total(), 0, 0, "ok"};
            auto t0 = Clock::now();
            const TrainResult trained = train(train_set, run, options);
            qsg.wall = seconds_since(t0);
            qsg.test_auc = auc(predict_batch(trained.model, test_set.points), test_set.labels);
            rows.push_back(qsg);

            BenchRow exact{reported, trial, "exact", train_set.total(), 0, 0, "ok"};
            try {
                t0 = Clock::now();
                const KernelModel fstar =
                    solve_kernel_closed_form(train_set, hp.gamma, hp.lambda, hp.sigma, cap);
                exact.wall = seconds_since(t0);
                exact.test_auc = auc(fstar.predict(test_set.points), test_set.labels);
            } catch (const CapacityExceeded&) {
                exact.wall = std::nan("");
                exact.test_auc = std::nan("");
                exact.status = "refused_over_cap";
            }
            rows.push_back(exact);
        }
    }

    auto cell = [](double v) { return std::isnan(v) ? std::string() : format_real(v); };
    outputs.write("bench.tsv", [&](std::ostream& o) {
        o << "unlabeled_size\ttrial\tmethod\tn_train\twall_seconds\ttest_auc\tstatus\n";
        for (const auto& r : rows)
            o << r.size << '\t' << r.trial << '\t' << r.method << '\t' << r.n_train << '\t'
              << cell(r.wall) << '\t' << cell(r.test_auc) << '\t' << r.status << '\n';
    });

    // Means over the trials that ran, keyed by (size position, method).
    Table summary({"unlabeled_size", "method", "trials_ok", "mean_wall_seconds", "mean_test_auc",
                   "status"});
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        for (const char* method : {"qsg", "exact"}) {
            double wall = 0.0, area = 0.0;
            std::size_t ok = 0, reported = 0;
            std::string status = "ok";
            for (std::size_t trial = 0; trial < trials; ++trial) {
                const BenchRow& r = rows[(trial * sizes.size() + si) * 2 + (method[0] == 'q' ? 0 : 1)];
                reported = r.size;
                if (r.status != "ok") {
                    status = r.status;
                    continue;
                }
                wall += r.wall;
                area += r.test_auc;
                ++ok;
            }
            summary.add_row({std::to_string(reported), method, std::to_string(ok),
                             ok ? format_real(wall / double(ok)) : "",
                             ok ? format_real(area / double(ok)) : "", ok ? "ok" : status});
        }
    }
    outputs.write("bench_summary.tsv", [&](std::ostream& o) { summary.write(o); });
    outputs.resolved();
    summary.write(out);
    return 0;
}

int cmd_diag(const Config& c, std::ostream& out) {
    const double theta = c.real("theta");
    const double lambda = c.real("lambda");
    const std::size_t t = positive(c, "t");
    if (!(theta > 0.0) || !(lambda > 0.0))
        throw InvalidParameter("theta and lambda must be positive");
    if (!schedule_in_regime(theta * lambda))
        throw InvalidParameter("theta * lambda = " + format_real(theta * lambda) +
                               " is outside the admissible step-size regime: it must lie in "
                               "(1, 2) or be a positive integer");
    const bool convergence = c.flag("convergence");
    const Hyperparams hp = hyperparams(c);
    const std::size_t repeats = positive(c, "repeats");
    const std::size_t n_probes = positive(c, "probes");
    ConvergenceOptions copts;
    copts.t_min = positive(c, "t_min");
    copts.points_per_decade = positive(c, "points_per_decade");
    copts.threads = positive(c, "threads");
    SynthOptions so;
    so.n_p = positive(c, "n_p");
    so.n_n = positive(c, "n_n");
    so.n_u = c.count("n_u");
    so.n_test = n_probes;
    so.dim = positive(c, "dim");
    so.separation = c.real("separation");
    so.prior = c.real("prior");
    so.seed = c.seed("data_seed");
    if (!(so.prior > 0.0 && so.prior < 1.0))
        throw InvalidParameter("key 'prior' must lie in (0, 1)");
    if (convergence)
        hp.validate();
    const Outputs outputs(c);

    const ScheduleReport report = coefficient_schedule_check(theta, lambda, t);
    std::ostringstream conv_text;
    ConvergenceReport conv;
    if (convergence) {
        const SynthResult data = synth_gaussian(so);
        const KernelModel fstar = solve_kernel_closed_form(data.train, hp.gamma, hp.lambda,
                                                           hp.sigma, c.count("exact_cap"));
        conv = convergence_study(data.train, hp, fstar, data.test.points, repeats, copts);
    }

    auto yes = [](bool b) { return std::string(b ? "true" : "false"); };
    write_metrics(outputs, "bounds.tsv",
                  {{"theta", format_real(report.theta)},
                   {"lambda", format_real(report.lambda)},
                   {"t", std::to_string(report.t)},
                   {"max_abs", format_real(report.max_abs)},
                   {"max_bound", format_real(report.max_bound)},
                   {"max_ok", yes(report.max_ok)},
                   {"sum_sq", format_real(report.sum_sq)},
                   {"sum_bound", format_real(report.sum_bound)},
                   {"sum_ok", yes(report.sum_ok)},
                   {"integer_regime", yes(report.integer_regime)},
                   {"zero_prefix", std::to_string(report.zero_prefix)},
                   {"zero_prefix_ok", yes(report.zero_prefix_ok)},
                   {"passed", yes(report.passed())}});
    outputs.write("coefficients.tsv", [&](std::ostream& o) {
        o << "i\ta_t_i\n";
        for (std::size_t i = 0; i < report.coefficients.size(); ++i)
            o << i + 1 << '\t' << format_real(report.coefficients[i]) << '\n';
    });
    if (convergence)
        outputs.write("convergence.tsv", [&](std::ostream& o) { conv.write(o); });
    outputs.resolved();

    out << "bounds " << (report.passed() ? "PASS" : "FAIL") << " theta=" << format_real(theta)
        << " lambda=" << format_real(lambda) << " t=" << t
        << " max_abs=" << format_real(report.max_abs)
        << " bound=" << format_real(report.max_bound)
        << " sum_sq=" << format_real(report.sum_sq)
        << " bound=" << format_real(report.sum_bound) << '\n';
    if (convergence)
        out << "convergence slope="
            << (conv.slope_defined ? format_real(conv.fitted_slope) : std::string("nan"))
            << " points=" << conv.iterations.size() << " repeats=" << repeats << '\n';
    return report.passed() ? 0 : 1;
}

int cmd_synth(const Config& c, std::ostream& out) {
    SynthOptions so;
    so.n_p = positive(c, "n_p");
    so.n_n = positive(c, "n_n");
    so.n_u = c.count("n_u");
    so.n_test = c.count("n_test");
    so.dim = positive(c, "dim");
    so.separation = c.real("separation");
    so.prior = c.real("prior");
    so.seed = c.seed("seed");
    if (!(so.prior > 0.0 && so.prior < 1.0))
        throw InvalidParameter("key 'prior' must lie in (0, 1)");
    const Outputs outputs(c);
    const SynthResult s = synth_gaussian(so);

    const LabeledDataset labeled = labeled_pools(s.train);
    outputs.write("labeled.libsvm", [&](std::ostream& o) { write_libsvm(labeled, o); });
    outputs.write("unlabeled.libsvm", [&](std::ostream& o) {
        write_libsvm(to_labeled(s.train.unlabeled, s.unlabeled_labels), o);
    });
    outputs.write("test.libsvm",
                  [&](std::ostream& o) { write_libsvm(to_labeled(s.test.points, s.test.labels), o); });
    outputs.resolved();
    out << "synth positives=" << s.train.positives.size()
        << " negatives=" << s.train.negatives.size() << " unlabeled=" << s.train.unlabeled.size()
        << " test=" << s.test.size() << '\n';
    return 0;
}

int cmd_split(const Config& c, std::ostream& out) {
    if (c.text("input").empty())
        throw InvalidParameter("key 'input' is required");
    SplitOptions so;
    so.n_labeled = positive(c, "n_labeled");
    so.test_fraction = c.real("test_fraction");
    so.seed = c.seed("seed");
    so.max_retries = positive(c, "max_retries");
    if (!(so.test_fraction >= 0.0 && so.test_fraction < 1.0))
        throw InvalidParameter("key 'test_fraction' must lie in [0, 1)");
    const bool normalize = c.flag("normalize");
    const Outputs outputs(c);

    LabeledDataset table = read_libsvm_file(c.text("input"));
    MinMaxTable minmax;
    if (normalize)
        std::tie(table, minmax) = normalize_unit_interval(table);
    const SplitResult s = split_semi(table, so);

    outputs.write("labeled.libsvm",
                  [&](std::ostream& o) { write_libsvm(labeled_pools(s.train), o); });
    outputs.write("unlabeled.libsvm", [&](std::ostream& o) {
        write_libsvm(to_labeled(s.train.unlabeled, s.unlabeled_labels), o);
    });
    outputs.write("test.libsvm",
                  [&](std::ostream& o) { write_libsvm(to_labeled(s.test.points, s.test.labels), o); });
    outputs.write("manifest.txt", [&](std::ostream& o) { s.manifest.write(o); });
    if (normalize)
        outputs.write("minmax.tsv", [&](std::ostream& o) { minmax.write(o); });
    outputs.resolved();
    out << "split labeled=" << s.manifest.labeled.size()
        << " unlabeled=" << s.manifest.unlabeled.size() << " test=" << s.manifest.test.size()
        << '\n';
    return 0;
}

// ---------------------------------------------------------------- dispatch

struct Command {
    std::string name;
    std::string description;
    std::vector<KeySpec> keys;
    int (*run)(const Config&, std::ostream&);
};

std::vector<Command> commands() {
    const CvGrid grid = CvGrid::defaults();
    return {
        {"train", "Train a model on a semi-supervised data directory",
         concat(data_keys(), hyper_keys("16", "1000"),
                std::vector<KeySpec>{
                    {"eval_on", ValueType::Text, "test", "AUC report: test, unlabeled (hidden labels) or none"},
                    {"probes", ValueType::Count, "0", "record f at the first N test points in the trace"},
                    {"probe_cadence", ValueType::Count, "0", "probe every N iterations"},
                    out_key()}),
         cmd_train},
        {"predict", "Score LIBSVM rows with a saved model",
         {{"model", ValueType::Text, "", "model file written by train"},
          {"input", ValueType::Text, "", "LIBSVM rows to score"},
          out_key()},
         cmd_predict},
        {"cv", "Grid search over lambda, sigma and gamma by k-fold cross-validation",
         concat(data_keys(),
                without(hyper_keys("16", "1000"), {"gamma", "lambda", "theta", "sigma"}),
                std::vector<KeySpec>{
                    {"lambda_values", ValueType::RealList, join_reals(grid.lambda_values), "lambda grid"},
                    {"sigma_values", ValueType::RealList, join_reals(grid.sigma_values), "sigma grid"},
                    {"gamma_values", ValueType::RealList, join_reals(grid.gamma_values), "gamma grid"},
                    {"folds", ValueType::Count, "5", "number of folds"},
                    {"schedule", ValueType::Real, "1.5", "theta * lambda held fixed across the grid"},
                    {"threads", ValueType::Count, "1", "worker threads over grid cells"},
                    {"time_budget", ValueType::Real, "0", "warn when the grid takes longer (seconds, 0 = off)"},
                    out_key()}),
         cmd_cv},
        {"bench", "Wall time and test AUC of QSG training against the exact kernel solver",
         concat(hyper_keys("16", "500"),
                std::vector<KeySpec>{
                    {"source", ValueType::Text, "synth", "synth or libsvm"},
                    {"input", ValueType::Text, "", "LIBSVM file when source = libsvm"},
                    {"normalize", ValueType::Bool, "true", "min-max scale the LIBSVM input to [0, 1]"},
                    {"n_labeled", ValueType::Count, "200", "labeled rows per LIBSVM split"},
                    {"test_fraction", ValueType::Real, "0.2", "held-out fraction per LIBSVM split"},
                    {"unlabeled_sizes", ValueType::CountList, "500,1000,2000", "unlabeled pool sizes (0 = whole pool)"},
                    {"trials", ValueType::Count, "1", "independent repetitions"},
                    {"exact_cap", ValueType::Count, std::to_string(kDefaultExactCap), "largest training set the exact solver accepts"}},
                without(synth_keys("100", "0", "1000"), {"n_u"}),
                std::vector<KeySpec>{out_key()}),
         cmd_bench},
        {"diag", "Coefficient-bound check and empirical convergence rate",
         concat(without(hyper_keys("4", "10000"), {"unsafe_schedule"}),
                without(synth_keys("50", "500", "0"), {"n_test"}),
                std::vector<KeySpec>{
                    {"t", ValueType::Count, "10000", "horizon for the coefficient bounds"},
                    {"convergence", ValueType::Bool, "true", "run the convergence study"},
                    {"repeats", ValueType::Count, "10", "training seeds in the convergence study"},
                    {"probes", ValueType::Count, "20", "probe points drawn from the data distribution"},
                    {"data_seed", ValueType::Seed, "7", "seed of the synthetic data set"},
                    {"t_min", ValueType::Count, "100", "first probed iteration"},
                    {"points_per_decade", ValueType::Count, "5", "probed iterations per factor of ten"},
                    {"threads", ValueType::Count, "1", "worker threads over repeats"},
                    {"exact_cap", ValueType::Count, std::to_string(kDefaultExactCap), "largest training set the exact solver accepts"},
                    out_key()}),
         cmd_diag},
        {"synth", "Write a two-Gaussian semi-supervised data set",
         concat(synth_keys("100", "1000", "1000"),
                std::vector<KeySpec>{{"seed", ValueType::Seed, "0", "data seed"}, out_key()}),
         cmd_synth},
        {"split", "Normalize a LIBSVM file and split it into labeled, unlabeled and test pools",
         {{"input", ValueType::Text, "", "LIBSVM file"},
          {"n_labeled", ValueType::Count, "200", "labeled rows"},
          {"test_fraction", ValueType::Real, "0.2", "held-out fraction, stratified by class"},
          {"seed", ValueType::Seed, "0", "split seed"},
          {"max_retries", ValueType::Count, "16", "redraws allowed when the labeled rows miss a class"},
          {"normalize", ValueType::Bool, "true", "min-max scale every feature to [0, 1] first"},
          out_key()},
         cmd_split},
    };
}

std::string flag_name(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Semi-supervised AUC maximization with quadruply stochastic gradients"};
    app.name(args.empty() ? "qsgauc" : fs::path(args[0]).filename().string());
    app.require_subcommand(1);

    const std::vector<Command> table = commands();
    std::map<std::string, std::map<std::string, std::string>> flag_values;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> flag_options;
    for (const auto& cmd : table) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.description);
        sub->add_option("--config", config_paths[cmd.name], "key = value file; flags override it");
        for (const auto& key : cmd.keys) {
            CLI::Option* opt = sub->add_option(
                flag_name(key.name), flag_values[cmd.name][key.name],
                key.help + " [key " + key.name + ", default '" + key.default_value + "']");
            flag_options[cmd.name].emplace_back(key.name, opt);
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty())
        reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error code=USAGE message=" << one_line(e.what()) << '\n';
        return 2;
    }

    for (const auto& cmd : table) {
        CLI::App* sub = app.get_subcommand(cmd.name);
        if (!sub->parsed())
            continue;
        try {
            Config config(cmd.name, cmd.keys);
            if (!config_paths[cmd.name].empty())
                config.load_file(config_paths[cmd.name]);
            for (const auto& [key, opt] : flag_options[cmd.name])
                if (opt->count() > 0)
                    config.set(key, flag_values[cmd.name][key]);
            return cmd.run(config, out);
        } catch (const Error& e) {
            err << "error code=" << to_string(e.code()) << " message=" << one_line(e.what())
                << '\n';
            return 1;
        } catch (const std::exception& e) {
            err << "error code=INTERNAL_ERROR message=" << one_line(e.what()) << '\n';
            return 1;
        }
    }
    return 2;
}

} // namespace qsgauc::cli
