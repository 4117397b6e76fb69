#include "qsgauc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qsgauc/error.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/table.hpp"

namespace qsgauc {

void SemiSupervisedDataset::validate() const {
    if (dim == 0)
        throw InvalidInput("dataset dimension must be positive");
    auto check = [this](const PointSet& pool, const char* name) {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool[i].size() != dim)
                throw InvalidInput(std::string(name) + " point " + std::to_string(i) +
                                   " has dimension " + std::to_string(pool[i].size()) +
                                   ", expected " + std::to_string(dim));
            for (double v : pool[i])
                if (!std::isfinite(v))
                    throw InvalidInput(std::string(name) + " point " + std::to_string(i) +
                                       " has a non-finite value");
        }
    };
    check(positives, "positive");
    check(negatives, "negative");
    check(unlabeled, "unlabeled");
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& token, const std::string& why) {
    throw ParseError(ParseError::Kind::Malformed, line, token, why + ": '" + token + "'");
}

int parse_label(const std::string& token, std::size_t line) {
    double value = 0.0;
    try {
        value = parse_real(token);
    } catch (const InvalidInput&) {
        parse_fail(line, token, "non-numeric label");
    }
    if (value == 1.0)
        return 1;
    if (value == -1.0)
        return -1;
    parse_fail(line, token, "unsupported label (expected +1 or -1)");
}

} // namespace

LabeledDataset parse_libsvm(std::istream& in) {
    LabeledDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        std::string token;
        if (!(ss >> token))
            continue;

        LabeledDataset::Row row;
        row.label = parse_label(token, line_no);
        std::uint64_t last_index = 0;
        while (ss >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == token.size())
                parse_fail(line_no, token, "malformed index:value pair");
            const std::string index_text = token.substr(0, colon);
            if (index_text.find_first_not_of("0123456789") != std::string::npos)
                parse_fail(line_no, token, "non-numeric feature index");
            std::uint64_t index = 0;
            try {
                index = std::stoull(index_text);
            } catch (const std::exception&) {
                parse_fail(line_no, token, "feature index out of range");
            }
            if (index == 0)
                parse_fail(line_no, token, "feature index must be positive");
            if (index > 0xffffffffULL)
                parse_fail(line_no, token, "feature index out of range");
            if (index <= last_index)
                parse_fail(line_no, token, "feature indices must be strictly increasing");
            double value = 0.0;
            try {
                value = parse_real(std::string_view(token).substr(colon + 1));
            } catch (const InvalidInput&) {
                parse_fail(line_no, token, "malformed feature value");
            }
            if (!std::isfinite(value))
                parse_fail(line_no, token, "non-finite feature value");
            row.features.emplace_back(static_cast<std::uint32_t>(index), value);
            last_index = index;
        }
        ds.dim = std::max<std::size_t>(ds.dim, last_index);
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

LabeledDataset read_libsvm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    return parse_libsvm(in);
}

void write_libsvm(const LabeledDataset& ds, std::ostream& out) {
    for (const auto& row : ds.rows) {
        out << (row.label > 0 ? "+1" : "-1");
        for (const auto& [index, value] : row.features)
            out << ' ' << index << ':' << format_real(value);
        out << '\n';
    }
}

Point densify(const LabeledDataset::Row& row, std::size_t dim) {
    Point x(dim, 0.0);
    for (const auto& [index, value] : row.features) {
        if (index > dim)
            throw InvalidInput("feature index " + std::to_string(index) +
                               " exceeds dimension " + std::to_string(dim));
        x[index - 1] = value;
    }
    return x;
}

LabeledPoints densify(const LabeledDataset& ds, std::size_t dim) {
    LabeledPoints out;
    out.points.reserve(ds.rows.size());
    out.labels.reserve(ds.rows.size());
    for (const auto& row : ds.rows) {
        out.points.push_back(densify(row, dim));
        out.labels.push_back(row.label);
    }
    return out;
}

LabeledPoints densify(const LabeledDataset& ds) { return densify(ds, ds.dim); }

double MinMaxTable::apply(std::size_t feature, double value) const {
    const double lo = min.at(feature);
    const double hi = max.at(feature);
    if (!(hi > lo))
        return 0.0;
    const double scaled = (value - lo) / (hi - lo);
    return std::clamp(scaled, 0.0, 1.0);
}

LabeledDataset MinMaxTable::apply(const LabeledDataset& ds) const {
    const std::size_t dim = min.size();
    LabeledDataset out;
    out.dim = dim;
    out.rows.reserve(ds.rows.size());
    for (const auto& row : ds.rows) {
        const Point dense = densify(row, dim);
        LabeledDataset::Row mapped;
        mapped.label = row.label;
        for (std::size_t f = 0; f < dim; ++f) {
            const double v = apply(f, dense[f]);
            if (v != 0.0)
                mapped.features.emplace_back(static_cast<std::uint32_t>(f + 1), v);
        }
        out.rows.push_back(std::move(mapped));
    }
    return out;
}

void MinMaxTable::write(std::ostream& out) const {
    out << "feature\tmin\tmax\n";
    for (std::size_t f = 0; f < min.size(); ++f)
        out << f + 1 << '\t' << format_real(min[f]) << '\t' << format_real(max[f]) << '\n';
}

std::pair<LabeledDataset, MinMaxTable> normalize_unit_interval(const LabeledDataset& ds) {
    if (ds.rows.empty())
        throw InvalidInput("normalize_unit_interval: empty dataset");
    const std::size_t dim = ds.dim;
    MinMaxTable table;
    table.min.assign(dim, 0.0);
    table.max.assign(dim, 0.0);
    std::vector<bool> seen(dim, false);
    std::vector<std::size_t> present(dim, 0);
    for (const auto& row : ds.rows) {
        for (const auto& [index, value] : row.features) {
            const std::size_t f = index - 1;
            ++present[f];
            if (!seen[f]) {
                table.min[f] = table.max[f] = value;
                seen[f] = true;
            } else {
                table.min[f] = std::min(table.min[f], value);
                table.max[f] = std::max(table.max[f], value);
            }
        }
    }
    for (std::size_t f = 0; f < dim; ++f) {
        if (present[f] < ds.rows.size()) {  // implicit zeros
            table.min[f] = std::min(table.min[f], 0.0);
            table.max[f] = std::max(table.max[f], 0.0);
        }
    }
    return {table.apply(ds), table};
}

void SplitManifest::write(std::ostream& out) const {
    auto emit = [&out](const char* name, const std::vector<std::size_t>& rows) {
        out << name << ' ' << rows.size();
        for (std::size_t r : rows)
            out << ' ' << r;
        out << '\n';
    };
    out << "qsgauc-split 1\n";
    emit("labeled", labeled);
    emit("unlabeled", unlabeled);
    emit("test", test);
}

namespace {

void shuffle(std::vector<std::size_t>& v, RandomStream& stream) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = stream.index(i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace

SplitResult split_semi(const LabeledDataset& ds, const SplitOptions& options) {
    if (!(options.test_fraction >= 0.0 && options.test_fraction < 1.0))
        throw InvalidParameter("split_semi: test_fraction must lie in [0, 1)");
    if (options.n_labeled == 0)
        throw InvalidParameter("split_semi: n_labeled must be positive");
    if (ds.dim == 0)
        throw InvalidInput("split_semi: dataset has no features");

    std::vector<std::size_t> pos, neg;
    for (std::size_t r = 0; r < ds.rows.size(); ++r)
        (ds.rows[r].label > 0 ? pos : neg).push_back(r);

    // Stratified test allocation by largest remainder.
    const double n = static_cast<double>(ds.rows.size());
    const auto test_total = static_cast<std::size_t>(std::llround(options.test_fraction * n));
    const double want_pos = options.test_fraction * static_cast<double>(pos.size());
    const double want_neg = options.test_fraction * static_cast<double>(neg.size());
    auto test_pos = static_cast<std::size_t>(std::floor(want_pos));
    auto test_neg = static_cast<std::size_t>(std::floor(want_neg));
    while (test_pos + test_neg < test_total) {
        const double rem_pos = test_pos < pos.size() ? want_pos - static_cast<double>(test_pos) : -1;
        const double rem_neg = test_neg < neg.size() ? want_neg - static_cast<double>(test_neg) : -1;
        if (rem_pos >= rem_neg)
            ++test_pos;
        else
            ++test_neg;
    }

    RandomStream stream(derive_seed(options.seed, 0x73706c6974ULL));
    shuffle(pos, stream);
    shuffle(neg, stream);

    SplitManifest manifest;
    manifest.test.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(test_pos));
    manifest.test.insert(manifest.test.end(), neg.begin(),
                         neg.begin() + static_cast<std::ptrdiff_t>(test_neg));
    std::vector<std::size_t> rest(pos.begin() + static_cast<std::ptrdiff_t>(test_pos), pos.end());
    rest.insert(rest.end(), neg.begin() + static_cast<std::ptrdiff_t>(test_neg), neg.end());
    std::sort(rest.begin(), rest.end());

    if (options.n_labeled > rest.size())
        throw InvalidParameter("split_semi: n_labeled (" + std::to_string(options.n_labeled) +
                               ") exceeds the " + std::to_string(rest.size()) +
                               " rows available after holding out the test set");

    bool both_classes = false;
    for (std::size_t attempt = 0; attempt <= options.max_retries && !both_classes; ++attempt) {
        shuffle(rest, stream);
        bool has_pos = false, has_neg = false;
        for (std::size_t k = 0; k < options.n_labeled; ++k)
            (ds.rows[rest[k]].label > 0 ? has_pos : has_neg) = true;
        both_classes = has_pos && has_neg;
    }
    if (!both_classes)
        throw InvalidInput("split_semi: labeled sample contains a single class after " +
                           std::to_string(options.max_retries + 1) + " attempts");

    manifest.labeled.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(options.n_labeled));
    manifest.unlabeled.assign(rest.begin() + static_cast<std::ptrdiff_t>(options.n_labeled), rest.end());
    std::sort(manifest.labeled.begin(), manifest.labeled.end());
    std::sort(manifest.unlabeled.begin(), manifest.unlabeled.end());
    std::sort(manifest.test.begin(), manifest.test.end());

    SplitResult result;
    result.train.dim = ds.dim;
    result.train.provenance = "split(seed=" + std::to_string(options.seed) +
                              ", n_labeled=" + std::to_string(options.n_labeled) + ")";
    for (std::size_t r : manifest.labeled)
        (ds.rows[r].label > 0 ? result.train.positives : result.train.negatives)
            .push_back(densify(ds.rows[r], ds.dim));
    for (std::size_t r : manifest.unlabeled) {
        result.train.unlabeled.push_back(densify(ds.rows[r], ds.dim));
        result.unlabeled_labels.push_back(ds.rows[r].label);
    }
    for (std::size_t r : manifest.test) {
        result.test.points.push_back(densify(ds.rows[r], ds.dim));
        result.test.labels.push_back(ds.rows[r].label);
    }
    result.manifest = std::move(manifest);
    return result;
}

SynthResult synth_gaussian(const SynthOptions& o) {
    if (!(o.prior > 0.0 && o.prior < 1.0))
        throw InvalidParameter("synth_gaussian: prior must lie in (0, 1)");
    if (o.dim == 0)
        throw InvalidParameter("synth_gaussian: dim must be positive");
    if (!std::isfinite(o.separation))
        throw InvalidParameter("synth_gaussian: separation must be finite");

    RandomStream stream(derive_seed(o.seed, 0x73796e7468ULL));
    const double shift = o.separation / 2.0;
    auto draw = [&](int label) {
        Point x(o.dim);
        for (double& v : x)
            v = stream.gaussian();
        x[0] += label > 0 ? shift : -shift;
        return x;
    };

    SynthResult out;
    out.train.dim = o.dim;
    out.train.provenance = "synth_gaussian(seed=" + std::to_string(o.seed) + ")";
    for (std::size_t i = 0; i < o.n_p; ++i)
        out.train.positives.push_back(draw(+1));
    for (std::size_t i = 0; i < o.n_n; ++i)
        out.train.negatives.push_back(draw(-1));
    for (std::size_t i = 0; i < o.n_u; ++i) {
        const int label = stream.uniform01() < o.prior ? +1 : -1;
        out.train.unlabeled.push_back(draw(label));
        out.unlabeled_labels.push_back(label);
    }
    auto test_pos = static_cast<std::size_t>(std::llround(o.prior * static_cast<double>(o.n_test)));
    if (o.n_test >= 2)
        test_pos = std::clamp<std::size_t>(test_pos, 1, o.n_test - 1);
    for (std::size_t i = 0; i < o.n_test; ++i) {
        const int label = i < test_pos ? +1 : -1;
        out.test.points.push_back(draw(label));
        out.test.labels.push_back(label);
    }
    return out;
}

LabeledDataset to_labeled(const PointSet& points, const std::vector<int>& labels) {
    if (labels.size() != points.size())
        throw InvalidInput("to_labeled: label count does not match point count");
    LabeledDataset out;
    for (std::size_t r = 0; r < points.size(); ++r) {
        LabeledDataset::Row row;
        row.label = labels[r] > 0 ? 1 : -1;
        for (std::size_t f = 0; f < points[r].size(); ++f)
            if (points[r][f] != 0.0)
                row.features.emplace_back(static_cast<std::uint32_t>(f + 1), points[r][f]);
        out.dim = std::max(out.dim, points[r].size());
        out.rows.push_back(std::move(row));
    }
    return out;
}

LabeledDataset labeled_pools(const SemiSupervisedDataset& ds) {
    PointSet points = ds.positives;
    points.insert(points.end(), ds.negatives.begin(), ds.negatives.end());
    std::vector<int> labels(ds.positives.size(), 1);
    labels.resize(points.size(), -1);
    LabeledDataset out = to_labeled(points, labels);
    out.dim = ds.dim;
    return out;
}

} // namespace qsgauc
