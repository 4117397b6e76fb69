#include "qsgauc/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qsgauc/error.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/table.hpp"

namespace qsgauc {

CoefficientHistory::CoefficientHistory(std::size_t dim, std::size_t feature_count, double sigma,
                                       std::uint64_t master_seed)
    : dim_(dim), feature_count_(feature_count), sigma_(sigma), master_seed_(master_seed) {
    if (dim == 0)
        throw InvalidParameter("CoefficientHistory: dim must be at least 1");
    if (feature_count == 0)
        throw InvalidParameter("CoefficientHistory: feature_count must be at least 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidParameter("CoefficientHistory: sigma must be positive and finite");
}

void CoefficientHistory::append(std::span<const double> direction, double scale) {
    if (direction.size() != coefficient_length())
        throw InvalidInput("CoefficientHistory::append: direction has length " +
                           std::to_string(direction.size()) + ", expected " +
                           std::to_string(coefficient_length()));
    if (!std::isfinite(scale))
        throw InvalidInput("CoefficientHistory::append: non-finite scale");
    for (double v : direction)
        if (!std::isfinite(v))
            throw InvalidInput("CoefficientHistory::append: non-finite coefficient");
    scales_.push_back(scale);
    directions_.insert(directions_.end(), direction.begin(), direction.end());
}

void CoefficientHistory::decay(double factor) noexcept {
    for (double& s : scales_)
        s *= factor;
}

double CoefficientHistory::scale(std::size_t iteration) const {
    if (iteration == 0 || iteration > size())
        throw InvalidParameter("CoefficientHistory: iteration out of range");
    return scales_[iteration - 1];
}

std::span<const double> CoefficientHistory::direction(std::size_t iteration) const {
    if (iteration == 0 || iteration > size())
        throw InvalidParameter("CoefficientHistory: iteration out of range");
    return {directions_.data() + (iteration - 1) * coefficient_length(), coefficient_length()};
}

std::vector<double> CoefficientHistory::alpha(std::size_t iteration) const {
    const double s = scale(iteration);
    const auto dir = direction(iteration);
    std::vector<double> out(dir.size());
    for (std::size_t k = 0; k < dir.size(); ++k)
        out[k] = s * dir[k];
    return out;
}

FrequencyBlock CoefficientHistory::block(std::size_t iteration) const {
    return sample_frequencies(feature_seed(master_seed_, iteration), dim_, feature_count_, sigma_);
}

CoefficientHistory CoefficientHistory::scaled(double c) const {
    CoefficientHistory out = *this;
    out.decay(c);
    return out;
}

CoefficientHistory CoefficientHistory::prefix(std::size_t iterations) const {
    if (iterations > size())
        throw InvalidParameter("CoefficientHistory::prefix: beyond history length");
    CoefficientHistory out(dim_, feature_count_, sigma_, master_seed_);
    out.scales_.assign(scales_.begin(), scales_.begin() + static_cast<std::ptrdiff_t>(iterations));
    out.directions_.assign(directions_.begin(),
                           directions_.begin() +
                               static_cast<std::ptrdiff_t>(iterations * coefficient_length()));
    return out;
}

double predict(const CoefficientHistory& model, std::span<const double> x) {
    if (x.size() != model.dim())
        throw InvalidInput("predict: input has dimension " + std::to_string(x.size()) +
                           ", model expects " + std::to_string(model.dim()));
    double f = 0.0;
    for (std::size_t i = 1; i <= model.size(); ++i) {
        const FrequencyBlock block = model.block(i);
        f += model.scale(i) * feature_dot(model.direction(i), block, x);
    }
    return f;
}

std::vector<double> predict_batch(const CoefficientHistory& model,
                                  const std::vector<std::vector<double>>& xs) {
    for (const auto& x : xs)
        if (x.size() != model.dim())
            throw InvalidInput("predict_batch: input has dimension " + std::to_string(x.size()) +
                               ", model expects " + std::to_string(model.dim()));
    std::vector<double> f(xs.size(), 0.0);
    for (std::size_t i = 1; i <= model.size(); ++i) {
        const FrequencyBlock block = model.block(i);
        const double s = model.scale(i);
        const auto dir = model.direction(i);
        for (std::size_t r = 0; r < xs.size(); ++r)
            f[r] += s * feature_dot(dir, block, xs[r]);
    }
    return f;
}

void save(const CoefficientHistory& model, std::ostream& sink) {
    sink << "qsgauc-model 1\n";
    sink << "dim " << model.dim() << '\n';
    sink << "feature_count " << model.feature_count() << '\n';
    sink << "sigma " << format_hex(model.sigma()) << '\n';
    sink << "master_seed " << model.master_seed() << '\n';
    sink << "entries " << model.size() << '\n';
    for (std::size_t i = 1; i <= model.size(); ++i) {
        sink << i << ' ' << format_hex(model.scale(i));
        for (double v : model.direction(i))
            sink << ' ' << format_hex(v);
        sink << '\n';
    }
    sink << "end\n";
}

namespace {

class ModelReader {
public:
    explicit ModelReader(std::istream& in) : in_(in) {}

    // Next line split into tokens; Truncated if the stream ends first.
    std::vector<std::string> next(const std::string& field) {
        std::string line;
        if (!std::getline(in_, line))
            throw ParseError(ParseError::Kind::Truncated, line_no_ + 1, field,
                             "unexpected end of file");
        ++line_no_;
        at_eof_ = in_.peek() == std::char_traits<char>::eof();
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        for (std::string tok; ss >> tok;)
            tokens.push_back(tok);
        return tokens;
    }

    std::string value(const std::string& key) {
        auto tokens = next(key);
        if (tokens.size() != 2 || tokens[0] != key)
            throw ParseError(ParseError::Kind::Malformed, line_no_, key,
                             "expected '" + key + " <value>'");
        return tokens[1];
    }

    std::uint64_t unsigned_value(const std::string& key) {
        const std::string text = value(key);
        return parse_unsigned(text, key);
    }

    std::uint64_t parse_unsigned(const std::string& text, const std::string& field) const {
        if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError(ParseError::Kind::Malformed, line_no_, field,
                             "not an unsigned integer: '" + text + "'");
        try {
            return std::stoull(text);
        } catch (const std::exception&) {
            throw ParseError(ParseError::Kind::Malformed, line_no_, field,
                             "integer out of range: '" + text + "'");
        }
    }

    double real(const std::string& text, const std::string& field) const {
        try {
            const double v = parse_real(text);
            if (!std::isfinite(v))
                throw InvalidInput("non-finite");
            return v;
        } catch (const InvalidInput&) {
            throw ParseError(ParseError::Kind::Malformed, line_no_, field,
                             "not a finite real: '" + text + "'");
        }
    }

    std::size_t line() const noexcept { return line_no_; }
    bool at_eof() const noexcept { return at_eof_; }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
    bool at_eof_ = false;
};

} // namespace

CoefficientHistory load(std::istream& source) {
    ModelReader reader(source);
    const auto header = reader.next("header");
    if (header.size() != 2 || header[0] != "qsgauc-model")
        throw ParseError(ParseError::Kind::Malformed, reader.line(), "header",
                         "not a qsgauc model file");
    if (header[1] != "1")
        throw ParseError(ParseError::Kind::VersionMismatch, reader.line(), "version",
                         "unsupported format version '" + header[1] + "' (expected 1)");

    const std::uint64_t dim = reader.unsigned_value("dim");
    const std::uint64_t feature_count = reader.unsigned_value("feature_count");
    const std::string sigma_text = reader.value("sigma");
    const double sigma = reader.real(sigma_text, "sigma");
    const std::uint64_t master_seed = reader.unsigned_value("master_seed");
    const std::uint64_t entries = reader.unsigned_value("entries");

    if (dim == 0)
        throw ParseError(ParseError::Kind::Malformed, 2, "dim", "must be positive");
    if (feature_count == 0)
        throw ParseError(ParseError::Kind::Malformed, 3, "feature_count", "must be positive");
    if (!(sigma > 0.0))
        throw ParseError(ParseError::Kind::Malformed, 4, "sigma", "must be positive");

    CoefficientHistory model(dim, feature_count, sigma, master_seed);
    const std::size_t width = 2 * feature_count;
    std::vector<double> direction(width);
    for (std::uint64_t i = 1; i <= entries; ++i) {
        const std::string field = "entry " + std::to_string(i);
        const auto tokens = reader.next(field);
        if (tokens.size() != width + 2) {
            const auto kind = (reader.at_eof() && tokens.size() < width + 2)
                                  ? ParseError::Kind::Truncated
                                  : ParseError::Kind::Malformed;
            throw ParseError(kind, reader.line(), field,
                             "expected " + std::to_string(width + 2) + " fields, found " +
                                 std::to_string(tokens.size()));
        }
        if (reader.parse_unsigned(tokens[0], field) != i)
            throw ParseError(ParseError::Kind::Malformed, reader.line(), field,
                             "iteration index " + tokens[0] + " out of order");
        const double scale = reader.real(tokens[1], field + " scale");
        for (std::size_t k = 0; k < width; ++k)
            direction[k] = reader.real(tokens[k + 2], field);
        model.append(direction, scale);
    }
    const auto trailer = reader.next("end");
    if (trailer.size() != 1 || trailer[0] != "end")
        throw ParseError(ParseError::Kind::Malformed, reader.line(), "end",
                         "expected 'end' after " + std::to_string(entries) + " entries");
    return model;
}

void save_file(const CoefficientHistory& model, const std::string& path) {
    atomic_write_file(path, [&model](std::ostream& out) { save(model, out); });
}

CoefficientHistory load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open model file '" + path + "'");
    return load(in);
}

} // namespace qsgauc
