#include "qsgauc/table.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <system_error>

#include "qsgauc/error.hpp"

namespace qsgauc {

std::string format_real(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

std::string format_hex(double value) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%a", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

double parse_real(std::string_view text) {
    const std::string owned(text);
    if (owned.empty())
        throw InvalidInput("empty number");
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(owned.c_str(), &end);
    // ERANGE on underflow still yields the nearest subnormal or zero.
    if (end != owned.c_str() + owned.size() || (errno == ERANGE && std::isinf(value)))
        throw InvalidInput("not a number: '" + owned + "'");
    return value;
}

void atomic_write_file(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory '" + target.parent_path().string() +
                          "': " + ec.message());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        try {
            writer(out);
        } catch (...) {
            out.close();
            fs::remove(tmp);
            throw;
        }
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw IoError("write failed for '" + path + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move '" + tmp.string() + "' to '" + path + "': " + ec.message());
    }
}

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size())
        throw InvalidInput("table row has " + std::to_string(row.size()) + " cells, header has " +
                           std::to_string(header_.size()));
    rows_.push_back(std::move(row));
}

void Table::write(std::ostream& out) const {
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out << '\t';
            out << cells[i];
        }
        out << '\n';
    };
    emit(header_);
    for (const auto& row : rows_)
        emit(row);
}

} // namespace qsgauc
