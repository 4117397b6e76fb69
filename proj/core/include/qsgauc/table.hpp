#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qsgauc {

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

/// C99 hexadecimal float ("%a"); exact round trip through parse_real.
std::string format_hex(double value);

/// Parses decimal or hexadecimal floating-point text. Throws InvalidInput.
double parse_real(std::string_view text);

/// Writes through a temporary sibling file and renames it into place, so
/// readers never observe a partially written `path`. Throws IoError.
void atomic_write_file(const std::string& path, const std::function<void(std::ostream&)>& writer);

/// Tab-separated table with a header row.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row);
    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

    void write(std::ostream& out) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace qsgauc
