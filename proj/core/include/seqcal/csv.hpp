#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace seqcal {

/// Shortest decimal that round-trips; empty for NaN. Locale independent.
std::string format_double(double value);

/// Minimal RFC-4180 style writer. Fields are quoted only when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    CsvWriter& field(std::string_view text);
    CsvWriter& field(const char* text) { return field(std::string_view(text)); }
    CsvWriter& field(const std::string& text) { return field(std::string_view(text)); }
    CsvWriter& field(double value);
    CsvWriter& field(std::int64_t value);
    CsvWriter& field(int value) { return field(static_cast<std::int64_t>(value)); }
    CsvWriter& field(std::size_t value) { return field(static_cast<std::int64_t>(value)); }
    CsvWriter& empty();

    void header(const std::vector<std::string>& names);
    void end_row();

private:
    void separator();

    std::ostream& out_;
    bool row_started_ = false;
};

/// Splits one CSV line; handles quoted fields (no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

} // namespace seqcal
