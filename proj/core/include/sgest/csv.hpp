#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sgest {

/// Shortest round-trip decimal form of a double (locale-independent).
std::string format_double(double v);

/// Minimal CSV assembly: fixed header, comma separator, UTF-8, full
/// round-trip precision, one trailing newline per row.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& columns);

    void begin_row();
    void field(double v);
    void field(const std::string& v);

    const std::string& str() const { return buffer_; }

private:
    std::string buffer_;
    std::size_t columns_ = 0;
    std::size_t in_row_ = 0;
};

/// Writes a whole file, throwing IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

} // namespace sgest
